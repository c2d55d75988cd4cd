#pragma once

// Independent reference computations. Nothing here calls into the library's
// numerical code: models are re-derived from the ratio formula, derivatives
// come from finite differences, inverses from full pivoting LU.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
constexpr double pi = std::numbers::pi;

struct Setup {
    std::vector<int> phi;
    double t0 = 125e-6;
    double lambda = 0.1;
    double d = 0.05;
    double noise_scale = 1e-3; // sigma^2 / |h_s0|^2
};

inline cplx steer(double theta, const Setup& s) {
    return std::exp(cplx(0.0, 2.0 * pi * s.d * std::sin(theta) / s.lambda));
}

/// alpha = [f_d, theta, Re rho0, Im rho0, Re rho1, Im rho1].
inline std::vector<cplx> chi(const std::array<double, 6>& alpha, const Setup& s) {
    const cplx rho0(alpha[2], alpha[3]);
    const cplx rho1(alpha[4], alpha[5]);
    const cplx a = steer(alpha[1], s);
    std::vector<cplx> out;
    for (int p : s.phi) {
        const cplx dk = std::exp(cplx(0.0, 2.0 * pi * p * s.t0 * alpha[0]));
        out.push_back((a * rho1 * dk + rho0) / (rho1 * dk + 1.0));
    }
    return out;
}

inline std::vector<double> eta(const std::array<double, 6>& alpha, const Setup& s) {
    const cplx rho0(alpha[2], alpha[3]);
    const cplx rho1(alpha[4], alpha[5]);
    const cplx a = steer(alpha[1], s);
    std::vector<double> out;
    for (int p : s.phi) {
        const cplx dk = std::exp(cplx(0.0, 2.0 * pi * p * s.t0 * alpha[0]));
        const double mu2 = std::norm(rho1 * dk + 1.0);
        out.push_back(s.noise_scale * (mu2 + std::norm(a * rho1 * dk + rho0)) / (mu2 * mu2));
    }
    return out;
}

/// Central differences with per-parameter steps.
inline Eigen::Matrix<cplx, Eigen::Dynamic, 6> fd_jacobian(const std::array<double, 6>& alpha, const Setup& s) {
    const std::array<double, 6> h{1e-4, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6};
    Eigen::Matrix<cplx, Eigen::Dynamic, 6> J(static_cast<Eigen::Index>(s.phi.size()), 6);
    for (int i = 0; i < 6; ++i) {
        auto up = alpha, dn = alpha;
        up[i] += h[i];
        dn[i] -= h[i];
        const auto cu = chi(up, s), cd = chi(dn, s);
        for (std::size_t k = 0; k < s.phi.size(); ++k)
            J(static_cast<Eigen::Index>(k), i) = (cu[k] - cd[k]) / (2.0 * h[i]);
    }
    return J;
}

inline Mat6 fim(const Eigen::Matrix<cplx, Eigen::Dynamic, 6>& J, const std::vector<double>& eta) {
    Mat6 F = Mat6::Zero();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            cplx acc = 0.0;
            for (Eigen::Index k = 0; k < J.rows(); ++k)
                acc += std::conj(J(k, i)) * J(k, j) / eta[static_cast<std::size_t>(k)];
            F(i, j) = 2.0 * acc.real();
        }
    return F;
}

/// [F^-1]_{0,0} by full inversion.
inline double crb_full_inverse(const Mat6& F) { return F.fullPivLu().inverse()(0, 0); }

/// 2x2 Schur complement of the nuisance block.
inline Eigen::Matrix2d schur(const Mat6& F) {
    const Eigen::Matrix2d A = F.topLeftCorner<2, 2>();
    const Eigen::Matrix<double, 2, 4> B = F.topRightCorner<2, 4>();
    const Eigen::Matrix4d D = F.bottomRightCorner<4, 4>();
    return A - B * D.fullPivLu().inverse() * B.transpose();
}

inline double variance(const std::vector<int>& phi) {
    long double s1 = 0, s2 = 0;
    for (int p : phi) {
        s1 += p;
        s2 += static_cast<long double>(p) * p;
    }
    const long double n = static_cast<long double>(phi.size());
    return static_cast<double>(s2 / n - (s1 / n) * (s1 / n));
}

/// Largest index variance over all size-k subsets of [0, k_all).
inline double max_l1_exhaustive(int k_all, int k) {
    double best = -1.0;
    for (std::uint32_t mask = 0; mask < (1u << k_all); ++mask) {
        if (std::popcount(mask) != k)
            continue;
        std::vector<int> phi;
        for (int i = 0; i < k_all; ++i)
            if (mask & (1u << i))
                phi.push_back(i);
        best = std::max(best, variance(phi));
    }
    return best;
}

inline double pattern(const std::vector<double>& phi, double t0, double f) {
    cplx acc = 0.0;
    for (double p : phi)
        acc += std::exp(cplx(0.0, 2.0 * pi * p * t0 * f));
    return std::abs(acc) / static_cast<double>(phi.size());
}

inline double pattern(const std::vector<int>& phi, double t0, double f) {
    return pattern(std::vector<double>(phi.begin(), phi.end()), t0, f);
}

/// Weighted sidelobe power of a half schedule by the trapezoid rule on n nodes, unit weighting.
inline double sidelobe_power(const std::vector<double>& half, double t0, double f_lo, int n) {
    const double f_hi = 0.5 / t0;
    const double h = (f_hi - f_lo) / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = pattern(half, t0, f_lo + i * h);
        acc += (i == 0 || i == n - 1 ? 0.5 : 1.0) * e * e;
    }
    return acc * h;
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double up = f(x);
        x[i] = x0 - h;
        const double dn = f(x);
        x[i] = x0;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace oracle
