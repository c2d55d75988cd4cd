#include "csisense/mle.hpp"

#include "csisense/errors.hpp"
#include "csisense/scenario.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace csisense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScaleFloor = 1e-300;

struct Sample {
    cplx chi;
    double g = 0.0;
    std::array<cplx, 6> dchi{};
    std::array<double, 6> dg{};
};

// chi, g and their derivatives at symbol k; derivatives only when asked.
Sample sample_at(const ParamVector& p, cplx a, cplx da, double w_phi, bool derivs) {
    const cplx j(0.0, 1.0);
    const cplx d = std::polar(1.0, w_phi * p.f_d);
    const cplx mu = p.rho1 * d + 1.0;
    const cplx nu = a * p.rho1 * d + p.rho0;
    const double m2 = std::norm(mu);
    if (!(m2 > 0.0) || !std::isfinite(m2))
        throw InvalidParams("ratio denominator vanishes");
    Sample s;
    s.chi = nu / mu;
    const double n2 = std::norm(nu);
    s.g = (m2 + n2) / (m2 * m2);
    if (!derivs)
        return s;

    const std::array<cplx, 6> dmu{j * w_phi * p.rho1 * d, 0.0, 0.0, 0.0, d, j * d};
    const std::array<cplx, 6> dnu{j * w_phi * a * p.rho1 * d, da * p.rho1 * d, 1.0, j, a * d, j * a * d};
    for (int q = 0; q < 6; ++q) {
        s.dchi[q] = (dnu[q] - s.chi * dmu[q]) / mu;
        const double dm2 = 2.0 * (std::conj(mu) * dmu[q]).real();
        const double dn2 = 2.0 * (std::conj(nu) * dnu[q]).real();
        s.dg[q] = (dm2 + dn2) / (m2 * m2) - 2.0 * (m2 + n2) * dm2 / (m2 * m2 * m2);
    }
    return s;
}

struct Geometry {
    cplx a;
    cplx da;
    std::vector<double> w_phi; // 2 pi T0 phi_k
};

Geometry geometry(const ParamVector& p, const SymbolSchedule& schedule, const MleOptions& opts) {
    Geometry g;
    g.a = steering_phasor(p.theta_d, opts.antenna_spacing, opts.wavelength);
    g.da = steering_phasor_derivative(p.theta_d, opts.antenna_spacing, opts.wavelength);
    g.w_phi.resize(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k)
        g.w_phi[k] = 2.0 * kPi * schedule.t0 * schedule.phi[k];
    return g;
}

void check_lengths(std::span<const cplx> r, const SymbolSchedule& schedule) {
    if (r.size() != schedule.size())
        throw InvalidSize("observation length does not match the schedule");
}

// Objective value and, on request, gradient and scoring matrix.
struct Evaluation {
    double value = kInf;
    double noise_scale = 0.0;
    Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 6> info = Eigen::Matrix<double, 6, 6>::Zero();
};

Evaluation evaluate(const ParamVector& p, std::span<const cplx> r, const SymbolSchedule& schedule,
                    const MleOptions& opts, bool derivs) {
    const auto geo = geometry(p, schedule, opts);
    const std::size_t n = r.size();
    std::vector<Sample> s(n);
    for (std::size_t k = 0; k < n; ++k)
        s[k] = sample_at(p, geo.a, geo.da, geo.w_phi[k], derivs);

    Evaluation ev;
    const bool gauss = opts.objective == MleObjective::gaussian;
    double q = 0.0;
    double log_g = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e2 = std::norm(r[k] - s[k].chi);
        q += gauss ? e2 / s[k].g : e2;
        log_g += std::log(s[k].g);
    }
    const double kk = static_cast<double>(n);
    if (gauss) {
        ev.noise_scale = std::max(q / kk, kScaleFloor);
        ev.value = kk * std::log(ev.noise_scale) + log_g + kk;
    } else {
        ev.noise_scale = q / kk;
        ev.value = q;
    }
    if (!derivs)
        return ev;

    const double inv_s = gauss ? 1.0 / ev.noise_scale : 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx e = r[k] - s[k].chi;
        const double wk = gauss ? inv_s / s[k].g : 1.0;
        for (int a = 0; a < 6; ++a) {
            double ga = -2.0 * wk * (std::conj(e) * s[k].dchi[a]).real();
            if (gauss)
                ga += (1.0 - std::norm(e) * wk) * s[k].dg[a] / s[k].g;
            ev.grad(a) += ga;
            for (int b = a; b < 6; ++b) {
                double f = 2.0 * wk * (std::conj(s[k].dchi[a]) * s[k].dchi[b]).real();
                if (gauss)
                    f += s[k].dg[a] * s[k].dg[b] / (s[k].g * s[k].g);
                ev.info(a, b) += f;
            }
        }
    }
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < a; ++b)
            ev.info(a, b) = ev.info(b, a);
    return ev;
}

double reflect_angle(double theta) {
    theta = std::remainder(theta, 2.0 * kPi);
    if (theta > 0.5 * kPi)
        theta = kPi - theta;
    else if (theta < -0.5 * kPi)
        theta = -kPi - theta;
    return theta;
}

ParamVector normalize(ParamVector p, double t0) {
    p.f_d = wrap_doppler(p.f_d, t0);
    p.theta_d = reflect_angle(p.theta_d);
    return p;
}

ParamVector step(const ParamVector& p, const Eigen::Matrix<double, 6, 1>& d, double t0) {
    auto v = p.to_array();
    for (int i = 0; i < 6; ++i)
        v[static_cast<std::size_t>(i)] += d(i);
    return normalize(ParamVector::from_array(v), t0);
}

struct Refined {
    ParamVector alpha;
    Evaluation ev;
    bool converged = false;
    int iterations = 0;
};

double safe_value(const ParamVector& p, std::span<const cplx> r, const SymbolSchedule& schedule,
                  const MleOptions& opts) {
    try {
        const double v = evaluate(p, r, schedule, opts, false).value;
        return std::isfinite(v) ? v : kInf;
    } catch (const InvalidParams&) {
        return kInf;
    }
}

Refined refine(ParamVector alpha, std::span<const cplx> r, const SymbolSchedule& schedule, const MleOptions& opts) {
    Refined out;
    double lambda = 1e-3;
    Evaluation ev = evaluate(alpha, r, schedule, opts, true);
    for (int it = 0; it < opts.max_iters; ++it) {
        out.iterations = it;
        if (ev.grad.cwiseAbs().maxCoeff() < opts.grad_tol) {
            out.converged = true;
            break;
        }
        const Eigen::Matrix<double, 6, 1> scale = ev.info.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        while (lambda < 1e12) {
            Eigen::Matrix<double, 6, 6> a = ev.info;
            a.diagonal() += lambda * scale;
            const Eigen::Matrix<double, 6, 1> d = a.ldlt().solve(-ev.grad);
            if (!d.allFinite()) {
                lambda *= 4.0;
                continue;
            }
            const ParamVector cand = step(alpha, d, schedule.t0);
            const double cv = safe_value(cand, r, schedule, opts);
            if (cv < ev.value) {
                alpha = cand;
                ev = evaluate(alpha, r, schedule, opts, true);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            // no descent is possible at working precision
            out.converged = true;
            break;
        }
        out.iterations = it + 1;
    }
    out.alpha = alpha;
    out.ev = ev;
    return out;
}

} // namespace

double wrap_doppler(double f, double t0) {
    const double period = 1.0 / t0;
    double w = f - period * std::floor(f / period + 0.5);
    if (w >= 0.5 * period)
        w -= period;
    return w;
}

RatioModel ratio_model_at(const ParamVector& alpha, const SymbolSchedule& schedule, const MleOptions& opts) {
    const auto geo = geometry(alpha, schedule, opts);
    RatioModel m;
    m.chi.resize(schedule.size());
    m.g.resize(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const auto s = sample_at(alpha, geo.a, geo.da, geo.w_phi[k], false);
        m.chi[k] = s.chi;
        m.g[k] = s.g;
    }
    return m;
}

double negloglik(const ParamVector& alpha, double noise_scale, std::span<const cplx> r,
                 const SymbolSchedule& schedule, const MleOptions& opts) {
    check_lengths(r, schedule);
    if (!(noise_scale > 0.0) || !std::isfinite(noise_scale))
        throw InvalidParams("noise scale sigma_n^2/|h_s0|^2 must be positive");
    const auto m = ratio_model_at(alpha, schedule, opts);
    double v = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double eta = noise_scale * m.g[k];
        v += std::norm(r[k] - m.chi[k]) / eta + std::log(eta);
    }
    return v;
}

std::array<double, 6> negloglik_gradient(const ParamVector& alpha, double noise_scale, std::span<const cplx> r,
                                         const SymbolSchedule& schedule, const MleOptions& opts) {
    check_lengths(r, schedule);
    if (!(noise_scale > 0.0) || !std::isfinite(noise_scale))
        throw InvalidParams("noise scale sigma_n^2/|h_s0|^2 must be positive");
    const auto geo = geometry(alpha, schedule, opts);
    std::array<double, 6> grad{};
    for (std::size_t k = 0; k < r.size(); ++k) {
        const auto s = sample_at(alpha, geo.a, geo.da, geo.w_phi[k], true);
        const cplx e = r[k] - s.chi;
        const double eta = noise_scale * s.g;
        for (std::size_t a = 0; a < 6; ++a) {
            grad[a] += -2.0 * (std::conj(e) * s.dchi[a]).real() / eta
                       + (1.0 - std::norm(e) / eta) * s.dg[a] / s.g;
        }
    }
    return grad;
}

double noise_scale_hat(const ParamVector& alpha, std::span<const cplx> r, const SymbolSchedule& schedule,
                       const MleOptions& opts) {
    check_lengths(r, schedule);
    const auto m = ratio_model_at(alpha, schedule, opts);
    double q = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k)
        q += std::norm(r[k] - m.chi[k]) / m.g[k];
    return q / static_cast<double>(r.size());
}

double profile_negloglik(const ParamVector& alpha, std::span<const cplx> r, const SymbolSchedule& schedule,
                         const MleOptions& opts) {
    check_lengths(r, schedule);
    auto o = opts;
    o.objective = MleObjective::gaussian;
    return evaluate(alpha, r, schedule, o, false).value;
}

GridPoint fit_grid_point(double f_d, std::span<const cplx> r, const SymbolSchedule& schedule,
                         const MleOptions& opts) {
    GridPoint gp;
    gp.f_d = f_d;
    gp.score = kInf;
    const auto n = static_cast<Eigen::Index>(r.size());
    Eigen::Matrix<cplx, Eigen::Dynamic, 3> a(n, 3);
    Eigen::VectorXcd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx d = std::polar(1.0, 2.0 * kPi * schedule.t0 * schedule.phi[static_cast<std::size_t>(k)] * f_d);
        const cplx rk = r[static_cast<std::size_t>(k)];
        a(k, 0) = d;
        a(k, 1) = 1.0;
        a(k, 2) = -rk * d;
        b(k) = rk;
    }
    // r (rho1 d + 1) = c1 d + c0, linear in (c1, c0, rho1)
    const Eigen::Matrix3cd ata = a.adjoint() * a;
    const Eigen::Vector3cd atb = a.adjoint() * b;
    const Eigen::Vector3cd x = ata.ldlt().solve(atb);
    if (!x.allFinite() || std::abs(x(2)) == 0.0)
        return gp;
    const cplx steer = x(0) / x(2);
    const double s = std::arg(steer) * opts.wavelength / (2.0 * kPi * opts.antenna_spacing);
    gp.alpha = {f_d, std::asin(std::clamp(s, -1.0, 1.0)), x(1), x(2)};
    gp.score = safe_value(gp.alpha, r, schedule, opts);
    return gp;
}

std::vector<double> doppler_grid(const SymbolSchedule& schedule, int points) {
    if (points < 1)
        throw ConfigError("Doppler grid needs at least one point");
    const double nyq = schedule.nyquist_hz();
    std::vector<double> f(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        f[static_cast<std::size_t>(i)] = -nyq + 2.0 * nyq * i / points;
    return f;
}

std::vector<GridPoint> score_grid(std::span<const double> f_grid, std::span<const cplx> r,
                                  const SymbolSchedule& schedule, const MleOptions& opts, bool parallel) {
    std::vector<GridPoint> out(f_grid.size());
    const auto n = static_cast<std::ptrdiff_t>(f_grid.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] = fit_grid_point(f_grid[static_cast<std::size_t>(i)], r, schedule, opts);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] = fit_grid_point(f_grid[static_cast<std::size_t>(i)], r, schedule, opts);
    }
    return out;
}

EstimationResult estimate(std::span<const cplx> r, const SymbolSchedule& schedule, const MleOptions& opts) {
    schedule.validate();
    check_lengths(r, schedule);
    if (r.size() < 6)
        throw InvalidSize("estimation needs at least six samples");
    if (opts.refine_candidates < 1)
        throw ConfigError("at least one refinement candidate is required");

    const auto grid = doppler_grid(schedule, opts.grid_points);
    const auto pts = score_grid(grid, r, schedule, opts, opts.parallel);

    // local minima of the circular score sequence, best first
    std::vector<std::size_t> minima;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = pts[i].score;
        if (!std::isfinite(v))
            continue;
        if (n < 3 || (v <= pts[(i + n - 1) % n].score && v <= pts[(i + 1) % n].score))
            minima.push_back(i);
    }
    if (minima.empty())
        throw InvalidParams("no usable grid point for the ratio fit");
    std::sort(minima.begin(), minima.end(), [&](std::size_t a, std::size_t b) {
        return pts[a].score < pts[b].score || (pts[a].score == pts[b].score && a < b);
    });
    minima.resize(std::min(minima.size(), static_cast<std::size_t>(opts.refine_candidates)));

    EstimationResult best;
    best.neg_log_lik = kInf;
    for (std::size_t idx : minima) {
        const auto ref = refine(pts[idx].alpha, r, schedule, opts);
        if (ref.ev.value < best.neg_log_lik) {
            best.alpha_hat = ref.alpha;
            best.neg_log_lik = ref.ev.value;
            best.noise_scale = ref.ev.noise_scale;
            best.converged = ref.converged;
            best.iterations = ref.iterations;
            best.f_d_init = pts[idx].f_d;
            best.rho1_init = pts[idx].alpha.rho1;
        }
    }
    return best;
}

} // namespace csisense
