#pragma once

#include "csisense/scenario.hpp"
#include "csisense/schedule.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace csisense {

/// Unknowns of the ratio model, in the fixed order
/// [f_d, theta_d, Re rho0, Im rho0, Re rho1, Im rho1].
struct ParamVector {
    double f_d = 0.0;
    double theta_d = 0.0;
    cplx rho0;
    cplx rho1;

    std::array<double, 6> to_array() const {
        return {f_d, theta_d, rho0.real(), rho0.imag(), rho1.real(), rho1.imag()};
    }
    static ParamVector from_array(const std::array<double, 6>& v) {
        return {v[0], v[1], cplx(v[2], v[3]), cplx(v[4], v[5])};
    }
};

/// True parameter vector of a scenario.
ParamVector true_params(const ChannelScenario& scenario);

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using ChiJacobian = Eigen::Matrix<cplx, Eigen::Dynamic, 6>;

/// d chi / d alpha, one row per scheduled symbol.
ChiJacobian chi_jacobian(const ChannelScenario& scenario, const SymbolSchedule& schedule);

/// High-SNR Fisher information 2 Re{J^H diag(eta)^-1 J} (noise-derivative term omitted).
Matrix6 fim(const ChannelScenario& scenario, const SymbolSchedule& schedule);

/// 2 Re{J^H diag(1/eta) J} for an arbitrary Jacobian.
Matrix6 fim_from_jacobian(const ChiJacobian& jac, const std::vector<double>& eta);

/// Weighted sums feeding the closed-form 2x2 Doppler/angle information matrix.
struct EpsilonTerms {
    double eps_1 = 0.0;
    double eps_K1 = 0.0;
    double eps_K2 = 0.0;
    double eps_mu2 = 0.0;
    cplx eps_mu1;
    cplx eps_dmu2;
    cplx eps_Kmu;
    cplx eps_dmu1;
    cplx eps_dKmu;
    double gamma_11 = 0.0;
    double gamma_22 = 0.0;
    double gamma_12 = 0.0;
    cplx rho2;                      // a(theta_d) - rho0
    std::vector<double> lambda_diag;
    std::vector<cplx> mu;           // rho1 d(f_d) + 1
};

EpsilonTerms epsilon_terms(const ChannelScenario& scenario, const SymbolSchedule& schedule);

/// Closed-form H from the epsilon/gamma terms.
Eigen::Matrix2d h_closed_form(const ChannelScenario& scenario, const EpsilonTerms& eps);

enum class Conditioning { ok, near_singular, singular };

/// Threshold on the (scale-normalized) condition number of H.
inline constexpr double kNearSingularCondition = 1e12;

struct CrbResult {
    double crb_fd = 0.0;             // Hz^2, +inf when singular
    Eigen::Matrix2d h_matrix;        // Schur complement of the FIM
    Eigen::Matrix2d h_closed;        // closed-form evaluation of the same matrix
    Matrix6 fim;
    Conditioning condition = Conditioning::ok;
    double condition_number = 0.0;   // of diag(H)^-1/2 H diag(H)^-1/2
    double closed_form_residual = 0.0; // max |H - H_closed| / max |H|
};

/// Exact Doppler CRB: [H^-1]_{1,1} with H = F11 - F12 F22^-1 F12^T.
CrbResult crb_doppler_exact(const ChannelScenario& scenario, const SymbolSchedule& schedule);

/// Doppler CRB only; +inf when the information matrix is singular.
double crb_fd(const ChannelScenario& scenario, const SymbolSchedule& schedule);

} // namespace csisense
