#pragma once

#include "csisense/crb_core.hpp"
#include "csisense/schedule.hpp"

#include <array>
#include <span>
#include <vector>

namespace csisense {

enum class MleObjective {
    gaussian,      // full complex-Gaussian likelihood, variance depends on the parameters
    least_squares, // plain sum of squared ratio residuals
};

struct MleOptions {
    double wavelength = 0.1;
    double antenna_spacing = 0.05;
    int grid_points = 2048;
    int refine_candidates = 6;
    int max_iters = 100;
    double grad_tol = 1e-9;
    MleObjective objective = MleObjective::gaussian;
    bool parallel = true;
};

/// Variance shape g_k = (|mu_k|^2 + |nu_k|^2) / |mu_k|^4, so eta_k = noise_scale * g_k.
struct RatioModel {
    std::vector<cplx> chi;
    std::vector<double> g;
};
RatioModel ratio_model_at(const ParamVector& alpha, const SymbolSchedule& schedule, const MleOptions& opts);

/// sum_k |r_k - chi_k|^2 / eta_k + ln eta_k with eta_k = noise_scale * g_k.
/// Throws InvalidParams when noise_scale <= 0 or the model is undefined.
double negloglik(const ParamVector& alpha, double noise_scale, std::span<const cplx> r,
                 const SymbolSchedule& schedule, const MleOptions& opts = {});

/// Analytic gradient of negloglik with respect to the six real parameters.
std::array<double, 6> negloglik_gradient(const ParamVector& alpha, double noise_scale, std::span<const cplx> r,
                                         const SymbolSchedule& schedule, const MleOptions& opts = {});

/// Noise scale maximizing the likelihood at fixed alpha: mean |r - chi|^2 / g.
double noise_scale_hat(const ParamVector& alpha, std::span<const cplx> r, const SymbolSchedule& schedule,
                       const MleOptions& opts = {});

/// negloglik with the noise scale replaced by its conditional maximizer.
double profile_negloglik(const ParamVector& alpha, std::span<const cplx> r, const SymbolSchedule& schedule,
                         const MleOptions& opts = {});

/// One f_d grid point: linear fit of the ratio numerator and denominator, scored by the objective.
struct GridPoint {
    double f_d = 0.0;
    ParamVector alpha;
    double score = 0.0; // +inf when the fit is unusable
};

GridPoint fit_grid_point(double f_d, std::span<const cplx> r, const SymbolSchedule& schedule,
                         const MleOptions& opts);

std::vector<double> doppler_grid(const SymbolSchedule& schedule, int points);

std::vector<GridPoint> score_grid(std::span<const double> f_grid, std::span<const cplx> r,
                                  const SymbolSchedule& schedule, const MleOptions& opts, bool parallel);

struct EstimationResult {
    ParamVector alpha_hat;
    double noise_scale = 0.0;
    double neg_log_lik = 0.0;
    bool converged = false;
    int iterations = 0;
    double f_d_init = 0.0;
    cplx rho1_init;
};

/// Grid search over f_d followed by damped Fisher-scoring refinement.
EstimationResult estimate(std::span<const cplx> r, const SymbolSchedule& schedule, const MleOptions& opts = {});

/// Map f into [-1/(2 T0), 1/(2 T0)).
double wrap_doppler(double f, double t0);

} // namespace csisense
