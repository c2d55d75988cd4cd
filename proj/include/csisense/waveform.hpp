#pragma once

#include "csisense/schedule.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace csisense {

/// Front ceil(K/2) and back floor(K/2) symbols of the k_all window.
SymbolSchedule noise_limited_schedule(int k_all, int k, double t0 = 125e-6);

/// Population variance of the indices, mean(phi^2) - mean(phi)^2.
double l1_metric(std::span<const int> phi);
double l1_metric(std::span<const double> phi);
inline double l1_metric(const SymbolSchedule& s) { return l1_metric(std::span<const int>(s.phi)); }

/// |(2/K) sum_{k<K/2} exp(j 2 pi half_k T0 f)| with K = 2 * half.size().
std::vector<double> envelope(std::span<const double> half, double t0, std::span<const double> f_grid);

/// pi K_B / (K/2) |T0 f|.
double perturbation_bound(int k, int k_b, double t0, double f_d);

/// Piecewise-linear frequency weighting; an empty table means a weight of one everywhere.
struct TabulatedWeight {
    std::vector<std::pair<double, double>> points; // (Hz, weight), ascending Hz

    double operator()(double f) const;
};

struct OptimizerConfig {
    double t0 = 125e-6;
    double f_d_mainlobe_ex = 0.0;   // Hz
    TabulatedWeight weight_fn;
    double step_weight_a = 10.0;
    double convergence_eps = 1e-3;  // symbol-index units
    int max_iters = 200;
    int quadrature_points = 4096;

    /// Throws ConfigError.
    void validate() const;
};

/// Trapezoid nodes on [f_d_mainlobe_ex, 1/(2 T0)] with weights folding the frequency weighting.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
Quadrature sidelobe_quadrature(const OptimizerConfig& config);

/// Weighted sidelobe power of a half schedule.
double sidelobe_power(std::span<const double> half, const OptimizerConfig& config);

/// Quadratic model of the sidelobe power around `half`, for the entries from `k_f` on.
struct SidelobeModel {
    Eigen::MatrixXd re_v2;
    Eigen::VectorXd im_v1;
    double power = 0.0;

    /// d P / d phi_B = -2 Im{V1} 1 at the expansion point.
    Eigen::VectorXd gradient() const { return -2.0 * im_v1; }
};
SidelobeModel sidelobe_model(std::span<const double> half, int k_f, const OptimizerConfig& config,
                             bool parallel = true);

/// Largest index allowed in the optimizable block of the half schedule.
int half_upper_index(int k_all);

/// Equally spaced starting point of the optimizable block.
std::vector<double> initial_back_block(int k_all, int k_f, int k_b);

/// Weight vector of the step penalty: 1 inside (K_F+1, floor((k_all-1)/2)-1), else kFrozenWeight.
inline constexpr double kFrozenWeight = 1e12;
std::vector<double> step_weights(std::span<const double> back, int k_all, int k_f);

/// Round the optimizable block to distinct integers in [k_f, half_upper_index(k_all)].
std::vector<int> round_back_block(std::span<const double> back, int k_all, int k_f);

/// Full schedule [half; k_all - 1 - half] from an integer half.
SymbolSchedule assemble_symmetric(std::span<const int> half, int k_all, double t0);

struct OptimizerResult {
    SymbolSchedule schedule;
    int iterations = 0;
    std::vector<double> history;      // sidelobe power of each continuous iterate, starting with the initial one
    bool converged = true;
    std::vector<double> back_continuous;
    double measured_mainlobe = 0.0;   // of the rounded schedule
    bool mainlobe_meets_target = false;
};

/// Iterative sidelobe-power minimization with 2 K_F fixed edge symbols.
OptimizerResult optimize_interference_limited(int k_all, int k, int k_f, const OptimizerConfig& config);

} // namespace csisense
