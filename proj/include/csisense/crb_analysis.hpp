#pragma once

#include "csisense/scenario.hpp"
#include "csisense/schedule.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace csisense {

/// Half-power level that defines the single-sided mainlobe width.
inline constexpr double kMainlobeLevel = 0.707;
/// A pattern that climbs back to this level far from the origin has grating lobes.
inline constexpr double kGratingLobeLevel = 0.9;
inline constexpr double kGratingLobeDistance = 3.0;
/// Grid refinement of the mainlobe search: step = 1 / (kMainlobeOversample k_all T0).
inline constexpr int kMainlobeOversample = 64;

struct DopplerPattern {
    std::vector<double> f_grid;
    std::vector<double> p_values;
    std::optional<std::vector<double>> envelope_values;
    double f_d_mainlobe = 0.0;
    bool grating_lobe_flag = false;
};

/// P(phi, f) = |(1/K) sum_k exp(j 2 pi phi_k T0 f)| on the given grid.
std::vector<double> pattern_values(const SymbolSchedule& schedule, std::span<const double> f_grid);

/// Pattern only; envelope and mainlobe fields are left empty.
DopplerPattern doppler_pattern(const SymbolSchedule& schedule, std::span<const double> f_grid);

/// Pattern plus envelope (center-symmetric schedules) and mainlobe width.
/// Grating lobes are reported through the flag instead of thrown.
DopplerPattern analyze_pattern(const SymbolSchedule& schedule, std::span<const double> f_grid);

/// Upper envelope of sampled pattern values: samples up to the first local
/// minimum, then linear interpolation through the later local maxima.
std::vector<double> upper_envelope(std::span<const double> values);

struct MainlobeSearch {
    double f_d = 0.0;
    bool used_envelope = false;
    bool grating_lobes = false;
};

/// Mainlobe search that never throws on grating lobes.
MainlobeSearch find_mainlobe(const SymbolSchedule& schedule);

/// Single-sided mainlobe width in Hz; throws GratingLobes.
double mainlobe_width(const SymbolSchedule& schedule);

/// (1/(8 pi^2 T0^2 K)) (1/L1) sqrt((1-R_SD)^2 + 2 R_A R_SD) / (R_SN R_A).
double crb_approx_formula(double t0, std::size_t k, double l1, const PowerRatios& ratios);

struct ApproxCrb {
    double value = 0.0;
    double f_d_mainlobe = 0.0;
    bool inside_mainlobe = false;
    bool r_sd_transition = false;
    std::vector<std::string> warnings;
};

ApproxCrb crb_doppler_approx(const ChannelScenario& scenario, const SymbolSchedule& schedule);
/// Same, reusing a precomputed mainlobe width.
ApproxCrb crb_doppler_approx(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                             double f_d_mainlobe);

struct Lemma2Sum {
    double exact = 0.0;
    double approx = 0.0;
};

/// sum_k 1/(b0 + b1 cos(2 pi phi_k T0 f_d + phase)) and its K/sqrt(b0^2 - b1^2) approximation.
Lemma2Sum lemma2_sum(double b0, double b1, double phase, const SymbolSchedule& schedule, double f_d);

/// K P(phi, f_d) sum_{n<terms} b1^(2n+1) C(2n+1, n) / (2^(2n) b0^(2n+2)).
double lemma2_residual_bound(double b0, double b1, const SymbolSchedule& schedule, double f_d,
                             int terms = 50);

struct AngleExtremes {
    double sin_theta_min_crb = 0.0;   // NaN if no shift lands in (-1, 1)
    double sin_theta_max_crb = 0.0;
    double max_min_crb_ratio = 0.0;   // +inf when |h_s0| == |h_s1|
};

AngleExtremes corollary2_extremes(cplx h_s0, cplx h_s1, double wavelength, double spacing);

enum class RsdRegime { r_sd_large, r_sd_small };

inline constexpr double kRsdLargeThreshold = 8.0;
inline constexpr double kRsdSmallThreshold = 0.1;

struct RegimeValue {
    RsdRegime regime = RsdRegime::r_sd_large;
    double crb_value = 0.0;
};

/// Large/small static-to-dynamic power limits of the approximate CRB.
RegimeValue corollary3_regime(const ChannelScenario& scenario, const SymbolSchedule& schedule);

/// arcsin((lambda / 2 pi d) angle(h_s1 / h_s0)); throws OutOfDomain.
double equivalent_static_angle(cplx h_s0, cplx h_s1, double wavelength, double spacing);

} // namespace csisense
