#pragma once

#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace csisense {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// One stationary reflector, seen from antenna 0 with complex gain `gain`.
struct StaticPath {
    cplx gain;
    double theta; // radians
};

/// Static field given directly through its two antenna-domain sums.
struct DirectStatics {
    cplx h_s0;
    cplx h_s1;
};

using StaticField = std::variant<std::vector<StaticPath>, DirectStatics>;

/// Ground truth of the sensing link: one moving target plus the static field.
///
/// Subcarrier index, subcarrier spacing and path delays are folded into the
/// complex gains, so everything here refers to a single subcarrier.
struct ChannelScenario {
    double wavelength = 0.1;      // m
    double antenna_spacing = 0.05; // m
    cplx dynamic_gain{0.0, 0.0};  // xi_d
    double dynamic_theta = 0.0;   // rad
    double doppler_hz = 0.0;      // f_d
    StaticField statics = std::vector<StaticPath>{};
    double noise_power = 1e-3;    // sigma_n^2

    /// Build from the ratio parametrization: h_s0 = |h_s0| (zero phase),
    /// h_s1 = rho0 * h_s0, xi_d = rho1 * h_s0.
    static ChannelScenario from_ratios(double wavelength, double spacing, cplx rho0, cplx rho1,
                                       double h_s0_mag, double theta_d, double doppler_hz,
                                       double noise_power);

    /// Throws InvalidScenario on non-physical values.
    void validate() const;
};

/// Aggregated static field plus the two normalized ratios.
struct StaticAggregate {
    cplx h_s0;
    cplx h_s1;
    cplx rho0; // h_s1 / h_s0
    cplx rho1; // xi_d / h_s0
};

struct PowerRatios {
    double r_sn; // average static power / noise power
    double r_sd; // average static power / dynamic power
    double r_a;  // normalized static-vs-dynamic angular mismatch
};

/// exp(j 2 pi d sin(theta) / lambda).
cplx steering_phasor(double theta, double spacing, double wavelength);

/// d a(theta) / d theta.
cplx steering_phasor_derivative(double theta, double spacing, double wavelength);

/// Floor on |h_s0| relative to sum |xi_s| below which the statics count as cancelled.
inline constexpr double kDegenerateStaticsFloor = 1e-12;

StaticAggregate aggregate_statics(const ChannelScenario& scenario,
                                  double relative_floor = kDegenerateStaticsFloor);

PowerRatios power_ratios(const ChannelScenario& scenario);

/// Lower/upper bounds of r_a over all dynamic-path angles.
struct RatioBounds {
    double lower;
    double upper;
};
RatioBounds r_a_bounds(cplx h_s0, cplx h_s1);

/// Return a copy with sigma_n^2 set so that r_sn equals 10^(r_sn_db/10).
ChannelScenario with_r_sn_db(const ChannelScenario& scenario, double r_sn_db);

/// Return a copy with |xi_d| rescaled (phase kept) so that r_sd equals `r_sd`.
ChannelScenario with_r_sd(const ChannelScenario& scenario, double r_sd);

/// f_d = 2 v / lambda.
inline double velocity_to_doppler(double v_mps, double wavelength) { return 2.0 * v_mps / wavelength; }
inline double doppler_to_velocity(double f_hz, double wavelength) { return f_hz * wavelength / 2.0; }

} // namespace csisense
