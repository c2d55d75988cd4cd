#include "csisense/scenario.hpp"

#include "csisense/errors.hpp"

#include <cmath>

namespace csisense {

ChannelScenario ChannelScenario::from_ratios(double wavelength, double spacing, cplx rho0, cplx rho1,
                                             double h_s0_mag, double theta_d, double doppler_hz,
                                             double noise_power) {
    ChannelScenario s;
    s.wavelength = wavelength;
    s.antenna_spacing = spacing;
    s.statics = DirectStatics{cplx(h_s0_mag, 0.0), rho0 * h_s0_mag};
    s.dynamic_gain = rho1 * h_s0_mag;
    s.dynamic_theta = theta_d;
    s.doppler_hz = doppler_hz;
    s.noise_power = noise_power;
    return s;
}

void ChannelScenario::validate() const {
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw InvalidScenario("wavelength must be positive");
    if (!(antenna_spacing > 0.0) || !std::isfinite(antenna_spacing))
        throw InvalidScenario("antenna spacing must be positive");
    if (!(noise_power > 0.0) || !std::isfinite(noise_power))
        throw InvalidScenario("noise power must be positive");
    if (!std::isfinite(dynamic_theta) || !std::isfinite(doppler_hz) ||
        !std::isfinite(dynamic_gain.real()) || !std::isfinite(dynamic_gain.imag()))
        throw InvalidScenario("dynamic path parameters must be finite");
    if (const auto* paths = std::get_if<std::vector<StaticPath>>(&statics)) {
        if (paths->empty())
            throw InvalidScenario("at least one static path is required");
    }
}

cplx steering_phasor(double theta, double spacing, double wavelength) {
    return std::polar(1.0, 2.0 * kPi / wavelength * spacing * std::sin(theta));
}

cplx steering_phasor_derivative(double theta, double spacing, double wavelength) {
    const double k = 2.0 * kPi / wavelength * spacing;
    return cplx(0.0, k * std::cos(theta)) * steering_phasor(theta, spacing, wavelength);
}

StaticAggregate aggregate_statics(const ChannelScenario& scenario, double relative_floor) {
    scenario.validate();
    StaticAggregate agg{};
    double scale = 0.0;
    if (const auto* paths = std::get_if<std::vector<StaticPath>>(&scenario.statics)) {
        for (const auto& p : *paths) {
            agg.h_s0 += p.gain;
            agg.h_s1 += p.gain * steering_phasor(p.theta, scenario.antenna_spacing, scenario.wavelength);
            scale += std::abs(p.gain);
        }
    } else {
        const auto& direct = std::get<DirectStatics>(scenario.statics);
        agg.h_s0 = direct.h_s0;
        agg.h_s1 = direct.h_s1;
        scale = std::abs(direct.h_s0) + std::abs(direct.h_s1);
    }
    if (!(std::abs(agg.h_s0) > relative_floor * scale) || scale == 0.0)
        throw DegenerateStatics("static paths cancel on antenna 0 (|h_s0| below floor)");
    agg.rho0 = agg.h_s1 / agg.h_s0;
    agg.rho1 = scenario.dynamic_gain / agg.h_s0;
    return agg;
}

PowerRatios power_ratios(const ChannelScenario& scenario) {
    const auto agg = aggregate_statics(scenario);
    const double p0 = std::norm(agg.h_s0);
    const double p1 = std::norm(agg.h_s1);
    const double avg = 0.5 * (p0 + p1);
    const cplx a = steering_phasor(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    PowerRatios r{};
    r.r_sn = avg / scenario.noise_power;
    r.r_sd = avg / std::norm(scenario.dynamic_gain);
    r.r_a = std::norm(agg.h_s1 - a * agg.h_s0) / (p0 + p1);
    return r;
}

RatioBounds r_a_bounds(cplx h_s0, cplx h_s1) {
    const double m0 = std::abs(h_s0);
    const double m1 = std::abs(h_s1);
    const double den = m0 * m0 + m1 * m1;
    return {(m0 - m1) * (m0 - m1) / den, (m0 + m1) * (m0 + m1) / den};
}

ChannelScenario with_r_sn_db(const ChannelScenario& scenario, double r_sn_db) {
    const auto agg = aggregate_statics(scenario);
    ChannelScenario out = scenario;
    const double avg = 0.5 * (std::norm(agg.h_s0) + std::norm(agg.h_s1));
    out.noise_power = avg / std::pow(10.0, r_sn_db / 10.0);
    return out;
}

ChannelScenario with_r_sd(const ChannelScenario& scenario, double r_sd) {
    if (!(r_sd > 0.0))
        throw InvalidScenario("r_sd must be positive");
    const auto agg = aggregate_statics(scenario);
    ChannelScenario out = scenario;
    const double avg = 0.5 * (std::norm(agg.h_s0) + std::norm(agg.h_s1));
    const double mag = std::sqrt(avg / r_sd);
    const double phase = std::abs(scenario.dynamic_gain) > 0.0 ? std::arg(scenario.dynamic_gain) : 0.0;
    out.dynamic_gain = std::polar(mag, phase);
    return out;
}

} // namespace csisense
