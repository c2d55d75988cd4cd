#include "csisense/csi_sim.hpp"

#include "csisense/errors.hpp"

#include <algorithm>
#include <cmath>

namespace csisense {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Channels used by NoiseStream: antennas take 0/1, offsets draw from the ones below.
constexpr std::uint64_t kCfoChannel = 16;
constexpr std::uint64_t kTmoChannel = 17;

} // namespace

std::vector<cplx> doppler_steering(double doppler_hz, const SymbolSchedule& schedule) {
    std::vector<cplx> d(schedule.phi.size());
    const double w = 2.0 * kPi * doppler_hz * schedule.t0;
    for (std::size_t k = 0; k < d.size(); ++k)
        d[k] = std::polar(1.0, w * schedule.phi[k]);
    return d;
}

ClockOffsets ClockOffsets::zero(std::size_t k) {
    ClockOffsets o;
    o.tmo.assign(k, 0.0);
    o.cfo.assign(k, 0.0);
    return o;
}

cplx ClockOffsets::factor(std::size_t k) const {
    return std::polar(1.0, cfo[k] + 2.0 * kPi * subcarrier_hz * tmo[k]);
}

std::uint64_t NoiseStream::key(std::uint64_t k, std::uint64_t channel) const noexcept {
    std::uint64_t h = splitmix64(seed_);
    h = splitmix64(h ^ trial_);
    h = splitmix64(h ^ k);
    return splitmix64(h ^ channel);
}

double NoiseStream::uniform(std::uint64_t k, std::uint64_t channel) const noexcept {
    return to_unit(key(k, channel));
}

cplx NoiseStream::normal(std::uint64_t k, std::uint64_t antenna) const noexcept {
    const std::uint64_t h = key(k, antenna);
    const double u1 = 1.0 - to_unit(h);           // (0, 1]
    const double u2 = to_unit(splitmix64(h));
    const double radius = std::sqrt(-std::log(u1)); // unit total variance
    return std::polar(radius, 2.0 * kPi * u2);
}

ClockOffsets random_offsets(std::size_t k, std::uint64_t seed, std::uint64_t trial, const OffsetModel& model) {
    const NoiseStream stream(seed, trial);
    ClockOffsets o;
    o.subcarrier_hz = model.subcarrier_hz;
    o.cfo.resize(k);
    o.tmo.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        o.cfo[i] = -kPi + 2.0 * kPi * stream.uniform(i, kCfoChannel);
        o.tmo[i] = model.tmo_max * stream.uniform(i, kTmoChannel);
    }
    return o;
}

CsiPair generate_csi(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                     const ClockOffsets& offsets, std::uint64_t seed, std::uint64_t trial) {
    scenario.validate();
    schedule.validate();
    const std::size_t n = schedule.size();
    if (offsets.cfo.size() != n || offsets.tmo.size() != n)
        throw InvalidSize("clock offsets must have one entry per scheduled symbol");

    const auto agg = aggregate_statics(scenario);
    const cplx a = steering_phasor(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const auto d = doppler_steering(scenario.doppler_hz, schedule);
    const double sigma = std::sqrt(scenario.noise_power);
    const NoiseStream noise(seed, trial);

    CsiPair out;
    out.y0.resize(n);
    out.y1.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx dyn = scenario.dynamic_gain * d[k];
        const cplx c = offsets.factor(k);
        // Noise is drawn in the offset-free frame and rotated with the signal;
        // a rotated circular Gaussian has the same law as an unrotated one.
        out.y0[k] = c * (agg.h_s0 + dyn + sigma * noise.normal(k, 0));
        out.y1[k] = c * (agg.h_s1 + a * dyn + sigma * noise.normal(k, 1));
    }
    return out;
}

std::vector<cplx> csi_ratio(std::span<const cplx> y0, std::span<const cplx> y1) {
    if (y0.size() != y1.size())
        throw InvalidSize("antenna sequences differ in length");
    std::vector<cplx> r(y0.size());
    for (std::size_t k = 0; k < y0.size(); ++k) {
        if (y0[k] == cplx(0.0, 0.0))
            throw ZeroDenominator(k);
        r[k] = y1[k] / y0[k];
    }
    return r;
}

CsiRatioSeries ratio_model(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    schedule.validate();
    const auto agg = aggregate_statics(scenario);
    const cplx a = steering_phasor(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const auto d = doppler_steering(scenario.doppler_hz, schedule);
    const double scale = scenario.noise_power / std::norm(agg.h_s0);

    CsiRatioSeries s;
    s.chi.resize(d.size());
    s.eta.resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        const cplx mu = agg.rho1 * d[k] + 1.0;
        const cplx nu = a * agg.rho1 * d[k] + agg.rho0;
        const double m2 = std::norm(mu);
        s.chi[k] = nu / mu;
        s.eta[k] = scale * (m2 + std::norm(nu)) / (m2 * m2);
    }
    return s;
}

HighSnrReport check_high_snr(const ChannelScenario& scenario) {
    const auto agg = aggregate_statics(scenario);
    const double m0 = std::abs(agg.h_s0);
    const double m1 = std::abs(agg.h_s1);
    const double md = std::abs(scenario.dynamic_gain);
    const double sigma = std::sqrt(scenario.noise_power);

    HighSnrReport rep;
    if (md < std::min(m0, m1)) {
        rep.regime = SnrRegime::static_dominant;
        rep.margin = std::min(m0, m1) - md;
    } else if (md > std::max(m0, m1)) {
        rep.regime = SnrRegime::dynamic_dominant;
        rep.margin = md - std::max(m0, m1);
    } else {
        rep.regime = SnrRegime::indeterminate;
        rep.margin = 0.0;
    }
    rep.margin_over_sigma = rep.margin / sigma;
    rep.valid = rep.regime != SnrRegime::indeterminate && rep.margin_over_sigma >= kHighSnrMargin;
    return rep;
}

} // namespace csisense
