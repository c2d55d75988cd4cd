#pragma once

#include "oracles.hpp"

#include "csisense/crb_core.hpp"
#include "csisense/csi_sim.hpp"
#include "csisense/harness.hpp"
#include "csisense/scenario.hpp"
#include "csisense/schedule.hpp"
#include "csisense/waveform.hpp"

#include <random>

namespace fixtures {

using namespace csisense;

inline ChannelScenario reference() { return reference_scenario().scenario; }

inline SymbolSchedule reference_schedule() { return noise_limited_schedule(512, 128); }

inline oracle::Setup setup_of(const ChannelScenario& s, const SymbolSchedule& sch) {
    oracle::Setup o;
    o.phi = sch.phi;
    o.t0 = sch.t0;
    o.lambda = s.wavelength;
    o.d = s.antenna_spacing;
    o.noise_scale = s.noise_power / std::norm(aggregate_statics(s).h_s0);
    return o;
}

struct Case {
    ChannelScenario scenario;
    SymbolSchedule schedule;
};

/// Random static-dominant scenario that passes the high-SNR check, paired with a
/// random or noise-limited schedule.
inline Case random_high_snr_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        const double r0 = 0.2 + 2.8 * u(rng);
        const double r1 = (0.02 + 0.28 * u(rng)) * std::min(1.0, r0);
        const double f_d = (100.0 + 3800.0 * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
        const double theta = deg2rad(-80.0 + 160.0 * u(rng));
        const double h0 = 0.5 + u(rng);
        auto s = ChannelScenario::from_ratios(0.1, 0.05, std::polar(r0, 2 * kPi * u(rng)),
                                              std::polar(r1, 2 * kPi * u(rng)), h0, theta, f_d, 1e-3);
        s = with_r_sn_db(s, 25.0 + 15.0 * u(rng));
        if (!check_high_snr(s).valid)
            continue;
        const int k = 16 + static_cast<int>(u(rng) * 112);
        const auto seed = static_cast<std::uint64_t>(rng());
        SymbolSchedule sch = u(rng) < 0.5 ? noise_limited_schedule(512, k) : random_schedule(512, k, 125e-6, seed);
        return {s, sch};
    }
}

inline double max_rel(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

} // namespace fixtures
