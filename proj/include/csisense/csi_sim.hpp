#pragma once

#include "csisense/scenario.hpp"
#include "csisense/schedule.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace csisense {

/// exp(j 2 pi phi_k f_d T0) for every scheduled symbol.
std::vector<cplx> doppler_steering(double doppler_hz, const SymbolSchedule& schedule);

/// Per-symbol timing (TMO) and carrier-frequency (CFO) offsets.
struct ClockOffsets {
    std::vector<double> tmo;   // s
    std::vector<double> cfo;   // rad
    double subcarrier_hz = 15e3; // p * delta_f of the observed subcarrier

    static ClockOffsets zero(std::size_t k);
    /// Common multiplicative factor exp(j beta_k) exp(j 2 pi p df tau_k).
    cplx factor(std::size_t k) const;
};

struct OffsetModel {
    double tmo_max = 1.0 / (4096.0 * 15e3); // one sample of a 4096-point, 15 kHz OFDM symbol
    double subcarrier_hz = 15e3;
};

/// beta_k ~ U[-pi, pi), tau_k ~ U[0, tmo_max); deterministic in (seed, trial).
ClockOffsets random_offsets(std::size_t k, std::uint64_t seed, std::uint64_t trial,
                            const OffsetModel& model = {});

/// Counter-based sampler: every draw is a pure function of (seed, trial, symbol, antenna),
/// so Monte Carlo trials can run in any order or concurrently.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t trial) noexcept : seed_(seed), trial_(trial) {}

    /// Circular complex Gaussian with unit variance.
    cplx normal(std::uint64_t k, std::uint64_t antenna) const noexcept;
    /// Uniform in [0, 1).
    double uniform(std::uint64_t k, std::uint64_t channel) const noexcept;

private:
    std::uint64_t key(std::uint64_t k, std::uint64_t channel) const noexcept;

    std::uint64_t seed_;
    std::uint64_t trial_;
};

struct CsiPair {
    std::vector<cplx> y0;
    std::vector<cplx> y1;
};

/// Antenna-level CSI with clock offsets and additive noise (d_0 = 0, d_1 = d).
CsiPair generate_csi(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                     const ClockOffsets& offsets, std::uint64_t seed, std::uint64_t trial = 0);

/// Element-wise y1 / y0. Throws ZeroDenominator.
std::vector<cplx> csi_ratio(std::span<const cplx> y0, std::span<const cplx> y1);

/// High-SNR Gaussian model of the ratio: r ~ CN(chi, diag(eta)).
struct CsiRatioSeries {
    std::vector<cplx> r;     // observed (empty when only the model is evaluated)
    std::vector<cplx> chi;   // model mean
    std::vector<double> eta; // model variance
};

/// Mean chi and variance eta of the first-order ratio model.
/// Evaluated from (rho0, rho1, a, |h_s0|, sigma_n^2); r is left empty.
CsiRatioSeries ratio_model(const ChannelScenario& scenario, const SymbolSchedule& schedule);

enum class SnrRegime { static_dominant, dynamic_dominant, indeterminate };

struct HighSnrReport {
    SnrRegime regime = SnrRegime::indeterminate;
    double margin = 0.0;          // linear amplitude gap between |xi_d| and the static sums
    double margin_over_sigma = 0.0;
    bool valid = false;           // margin_over_sigma >= kHighSnrMargin
};

/// Margin (in noise standard deviations) treated as "much larger than sigma_n".
inline constexpr double kHighSnrMargin = 10.0;

HighSnrReport check_high_snr(const ChannelScenario& scenario);

} // namespace csisense
