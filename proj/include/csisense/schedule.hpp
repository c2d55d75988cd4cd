#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace csisense {

/// Sensing-symbol schedule: which of the k_all available OFDM symbols
/// (spaced t0 apart) carry the CSI used for Doppler estimation.
struct SymbolSchedule {
    std::vector<int> phi; // strictly increasing, in [0, k_all-1]
    int k_all = 0;
    double t0 = 125e-6;   // s

    std::size_t size() const noexcept { return phi.size(); }

    /// Throws InvalidSchedule when the invariants do not hold.
    void validate() const;

    /// 1 / (2 t0): edge of the unambiguous Doppler range.
    double nyquist_hz() const noexcept { return 0.5 / t0; }

    /// True when phi is symmetric about (k_all-1)/2 with an even count.
    bool is_center_symmetric() const noexcept;

    /// The lower half of a center-symmetric schedule.
    std::vector<double> half() const;

    static SymbolSchedule contiguous(int k, double t0);
};

/// Mean and mean-square of the symbol indices.
struct IndexMoments {
    double s1;
    double s2;
};
IndexMoments index_moments(std::span<const int> phi);

/// Text format: header comments `# k_all=`, `# K=`, `# T0_s=`, then one index per line.
void write_schedule(std::ostream& os, const SymbolSchedule& schedule);
SymbolSchedule read_schedule(std::istream& is);
void save_schedule(const std::string& path, const SymbolSchedule& schedule);
SymbolSchedule load_schedule(const std::string& path);

/// K distinct indices drawn uniformly from [0, k_all-1], sorted.
SymbolSchedule random_schedule(int k_all, int k, double t0, std::uint64_t seed);

} // namespace csisense
