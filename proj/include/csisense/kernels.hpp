#pragma once

// Data-parallel inner loops. Every kernel has a serial reference version and an
// OpenMP version with the same per-element summation order, so the two agree
// bit-for-bit; tests compare them and bench/ times them.

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace csisense::kernels {

using cplx = std::complex<double>;

/// Quadrature-weighted normal equations of the sidelobe-power update.
struct SidelobeSystem {
    Eigen::MatrixXd re_v2;    // Re{V2}, K_B x K_B
    Eigen::VectorXd im_v1;    // Im{V1} 1, length K_B
    double power = 0.0;       // weighted sidelobe power at the current iterate
};

namespace serial {

/// out[i] = sum_k exp(j 2 pi positions[k] t0 freqs[i]).
void phasor_sums(std::span<const double> positions, double t0, std::span<const double> freqs,
                 std::span<cplx> out);

/// `weights` already folds the trapezoid rule and the frequency weighting.
SidelobeSystem sidelobe_system(std::span<const double> half, std::size_t movable_offset, double t0,
                               std::span<const double> nodes, std::span<const double> weights);

} // namespace serial

namespace parallel {

void phasor_sums(std::span<const double> positions, double t0, std::span<const double> freqs,
                 std::span<cplx> out);

SidelobeSystem sidelobe_system(std::span<const double> half, std::size_t movable_offset, double t0,
                               std::span<const double> nodes, std::span<const double> weights);

} // namespace parallel

/// Threads the parallel kernels may use (after SENSE_THREADS capping).
int max_threads();

/// Apply the SENSE_THREADS environment cap, if set. Returns the resulting thread count.
int configure_threads_from_env();

} // namespace csisense::kernels
