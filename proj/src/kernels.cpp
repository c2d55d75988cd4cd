#include "csisense/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

namespace csisense::kernels {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cplx phasor_sum_at(std::span<const double> positions, double scale) {
    double re = 0.0;
    double im = 0.0;
    for (double p : positions) {
        const double arg = scale * p;
        re += std::cos(arg);
        im += std::sin(arg);
    }
    return {re, im};
}

// Shared setup of the sidelobe system: per-node sum over all half entries,
// the movable-entry phasors and their weighted first moment.
struct NodeTables {
    std::size_t kb = 0;
    std::size_t nodes = 0;
    std::vector<double> cw;       // weights * f^2
    std::vector<double> angle;    // kb x nodes, 2 pi t0 f phi
};

NodeTables make_tables(std::span<const double> half, std::size_t offset, double t0,
                       std::span<const double> nodes) {
    NodeTables t;
    t.kb = half.size() - offset;
    t.nodes = nodes.size();
    t.angle.resize(t.kb * t.nodes);
    for (std::size_t i = 0; i < t.kb; ++i)
        for (std::size_t n = 0; n < t.nodes; ++n)
            t.angle[i * t.nodes + n] = kTwoPi * t0 * nodes[n] * half[offset + i];
    return t;
}

// Row i of Re{V2} and entry i of Im{V1} 1, in a fixed node order.
void fill_row(const NodeTables& t, std::span<const cplx> sums, std::span<const double> nodes,
              std::span<const double> weights, double v1_scale, double v2_scale, std::size_t i,
              Eigen::MatrixXd& v2, Eigen::VectorXd& v1) {
    const double* ai = &t.angle[i * t.nodes];
    for (std::size_t j = 0; j < t.kb; ++j) {
        const double* aj = &t.angle[j * t.nodes];
        double acc = 0.0;
        for (std::size_t n = 0; n < t.nodes; ++n)
            acc += weights[n] * nodes[n] * nodes[n] * std::cos(ai[n] - aj[n]);
        v2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v2_scale * acc;
    }
    double acc = 0.0;
    for (std::size_t n = 0; n < t.nodes; ++n) {
        // Im{ e^{j a_i} conj(s) } with s the sum over the whole half
        const cplx e(std::cos(ai[n]), std::sin(ai[n]));
        acc += weights[n] * nodes[n] * (e * std::conj(sums[n])).imag();
    }
    v1(static_cast<Eigen::Index>(i)) = v1_scale * acc;
}

double weighted_power(std::span<const cplx> sums, std::span<const double> weights, double k) {
    double p = 0.0;
    const double s = 2.0 / k;
    for (std::size_t n = 0; n < sums.size(); ++n)
        p += weights[n] * std::norm(s * sums[n]);
    return p;
}

template <bool Parallel>
SidelobeSystem sidelobe_impl(std::span<const double> half, std::size_t offset, double t0,
                             std::span<const double> nodes, std::span<const double> weights) {
    const double k = 2.0 * static_cast<double>(half.size());
    std::vector<cplx> sums(nodes.size());
    if constexpr (Parallel)
        parallel::phasor_sums(half, t0, nodes, sums);
    else
        serial::phasor_sums(half, t0, nodes, sums);

    const NodeTables t = make_tables(half, offset, t0, nodes);
    const double pi = std::numbers::pi;
    const double v1_scale = 8.0 * pi * t0 / (k * k);
    const double v2_scale = 16.0 * pi * pi * t0 * t0 / (k * k);

    SidelobeSystem sys;
    sys.re_v2.resize(static_cast<Eigen::Index>(t.kb), static_cast<Eigen::Index>(t.kb));
    sys.im_v1.resize(static_cast<Eigen::Index>(t.kb));
    const auto rows = static_cast<std::ptrdiff_t>(t.kb);
    if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < rows; ++i)
            fill_row(t, sums, nodes, weights, v1_scale, v2_scale, static_cast<std::size_t>(i), sys.re_v2, sys.im_v1);
    } else {
        for (std::ptrdiff_t i = 0; i < rows; ++i)
            fill_row(t, sums, nodes, weights, v1_scale, v2_scale, static_cast<std::size_t>(i), sys.re_v2, sys.im_v1);
    }
    sys.power = weighted_power(sums, weights, k);
    return sys;
}

} // namespace

namespace serial {

void phasor_sums(std::span<const double> positions, double t0, std::span<const double> freqs,
                 std::span<cplx> out) {
    for (std::size_t i = 0; i < freqs.size(); ++i)
        out[i] = phasor_sum_at(positions, kTwoPi * t0 * freqs[i]);
}

SidelobeSystem sidelobe_system(std::span<const double> half, std::size_t movable_offset, double t0,
                               std::span<const double> nodes, std::span<const double> weights) {
    return sidelobe_impl<false>(half, movable_offset, t0, nodes, weights);
}

} // namespace serial

namespace parallel {

void phasor_sums(std::span<const double> positions, double t0, std::span<const double> freqs,
                 std::span<cplx> out) {
    const auto n = static_cast<std::ptrdiff_t>(freqs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = phasor_sum_at(positions, kTwoPi * t0 * freqs[static_cast<std::size_t>(i)]);
}

SidelobeSystem sidelobe_system(std::span<const double> half, std::size_t movable_offset, double t0,
                               std::span<const double> nodes, std::span<const double> weights) {
    return sidelobe_impl<true>(half, movable_offset, t0, nodes, weights);
}

} // namespace parallel

int max_threads() { return omp_get_max_threads(); }

int configure_threads_from_env() {
    if (const char* env = std::getenv("SENSE_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && n > 0)
            omp_set_num_threads(static_cast<int>(n));
    }
    return omp_get_max_threads();
}

} // namespace csisense::kernels
