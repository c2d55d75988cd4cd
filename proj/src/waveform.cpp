#include "csisense/waveform.hpp"

#include "csisense/crb_analysis.hpp"
#include "csisense/errors.hpp"
#include "csisense/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csisense {

SymbolSchedule noise_limited_schedule(int k_all, int k, double t0) {
    if (k < 2 || k > k_all)
        throw InvalidSize("noise-limited schedule needs 2 <= K <= k_all");
    const int front = (k + 1) / 2;
    const int back = k / 2;
    SymbolSchedule s;
    s.k_all = k_all;
    s.t0 = t0;
    s.phi.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < front; ++i)
        s.phi.push_back(i);
    for (int i = k_all - back; i < k_all; ++i)
        s.phi.push_back(i);
    s.validate();
    return s;
}

namespace {

template <class T>
double variance(std::span<const T> phi) {
    if (phi.empty())
        return 0.0;
    const double n = static_cast<double>(phi.size());
    double mean = 0.0;
    for (T p : phi)
        mean += static_cast<double>(p);
    mean /= n;
    double ss = 0.0;
    for (T p : phi) {
        const double d = static_cast<double>(p) - mean;
        ss += d * d;
    }
    return ss / n;
}

} // namespace

double l1_metric(std::span<const int> phi) { return variance(phi); }
double l1_metric(std::span<const double> phi) { return variance(phi); }

std::vector<double> envelope(std::span<const double> half, double t0, std::span<const double> f_grid) {
    std::vector<cplx> sums(f_grid.size());
    kernels::parallel::phasor_sums(half, t0, f_grid, sums);
    std::vector<double> e(f_grid.size());
    const double scale = half.empty() ? 0.0 : 1.0 / static_cast<double>(half.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = std::abs(sums[i]) * scale;
    return e;
}

double perturbation_bound(int k, int k_b, double t0, double f_d) {
    return kPi * k_b / (0.5 * k) * std::abs(t0 * f_d);
}

double TabulatedWeight::operator()(double f) const {
    if (points.empty())
        return 1.0;
    if (f <= points.front().first)
        return points.front().second;
    if (f >= points.back().first)
        return points.back().second;
    const auto it = std::upper_bound(points.begin(), points.end(), f,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto& [f1, w1] = *it;
    const auto& [f0, w0] = *(it - 1);
    return w0 + (w1 - w0) * (f - f0) / (f1 - f0);
}

void OptimizerConfig::validate() const {
    if (!(t0 > 0.0))
        throw ConfigError("symbol interval must be positive");
    if (!(f_d_mainlobe_ex > 0.0) || !(f_d_mainlobe_ex < 0.5 / t0))
        throw ConfigError("expected mainlobe bound must lie in (0, 1/(2 T0))");
    if (!(step_weight_a > 0.0))
        throw ConfigError("step weight must be positive");
    if (!(convergence_eps > 0.0))
        throw ConfigError("convergence threshold must be positive");
    if (max_iters < 0)
        throw ConfigError("max_iters must be non-negative");
    if (quadrature_points < 512)
        throw ConfigError("at least 512 quadrature points are required");
    for (std::size_t i = 0; i < weight_fn.points.size(); ++i) {
        if (weight_fn.points[i].second < 0.0)
            throw ConfigError("frequency weights must be non-negative");
        if (i > 0 && !(weight_fn.points[i].first > weight_fn.points[i - 1].first))
            throw ConfigError("frequency weight table must be strictly ascending");
    }
}

Quadrature sidelobe_quadrature(const OptimizerConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.quadrature_points);
    const double lo = config.f_d_mainlobe_ex;
    const double hi = 0.5 / config.t0;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        q.nodes[i] = lo + h * static_cast<double>(i);
        const double end = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        q.weights[i] = end * h * config.weight_fn(q.nodes[i]);
    }
    return q;
}

double sidelobe_power(std::span<const double> half, const OptimizerConfig& config) {
    const auto q = sidelobe_quadrature(config);
    std::vector<cplx> sums(q.nodes.size());
    kernels::parallel::phasor_sums(half, config.t0, q.nodes, sums);
    const double scale = 1.0 / static_cast<double>(half.size());
    double p = 0.0;
    for (std::size_t i = 0; i < sums.size(); ++i)
        p += q.weights[i] * std::norm(scale * sums[i]);
    return p;
}

SidelobeModel sidelobe_model(std::span<const double> half, int k_f, const OptimizerConfig& config,
                             bool parallel) {
    const auto q = sidelobe_quadrature(config);
    const auto offset = static_cast<std::size_t>(k_f);
    auto sys = parallel ? kernels::parallel::sidelobe_system(half, offset, config.t0, q.nodes, q.weights)
                        : kernels::serial::sidelobe_system(half, offset, config.t0, q.nodes, q.weights);
    return {std::move(sys.re_v2), std::move(sys.im_v1), sys.power};
}

int half_upper_index(int k_all) { return k_all / 2 - 1; }

std::vector<double> initial_back_block(int k_all, int k_f, int k_b) {
    std::vector<double> back(static_cast<std::size_t>(std::max(k_b, 0)));
    if (k_b == 1) {
        back[0] = k_f;
        return back;
    }
    const double span = half_upper_index(k_all) - k_f;
    for (int i = 0; i < k_b; ++i)
        back[static_cast<std::size_t>(i)] = k_f + std::round(i * span / (k_b - 1));
    return back;
}

std::vector<double> step_weights(std::span<const double> back, int k_all, int k_f) {
    const double lo = k_f + 1;
    const double hi = (k_all - 1) / 2 - 1;
    std::vector<double> w(back.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        w[i] = (back[i] > lo && back[i] < hi) ? 1.0 : kFrozenWeight;
    return w;
}

std::vector<int> round_back_block(std::span<const double> back, int k_all, int k_f) {
    const int upper = half_upper_index(k_all);
    std::vector<int> r(back.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        r[i] = static_cast<int>(std::clamp(std::round(back[i]), static_cast<double>(k_f),
                                           static_cast<double>(upper)));
    std::sort(r.begin(), r.end());
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] <= r[i - 1])
            r[i] = r[i - 1] + 1;
    for (std::size_t i = r.size(); i-- > 0;) {
        const int cap = (i + 1 < r.size()) ? r[i + 1] - 1 : upper;
        if (r[i] > cap)
            r[i] = cap;
    }
    return r;
}

SymbolSchedule assemble_symmetric(std::span<const int> half, int k_all, double t0) {
    SymbolSchedule s;
    s.k_all = k_all;
    s.t0 = t0;
    s.phi.assign(half.begin(), half.end());
    for (int p : half)
        s.phi.push_back(k_all - 1 - p);
    std::sort(s.phi.begin(), s.phi.end());
    s.validate();
    return s;
}

namespace {

std::vector<double> join_half(int k_f, std::span<const double> back) {
    std::vector<double> half(static_cast<std::size_t>(k_f));
    std::iota(half.begin(), half.end(), 0.0);
    half.insert(half.end(), back.begin(), back.end());
    return half;
}

SymbolSchedule schedule_from_back(int k_all, int k_f, std::span<const double> back, double t0) {
    std::vector<int> half(static_cast<std::size_t>(k_f));
    std::iota(half.begin(), half.end(), 0);
    const auto b = round_back_block(back, k_all, k_f);
    half.insert(half.end(), b.begin(), b.end());
    return assemble_symmetric(half, k_all, t0);
}

void measure_mainlobe(OptimizerResult& res, const OptimizerConfig& config) {
    try {
        const auto ml = find_mainlobe(res.schedule);
        res.measured_mainlobe = ml.f_d;
        res.mainlobe_meets_target = !ml.grating_lobes && ml.f_d <= config.f_d_mainlobe_ex;
    } catch (const GratingLobes&) {
        res.measured_mainlobe = std::nan("");
        res.mainlobe_meets_target = false;
    }
}

} // namespace

OptimizerResult optimize_interference_limited(int k_all, int k, int k_f, const OptimizerConfig& config) {
    config.validate();
    if (k < 2 || k % 2 != 0)
        throw InvalidSize("optimizer needs an even K >= 2");
    if (k > k_all)
        throw InvalidSize("K exceeds k_all");
    if (k_f < 0 || k_f > k / 2)
        throw InvalidSize("K_F must lie in [0, K/2]");
    const int k_b = k / 2 - k_f;
    const int upper = half_upper_index(k_all);
    if (k_b > upper - k_f + 1)
        throw InvalidSize("not enough free symbols for the optimizable block");

    OptimizerResult res;
    if (k_b == 0) {
        res.schedule = noise_limited_schedule(k_all, k, config.t0);
        res.history.push_back(sidelobe_power(res.schedule.half(), config));
        measure_mainlobe(res, config);
        return res;
    }

    auto back = initial_back_block(k_all, k_f, k_b);
    res.history.push_back(sidelobe_power(join_half(k_f, back), config));
    auto best_back = back;
    double best_power = res.history.back();

    Eigen::VectorXd prev_delta = Eigen::VectorXd::Zero(k_b);
    res.converged = false;
    for (int it = 1; it <= config.max_iters; ++it) {
        const auto model = sidelobe_model(join_half(k_f, back), k_f, config);
        const auto w = step_weights(back, k_all, k_f);
        Eigen::MatrixXd a = model.re_v2;
        for (int i = 0; i < k_b; ++i)
            a(i, i) += config.step_weight_a * w[static_cast<std::size_t>(i)];
        const Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success)
            throw SingularUpdate("step system is not positive definite");
        const Eigen::VectorXd delta = llt.solve(model.im_v1);
        if (!delta.allFinite())
            throw SingularUpdate("step system produced a non-finite update");

        for (int i = 0; i < k_b; ++i) {
            auto& b = back[static_cast<std::size_t>(i)];
            b = std::clamp(b + delta(i), static_cast<double>(k_f), static_cast<double>(upper));
        }
        res.iterations = it;
        res.history.push_back(sidelobe_power(join_half(k_f, back), config));
        if (res.history.back() < best_power) {
            best_power = res.history.back();
            best_back = back;
        }
        if ((delta - prev_delta).cwiseAbs().maxCoeff() < config.convergence_eps) {
            res.converged = true;
            break;
        }
        prev_delta = delta;
    }
    if (!res.converged)
        back = best_back;

    res.back_continuous = back;
    res.schedule = schedule_from_back(k_all, k_f, back, config.t0);
    measure_mainlobe(res, config);
    return res;
}

} // namespace csisense
