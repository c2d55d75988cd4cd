#include "csisense/crb_analysis.hpp"

#include "csisense/errors.hpp"
#include "csisense/kernels.hpp"
#include "csisense/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csisense {

namespace {

std::vector<double> positions_of(const SymbolSchedule& s) {
    return {s.phi.begin(), s.phi.end()};
}

double raw_pattern_at(std::span<const double> pos, double t0, double f) {
    cplx out;
    const double freq[1] = {f};
    kernels::serial::phasor_sums(pos, t0, freq, std::span<cplx>(&out, 1));
    return std::abs(out) / static_cast<double>(pos.size());
}

std::vector<double> search_grid(const SymbolSchedule& s) {
    const double step = 1.0 / (kMainlobeOversample * s.k_all * s.t0);
    const auto n = static_cast<std::size_t>(std::floor(s.nyquist_hz() / step + 1e-9)) + 1;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i)
        f[i] = step * static_cast<double>(i);
    return f;
}

std::size_t first_local_min(std::span<const double> v) {
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] <= v[i - 1] && v[i] < v[i + 1])
            return i;
    return v.size();
}

template <class F>
double bisect_crossing(F&& fn, double lo, double hi, double tol) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (fn(mid) >= kMainlobeLevel)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct Crossing {
    bool found = false;
    double f = 0.0;
    bool grating = false;
};

// `exact` evaluates the continuous curve; it is used while the sampled values
// still coincide with it (before `exact_until`), later samples are interpolated.
template <class F>
Crossing crossing_of(std::span<const double> grid, std::span<const double> v, std::size_t exact_until,
                     F&& exact) {
    Crossing c;
    std::size_t i = 1;
    while (i < v.size() && v[i] >= kMainlobeLevel)
        ++i;
    if (i >= v.size())
        return c;
    c.found = true;
    const double step = grid[1] - grid[0];
    if (i <= exact_until) {
        c.f = bisect_crossing(exact, grid[i - 1], grid[i], 1e-3 * step);
    } else {
        const double t = (v[i - 1] - kMainlobeLevel) / (v[i - 1] - v[i]);
        c.f = grid[i - 1] + t * step;
    }
    for (std::size_t j = i; j < v.size(); ++j)
        if (grid[j] > kGratingLobeDistance * c.f && v[j] >= kGratingLobeLevel) {
            c.grating = true;
            break;
        }
    return c;
}

} // namespace

std::vector<double> pattern_values(const SymbolSchedule& schedule, std::span<const double> f_grid) {
    schedule.validate();
    const auto pos = positions_of(schedule);
    std::vector<cplx> sums(f_grid.size());
    kernels::parallel::phasor_sums(pos, schedule.t0, f_grid, sums);
    std::vector<double> p(f_grid.size());
    const double inv_k = 1.0 / static_cast<double>(pos.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = std::min(1.0, std::abs(sums[i]) * inv_k);
    return p;
}

DopplerPattern doppler_pattern(const SymbolSchedule& schedule, std::span<const double> f_grid) {
    for (double f : f_grid)
        if (std::abs(f) > schedule.nyquist_hz() * (1.0 + 1e-12))
            throw ConfigError("pattern grid exceeds the unambiguous Doppler range");
    DopplerPattern out;
    out.f_grid.assign(f_grid.begin(), f_grid.end());
    out.p_values = pattern_values(schedule, f_grid);
    return out;
}

DopplerPattern analyze_pattern(const SymbolSchedule& schedule, std::span<const double> f_grid) {
    DopplerPattern out = doppler_pattern(schedule, f_grid);
    if (schedule.is_center_symmetric())
        out.envelope_values = envelope(schedule.half(), schedule.t0, f_grid);
    const auto ml = find_mainlobe(schedule);
    out.f_d_mainlobe = ml.f_d;
    out.grating_lobe_flag = ml.grating_lobes;
    return out;
}

std::vector<double> upper_envelope(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    const std::size_t m = first_local_min(v);
    if (m >= v.size())
        return out;
    std::vector<std::size_t> anchors{m};
    for (std::size_t j = m + 1; j + 1 < v.size(); ++j)
        if (v[j] >= v[j - 1] && v[j] >= v[j + 1])
            anchors.push_back(j);
    if (anchors.back() != v.size() - 1)
        anchors.push_back(v.size() - 1);
    for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
        const std::size_t i0 = anchors[a];
        const std::size_t i1 = anchors[a + 1];
        for (std::size_t j = i0 + 1; j < i1; ++j) {
            const double t = static_cast<double>(j - i0) / static_cast<double>(i1 - i0);
            out[j] = std::max(v[j], v[i0] + t * (v[i1] - v[i0]));
        }
    }
    return out;
}

MainlobeSearch find_mainlobe(const SymbolSchedule& schedule) {
    schedule.validate();
    const auto grid = search_grid(schedule);
    const auto pos = positions_of(schedule);
    MainlobeSearch res;
    const auto raw = pattern_values(schedule, grid);
    const std::size_t m = first_local_min(raw);

    // The half-schedule envelope only describes the pattern when the pattern
    // actually oscillates underneath it, i.e. dips before the envelope crossing.
    if (schedule.is_center_symmetric()) {
        const auto half = schedule.half();
        const auto env = envelope(half, schedule.t0, grid);
        auto exact = [&](double f) {
            cplx s;
            const double freq[1] = {f};
            kernels::serial::phasor_sums(half, schedule.t0, freq, std::span<cplx>(&s, 1));
            return std::abs(s) / static_cast<double>(half.size());
        };
        const auto c = crossing_of(grid, env, env.size(), exact);
        if (c.found && m < grid.size() && grid[m] < c.f) {
            res.f_d = c.f;
            res.used_envelope = true;
            res.grating_lobes = c.grating;
            return res;
        }
    }

    const auto env = upper_envelope(raw);
    auto exact = [&](double f) { return raw_pattern_at(pos, schedule.t0, f); };
    const auto c = crossing_of(grid, env, m, exact);
    if (!c.found)
        throw GratingLobes("Doppler pattern never falls below the half-power level");
    res.f_d = c.f;
    res.grating_lobes = c.grating;
    return res;
}

double mainlobe_width(const SymbolSchedule& schedule) {
    const auto res = find_mainlobe(schedule);
    if (res.grating_lobes)
        throw GratingLobes("Doppler pattern has grating lobes; mainlobe width undefined");
    return res.f_d;
}

double crb_approx_formula(double t0, std::size_t k, double l1, const PowerRatios& r) {
    const double pre = 1.0 / (8.0 * kPi * kPi * t0 * t0 * static_cast<double>(k));
    const double l = std::sqrt((1.0 - r.r_sd) * (1.0 - r.r_sd) + 2.0 * r.r_a * r.r_sd);
    return pre / l1 * l / (r.r_sn * r.r_a);
}

ApproxCrb crb_doppler_approx(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    double f_m = std::numeric_limits<double>::quiet_NaN();
    try {
        f_m = find_mainlobe(schedule).f_d;
    } catch (const GratingLobes&) {
    }
    return crb_doppler_approx(scenario, schedule, f_m);
}

ApproxCrb crb_doppler_approx(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                             double f_d_mainlobe) {
    schedule.validate();
    const auto ratios = power_ratios(scenario);
    ApproxCrb out;
    out.value = crb_approx_formula(schedule.t0, schedule.size(), l1_metric(schedule), ratios);
    out.f_d_mainlobe = f_d_mainlobe;
    if (!(std::abs(scenario.doppler_hz) > f_d_mainlobe)) {
        out.inside_mainlobe = true;
        out.warnings.emplace_back("|f_d| is not beyond the mainlobe width; approximation not applicable");
    }
    if (ratios.r_sd > kRsdSmallThreshold && ratios.r_sd < kRsdLargeThreshold) {
        out.r_sd_transition = true;
        out.warnings.emplace_back("R_SD lies between 0.1 and 8; approximation may be inaccurate");
    }
    return out;
}

Lemma2Sum lemma2_sum(double b0, double b1, double phase, const SymbolSchedule& schedule, double f_d) {
    schedule.validate();
    if (!(b0 > std::abs(b1)))
        throw NonPositiveDenominator("lemma sum needs b0 > |b1|");
    Lemma2Sum out;
    const double w = 2.0 * kPi * schedule.t0 * f_d;
    for (int p : schedule.phi)
        out.exact += 1.0 / (b0 + b1 * std::cos(w * p + phase));
    out.approx = static_cast<double>(schedule.size()) / std::sqrt(b0 * b0 - b1 * b1);
    return out;
}

double lemma2_residual_bound(double b0, double b1, const SymbolSchedule& schedule, double f_d, int terms) {
    if (!(b0 > std::abs(b1)))
        throw NonPositiveDenominator("lemma sum needs b0 > |b1|");
    const double f[1] = {f_d};
    const double p = pattern_values(schedule, f)[0];
    const double q = b1 * b1 / (b0 * b0);
    double coeff = 1.0;                     // C(2n+1, n) / 4^n
    double power = std::abs(b1) / (b0 * b0); // b1^(2n+1) / b0^(2n+2)
    double sum = 0.0;
    for (int n = 0; n < terms; ++n) {
        sum += coeff * power;
        coeff *= (2.0 * n + 3.0) / (2.0 * (n + 2.0));
        power *= q;
    }
    return static_cast<double>(schedule.size()) * p * sum;
}

namespace {

// Shift base by integer multiples of `period` into (-1, 1), preferring the smallest magnitude.
double fold_into_unit(double base, double period) {
    const double m0 = std::round(-base / period);
    double best = std::numeric_limits<double>::quiet_NaN();
    for (double m = m0 - 2.0; m <= m0 + 2.0; m += 1.0) {
        const double v = base + m * period;
        if (std::abs(v) < 1.0 && !(std::abs(v) >= std::abs(best)))
            best = v;
    }
    return best;
}

} // namespace

AngleExtremes corollary2_extremes(cplx h_s0, cplx h_s1, double wavelength, double spacing) {
    if (std::abs(h_s0) == 0.0 || std::abs(h_s1) == 0.0)
        throw ConfigError("static sums must be nonzero");
    const double base = wavelength / (2.0 * kPi * spacing) * std::arg(h_s1 / h_s0);
    const double period = wavelength / spacing;
    AngleExtremes out;
    out.sin_theta_max_crb = fold_into_unit(base, period);
    out.sin_theta_min_crb = fold_into_unit(base + 0.5 * period, period);
    const double m0 = std::abs(h_s0);
    const double m1 = std::abs(h_s1);
    out.max_min_crb_ratio = m0 == m1 ? std::numeric_limits<double>::infinity()
                                     : std::pow((m1 + m0) / (m1 - m0), 2);
    return out;
}

RegimeValue corollary3_regime(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    schedule.validate();
    const auto r = power_ratios(scenario);
    const double k = static_cast<double>(schedule.size());
    const double base = 1.0 / (8.0 * kPi * kPi * schedule.t0 * schedule.t0 * k * l1_metric(schedule));
    RegimeValue out;
    if (r.r_sd > kRsdLargeThreshold) {
        out.regime = RsdRegime::r_sd_large;
        out.crb_value = base * r.r_sd / (r.r_sn * r.r_a);
    } else if (r.r_sd < kRsdSmallThreshold) {
        out.regime = RsdRegime::r_sd_small;
        out.crb_value = base / (r.r_sn * r.r_a);
    } else {
        throw RegimeUndefined("R_SD between 0.1 and 8 has no limiting form");
    }
    return out;
}

double equivalent_static_angle(cplx h_s0, cplx h_s1, double wavelength, double spacing) {
    if (std::abs(h_s0) == 0.0 || std::abs(h_s1) == 0.0)
        throw ConfigError("static sums must be nonzero");
    const double x = wavelength / (2.0 * kPi * spacing) * std::arg(h_s1 / h_s0);
    if (std::abs(x) > 1.0 + 1e-12)
        throw OutOfDomain("equivalent static angle: arcsin argument outside [-1, 1]");
    return std::asin(std::clamp(x, -1.0, 1.0));
}

} // namespace csisense
