#include "csisense/harness.hpp"

#include "csisense/crb_analysis.hpp"
#include "csisense/crb_core.hpp"
#include "csisense/csi_sim.hpp"
#include "csisense/errors.hpp"
#include "csisense/kernels.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace csisense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError("not a number: '" + s + "'");
    return v;
}

nlohmann::json number_or_string(double v) {
    if (std::isfinite(v))
        return v;
    return fmt17(v);
}

double number_from(const nlohmann::json& j) {
    if (j.is_number())
        return j.get<double>();
    if (j.is_string())
        return parse_double(j.get<std::string>());
    throw ConfigError("expected a number");
}

} // namespace

MleOptions mle_options_for(const ChannelScenario& scenario) {
    MleOptions o;
    o.wavelength = scenario.wavelength;
    o.antenna_spacing = scenario.antenna_spacing;
    return o;
}

MonteCarloResult run_monte_carlo(const ChannelScenario& scenario, const SymbolSchedule& schedule, int trials,
                                 std::uint64_t seed, bool parallel) {
    return run_monte_carlo(scenario, schedule, trials, seed, mle_options_for(scenario), parallel);
}

MonteCarloResult run_monte_carlo(const ChannelScenario& scenario, const SymbolSchedule& schedule, int trials,
                                 std::uint64_t seed, const MleOptions& opts, bool parallel) {
    if (trials < 1)
        throw ConfigError("at least one trial is required");
    scenario.validate();
    schedule.validate();

    MleOptions inner = opts;
    inner.parallel = false;
    const auto n = static_cast<std::size_t>(trials);
    std::vector<double> err(n, kNaN);
    std::vector<char> converged(n, 0);

    auto one = [&](std::size_t t) {
        try {
            const auto offsets = random_offsets(schedule.size(), seed, t);
            const auto y = generate_csi(scenario, schedule, offsets, seed, t);
            const auto r = csi_ratio(y.y0, y.y1);
            const auto est = estimate(r, schedule, inner);
            err[t] = wrap_doppler(est.alpha_hat.f_d - scenario.doppler_hz, schedule.t0);
            converged[t] = est.converged ? 1 : 0;
        } catch (const NumericalError&) {
            err[t] = kNaN;
        }
    };
    const auto count = static_cast<std::ptrdiff_t>(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t t = 0; t < count; ++t)
            one(static_cast<std::size_t>(t));
    } else {
        for (std::ptrdiff_t t = 0; t < count; ++t)
            one(static_cast<std::size_t>(t));
    }

    MonteCarloResult res;
    double se = 0.0;
    double sum = 0.0;
    int ok = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (std::isnan(err[t])) {
            ++res.failures;
            continue;
        }
        if (!converged[t])
            ++res.nonconverged;
        se += err[t] * err[t];
        sum += err[t];
        ++ok;
    }
    res.rmse = ok > 0 ? std::sqrt(se / ok) : kNaN;
    res.bias = ok > 0 ? sum / ok : kNaN;
    res.per_trial = std::move(err);
    return res;
}

std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::prop3: return "prop3";
    case ScheduleKind::algorithm1: return "alg1";
    case ScheduleKind::file: return "file";
    case ScheduleKind::random: return "random";
    }
    return "unknown";
}

SymbolSchedule build_schedule(const ScheduleSpec& spec) {
    switch (spec.kind) {
    case ScheduleKind::prop3:
        return noise_limited_schedule(spec.k_all, spec.k, spec.optimizer.t0);
    case ScheduleKind::algorithm1:
        return optimize_interference_limited(spec.k_all, spec.k, spec.k_f, spec.optimizer).schedule;
    case ScheduleKind::file:
        return load_schedule(spec.path);
    case ScheduleKind::random:
        return random_schedule(spec.k_all, spec.k, spec.optimizer.t0, spec.seed);
    }
    throw ConfigError("unknown schedule kind");
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "r_sn_db")
        return SweepAxis::r_sn_db;
    if (name == "theta_d_deg")
        return SweepAxis::theta_d_deg;
    if (name == "velocity_mps")
        return SweepAxis::velocity_mps;
    if (name == "r_sd_db")
        return SweepAxis::r_sd_db;
    if (name == "k_over_kall")
        return SweepAxis::k_over_kall;
    if (name == "k_f")
        return SweepAxis::k_f;
    throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::r_sn_db: return "r_sn_db";
    case SweepAxis::theta_d_deg: return "theta_d_deg";
    case SweepAxis::velocity_mps: return "velocity_mps";
    case SweepAxis::r_sd_db: return "r_sd_db";
    case SweepAxis::k_over_kall: return "k_over_kall";
    case SweepAxis::k_f: return "k_f";
    }
    return "unknown";
}

void SweepConfig::validate() const {
    scenario_base.validate();
    if (trials < 1)
        throw ConfigError("trials must be at least 1");
    if (axis_values.empty())
        throw ConfigError("sweep needs at least one axis value");
    if (sweep_axis == SweepAxis::k_f && schedule_spec.kind != ScheduleKind::algorithm1)
        throw ConfigError("the k_f axis needs the optimized schedule");
    if (sweep_axis == SweepAxis::k_over_kall && schedule_spec.kind == ScheduleKind::file)
        throw ConfigError("the k_over_kall axis cannot resize a schedule file");
}

namespace {

ChannelScenario apply_axis(ChannelScenario s, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::r_sn_db: return with_r_sn_db(s, value);
    case SweepAxis::theta_d_deg: s.dynamic_theta = deg2rad(value); return s;
    case SweepAxis::velocity_mps: s.doppler_hz = velocity_to_doppler(value, s.wavelength); return s;
    case SweepAxis::r_sd_db: return with_r_sd(s, std::pow(10.0, value / 10.0));
    case SweepAxis::k_over_kall:
    case SweepAxis::k_f: return s;
    }
    return s;
}

ScheduleSpec apply_axis(ScheduleSpec spec, SweepAxis axis, double value) {
    if (axis == SweepAxis::k_over_kall) {
        int k = static_cast<int>(std::lround(value * spec.k_all));
        if (spec.kind == ScheduleKind::algorithm1)
            k -= k % 2;
        spec.k = k;
    } else if (axis == SweepAxis::k_f) {
        spec.k_f = static_cast<int>(std::lround(value));
    }
    return spec;
}

double mainlobe_or_nan(const SymbolSchedule& schedule) {
    try {
        return find_mainlobe(schedule).f_d;
    } catch (const GratingLobes&) {
        return kNaN;
    }
}

} // namespace

SweepPoint sweep_point(const SweepConfig& config, double value) {
    return {apply_axis(config.scenario_base, config.sweep_axis, value),
            build_schedule(apply_axis(config.schedule_spec, config.sweep_axis, value))};
}

SweepReport sweep(const SweepConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const bool schedule_varies =
        config.sweep_axis == SweepAxis::k_over_kall || config.sweep_axis == SweepAxis::k_f;

    SweepReport report;
    std::optional<SymbolSchedule> fixed;
    double fixed_mainlobe = kNaN;
    if (!schedule_varies) {
        fixed = build_schedule(config.schedule_spec);
        fixed_mainlobe = mainlobe_or_nan(*fixed);
    }

    for (double value : config.axis_values) {
        SweepRow row;
        row.axis_value = value;
        row.crb_exact = row.crb_approx = row.rmse_mle = row.mean_bias = kNaN;
        try {
            SweepPoint p;
            double mainlobe = fixed_mainlobe;
            if (fixed) {
                p = {apply_axis(config.scenario_base, config.sweep_axis, value), *fixed};
            } else {
                p = sweep_point(config, value);
                mainlobe = mainlobe_or_nan(p.schedule);
            }
            row.crb_exact = crb_fd(p.scenario, p.schedule);
            row.crb_approx = crb_doppler_approx(p.scenario, p.schedule, mainlobe).value;
            if (config.monte_carlo) {
                const auto mc = run_monte_carlo(p.scenario, p.schedule, config.trials, config.seed);
                row.rmse_mle = mc.rmse;
                row.mean_bias = mc.bias;
                row.n_trials = config.trials - mc.failures;
            }
        } catch (const Error& e) {
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }

    const auto& s = config.scenario_base;
    auto& m = report.metadata;
    m["toolkit_version"] = kToolkitVersion;
    m["axis"] = axis_name(config.sweep_axis);
    m["trials"] = std::to_string(config.trials);
    m["seed"] = std::to_string(config.seed);
    m["monte_carlo"] = config.monte_carlo ? "true" : "false";
    m["schedule_kind"] = schedule_kind_name(config.schedule_spec.kind);
    m["schedule_k_all"] = std::to_string(config.schedule_spec.k_all);
    m["schedule_k"] = std::to_string(config.schedule_spec.k);
    m["schedule_k_f"] = std::to_string(config.schedule_spec.k_f);
    m["t0_s"] = fmt17(config.schedule_spec.optimizer.t0);
    m["lambda_m"] = fmt17(s.wavelength);
    m["d_m"] = fmt17(s.antenna_spacing);
    m["theta_d_deg"] = fmt17(rad2deg(s.dynamic_theta));
    m["f_d_hz"] = fmt17(s.doppler_hz);
    m["sigma_n2"] = fmt17(s.noise_power);
    m["doppler_convention"] = "f_d = 2 v / lambda";
    m["wall_time_s"] = fmt17(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return report;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "csv")
        return ReportFormat::csv;
    if (name == "json")
        return ReportFormat::json;
    throw ConfigError("unknown format '" + name + "' (csv or json)");
}

namespace {

constexpr const char* kReportHeader = "axis,crb_exact_hz2,crb_approx_hz2,rmse_mle_hz,bias_hz,trials";
constexpr const char* kRowErrorPrefix = "row_error.";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

} // namespace

void write_report_csv(std::ostream& os, const SweepReport& report) {
    for (const auto& [k, v] : report.metadata)
        os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        if (!report.rows[i].error.empty())
            os << "# " << kRowErrorPrefix << i << '=' << report.rows[i].error << '\n';
    os << kReportHeader << '\n';
    for (const auto& r : report.rows)
        os << fmt17(r.axis_value) << ',' << fmt17(r.crb_exact) << ',' << fmt17(r.crb_approx) << ','
           << fmt17(r.rmse_mle) << ',' << fmt17(r.mean_bias) << ',' << r.n_trials << '\n';
}

SweepReport read_report_csv(std::istream& is) {
    SweepReport rep;
    std::map<std::size_t, std::string> errors;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                continue;
            const auto key = body.substr(0, eq);
            const auto val = body.substr(eq + 1);
            if (key.rfind(kRowErrorPrefix, 0) == 0)
                errors[std::stoul(key.substr(std::string(kRowErrorPrefix).size()))] = val;
            else
                rep.metadata[key] = val;
            continue;
        }
        if (!header) {
            if (line != kReportHeader)
                throw ConfigError("unexpected report header: " + line);
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 6)
            throw ConfigError("report row needs 6 fields: " + line);
        SweepRow r;
        r.axis_value = parse_double(f[0]);
        r.crb_exact = parse_double(f[1]);
        r.crb_approx = parse_double(f[2]);
        r.rmse_mle = parse_double(f[3]);
        r.mean_bias = parse_double(f[4]);
        r.n_trials = static_cast<int>(parse_double(f[5]));
        rep.rows.push_back(r);
    }
    if (!header)
        throw ConfigError("report has no header line");
    for (const auto& [i, msg] : errors)
        if (i < rep.rows.size())
            rep.rows[i].error = msg;
    return rep;
}

void write_report_json(std::ostream& os, const SweepReport& report) {
    nlohmann::json j;
    j["metadata"] = report.metadata;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row;
        row["axis"] = number_or_string(r.axis_value);
        row["crb_exact_hz2"] = number_or_string(r.crb_exact);
        row["crb_approx_hz2"] = number_or_string(r.crb_approx);
        row["rmse_mle_hz"] = number_or_string(r.rmse_mle);
        row["bias_hz"] = number_or_string(r.mean_bias);
        row["trials"] = r.n_trials;
        if (!r.error.empty())
            row["error"] = r.error;
        j["rows"].push_back(std::move(row));
    }
    os << j.dump(2) << '\n';
}

SweepReport read_report_json(std::istream& is) {
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report JSON: ") + e.what());
    }
    SweepReport rep;
    try {
        if (j.contains("metadata"))
            rep.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        for (const auto& row : j.at("rows")) {
            SweepRow r;
            r.axis_value = number_from(row.at("axis"));
            r.crb_exact = number_from(row.at("crb_exact_hz2"));
            r.crb_approx = number_from(row.at("crb_approx_hz2"));
            r.rmse_mle = number_from(row.at("rmse_mle_hz"));
            r.mean_bias = number_from(row.at("bias_hz"));
            r.n_trials = row.at("trials").get<int>();
            if (row.contains("error"))
                r.error = row.at("error").get<std::string>();
            rep.rows.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad report JSON: ") + e.what());
    }
    return rep;
}

void export_report(const SweepReport& report, const std::string& path, ReportFormat format) {
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    if (format == ReportFormat::csv)
        write_report_csv(os, report);
    else
        write_report_json(os, report);
    if (!os)
        throw IoError("write failed for '" + path + "'");
}

SweepReport import_report(const std::string& path, ReportFormat format) {
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open report '" + path + "'");
    return format == ReportFormat::csv ? read_report_csv(is) : read_report_json(is);
}

std::vector<CurvePoint> crb_curves(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                                   std::span<const double> f_grid) {
    const auto pattern = pattern_values(schedule, f_grid);
    std::vector<double> env;
    if (schedule.is_center_symmetric())
        env = envelope(schedule.half(), schedule.t0, f_grid);
    const double mainlobe = mainlobe_or_nan(schedule);

    std::vector<CurvePoint> out(f_grid.size());
    const auto n = static_cast<std::ptrdiff_t>(f_grid.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        auto s = scenario;
        s.doppler_hz = f_grid[k];
        auto& c = out[k];
        c.f_d_hz = f_grid[k];
        c.v_mps = doppler_to_velocity(f_grid[k], scenario.wavelength);
        c.pattern = pattern[k];
        c.envelope = env.empty() ? kNaN : env[k];
        try {
            c.crb_exact = crb_fd(s, schedule);
            c.crb_approx = crb_doppler_approx(s, schedule, mainlobe).value;
        } catch (const Error&) {
            c.crb_exact = c.crb_approx = kNaN;
        }
    }
    return out;
}

namespace {

using CurveField = double CurvePoint::*;

std::vector<std::pair<const char*, CurveField>> curve_fields(CurveColumns cols) {
    std::vector<std::pair<const char*, CurveField>> f{{"f_d_hz", &CurvePoint::f_d_hz}, {"v_mps", &CurvePoint::v_mps}};
    if (cols != CurveColumns::crb) {
        f.emplace_back("pattern", &CurvePoint::pattern);
        f.emplace_back("envelope", &CurvePoint::envelope);
    }
    if (cols != CurveColumns::pattern) {
        f.emplace_back("crb_exact_hz2", &CurvePoint::crb_exact);
        f.emplace_back("crb_approx_hz2", &CurvePoint::crb_approx);
    }
    return f;
}

} // namespace

void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& curves,
                      const std::map<std::string, std::string>& metadata, CurveColumns cols) {
    const auto fields = curve_fields(cols);
    for (const auto& [k, v] : metadata)
        os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < fields.size(); ++i)
        os << (i ? "," : "") << fields[i].first;
    os << '\n';
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < fields.size(); ++i)
            os << (i ? "," : "") << fmt17(c.*fields[i].second);
        os << '\n';
    }
}

void write_curves_json(std::ostream& os, const std::vector<CurvePoint>& curves,
                       const std::map<std::string, std::string>& metadata, CurveColumns cols) {
    nlohmann::json j;
    j["metadata"] = metadata;
    auto& out = j["columns"];
    for (const auto& [name, field] : curve_fields(cols)) {
        auto& col = out[name];
        col = nlohmann::json::array();
        for (const auto& c : curves)
            col.push_back(number_or_string(c.*field));
    }
    os << j.dump(2) << '\n';
}

ScenarioConfig reference_scenario() {
    ScenarioConfig c;
    c.scenario = ChannelScenario::from_ratios(0.1, 0.05, std::polar(1.2, deg2rad(-30.0)),
                                              std::polar(0.1, deg2rad(-110.0)), 1.0, deg2rad(10.0), 100.0, 1e-3);
    return c;
}

ScenarioConfig parse_scenario_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidScenario(std::string("malformed scenario JSON: ") + e.what());
    }
    if (!j.is_object())
        throw InvalidScenario("scenario JSON must be an object");

    static const std::set<std::string> known{
        "lambda_m", "d_m", "T0_s", "k_all", "K", "sigma_n2", "r_sn_db", "theta_d_deg", "f_d_hz",
        "velocity_mps", "static_paths", "xi_d_re", "xi_d_im", "rho0_mag", "rho0_phase_deg",
        "rho1_mag", "rho1_phase_deg", "h_s0_mag", "description"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key))
            throw InvalidScenario("unknown scenario key '" + key + "'");

    ScenarioConfig c;
    try {
        auto num = [&](const char* key, double fallback) {
            return j.contains(key) ? j.at(key).get<double>() : fallback;
        };
        auto& s = c.scenario;
        s.wavelength = num("lambda_m", 0.1);
        s.antenna_spacing = num("d_m", 0.05);
        c.t0 = num("T0_s", 125e-6);
        c.k_all = j.contains("k_all") ? j.at("k_all").get<int>() : 512;
        c.k = j.contains("K") ? j.at("K").get<int>() : 128;
        s.dynamic_theta = deg2rad(num("theta_d_deg", 10.0));
        if (j.contains("f_d_hz") && j.contains("velocity_mps"))
            throw InvalidScenario("give either f_d_hz or velocity_mps, not both");
        s.doppler_hz = j.contains("velocity_mps") ? velocity_to_doppler(j.at("velocity_mps").get<double>(), s.wavelength)
                                                  : num("f_d_hz", 100.0);

        const bool paths = j.contains("static_paths");
        const bool ratios = j.contains("rho0_mag") || j.contains("rho1_mag");
        if (paths && ratios)
            throw InvalidScenario("give either static_paths or the rho parameters, not both");
        if (paths) {
            std::vector<StaticPath> list;
            for (const auto& p : j.at("static_paths"))
                list.push_back({cplx(p.at("gain_re").get<double>(), p.value("gain_im", 0.0)),
                                deg2rad(p.at("theta_deg").get<double>())});
            s.statics = std::move(list);
            s.dynamic_gain = cplx(num("xi_d_re", 0.0), num("xi_d_im", 0.0));
        } else {
            const double h0 = num("h_s0_mag", 1.0);
            const cplx rho0 = std::polar(num("rho0_mag", 1.2), deg2rad(num("rho0_phase_deg", -30.0)));
            const cplx rho1 = std::polar(num("rho1_mag", 0.1), deg2rad(num("rho1_phase_deg", -110.0)));
            s.statics = DirectStatics{cplx(h0, 0.0), rho0 * h0};
            s.dynamic_gain = rho1 * h0;
        }

        if (j.contains("sigma_n2") && j.contains("r_sn_db"))
            throw InvalidScenario("give either sigma_n2 or r_sn_db, not both");
        s.noise_power = num("sigma_n2", 1e-3);
        if (j.contains("r_sn_db"))
            s = with_r_sn_db(s, j.at("r_sn_db").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidScenario(std::string("bad scenario value: ") + e.what());
    }
    c.scenario.validate();
    if (!(c.t0 > 0.0))
        throw InvalidScenario("T0_s must be positive");
    if (c.k_all < 1 || c.k < 1 || c.k > c.k_all)
        throw InvalidScenario("need 1 <= K <= k_all");
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario_json(ss.str());
}

} // namespace csisense
