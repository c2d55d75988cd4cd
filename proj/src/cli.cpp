#include "csisense/cli.hpp"

#include "csisense/crb_analysis.hpp"
#include "csisense/crb_core.hpp"
#include "csisense/csi_sim.hpp"
#include "csisense/errors.hpp"
#include "csisense/harness.hpp"
#include "csisense/kernels.hpp"
#include "csisense/waveform.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

namespace csisense {

namespace {

using ordered_json = nlohmann::ordered_json;

struct CommonArgs {
    std::string scenario_path;
    std::string schedule = "prop3";
    std::string schedule_file;
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 1;
    int trials = 500;
    int k_all = 0;
    int k = 0;
    int k_f = 16;
    double f_ex = 20.0;
};

struct Context {
    ScenarioConfig config;
    ScheduleSpec spec;
    ReportFormat format = ReportFormat::csv;
};

ScheduleKind parse_kind(const std::string& name) {
    if (name == "prop3")
        return ScheduleKind::prop3;
    if (name == "alg1")
        return ScheduleKind::algorithm1;
    if (name == "file")
        return ScheduleKind::file;
    throw ConfigError("unknown schedule '" + name + "' (file, prop3 or alg1)");
}

Context make_context(const CommonArgs& a) {
    Context c;
    c.config = a.scenario_path.empty() ? reference_scenario() : load_scenario(a.scenario_path);
    if (a.k_all > 0)
        c.config.k_all = a.k_all;
    if (a.k > 0)
        c.config.k = a.k;
    c.format = parse_format(a.format);
    c.spec.kind = parse_kind(a.schedule);
    c.spec.k_all = c.config.k_all;
    c.spec.k = c.config.k;
    c.spec.k_f = a.k_f;
    c.spec.seed = a.seed;
    c.spec.path = a.schedule_file;
    c.spec.optimizer.t0 = c.config.t0;
    c.spec.optimizer.f_d_mainlobe_ex = a.f_ex;
    if (c.spec.kind == ScheduleKind::file && c.spec.path.empty())
        throw ConfigError("--schedule file needs --schedule-file PATH");
    if (a.trials < 1)
        throw ConfigError("--trials must be at least 1");
    return c;
}

class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : path_(path), os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_)
                throw IoError("cannot open '" + path + "' for writing");
            os_ = file_.get();
        }
    }
    std::ostream& os() { return *os_; }
    void finish() {
        os_->flush();
        if (!*os_)
            throw IoError("write failed for '" + (path_.empty() ? std::string("stdout") : path_) + "'");
    }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

ordered_json num(double v) {
    if (std::isfinite(v))
        return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void write_kv(std::ostream& os, const ordered_json& j, ReportFormat format) {
    if (format == ReportFormat::json) {
        os << j.dump(2) << '\n';
        return;
    }
    os << "key,value\n";
    for (const auto& [k, v] : j.items())
        os << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
}

std::map<std::string, std::string> schedule_metadata(const Context& c, const SymbolSchedule& s) {
    return {{"toolkit_version", kToolkitVersion},
            {"schedule_kind", schedule_kind_name(c.spec.kind)},
            {"k_all", std::to_string(s.k_all)},
            {"k", std::to_string(s.size())},
            {"t0_s", ordered_json(s.t0).dump()},
            {"f_d_hz", ordered_json(c.config.scenario.doppler_hz).dump()},
            {"doppler_convention", "f_d = 2 v / lambda"}};
}

struct GridArgs {
    int points = 1025;
    double f_min = 0.0;
    double f_max = 0.0;
};

std::vector<double> doppler_axis(const GridArgs& g, const SymbolSchedule& schedule) {
    if (g.points < 2)
        throw ConfigError("--points must be at least 2");
    const double nyq = schedule.nyquist_hz();
    const double hi = g.f_max > 0.0 ? g.f_max : nyq;
    if (std::abs(hi) > nyq || std::abs(g.f_min) > nyq)
        throw ConfigError("Doppler grid exceeds the Nyquist limit of " + ordered_json(nyq).dump() + " Hz");
    if (!(hi > g.f_min))
        throw ConfigError("--f-max must exceed --f-min");
    std::vector<double> grid(static_cast<std::size_t>(g.points));
    for (int i = 0; i < g.points; ++i)
        grid[static_cast<std::size_t>(i)] = g.f_min + (hi - g.f_min) * i / (g.points - 1);
    return grid;
}

std::string joined_warnings(const ApproxCrb& approx, const HighSnrReport& snr) {
    std::string w;
    for (const auto& s : approx.warnings)
        w += (w.empty() ? "" : "; ") + s;
    if (!snr.valid)
        w += std::string(w.empty() ? "" : "; ") + "high-SNR condition not met";
    return w;
}

int cmd_crb(const CommonArgs& a, const GridArgs& g, std::ostream& out) {
    const auto c = make_context(a);
    const auto schedule = build_schedule(c.spec);
    const auto& sc = c.config.scenario;
    const auto exact = crb_doppler_exact(sc, schedule);
    const auto approx = crb_doppler_approx(sc, schedule);
    const auto ratios = power_ratios(sc);
    const auto curves = crb_curves(sc, schedule, doppler_axis(g, schedule));

    auto meta = schedule_metadata(c, schedule);
    meta["crb_exact_at_f_d_hz2"] = num(exact.crb_fd).dump();
    meta["crb_approx_at_f_d_hz2"] = num(approx.value).dump();
    meta["mainlobe_hz"] = num(approx.f_d_mainlobe).dump();
    meta["r_sn_db"] = num(10.0 * std::log10(ratios.r_sn)).dump();
    meta["r_sd_db"] = num(10.0 * std::log10(ratios.r_sd)).dump();
    meta["r_a"] = num(ratios.r_a).dump();
    meta["l1"] = num(l1_metric(schedule)).dump();
    meta["warnings"] = joined_warnings(approx, check_high_snr(sc));

    Sink sink(a.out, out);
    if (c.format == ReportFormat::csv)
        write_curves_csv(sink.os(), curves, meta, CurveColumns::crb);
    else
        write_curves_json(sink.os(), curves, meta, CurveColumns::crb);
    sink.finish();
    return std::isfinite(exact.crb_fd) ? kExitOk : kExitNumerical;
}

int cmd_pattern(const CommonArgs& a, const GridArgs& g, std::ostream& out) {
    const auto c = make_context(a);
    const auto schedule = build_schedule(c.spec);
    const auto grid = doppler_axis(g, schedule);
    const auto search = find_mainlobe(schedule);
    const auto curves = crb_curves(c.config.scenario, schedule, grid);

    auto meta = schedule_metadata(c, schedule);
    meta["mainlobe_hz"] = num(search.f_d).dump();
    meta["t0_times_mainlobe"] = num(schedule.t0 * search.f_d).dump();
    meta["mainlobe_from_envelope"] = search.used_envelope ? "true" : "false";
    meta["grating_lobes"] = search.grating_lobes ? "true" : "false";
    meta["center_symmetric"] = schedule.is_center_symmetric() ? "true" : "false";

    Sink sink(a.out, out);
    if (c.format == ReportFormat::csv)
        write_curves_csv(sink.os(), curves, meta, CurveColumns::pattern);
    else
        write_curves_json(sink.os(), curves, meta, CurveColumns::pattern);
    sink.finish();
    return kExitOk;
}

int cmd_optimize(CommonArgs a, bool schedule_given, std::ostream& out, std::ostream& err) {
    if (!schedule_given)
        a.schedule = "alg1";
    const auto c = make_context(a);
    OptimizerResult res;
    if (c.spec.kind == ScheduleKind::algorithm1) {
        res = optimize_interference_limited(c.spec.k_all, c.spec.k, c.spec.k_f, c.spec.optimizer);
        if (!res.converged)
            err << "warning: optimizer did not converge in " << res.iterations << " iterations\n";
        if (!res.mainlobe_meets_target)
            err << "warning: mainlobe width " << res.measured_mainlobe << " Hz exceeds the " << a.f_ex
                << " Hz target\n";
    } else {
        res.schedule = build_schedule(c.spec);
        res.iterations = 0;
        try {
            res.measured_mainlobe = find_mainlobe(res.schedule).f_d;
        } catch (const GratingLobes&) {
            res.measured_mainlobe = std::numeric_limits<double>::quiet_NaN();
        }
    }
    const auto& s = res.schedule;

    Sink sink(a.out, out);
    if (c.format == ReportFormat::csv) {
        write_schedule(sink.os(), s);
        sink.os() << "# schedule_kind=" << schedule_kind_name(c.spec.kind) << '\n'
                  << "# iterations=" << res.iterations << '\n'
                  << "# converged=" << (res.converged ? "true" : "false") << '\n'
                  << "# mainlobe_hz=" << num(res.measured_mainlobe).dump() << '\n'
                  << "# l1=" << num(l1_metric(s)).dump() << '\n';
    } else {
        ordered_json j;
        j["k_all"] = s.k_all;
        j["K"] = s.size();
        j["T0_s"] = s.t0;
        j["schedule_kind"] = schedule_kind_name(c.spec.kind);
        j["phi"] = s.phi;
        j["iterations"] = res.iterations;
        j["converged"] = res.converged;
        j["mainlobe_hz"] = num(res.measured_mainlobe);
        j["l1"] = num(l1_metric(s));
        j["sidelobe_power_history"] = ordered_json::array();
        for (double p : res.history)
            j["sidelobe_power_history"].push_back(num(p));
        sink.os() << j.dump(2) << '\n';
    }
    sink.finish();
    return kExitOk;
}

int cmd_montecarlo(const CommonArgs& a, std::ostream& out) {
    const auto c = make_context(a);
    const auto schedule = build_schedule(c.spec);
    const auto& sc = c.config.scenario;
    const double crb = crb_fd(sc, schedule);
    const auto mc = run_monte_carlo(sc, schedule, a.trials, a.seed);

    ordered_json j;
    j["trials"] = a.trials;
    j["seed"] = a.seed;
    j["rmse_mle_hz"] = num(mc.rmse);
    j["bias_hz"] = num(mc.bias);
    j["crb_exact_hz2"] = num(crb);
    j["sqrt_crb_exact_hz"] = num(std::sqrt(crb));
    j["rmse_over_sqrt_crb_db"] = num(20.0 * std::log10(mc.rmse / std::sqrt(crb)));
    j["failures"] = mc.failures;
    j["nonconverged"] = mc.nonconverged;

    Sink sink(a.out, out);
    write_kv(sink.os(), j, c.format);
    sink.finish();
    return mc.failures == a.trials ? kExitNumerical : kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& axis, const std::vector<double>& values, bool no_mc,
              std::ostream& out) {
    const auto c = make_context(a);
    SweepConfig cfg;
    cfg.scenario_base = c.config.scenario;
    cfg.schedule_spec = c.spec;
    cfg.sweep_axis = parse_axis(axis);
    cfg.axis_values = values;
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.monte_carlo = !no_mc;
    const auto report = sweep(cfg);

    Sink sink(a.out, out);
    if (c.format == ReportFormat::csv)
        write_report_csv(sink.os(), report);
    else
        write_report_json(sink.os(), report);
    sink.finish();
    return kExitOk;
}

void add_common(CLI::App& sub, CommonArgs& a) {
    sub.add_option("--scenario", a.scenario_path, "Scenario JSON file (default: built-in reference)");
    sub.add_option("--schedule", a.schedule, "Sensing-symbol schedule: file, prop3 or alg1");
    sub.add_option("--schedule-file", a.schedule_file, "Schedule file for --schedule file");
    sub.add_option("--out", a.out, "Output path (default: stdout)");
    sub.add_option("--format", a.format, "Output format: csv or json");
    sub.add_option("--seed", a.seed, "Random seed");
    sub.add_option("--trials", a.trials, "Monte Carlo trials");
    sub.add_option("--k-all", a.k_all, "Symbols in the frame (overrides the scenario)");
    sub.add_option("--k", a.k, "Sensing symbols (overrides the scenario)");
    sub.add_option("--kf", a.k_f, "Fixed symbols at each edge for alg1");
    sub.add_option("--f-ex", a.f_ex, "Target mainlobe width in Hz for alg1");
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    kernels::configure_threads_from_env();

    CLI::App app{"CSI-ratio bi-static Doppler sensing toolkit", "csisense"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    app.require_subcommand(1);

    CommonArgs common;
    GridArgs grid;
    std::string axis;
    std::vector<double> values;
    bool no_mc = false;

    auto* crb = app.add_subcommand("crb", "Exact and approximate Doppler CRB curves over f_d");
    auto* pattern = app.add_subcommand("pattern", "Doppler pattern, envelope and mainlobe width of a schedule");
    auto* optimize = app.add_subcommand("optimize", "Build a sensing-symbol schedule");
    auto* mc = app.add_subcommand("montecarlo", "MLE Monte Carlo at one scenario");
    auto* sw = app.add_subcommand("sweep", "CRB and MLE RMSE over one scenario axis");
    for (auto* sub : {crb, pattern, optimize, mc, sw})
        add_common(*sub, common);
    for (auto* sub : {crb, pattern}) {
        sub->add_option("--points", grid.points, "Doppler grid points");
        sub->add_option("--f-min", grid.f_min, "Lower grid edge in Hz");
        sub->add_option("--f-max", grid.f_max, "Upper grid edge in Hz (default: Nyquist)");
    }
    sw->add_option("--axis", axis, "r_sn_db, theta_d_deg, velocity_mps, r_sd_db, k_over_kall or k_f")->required();
    sw->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
    sw->add_flag("--no-mc", no_mc, "Skip the Monte Carlo columns");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (crb->parsed())
            return cmd_crb(common, grid, out);
        if (pattern->parsed())
            return cmd_pattern(common, grid, out);
        if (optimize->parsed())
            return cmd_optimize(common, optimize->count("--schedule") > 0, out, err);
        if (mc->parsed())
            return cmd_montecarlo(common, out);
        return cmd_sweep(common, axis, values, no_mc, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace csisense
