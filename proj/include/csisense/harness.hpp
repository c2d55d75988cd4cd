#pragma once

#include "csisense/mle.hpp"
#include "csisense/scenario.hpp"
#include "csisense/schedule.hpp"
#include "csisense/waveform.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace csisense {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Estimator options matching the scenario geometry.
MleOptions mle_options_for(const ChannelScenario& scenario);

struct MonteCarloResult {
    double rmse = 0.0;                 // Hz, over successful trials
    double bias = 0.0;                 // Hz
    std::vector<double> per_trial;     // wrapped f_d error per trial, NaN on failure
    int nonconverged = 0;
    int failures = 0;
};

/// Trials share nothing but (seed, trial index), so the result does not
/// depend on the thread count.
MonteCarloResult run_monte_carlo(const ChannelScenario& scenario, const SymbolSchedule& schedule, int trials,
                                 std::uint64_t seed, bool parallel = true);
MonteCarloResult run_monte_carlo(const ChannelScenario& scenario, const SymbolSchedule& schedule, int trials,
                                 std::uint64_t seed, const MleOptions& opts, bool parallel = true);

enum class ScheduleKind { prop3, algorithm1, file, random };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::prop3;
    int k_all = 512;
    int k = 128;
    int k_f = 16;
    std::string path;
    std::uint64_t seed = 1;
    OptimizerConfig optimizer;
};

std::string schedule_kind_name(ScheduleKind kind);
SymbolSchedule build_schedule(const ScheduleSpec& spec);

enum class SweepAxis { r_sn_db, theta_d_deg, velocity_mps, r_sd_db, k_over_kall, k_f };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

struct SweepConfig {
    ChannelScenario scenario_base;
    ScheduleSpec schedule_spec;
    SweepAxis sweep_axis = SweepAxis::r_sn_db;
    std::vector<double> axis_values;
    int trials = 500;
    std::uint64_t seed = 1;
    bool monte_carlo = true; // false: CRB columns only, rmse/bias NaN

    void validate() const;
};

struct SweepRow {
    double axis_value = 0.0;
    double crb_exact = 0.0;   // Hz^2
    double crb_approx = 0.0;  // Hz^2
    double rmse_mle = 0.0;    // Hz
    double mean_bias = 0.0;   // Hz
    int n_trials = 0;
    std::string error;        // non-empty when the row failed
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> metadata;
};

/// Rows keep the order of axis_values; per-row failures are recorded and the sweep continues.
SweepReport sweep(const SweepConfig& config);

/// Scenario plus the row's schedule for one axis value.
struct SweepPoint {
    ChannelScenario scenario;
    SymbolSchedule schedule;
};
SweepPoint sweep_point(const SweepConfig& config, double value);

enum class ReportFormat { csv, json };
ReportFormat parse_format(const std::string& name);

void write_report_csv(std::ostream& os, const SweepReport& report);
SweepReport read_report_csv(std::istream& is);
void write_report_json(std::ostream& os, const SweepReport& report);
SweepReport read_report_json(std::istream& is);

/// Throws IoError with the path on failure.
void export_report(const SweepReport& report, const std::string& path, ReportFormat format);
SweepReport import_report(const std::string& path, ReportFormat format);

/// One CRB curve sample over Doppler.
struct CurvePoint {
    double f_d_hz = 0.0;
    double v_mps = 0.0;
    double pattern = 0.0;
    double envelope = 0.0;    // NaN when the schedule is not center-symmetric
    double crb_exact = 0.0;
    double crb_approx = 0.0;
};

std::vector<CurvePoint> crb_curves(const ChannelScenario& scenario, const SymbolSchedule& schedule,
                                   std::span<const double> f_grid);

enum class CurveColumns { all, crb, pattern };
void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& curves,
                      const std::map<std::string, std::string>& metadata, CurveColumns cols = CurveColumns::all);
void write_curves_json(std::ostream& os, const std::vector<CurvePoint>& curves,
                       const std::map<std::string, std::string>& metadata, CurveColumns cols = CurveColumns::all);

/// Scenario file contents: the channel plus the symbol-grid defaults it names.
struct ScenarioConfig {
    ChannelScenario scenario;
    double t0 = 125e-6;
    int k_all = 512;
    int k = 128;
};

ScenarioConfig reference_scenario();
ScenarioConfig parse_scenario_json(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

} // namespace csisense
