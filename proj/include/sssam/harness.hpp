#pragma once

#include "sssam/config.hpp"
#include "sssam/mlp.hpp"
#include "sssam/optimizer.hpp"
#include "sssam/scheduler.hpp"
#include "sssam/sharpness.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sssam {

inline constexpr int kReportSchema = 1;

/// Exit codes of the command-line runner.
enum class ExitCode : int { success = 0, failure = 1, partial_failure = 2, config_error = 3 };

/// Everything an experiment trains and evaluates on.
struct ObjectiveBundle {
    ObjectivePtr train;                            ///< what the optimizer sees (with weight decay)
    std::shared_ptr<const MlpObjective> classifier; ///< set for dataset objectives
    std::shared_ptr<const Dataset> test_data;      ///< held-out set, may be null
};

/// Throws ConfigError when the objective spec cannot be realised.
ObjectiveBundle build_objective(const ObjectiveSpec& spec);

/// Starting point for one seed, following ObjectiveSpec's init rules.
ParamVector initial_point(const ObjectiveSpec& spec, const Objective& obj, std::uint64_t seed);

/// Fraction of misclassified samples of `eval` in [0, 1].
double evaluate(const MlpObjective& model, const ParamVector& theta, const Dataset& eval);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;                   ///< set when !ok
    std::optional<std::int64_t> failed_step;
    RunReport report;                    ///< full report, or the partial one on divergence
    double final_train_loss = 0.0;
    double final_eval_metric = 0.0;
    std::optional<SharpnessReport> sharpness;
    std::vector<SlicePoint> slice;       ///< loss along the top Hessian eigenvector
};

struct Stat {
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation (n - 1); 0 when n == 1
};

/// Mean and sample standard deviation. Throws DomainError on empty input.
Stat mean_std(std::span<const double> values);

struct RegistryEntry {
    std::string schedule; ///< canonical form
    std::string context;
    double printed_eta = 0.0;
};

/// Published expected-cost values, one row per schedule: CSV "schedule,context,printed_eta".
/// Schedule strings are canonicalised on load, and may contain commas when quoted.
std::vector<RegistryEntry> load_registry(const std::filesystem::path& path);
std::filesystem::path default_registry_path();

inline constexpr double kErratumTolerance = 0.01;

struct EtaRow {
    std::string schedule;
    double exact = 0.0;
    double closed_form = 0.0;
    std::optional<double> printed;
    std::optional<std::string> context;
    bool erratum = false; ///< |exact - printed| > kErratumTolerance
};

std::vector<EtaRow> eta_table(std::span<const Schedule> schedules, std::int64_t total_steps,
                              std::span<const RegistryEntry> registry);

/// Reads one canonical schedule per line; blank lines and '#' comments are skipped.
std::vector<Schedule> load_schedule_list(const std::filesystem::path& path);

void write_eta_table_csv(std::span<const EtaRow> rows, std::ostream& out);

struct AggregateReport {
    std::string name;
    std::string schedule;
    std::int64_t total_steps = 0;
    double expected_eta = 0.0;
    std::string eval_metric;        ///< "test_error" or "loss"
    std::vector<SeedOutcome> seeds;
    Stat final_train_loss;
    Stat final_eval_metric;
    Stat empirical_eta;
    std::size_t failed = 0;
    std::vector<EtaRow> errata;     ///< registry rows for this schedule that disagree with analytics

    ExitCode exit_code() const noexcept;
};

/// Runs one ss_sam_run per seed (concurrently), then writes into config.out_dir:
///   seed_<s>.json, seed_<s>_trace.csv, seed_<s>_schedule.csv, seed_<s>_slice.csv,
///   aggregate.json.
/// Output bytes depend only on the config. A diverging seed is recorded as failed.
AggregateReport run_experiment(const ExperimentConfig& config);

/// Runs without touching the filesystem.
AggregateReport run_experiment_in_memory(const ExperimentConfig& config);

void write_experiment_outputs(const ExperimentConfig& config, const AggregateReport& aggregate);

nlohmann::json aggregate_to_json(const AggregateReport& aggregate);
nlohmann::json seed_to_json(const ExperimentConfig& config, const SeedOutcome& outcome);

/// CSV columns t,x_t,eta_t,loss,grad_norm.
void write_trace_csv(std::span<const StepRecord> trace, const std::filesystem::path& path);
std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path);

/// CSV columns t,p_t,x_t for every step of the trace.
void emit_schedule_plot(const Schedule& schedule, std::int64_t total_steps,
                        std::span<const StepRecord> trace, const std::filesystem::path& path);

/// Writes `text` to `path` exactly; throws FileError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Per-seed report as read back from seed_<s>.json.
struct LoadedSeedReport {
    nlohmann::json json;
    std::filesystem::path path;
    ExperimentConfig config;
    ParamVector final_theta;
    std::int64_t total_steps = 0;
    Schedule schedule = Schedule::constant(0.0);
    std::filesystem::path trace_csv;
};

LoadedSeedReport load_seed_report(const std::filesystem::path& path);

} // namespace sssam
