#include "sssam/errors.hpp"
#include "sssam/format.hpp"
#include "sssam/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace sssam;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& seeds) {
    ConfigDocument doc = ConfigDocument::load(config_path);
    if (!out_dir.empty()) {
        doc.set("experiment", "out", out_dir);
    }
    if (!seeds.empty()) {
        doc.set("experiment", "seeds", seeds);
    }
    const ExperimentConfig config = parse_experiment_config(doc);
    const AggregateReport agg = run_experiment(config);

    std::cout << "schedule " << agg.schedule << ", T = " << agg.total_steps << ", "
              << agg.seeds.size() << " seed(s), " << agg.failed << " failed\n";
    for (const auto& s : agg.seeds) {
        std::cout << "  seed " << s.seed << ": ";
        if (s.ok) {
            std::cout << "eta " << format_double(s.report.empirical_eta) << ", train loss "
                      << format_double(s.final_train_loss) << ", " << agg.eval_metric << ' '
                      << format_double(s.final_eval_metric) << '\n';
        } else {
            std::cout << "FAILED: " << s.error << '\n';
        }
    }
    if (agg.failed < agg.seeds.size()) {
        std::cout << "expected eta " << format_double(agg.expected_eta) << ", empirical "
                  << format_double(agg.empirical_eta.mean) << " +- "
                  << format_double(agg.empirical_eta.std) << '\n'
                  << agg.eval_metric << ' ' << format_double(agg.final_eval_metric.mean) << " +- "
                  << format_double(agg.final_eval_metric.std) << '\n';
    }
    for (const auto& e : agg.errata) {
        std::cout << "erratum: " << e.schedule << " printed " << format_double(*e.printed)
                  << ", analytic " << format_double(e.exact) << '\n';
    }
    std::cout << "outputs in " << config.out_dir.string() << '\n';
    return static_cast<int>(agg.exit_code());
}

int cmd_eta_table(const std::string& schedules_path, long long steps, const std::string& registry,
                  const std::string& out) {
    if (steps < 1) {
        throw ConfigError("--steps must be positive");
    }
    const auto schedules = load_schedule_list(schedules_path);
    for (const auto& s : schedules) {
        try {
            s.validate(steps);
        } catch (const DomainError& e) {
            throw ConfigError(s.canonical() + ": " + e.what());
        }
    }
    const auto entries = load_registry(registry.empty() ? default_registry_path() : std::filesystem::path(registry));
    const auto rows = eta_table(schedules, steps, entries);
    if (out.empty()) {
        write_eta_table_csv(rows, std::cout);
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw FileError(out, "cannot open for writing");
        }
        write_eta_table_csv(rows, f);
    }
    return 0;
}

std::filesystem::path sibling(const std::filesystem::path& report, const std::string& suffix) {
    return report.parent_path() / (report.stem().string() + suffix);
}

int cmd_plot_schedule(const std::string& report_path, const std::string& out) {
    const LoadedSeedReport r = load_seed_report(report_path);
    const auto trace = read_trace_csv(r.trace_csv);
    const std::filesystem::path dest = out.empty() ? sibling(report_path, "_schedule.csv") : std::filesystem::path(out);
    emit_schedule_plot(r.schedule, r.total_steps, trace, dest);
    std::cout << dest.string() << '\n';
    return 0;
}

int cmd_sharpness(const std::string& report_path, double rho, const std::string& slice_path) {
    if (!(rho > 0.0)) {
        throw ConfigError("--rho must be positive");
    }
    const LoadedSeedReport r = load_seed_report(report_path);
    if (r.final_theta.size() == 0) {
        throw ConfigError("report has no final parameters");
    }
    const ObjectiveBundle bundle = build_objective(r.config.objective);
    const SharpnessReport s = measure_sharpness(*bundle.train, r.final_theta, rho, Batch::full());
    nlohmann::json j;
    j["proxy_gap"] = s.proxy_gap;
    j["top_eigenvalue"] = s.top_eigenvalue;
    j["rho"] = s.rho_used;
    j["probe_count"] = s.probe_count;
    j["used_eigen_direction"] = s.used_eigen_direction;
    j["eigen_converged"] = s.eigen_converged;
    std::cout << j.dump(2) << '\n';
    if (!slice_path.empty()) {
        write_slice_csv(loss_slice(*bundle.train, r.final_theta, s.top_eigenvector, 5.0 * rho, 41),
                        slice_path);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SS-SAM experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds;
    auto* run = app.add_subcommand("run", "run every seed of an experiment config");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--seeds", seeds, "comma-separated seeds (overrides the config)");

    std::string schedules_path, registry, table_out;
    long long steps = 0;
    auto* table = app.add_subcommand("eta-table", "expected propagation counts for a schedule list");
    table->add_option("schedules", schedules_path, "one schedule per line")->required();
    table->add_option("--steps", steps, "total steps T")->required();
    table->add_option("--registry", registry, "published values CSV");
    table->add_option("--out", table_out, "write CSV here instead of stdout");

    std::string report_path, plot_out;
    auto* plot = app.add_subcommand("plot-schedule", "t,p_t,x_t CSV from a seed report");
    plot->add_option("report", report_path, "seed_<s>.json")->required();
    plot->add_option("--out", plot_out, "output CSV");

    std::string sharp_report, slice_path;
    double rho = 0.0;
    auto* sharp = app.add_subcommand("sharpness", "sharpness of a seed report's final parameters");
    sharp->add_option("report", sharp_report, "seed_<s>.json")->required();
    sharp->add_option("--rho", rho, "neighbourhood radius")->required();
    sharp->add_option("--slice", slice_path, "also write a loss slice CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }

    try {
        if (*run) return cmd_run(config_path, out_dir, seeds);
        if (*table) return cmd_eta_table(schedules_path, steps, registry, table_out);
        if (*plot) return cmd_plot_schedule(report_path, plot_out);
        if (*sharp) return cmd_sharpness(sharp_report, rho, slice_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config_error);
    } catch (const FileError& e) {
        std::cerr << "file error: " << e.path() << ": " << e.what() << '\n';
        return static_cast<int>(ExitCode::failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::failure);
    }
    return static_cast<int>(ExitCode::failure);
}
