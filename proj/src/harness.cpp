#include "sssam/harness.hpp"

#include "sssam/errors.hpp"
#include "sssam/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#ifndef SSSAM_DATA_DIR
#define SSSAM_DATA_DIR "data"
#endif

namespace sssam {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Objectives

ObjectiveBundle build_objective(const ObjectiveSpec& spec) {
    ObjectiveBundle bundle;
    ObjectivePtr base;
    try {
        switch (spec.kind) {
        case ObjectiveKind::quadratic: {
            ParamVector center = spec.center.empty() ? ParamVector::zeros(spec.curvatures.size())
                                                     : ParamVector(spec.center);
            base = std::make_shared<QuadraticObjective>(
                QuadraticObjective::diagonal(spec.curvatures, std::move(center)));
            break;
        }
        case ObjectiveKind::two_well:
            base = std::make_shared<TwoWellLandscape>(spec.two_well, spec.dim);
            break;
        case ObjectiveKind::mlp: {
            auto train = std::make_shared<const Dataset>(make_dataset(spec.train_data));
            auto mlp = std::make_shared<const MlpObjective>(spec.model, train);
            if (spec.test_size > 0) {
                DatasetSpec test_spec = spec.train_data;
                test_spec.size = spec.test_size;
                // Held-out data comes from a different seed than the training set.
                test_spec.seed = spec.train_data.seed ^ 0x7e57'da7aULL;
                bundle.test_data = std::make_shared<const Dataset>(make_dataset(test_spec));
            }
            bundle.classifier = mlp;
            base = mlp;
            break;
        }
        }
        bundle.train = spec.weight_decay > 0.0
                           ? std::make_shared<WeightDecayObjective>(base, spec.weight_decay)
                           : base;
    } catch (const DomainError& e) {
        throw ConfigError(std::string("objective: ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("objective: ") + e.what());
    }
    return bundle;
}

ParamVector initial_point(const ObjectiveSpec& spec, const Objective& obj, std::uint64_t seed) {
    if (!spec.init.empty()) {
        return ParamVector(spec.init);
    }
    RngStream rng(seed, StreamId::init);
    if (spec.init_box) {
        ParamVector theta(obj.param_dim());
        for (double& v : theta) {
            v = rng.uniform(spec.init_box->first, spec.init_box->second);
        }
        return theta;
    }
    return obj.initial_params(rng);
}

double evaluate(const MlpObjective& model, const ParamVector& theta, const Dataset& eval) {
    if (eval.feature_dim != model.model().input_dim()) {
        throw DomainError("evaluate: dataset has " + std::to_string(eval.feature_dim) +
                          " features, model expects " + std::to_string(model.model().input_dim()));
    }
    if (theta.size() != model.param_dim()) {
        throw DomainError("evaluate: wrong parameter count");
    }
    if (eval.size() == 0) {
        throw DomainError("evaluate: empty dataset");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        if (model.predict(theta, eval.row(i)) != eval.labels[i]) {
            ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(eval.size());
}

Stat mean_std(std::span<const double> values) {
    if (values.empty()) {
        throw DomainError("mean_std: no values");
    }
    CompensatedSum sum;
    for (double v : values) {
        sum.add(v);
    }
    const double n = static_cast<double>(values.size());
    Stat s;
    s.mean = sum.value() / n;
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) {
            sq.add((v - s.mean) * (v - s.mean));
        }
        s.std = std::sqrt(sq.value() / (n - 1.0));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Expected-cost tables

namespace {

// Splits one CSV line, honouring double quotes around fields that contain commas.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.emplace_back(trim(field));
    return out;
}

std::string csv_quote(const std::string& s) {
    return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

} // namespace

std::filesystem::path default_registry_path() {
    return std::filesystem::path(SSSAM_DATA_DIR) / "published_eta.csv";
}

std::vector<RegistryEntry> load_registry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open registry");
    }
    std::vector<RegistryEntry> out;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        const auto fields = split_csv_line(body);
        if (fields.size() != 3) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": expected 3 fields");
        }
        try {
            out.push_back({Schedule::parse(fields[0]).canonical(), fields[1],
                           parse_double(fields[2], "printed_eta")});
        } catch (const Error& e) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<EtaRow> eta_table(std::span<const Schedule> schedules, std::int64_t total_steps,
                              std::span<const RegistryEntry> registry) {
    std::vector<EtaRow> rows;
    rows.reserve(schedules.size());
    for (const auto& s : schedules) {
        EtaRow row;
        row.schedule = s.canonical();
        row.exact = expected_eta_exact(s, total_steps);
        row.closed_form = expected_eta_closed_form(s, total_steps);
        const auto it = std::find_if(registry.begin(), registry.end(),
                                     [&](const RegistryEntry& e) { return e.schedule == row.schedule; });
        if (it != registry.end()) {
            row.printed = it->printed_eta;
            row.context = it->context;
            row.erratum = std::abs(row.exact - it->printed_eta) > kErratumTolerance;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Schedule> load_schedule_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open schedule list");
    }
    std::vector<Schedule> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) {
            body = body.substr(0, hash);
        }
        body = trim(body);
        if (!body.empty()) {
            out.push_back(Schedule::parse(body));
        }
    }
    return out;
}

void write_eta_table_csv(std::span<const EtaRow> rows, std::ostream& out) {
    out << "schedule,exact,closed_form,printed,context,erratum\n";
    for (const auto& r : rows) {
        out << csv_quote(r.schedule) << ',' << format_double(r.exact) << ','
            << format_double(r.closed_form) << ',';
        if (r.printed) {
            out << format_double(*r.printed);
        }
        out << ',' << r.context.value_or("") << ',' << (r.erratum ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Traces and plot data

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError(path.string(), "cannot open for writing");
    }
    out << text;
    if (!out) {
        throw FileError(path.string(), "write failed");
    }
}

void write_trace_csv(std::span<const StepRecord> trace, const std::filesystem::path& path) {
    std::string text = "t,x_t,eta_t,loss,grad_norm\n";
    for (const auto& r : trace) {
        text += std::to_string(r.t) + ',' + std::to_string(r.x_t) + ',' + std::to_string(r.eta_t) +
                ',' + format_double(r.loss) + ',' + format_double(r.grad_norm) + '\n';
    }
    write_text_file(path, text);
}

std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open trace");
    }
    std::string line;
    if (!std::getline(in, line) || trim(line) != "t,x_t,eta_t,loss,grad_norm") {
        throw FileError(path.string(), "unexpected trace header");
    }
    std::vector<StepRecord> trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 5) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": expected 5 fields");
        }
        try {
            StepRecord r;
            r.t = parse_int(f[0], "t");
            r.x_t = static_cast<int>(parse_int(f[1], "x_t"));
            r.eta_t = static_cast<int>(parse_int(f[2], "eta_t"));
            r.loss = parse_double(f[3], "loss");
            r.grad_norm = parse_double(f[4], "grad_norm");
            trace.push_back(r);
        } catch (const ConfigError& e) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

void emit_schedule_plot(const Schedule& schedule, std::int64_t total_steps,
                        std::span<const StepRecord> trace, const std::filesystem::path& path) {
    if (trace.empty()) {
        throw DomainError("emit_schedule_plot: empty trace");
    }
    std::string text = "t,p_t,x_t\n";
    for (const auto& r : trace) {
        text += std::to_string(r.t) + ',' + format_double(eval_schedule(schedule, r.t, total_steps)) +
                ',' + std::to_string(r.x_t) + '\n';
    }
    write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::string seed_stem(std::uint64_t seed) {
    return "seed_" + std::to_string(seed);
}

SharpnessOptions report_sharpness_options() {
    SharpnessOptions o;
    o.power.max_iters = 100;
    o.power.tol = 1e-6;
    return o;
}

double sharpness_radius(const ExperimentConfig& config) {
    return config.sharpness_rho.value_or(config.optimizer.rho);
}

SeedOutcome run_one_seed(const ExperimentConfig& config, const ObjectiveBundle& bundle,
                         const Schedule& schedule, std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    OptimizerConfig oc = config.optimizer;
    oc.seed = seed;
    try {
        out.report = ss_sam_run(*bundle.train, oc, schedule,
                                initial_point(config.objective, *bundle.train, seed));
    } catch (const DivergenceError& e) {
        out.ok = false;
        out.error = e.what();
        out.failed_step = e.step();
        if (e.partial()) {
            out.report = *e.partial();
        }
        return out;
    }
    out.ok = true;
    const ParamVector& theta = out.report.final_theta;
    out.final_train_loss = bundle.train->value(theta, Batch::full());
    if (bundle.classifier && bundle.test_data) {
        out.final_eval_metric = evaluate(*bundle.classifier, theta, *bundle.test_data);
    } else {
        out.final_eval_metric = out.final_train_loss;
    }
    try {
        out.sharpness = measure_sharpness(*bundle.train, theta, sharpness_radius(config),
                                          Batch::full(), report_sharpness_options());
        out.slice = loss_slice(*bundle.train, theta, out.sharpness->top_eigenvector,
                               5.0 * sharpness_radius(config), 41);
    } catch (const EvaluationError&) {
        out.sharpness.reset();
    }
    return out;
}

json stat_json(const Stat& s) {
    return json{{"mean", s.mean}, {"std", s.std}};
}

json sharpness_json(const SharpnessReport& r) {
    return json{{"proxy_gap", r.proxy_gap},
                {"top_eigenvalue", r.top_eigenvalue},
                {"rho", r.rho_used},
                {"probe_count", r.probe_count},
                {"used_eigen_direction", r.used_eigen_direction},
                {"eigen_converged", r.eigen_converged}};
}

json config_json(const ConfigDocument& doc) {
    json out = json::object();
    for (const auto& [name, section] : doc.sections()) {
        json s = json::object();
        for (const auto& [key, value] : section) {
            s[key] = value;
        }
        out[name] = s;
    }
    return out;
}

} // namespace

ExitCode AggregateReport::exit_code() const noexcept {
    return failed > 0 ? ExitCode::partial_failure : ExitCode::success;
}

AggregateReport run_experiment_in_memory(const ExperimentConfig& config) {
    config.validate();
    const Schedule schedule = Schedule::parse(config.schedule);
    const ObjectiveBundle bundle = build_objective(config.objective);
    if (!config.objective.init.empty() && config.objective.init.size() != bundle.train->param_dim()) {
        throw ConfigError("objective.init has wrong dimension");
    }

    AggregateReport agg;
    agg.name = config.name;
    agg.schedule = schedule.canonical();
    agg.total_steps = config.optimizer.total_steps;
    agg.expected_eta = expected_eta_exact(schedule, agg.total_steps);
    agg.eval_metric = bundle.test_data ? "test_error" : "loss";

    // Seeds run concurrently in waves; results are collected in config order so output does not
    // depend on scheduling.
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    agg.seeds.resize(config.seeds.size());
    for (std::size_t start = 0; start < config.seeds.size(); start += width) {
        const std::size_t stop = std::min(config.seeds.size(), start + width);
        std::vector<std::future<SeedOutcome>> wave;
        for (std::size_t i = start; i < stop; ++i) {
            wave.push_back(std::async(std::launch::async, run_one_seed, std::cref(config),
                                      std::cref(bundle), std::cref(schedule), config.seeds[i]));
        }
        for (std::size_t i = start; i < stop; ++i) {
            agg.seeds[i] = wave[i - start].get();
        }
    }

    std::vector<double> losses, metrics, etas;
    for (const auto& s : agg.seeds) {
        if (!s.ok) {
            ++agg.failed;
            continue;
        }
        losses.push_back(s.final_train_loss);
        metrics.push_back(s.final_eval_metric);
        etas.push_back(s.report.empirical_eta);
    }
    if (!losses.empty()) {
        agg.final_train_loss = mean_std(losses);
        agg.final_eval_metric = mean_std(metrics);
        agg.empirical_eta = mean_std(etas);
    }

    const auto registry_path = config.registry.value_or(default_registry_path());
    if (config.registry || std::filesystem::exists(registry_path)) {
        const auto registry = load_registry(registry_path);
        for (auto& row : eta_table(std::span(&schedule, 1), agg.total_steps, registry)) {
            if (row.erratum) {
                agg.errata.push_back(std::move(row));
            }
        }
    }
    return agg;
}

json seed_to_json(const ExperimentConfig& config, const SeedOutcome& s) {
    const std::string stem = seed_stem(s.seed);
    json j;
    j["schema"] = kReportSchema;
    j["seed"] = s.seed;
    j["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) {
        j["error"] = s.error;
        if (s.failed_step) {
            j["failed_step"] = *s.failed_step;
        }
    }
    j["schedule"] = Schedule::parse(config.schedule).canonical();
    j["total_steps"] = config.optimizer.total_steps;
    j["steps_completed"] = s.report.trace.size();
    j["expected_eta"] = s.report.expected_eta;
    j["empirical_eta"] = s.report.empirical_eta;
    j["propagations"] = s.report.propagations;
    if (s.ok) {
        j["final_train_loss"] = s.final_train_loss;
        j["final_eval_metric"] = s.final_eval_metric;
        j["final_theta"] = s.report.final_theta.to_vector();
        if (s.sharpness) {
            j["sharpness"] = sharpness_json(*s.sharpness);
        }
        if (!s.slice.empty()) {
            j["slice_csv"] = stem + "_slice.csv";
        }
    }
    j["trace_csv"] = stem + "_trace.csv";
    j["schedule_csv"] = stem + "_schedule.csv";
    j["config"] = config_json(config.source);
    return j;
}

json aggregate_to_json(const AggregateReport& a) {
    json j;
    j["schema"] = kReportSchema;
    j["name"] = a.name;
    j["schedule"] = a.schedule;
    j["total_steps"] = a.total_steps;
    j["expected_eta"] = a.expected_eta;
    j["eval_metric"] = a.eval_metric;
    json seeds = json::array();
    for (const auto& s : a.seeds) {
        json e;
        e["seed"] = s.seed;
        e["status"] = s.ok ? "ok" : "failed";
        e["report"] = seed_stem(s.seed) + ".json";
        if (s.ok) {
            e["empirical_eta"] = s.report.empirical_eta;
            e["propagations"] = s.report.propagations;
            e["final_train_loss"] = s.final_train_loss;
            e["final_eval_metric"] = s.final_eval_metric;
            if (s.sharpness) {
                e["sharpness"] = sharpness_json(*s.sharpness);
            }
        } else {
            e["error"] = s.error;
        }
        seeds.push_back(std::move(e));
    }
    j["seeds"] = std::move(seeds);
    j["summary"] = json{{"succeeded", a.seeds.size() - a.failed},
                        {"failed", a.failed},
                        {"final_train_loss", stat_json(a.final_train_loss)},
                        {"final_eval_metric", stat_json(a.final_eval_metric)},
                        {"empirical_eta", stat_json(a.empirical_eta)}};
    json errata = json::array();
    for (const auto& r : a.errata) {
        errata.push_back(json{{"schedule", r.schedule},
                              {"context", r.context.value_or("")},
                              {"printed_eta", r.printed.value_or(0.0)},
                              {"analytic_eta", r.exact}});
    }
    j["errata"] = std::move(errata);
    return j;
}

void write_experiment_outputs(const ExperimentConfig& config, const AggregateReport& aggregate) {
    const auto& dir = config.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw FileError(dir.string(), "cannot create output directory: " + ec.message());
    }
    const Schedule schedule = Schedule::parse(config.schedule);
    for (const auto& s : aggregate.seeds) {
        const std::string stem = seed_stem(s.seed);
        write_text_file(dir / (stem + ".json"), seed_to_json(config, s).dump(2) + "\n");
        write_trace_csv(s.report.trace, dir / (stem + "_trace.csv"));
        if (!s.report.trace.empty()) {
            emit_schedule_plot(schedule, config.optimizer.total_steps, s.report.trace,
                               dir / (stem + "_schedule.csv"));
        }
        if (!s.slice.empty()) {
            write_slice_csv(s.slice, dir / (stem + "_slice.csv"));
        }
    }
    write_text_file(dir / "aggregate.json", aggregate_to_json(aggregate).dump(2) + "\n");
}

AggregateReport run_experiment(const ExperimentConfig& config) {
    AggregateReport agg = run_experiment_in_memory(config);
    write_experiment_outputs(config, agg);
    return agg;
}

LoadedSeedReport load_seed_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open report");
    }
    LoadedSeedReport r;
    r.path = path;
    try {
        r.json = json::parse(in);
        if (r.json.at("schema").get<int>() != kReportSchema) {
            throw FileError(path.string(), "unsupported report schema");
        }
        ConfigDocument doc;
        for (const auto& [section, keys] : r.json.at("config").items()) {
            for (const auto& [key, value] : keys.items()) {
                doc.set(section, key, value.get<std::string>());
            }
        }
        r.config = parse_experiment_config(doc);
        r.total_steps = r.json.at("total_steps").get<std::int64_t>();
        r.schedule = Schedule::parse(r.json.at("schedule").get<std::string>());
        if (r.json.contains("final_theta")) {
            r.final_theta = ParamVector(r.json.at("final_theta").get<std::vector<double>>());
        }
        r.trace_csv = path.parent_path() / r.json.at("trace_csv").get<std::string>();
    } catch (const json::exception& e) {
        throw FileError(path.string(), std::string("malformed report: ") + e.what());
    }
    return r;
}

} // namespace sssam
