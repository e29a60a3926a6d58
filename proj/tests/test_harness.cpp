#include "sssam/errors.hpp"
#include "sssam/format.hpp"
#include "sssam/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace sssam;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("sssam_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

ExperimentConfig parse(const std::string& text) {
    return parse_experiment_config(ConfigDocument::parse(text));
}

const char* kQuadratic = R"(
[experiment]
seeds = 1
[objective]
kind = quadratic
curvatures = 1, 2
init = 1, -1
[optimizer]
rho = 0.05
lr = 0.1
steps = 200
[schedule]
spec = constant(a_c=0)
)";

const char* kMoons = R"(
[experiment]
seeds = 1, 2
[objective]
kind = mlp
dataset = two_moons
train_size = 80
test_size = 80
noise = 0.1
layers = 2, 8, 2
[optimizer]
rho = 0.05
lr = 0.2
batch_size = 16
epochs = 5
[schedule]
spec = constant(a_c=0.5)
)";

int run_cli(const std::string& args) {
    const int status = std::system((std::string(SSSAM_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(ConfigDocument, ParseAndRender) {
    const auto doc = ConfigDocument::parse("# c\n[b]\nk = v  # trailing\n[a]\nx=1\n");
    EXPECT_EQ(doc.sections().at("b").at("k"), "v");
    EXPECT_EQ(doc.render(), "[a]\nx = 1\n[b]\nk = v\n");
}

TEST(ConfigDocument, Errors) {
    EXPECT_THROW(ConfigDocument::parse("k = v\n"), ConfigError);
    EXPECT_THROW(ConfigDocument::parse("[a\n"), ConfigError);
    EXPECT_THROW(ConfigDocument::parse("[a]\nnovalue\n"), ConfigError);
    EXPECT_THROW(ConfigDocument::parse("[a]\nk=1\nk=2\n"), ConfigError);
}

TEST(ExperimentConfig, ParsesQuadratic) {
    const auto c = parse(kQuadratic);
    EXPECT_EQ(c.objective.kind, ObjectiveKind::quadratic);
    EXPECT_EQ(c.objective.curvatures, (std::vector<double>{1, 2}));
    EXPECT_EQ(c.optimizer.total_steps, 200);
    EXPECT_EQ(c.schedule, "constant(a_c=0)");
}

TEST(ExperimentConfig, EpochsDeriveSteps) {
    const auto c = parse(kMoons);
    EXPECT_EQ(c.optimizer.total_steps, 5 * 5); // ceil(80 / 16) = 5
    auto doc = ConfigDocument::parse(kMoons);
    doc.set("optimizer", "batch_size", "30");
    EXPECT_EQ(parse_experiment_config(doc).optimizer.total_steps, 5 * 3);
}

TEST(ExperimentConfig, Rejections) {
    const auto with = [](const std::string& section, const std::string& key, const std::string& v) {
        auto doc = ConfigDocument::parse(kQuadratic);
        doc.set(section, key, v);
        return doc;
    };
    EXPECT_THROW(parse_experiment_config(with("optimizer", "momentum", "0.9")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("bogus", "k", "v")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("schedule", "spec", "linear(a_l=0.1,b_l=0.5)")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("experiment", "seeds", "")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("experiment", "seeds", "1,1")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("optimizer", "rho", "0")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("objective", "init", "1,2,3")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("optimizer", "epochs", "3")), ConfigError);
}

TEST(ExperimentConfig, ShippedExamplesParse) {
    for (const auto& entry : fs::directory_iterator(SSSAM_CONFIG_DIR)) {
        EXPECT_NO_THROW(load_experiment_config(entry.path())) << entry.path();
    }
}

TEST(Stats, MeanStd) {
    const std::vector<double> same{2.0, 2.0, 2.0};
    EXPECT_EQ(mean_std(same).std, 0.0);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(mean_std(v).mean, 2.5);
    EXPECT_DOUBLE_EQ(mean_std(v).std, std::sqrt(5.0 / 3.0));
    const std::vector<double> one{7.0};
    EXPECT_EQ(mean_std(one).std, 0.0);
    EXPECT_THROW(mean_std(std::vector<double>{}), DomainError);
}

TEST(Evaluate, BaselinesAndErrors) {
    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::mlp;
    spec.train_data = {Generator::blobs, 40, 0.0, 1, 2};
    spec.test_size = 40;
    spec.model = {{2, 2}, Activation::tanh};
    const auto b = build_objective(spec);
    ASSERT_TRUE(b.classifier && b.test_data);
    // Noiseless blobs sit at (3, 0) and (-3, 0): logits (x, -x) separate them perfectly.
    const ParamVector separator{1.0, 0.0, -1.0, 0.0, 0.0, 0.0};
    EXPECT_EQ(evaluate(*b.classifier, separator, *b.test_data), 0.0);
    const ParamVector constant{0.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    EXPECT_EQ(evaluate(*b.classifier, constant, *b.test_data), 0.5);
    EXPECT_THROW(evaluate(*b.classifier, ParamVector{1.0}, *b.test_data), DomainError);
}

TEST(Registry, LoadsShippedFile) {
    const auto reg = load_registry(default_registry_path());
    EXPECT_EQ(reg.size(), 2u + 9 + 9 + 9 + 9 + 4);
    for (const auto& e : reg) EXPECT_EQ(Schedule::parse(e.schedule).canonical(), e.schedule);
}

TEST(Registry, Errors) {
    const auto dir = fresh_dir("registry");
    std::ofstream(dir / "bad.csv") << "schedule,context,printed_eta\nconstant(a_c=0.1),x\n";
    EXPECT_THROW(load_registry(dir / "bad.csv"), FileError);
    EXPECT_THROW(load_registry(dir / "missing.csv"), FileError);
}

TEST(EtaTable, PublishedValues) {
    const auto reg = load_registry(default_registry_path());
    const auto schedules = load_schedule_list(fs::path(SSSAM_TEST_DATA_DIR) / "published_schedules.txt");
    const auto rows = eta_table(schedules, 10'000, reg);
    std::set<std::string> flagged;
    for (const auto& r : rows) {
        ASSERT_TRUE(r.printed.has_value()) << r.schedule;
        if (r.erratum) flagged.insert(r.schedule);
        else EXPECT_LE(std::abs(r.exact - *r.printed), 0.01) << r.schedule;
    }
    EXPECT_EQ(flagged, (std::set<std::string>{"piecewise(a_p=1,b_p=0.6)", "linear(mid=0.6)",
                                              "trig(sin1)", "trig(sin2)"}));
}

TEST(EtaTable, CsvOutput) {
    const std::vector<Schedule> s{Schedule::constant(0.6), Schedule::parse("piecewise(a_p=0,b_p=0.5)")};
    std::ostringstream out;
    write_eta_table_csv(eta_table(s, 100, {}), out);
    const std::string csv = out.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "schedule,exact,closed_form,printed,context,erratum");
    EXPECT_NE(csv.find("\"piecewise(a_p=0,b_p=0.5)\""), std::string::npos);
}

TEST(SchedulePlot, SgdSamAndCosine) {
    const auto dir = fresh_dir("plot");
    const auto q = QuadraticObjective::diagonal({1.0});
    OptimizerConfig cfg;
    cfg.total_steps = 50;
    for (const char* spec : {"constant(a_c=0)", "constant(a_c=1)", "trig(cos1)"}) {
        const Schedule s = Schedule::parse(spec);
        const auto run = ss_sam_run(q, cfg, s, ParamVector{1.0});
        emit_schedule_plot(s, 50, run.trace, dir / "p.csv");
        std::ifstream in(dir / "p.csv");
        std::string line;
        std::getline(in, line);
        EXPECT_EQ(line, "t,p_t,x_t");
        int t = 0;
        while (std::getline(in, line)) {
            const auto f = split(line, ',');
            ASSERT_EQ(f.size(), 3u);
            EXPECT_EQ(parse_int(f[0], "t"), t);
            const double p = parse_double(f[1], "p");
            const auto x = parse_int(f[2], "x");
            if (std::string(spec) == "constant(a_c=0)") EXPECT_TRUE(p == 0.0 && x == 0);
            if (std::string(spec) == "constant(a_c=1)") EXPECT_TRUE(p == 1.0 && x == 1);
            if (std::string(spec) == "trig(cos1)")
                EXPECT_EQ(p, eval_schedule(s, t, 50));
            ++t;
        }
        EXPECT_EQ(t, 50);
    }
    EXPECT_THROW(emit_schedule_plot(Schedule::constant(0), 50, std::vector<StepRecord>{},
                                    dir / "empty.csv"),
                 DomainError);
    const auto run = ss_sam_run(q, cfg, Schedule::constant(0), ParamVector{1.0});
    EXPECT_THROW(emit_schedule_plot(Schedule::constant(0), 50, run.trace, dir / "no" / "such" / "x.csv"),
                 FileError);
}

TEST(Trace, CsvRoundTrip) {
    const auto dir = fresh_dir("trace");
    const auto q = QuadraticObjective::diagonal({1.0, 7.0});
    OptimizerConfig cfg;
    cfg.total_steps = 40;
    const auto run = ss_sam_run(q, cfg, Schedule::constant(0.5), ParamVector{0.3, -0.7});
    write_trace_csv(run.trace, dir / "t.csv");
    const auto back = read_trace_csv(dir / "t.csv");
    ASSERT_EQ(back.size(), run.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].t, run.trace[i].t);
        EXPECT_EQ(back[i].x_t, run.trace[i].x_t);
        EXPECT_EQ(back[i].eta_t, run.trace[i].eta_t);
        EXPECT_EQ(back[i].loss, run.trace[i].loss);
        EXPECT_EQ(back[i].grad_norm, run.trace[i].grad_norm);
    }
}

TEST(RunExperiment, SgdOnQuadratic) {
    auto c = parse(kQuadratic);
    c.out_dir = fresh_dir("sgd");
    const auto agg = run_experiment(c);
    EXPECT_EQ(agg.failed, 0u);
    EXPECT_EQ(agg.empirical_eta.mean, 1.0);
    EXPECT_EQ(agg.exit_code(), ExitCode::success);
    EXPECT_EQ(agg.eval_metric, "loss");
    for (const char* f : {"aggregate.json", "seed_1.json", "seed_1_trace.csv", "seed_1_schedule.csv",
                          "seed_1_slice.csv"}) {
        EXPECT_TRUE(fs::exists(c.out_dir / f)) << f;
    }
    const auto j = nlohmann::json::parse(slurp(c.out_dir / "aggregate.json"));
    EXPECT_EQ(j.at("schema"), 1);
}

TEST(RunExperiment, FiveSeedsConcentrate) {
    auto doc = ConfigDocument::parse(kQuadratic);
    doc.set("experiment", "seeds", "1,2,3,4,5");
    doc.set("optimizer", "steps", "10000");
    doc.set("schedule", "spec", "constant(a_c=0.5)");
    const auto agg = run_experiment_in_memory(parse_experiment_config(doc));
    EXPECT_NEAR(agg.empirical_eta.mean, 1.5, 0.02);
    EXPECT_GT(agg.empirical_eta.std, 0.0);
    EXPECT_EQ(agg.expected_eta, 1.5);
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndDirectories) {
    auto c = parse(kMoons);
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    c.out_dir = a;
    run_experiment(c);
    const std::string first = slurp(a / "aggregate.json");
    run_experiment(c);
    EXPECT_EQ(slurp(a / "aggregate.json"), first);
    c.out_dir = b;
    run_experiment(c);
    EXPECT_EQ(slurp(b / "aggregate.json"), first);
    for (const char* f : {"seed_2.json", "seed_2_trace.csv", "seed_2_slice.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(RunExperiment, DivergingSeedIsPartialFailure) {
    auto doc = ConfigDocument::parse(kQuadratic);
    doc.set("experiment", "seeds", "1,2");
    doc.set("objective", "init", "1, -1");
    doc.set("optimizer", "lr", "1.5"); // lr * 2 > 2: the stiff direction blows up
    doc.set("optimizer", "steps", "5000");
    auto c = parse_experiment_config(doc);
    c.out_dir = fresh_dir("diverge");
    const auto agg = run_experiment(c);
    EXPECT_EQ(agg.failed, 2u);
    EXPECT_EQ(agg.exit_code(), ExitCode::partial_failure);
    const auto j = nlohmann::json::parse(slurp(c.out_dir / "seed_1.json"));
    EXPECT_EQ(j.at("status"), "failed");
    EXPECT_TRUE(j.contains("failed_step"));
}

TEST(RunExperiment, MlpReportsTestError) {
    const auto agg = run_experiment_in_memory(parse(kMoons));
    EXPECT_EQ(agg.eval_metric, "test_error");
    for (const auto& s : agg.seeds) {
        EXPECT_TRUE(s.ok);
        EXPECT_GE(s.final_eval_metric, 0.0);
        EXPECT_LE(s.final_eval_metric, 1.0);
        ASSERT_TRUE(s.sharpness.has_value());
        EXPECT_TRUE(std::isfinite(s.sharpness->top_eigenvalue));
    }
}

TEST(SeedReport, LoadsBack) {
    auto c = parse(kQuadratic);
    c.out_dir = fresh_dir("load");
    const auto agg = run_experiment(c);
    const auto r = load_seed_report(c.out_dir / "seed_1.json");
    EXPECT_EQ(r.final_theta, agg.seeds[0].report.final_theta);
    EXPECT_EQ(r.total_steps, 200);
    EXPECT_EQ(r.schedule.canonical(), "constant(a_c=0)");
    EXPECT_EQ(read_trace_csv(r.trace_csv).size(), 200u);
    EXPECT_THROW(load_seed_report(c.out_dir / "nope.json"), FileError);
}

TEST(Cli, ExitCodes) {
    const auto dir = fresh_dir("cli");
    std::ofstream(dir / "ok.ini") << kQuadratic;
    std::ofstream(dir / "bad.ini") << "[experiment]\nseeds = 1\n[optimizer]\nsteps = 0\n";
    EXPECT_EQ(run_cli("run " + (dir / "ok.ini").string() + " --out " + (dir / "o1").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "o1" / "aggregate.json"));
    EXPECT_EQ(run_cli("run " + (dir / "ok.ini").string() + " --out " + (dir / "o2").string() +
                      " --seeds 4,5"),
              0);
    EXPECT_TRUE(fs::exists(dir / "o2" / "seed_5.json"));
    EXPECT_EQ(run_cli("run " + (dir / "bad.ini").string()), 3);
    EXPECT_EQ(run_cli("run"), 3);
    EXPECT_EQ(run_cli("eta-table " + std::string(SSSAM_TEST_DATA_DIR) +
                      "/published_schedules.txt --steps 10000 --out " + (dir / "eta.csv").string()),
              0);
    EXPECT_EQ(run_cli("plot-schedule " + (dir / "o1" / "seed_1.json").string() + " --out " +
                      (dir / "plot.csv").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "plot.csv"));
    EXPECT_EQ(run_cli("sharpness " + (dir / "o1" / "seed_1.json").string() + " --rho 0.1 --slice " +
                      (dir / "slice.csv").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "slice.csv"));
    EXPECT_EQ(run_cli("sharpness " + (dir / "o1" / "seed_1.json").string() + " --rho 0"), 3);
}

TEST(Aggregate, ExitCodeMapping) {
    AggregateReport agg;
    agg.seeds.resize(3);
    EXPECT_EQ(agg.exit_code(), ExitCode::success);
    agg.failed = 1;
    EXPECT_EQ(agg.exit_code(), ExitCode::partial_failure);
    agg.failed = 3;
    EXPECT_EQ(agg.exit_code(), ExitCode::partial_failure);
}
