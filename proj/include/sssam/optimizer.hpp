#pragma once

#include "sssam/dataset.hpp"
#include "sssam/errors.hpp"
#include "sssam/numeric.hpp"
#include "sssam/objective.hpp"
#include "sssam/scheduler.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sssam {

/// Learning-rate schedule. Cosine decays base * (1 + cos(t pi / T)) / 2 with no warmup or restarts.
struct LrSchedule {
    enum class Kind { constant, cosine };

    Kind kind = Kind::constant;
    double lr = 0.1;

    static LrSchedule constant(double lr) { return {Kind::constant, lr}; }
    static LrSchedule cosine(double base) { return {Kind::cosine, base}; }

    friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

LrSchedule::Kind parse_lr_kind(std::string_view name);
std::string_view to_string(LrSchedule::Kind kind);

double lr_at(const LrSchedule& schedule, std::int64_t t, std::int64_t total_steps);

struct OptimizerConfig {
    double rho = 0.1;
    LrSchedule lr;
    std::int64_t total_steps = 1;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    double grad_norm_floor = 1e-12;

    /// Throws ConfigError on rho <= 0, lr <= 0, T < 1, B < 1 or negative floor.
    void validate() const;
};

struct StepRecord {
    std::int64_t t = 0;
    int x_t = 0;          ///< 1 when the step was a SAM step
    int eta_t = 1;        ///< propagations spent, always 1 + x_t
    double loss = 0.0;    ///< batch loss at theta_t
    double grad_norm = 0.0;
    double perturbation_norm = 0.0; ///< ||epsilon||, 0 for SGD steps

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct StepResult {
    ParamVector theta;
    StepRecord record;
};

struct RunReport {
    ParamVector final_theta;
    std::vector<StepRecord> trace;
    double empirical_eta = 0.0;
    double expected_eta = 0.0;
    std::int64_t propagations = 0;
    std::uint64_t seed = 0;
    std::string schedule;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Raised when a loss, gradient or update becomes non-finite. `partial()` holds the trace up to
/// (excluding) the failing step when raised from ss_sam_run.
class DivergenceError : public Error {
public:
    DivergenceError(std::int64_t step, const std::string& what);
    DivergenceError(std::int64_t step, const std::string& what, RunReport partial);

    std::int64_t step() const noexcept { return step_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::optional<RunReport>& partial() const noexcept { return partial_; }

private:
    std::int64_t step_;
    std::string detail_;
    std::optional<RunReport> partial_;
};

/// SAM ascent direction rho * g / ||g||; the zero vector when ||g|| <= floor.
ParamVector compute_epsilon(const ParamVector& grad, double rho, double floor);

/// theta - lr * grad L(theta), one propagation.
StepResult sgd_step(const Objective& obj, const ParamVector& theta, const Batch& batch, double lr,
                    std::int64_t t = 0);

/// Two propagations on the same batch: g1 at theta, epsilon from g1, g2 at theta + epsilon,
/// then theta - lr * g2.
StepResult sam_step(const Objective& obj, const ParamVector& theta, const Batch& batch, double lr,
                    double rho, double floor, std::int64_t t = 0);

/// Sum of eta_t over the trace divided by its length.
double empirical_eta(std::span<const StepRecord> trace);

/// Stochastic scheduled SAM. At each step t a Bernoulli(p(t)) draw from the trial stream picks
/// SAM (1) or SGD (0); batches come from the batch stream and the starting point, if not given,
/// from the init stream.
RunReport ss_sam_run(const Objective& obj, const OptimizerConfig& config, const Schedule& schedule,
                     std::optional<ParamVector> initial = std::nullopt);

/// Batch source used by ss_sam_run: epoch-shuffled minibatches for dataset objectives,
/// the full batch otherwise. Exposed so reference loops can reproduce the same sequence.
class BatchSource {
public:
    BatchSource(const Objective& obj, std::size_t batch_size, std::uint64_t seed);
    Batch next();

private:
    std::optional<MinibatchSampler> sampler_;
};

} // namespace sssam
