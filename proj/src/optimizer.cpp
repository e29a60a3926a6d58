#include "sssam/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace sssam {

LrSchedule::Kind parse_lr_kind(std::string_view name) {
    if (name == "constant") return LrSchedule::Kind::constant;
    if (name == "cosine") return LrSchedule::Kind::cosine;
    throw ConfigError("unknown learning-rate schedule '" + std::string(name) + "'");
}

std::string_view to_string(LrSchedule::Kind kind) {
    return kind == LrSchedule::Kind::constant ? "constant" : "cosine";
}

double lr_at(const LrSchedule& schedule, std::int64_t t, std::int64_t total_steps) {
    if (total_steps < 1 || t < 0 || t >= total_steps) {
        throw DomainError("lr_at: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(total_steps) + ")");
    }
    if (schedule.kind == LrSchedule::Kind::constant) {
        return schedule.lr;
    }
    const double ratio = static_cast<double>(t) / static_cast<double>(total_steps);
    return schedule.lr * 0.5 * (1.0 + std::cos(ratio * std::numbers::pi));
}

void OptimizerConfig::validate() const {
    if (!(rho > 0.0)) {
        throw ConfigError("rho must be positive");
    }
    if (!(lr.lr > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (total_steps < 1) {
        throw ConfigError("total steps must be at least 1");
    }
    if (batch_size < 1) {
        throw ConfigError("batch size must be at least 1");
    }
    if (!(grad_norm_floor >= 0.0)) {
        throw ConfigError("grad_norm_floor must be non-negative");
    }
}

DivergenceError::DivergenceError(std::int64_t step, const std::string& what)
    : Error("step " + std::to_string(step) + ": " + what), step_(step), detail_(what) {}

DivergenceError::DivergenceError(std::int64_t step, const std::string& what, RunReport partial)
    : Error("step " + std::to_string(step) + ": " + what), step_(step), detail_(what),
      partial_(std::move(partial)) {}

ParamVector compute_epsilon(const ParamVector& grad, double rho, double floor) {
    if (!(rho > 0.0)) {
        throw DomainError("compute_epsilon: rho must be positive");
    }
    if (!grad.all_finite()) {
        throw EvaluationError("compute_epsilon: non-finite gradient");
    }
    const double norm = l2_norm(grad);
    if (norm <= floor) {
        return ParamVector::zeros(grad.size());
    }
    return scaled(rho / norm, grad);
}

namespace {

LossAndGrad checked_eval(const Objective& obj, const ParamVector& theta, const Batch& batch,
                         std::int64_t t, const char* where) {
    LossAndGrad lg = obj.value_and_grad(theta, batch);
    if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
        throw DivergenceError(t, std::string("non-finite loss or gradient ") + where);
    }
    return lg;
}

ParamVector checked_update(const ParamVector& theta, double lr, const ParamVector& grad,
                           std::int64_t t) {
    try {
        return axpy(-lr, grad, theta);
    } catch (const EvaluationError&) {
        throw DivergenceError(t, "parameter update overflowed");
    }
}

} // namespace

StepResult sgd_step(const Objective& obj, const ParamVector& theta, const Batch& batch, double lr,
                    std::int64_t t) {
    if (!(lr > 0.0)) {
        throw DomainError("sgd_step: learning rate must be positive");
    }
    const LossAndGrad lg = checked_eval(obj, theta, batch, t, "at theta");
    StepRecord rec;
    rec.t = t;
    rec.x_t = 0;
    rec.eta_t = 1;
    rec.loss = lg.loss;
    rec.grad_norm = l2_norm(lg.grad);
    return {checked_update(theta, lr, lg.grad, t), rec};
}

StepResult sam_step(const Objective& obj, const ParamVector& theta, const Batch& batch, double lr,
                    double rho, double floor, std::int64_t t) {
    if (!(lr > 0.0)) {
        throw DomainError("sam_step: learning rate must be positive");
    }
    const LossAndGrad first = checked_eval(obj, theta, batch, t, "at theta");
    const ParamVector eps = compute_epsilon(first.grad, rho, floor);
    ParamVector perturbed;
    try {
        perturbed = add(theta, eps);
    } catch (const EvaluationError&) {
        throw DivergenceError(t, "perturbed parameters overflowed");
    }
    const LossAndGrad second = checked_eval(obj, perturbed, batch, t, "at theta + epsilon");

    StepRecord rec;
    rec.t = t;
    rec.x_t = 1;
    rec.eta_t = 2;
    rec.loss = first.loss;
    rec.grad_norm = l2_norm(first.grad);
    rec.perturbation_norm = l2_norm(eps);
    return {checked_update(theta, lr, second.grad, t), rec};
}

double empirical_eta(std::span<const StepRecord> trace) {
    if (trace.empty()) {
        throw DomainError("empirical_eta: empty trace");
    }
    std::int64_t total = 0;
    for (const auto& r : trace) {
        total += r.eta_t;
    }
    return static_cast<double>(total) / static_cast<double>(trace.size());
}

BatchSource::BatchSource(const Objective& obj, std::size_t batch_size, std::uint64_t seed) {
    if (obj.dataset_size() > 0) {
        sampler_.emplace(obj.dataset_size(), batch_size, RngStream(seed, StreamId::batch));
    }
}

Batch BatchSource::next() {
    return sampler_ ? sampler_->next() : Batch::full();
}

RunReport ss_sam_run(const Objective& obj, const OptimizerConfig& config, const Schedule& schedule,
                     std::optional<ParamVector> initial) {
    config.validate();
    schedule.validate(config.total_steps);

    RunReport report;
    report.seed = config.seed;
    report.schedule = schedule.canonical();
    report.expected_eta = expected_eta_exact(schedule, config.total_steps);
    report.trace.reserve(static_cast<std::size_t>(config.total_steps));

    if (initial) {
        if (initial->size() != obj.param_dim()) {
            throw DimensionError("ss_sam_run: initial point has wrong dimension");
        }
        report.final_theta = std::move(*initial);
    } else {
        RngStream init(config.seed, StreamId::init);
        report.final_theta = obj.initial_params(init);
    }

    RngStream trials(config.seed, StreamId::trial);
    BatchSource batches(obj, config.batch_size, config.seed);

    for (std::int64_t t = 0; t < config.total_steps; ++t) {
        const int x = bernoulli(trials, eval_schedule(schedule, t, config.total_steps));
        const Batch batch = batches.next();
        const double lr = lr_at(config.lr, t, config.total_steps);
        try {
            StepResult step = x == 1 ? sam_step(obj, report.final_theta, batch, lr, config.rho,
                                                config.grad_norm_floor, t)
                                     : sgd_step(obj, report.final_theta, batch, lr, t);
            report.final_theta = std::move(step.theta);
            report.propagations += step.record.eta_t;
            report.trace.push_back(step.record);
        } catch (const DivergenceError& e) {
            if (!report.trace.empty()) {
                report.empirical_eta = empirical_eta(report.trace);
            }
            throw DivergenceError(e.step(), e.detail(), std::move(report));
        }
    }
    report.empirical_eta = empirical_eta(report.trace);
    return report;
}

} // namespace sssam
