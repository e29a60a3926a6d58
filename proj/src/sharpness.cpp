#include "sssam/sharpness.hpp"

#include "sssam/errors.hpp"
#include "sssam/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sssam {

namespace {

// Seed of the fixed start direction; any value works, it only has to be stable.
constexpr std::uint64_t kStartSeed = 0x5eed;

ParamVector default_start(std::size_t n) {
    RngStream rng(kStartSeed, StreamId::landscape);
    ParamVector v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    return scaled(1.0 / l2_norm(v), v);
}

double checked_value(const Objective& obj, const ParamVector& theta, const Batch& batch) {
    const double v = obj.value(theta, batch);
    if (!std::isfinite(v)) {
        throw EvaluationError("sharpness: non-finite loss");
    }
    return v;
}

} // namespace

ParamVector hessian_vector_product(const Objective& obj, const ParamVector& theta,
                                   const Batch& batch, const ParamVector& v, double h) {
    if (!(h > 0.0)) {
        throw DomainError("hessian_vector_product: probe step must be positive");
    }
    const ParamVector plus = obj.value_and_grad(axpy(h, v, theta), batch).grad;
    const ParamVector minus = obj.value_and_grad(axpy(-h, v, theta), batch).grad;
    return scaled(1.0 / (2.0 * h), subtract(plus, minus));
}

EigenEstimate hessian_top_eigen(const Objective& obj, const ParamVector& theta, const Batch& batch,
                                const PowerIterationOptions& options) {
    if (options.max_iters < 1) {
        throw DomainError("hessian_top_eigen: max_iters must be at least 1");
    }
    const double h = options.probe_h.value_or(1e-4 * (1.0 + l2_norm(theta)));
    if (!(h > 0.0)) {
        throw DomainError("hessian_top_eigen: probe_h must be positive");
    }

    ParamVector v = options.start ? *options.start : default_start(theta.size());
    require_same_length(v, theta, "hessian_top_eigen");
    const double start_norm = l2_norm(v);
    if (start_norm == 0.0) {
        throw DomainError("hessian_top_eigen: zero start vector");
    }
    v = scaled(1.0 / start_norm, v);

    EigenEstimate est;
    est.vector = v;
    double previous = 0.0;
    for (int k = 1; k <= options.max_iters; ++k) {
        const ParamVector hv = hessian_vector_product(obj, theta, batch, v, h);
        est.propagations += 2;
        est.iterations = k;
        const double lambda = dot(v, hv);
        est.value = lambda;
        est.vector = v;

        const double bound = options.tol * std::max(1.0, std::abs(lambda));
        const double residual = l2_norm(axpy(-lambda, v, hv));
        if (residual < bound || (k > 1 && std::abs(lambda - previous) < bound)) {
            est.converged = true;
            break;
        }
        const double norm = l2_norm(hv);
        if (norm == 0.0) {
            // v lies in the null space; zero is the best available estimate.
            est.converged = true;
            break;
        }
        v = scaled(1.0 / norm, hv);
        previous = lambda;
    }
    return est;
}

SharpnessReport measure_sharpness(const Objective& obj, const ParamVector& theta, double rho,
                                  const Batch& batch, const SharpnessOptions& options) {
    if (!(rho > 0.0)) {
        throw DomainError("sharpness: rho must be positive");
    }
    const LossAndGrad base = obj.value_and_grad(theta, batch);
    if (!std::isfinite(base.loss)) {
        throw EvaluationError("sharpness: non-finite loss");
    }

    SharpnessReport report;
    report.rho_used = rho;
    report.probe_count = 1;

    const EigenEstimate eig = hessian_top_eigen(obj, theta, batch, options.power);
    report.top_eigenvalue = eig.value;
    report.top_eigenvector = eig.vector;
    report.eigen_converged = eig.converged;
    report.probe_count += eig.propagations;

    const double gnorm = l2_norm(base.grad);
    ParamVector direction;
    if (gnorm > options.grad_floor) {
        direction = scaled(1.0 / gnorm, base.grad);
    } else {
        direction = eig.vector;
        report.used_eigen_direction = true;
    }
    report.proxy_gap = checked_value(obj, axpy(rho, direction, theta), batch) - base.loss;
    report.probe_count += 1;
    return report;
}

double sharpness_proxy(const Objective& obj, const ParamVector& theta, double rho,
                       const Batch& batch, const SharpnessOptions& options) {
    if (!(rho > 0.0)) {
        throw DomainError("sharpness_proxy: rho must be positive");
    }
    const LossAndGrad base = obj.value_and_grad(theta, batch);
    if (!std::isfinite(base.loss)) {
        throw EvaluationError("sharpness_proxy: non-finite loss");
    }
    const double gnorm = l2_norm(base.grad);
    ParamVector direction;
    if (gnorm > options.grad_floor) {
        direction = scaled(1.0 / gnorm, base.grad);
    } else {
        direction = hessian_top_eigen(obj, theta, batch, options.power).vector;
    }
    return checked_value(obj, axpy(rho, direction, theta), batch) - base.loss;
}

std::vector<SlicePoint> loss_slice(const Objective& obj, const ParamVector& theta,
                                   const ParamVector& direction, double half_width,
                                   std::size_t n_points, const Batch& batch) {
    if (n_points < 2) {
        throw DomainError("loss_slice: need at least two points");
    }
    require_same_length(theta, direction, "loss_slice");
    const double norm = l2_norm(direction);
    if (norm == 0.0) {
        throw DomainError("loss_slice: zero direction");
    }
    const ParamVector unit = scaled(1.0 / norm, direction);

    std::vector<SlicePoint> out(n_points);
    const double step = 2.0 * half_width / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        // Exact zero at the midpoint so the centre probe is theta itself.
        const double s = (2 * i + 1 == n_points) ? 0.0 : -half_width + step * static_cast<double>(i);
        out[i].offset = s;
        try {
            const double v = obj.value(axpy(s, unit, theta), batch);
            if (std::isfinite(v)) {
                out[i].loss = v;
            }
        } catch (const EvaluationError&) {
            // recorded as missing
        }
    }
    return out;
}

void write_slice_csv(const std::vector<SlicePoint>& slice, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError(path.string(), "cannot open for writing");
    }
    out << "offset,loss\n";
    for (const auto& p : slice) {
        out << format_double(p.offset) << ',';
        if (p.loss) {
            out << format_double(*p.loss);
        }
        out << '\n';
    }
    if (!out) {
        throw FileError(path.string(), "write failed");
    }
}

} // namespace sssam
