#include "sssam/objective.hpp"

#include "sssam/errors.hpp"

#include <cmath>
#include <string>

namespace sssam {

Batch Batch::of(std::vector<std::size_t> indices) {
    if (indices.empty()) {
        throw DomainError("Batch::of: empty index list");
    }
    Batch b;
    b.full_ = false;
    b.indices_ = std::move(indices);
    return b;
}

double Objective::value(const ParamVector& theta, const Batch& batch) const {
    return value_and_grad(theta, batch).loss;
}

ParamVector Objective::initial_params(RngStream& rng) const {
    ParamVector theta(param_dim());
    for (double& v : theta) {
        v = rng.normal();
    }
    return theta;
}

void Objective::check_arguments(const ParamVector& theta, const Batch& batch) const {
    if (theta.size() != param_dim()) {
        throw DimensionError("objective: expected " + std::to_string(param_dim()) +
                             " parameters, got " + std::to_string(theta.size()));
    }
    if (batch.is_full()) {
        return;
    }
    const std::size_t n = dataset_size();
    if (n == 0) {
        throw DomainError("objective: indexed batch given to an objective without a dataset");
    }
    for (std::size_t i : batch.indices()) {
        if (i >= n) {
            throw DomainError("objective: batch index " + std::to_string(i) +
                              " out of range for dataset of size " + std::to_string(n));
        }
    }
}

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective::QuadraticObjective(std::vector<double> matrix, ParamVector center)
    : matrix_(std::move(matrix)), center_(std::move(center)) {
    const std::size_t n = center_.size();
    if (n == 0) {
        throw DomainError("QuadraticObjective: empty parameter space");
    }
    if (matrix_.size() != n * n) {
        throw DimensionError("QuadraticObjective: matrix must be " + std::to_string(n) + "x" +
                             std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = matrix_[i * n + j];
            const double b = matrix_[j * n + i];
            if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a))) {
                throw DomainError("QuadraticObjective: matrix is not symmetric");
            }
        }
    }
}

QuadraticObjective QuadraticObjective::diagonal(const std::vector<double>& curvatures) {
    return diagonal(curvatures, ParamVector::zeros(curvatures.size()));
}

QuadraticObjective QuadraticObjective::diagonal(const std::vector<double>& curvatures,
                                                ParamVector center) {
    const std::size_t n = curvatures.size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m[i * n + i] = curvatures[i];
    }
    return QuadraticObjective(std::move(m), std::move(center));
}

LossAndGrad QuadraticObjective::value_and_grad(const ParamVector& theta, const Batch& batch) const {
    check_arguments(theta, batch);
    const std::size_t n = center_.size();
    const ParamVector d = subtract(theta, center_);
    ParamVector grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += matrix_[i * n + j] * d[j];
        }
        grad[i] = acc;
    }
    return {0.5 * dot(d, grad), std::move(grad)};
}

// ---------------------------------------------------------------------------
// TwoWellLandscape

namespace {

struct Step {
    double s, ds, d2s; // smoothstep and its derivatives w.r.t. its own argument
};

Step smootherstep(double w) {
    if (w <= 0.0) {
        return {0.0, 0.0, 0.0};
    }
    if (w >= 1.0) {
        return {1.0, 0.0, 0.0};
    }
    const double w2 = w * w;
    const double w3 = w2 * w;
    return {w3 * (10.0 - 15.0 * w + 6.0 * w2), 30.0 * w2 * (1.0 - w) * (1.0 - w),
            60.0 * w * (1.0 - 3.0 * w + 2.0 * w2)};
}

} // namespace

TwoWellLandscape::TwoWellLandscape(TwoWellParams params, std::size_t dim)
    : params_(params), dim_(dim) {
    const auto& p = params_;
    if (dim_ == 0) {
        throw DomainError("TwoWellLandscape: dimension must be positive");
    }
    if (!(p.flat_curvature > 0.0) || !(p.sharp_curvature > p.flat_curvature)) {
        throw DomainError("TwoWellLandscape: need 0 < flat_curvature < sharp_curvature");
    }
    if (!(p.other_curvature > 0.0)) {
        throw DomainError("TwoWellLandscape: other_curvature must be positive");
    }
    if (p.flat_center == p.sharp_center) {
        throw DomainError("TwoWellLandscape: well centers must differ");
    }
    if (!(0.0 < p.blend_begin && p.blend_begin < p.blend_end && p.blend_end < 1.0)) {
        throw DomainError("TwoWellLandscape: need 0 < blend_begin < blend_end < 1");
    }

    // Bisection for the barrier on the directional slope, which is positive just past the
    // flat well and negative just before the sharp one.
    const double span = p.sharp_center - p.flat_center;
    const double dir = span > 0.0 ? 1.0 : -1.0;
    double lo = p.flat_center + p.blend_begin * span;
    double hi = p.flat_center + p.blend_end * span;
    if (dir * profile(lo).slope <= 0.0 || dir * profile(hi).slope >= 0.0) {
        throw DomainError("TwoWellLandscape: blend window does not bracket a barrier");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dir * profile(mid).slope > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    barrier_ = 0.5 * (lo + hi);
}

TwoWellLandscape::Profile TwoWellLandscape::profile(double x) const {
    const auto& p = params_;
    const double span = p.sharp_center - p.flat_center;
    const double width = span * (p.blend_end - p.blend_begin);
    const double w = ((x - p.flat_center) / span - p.blend_begin) / (p.blend_end - p.blend_begin);
    const Step st = smootherstep(w);
    const double ds = st.ds / width;
    const double d2s = st.d2s / (width * width);

    const double df = x - p.flat_center;
    const double dsh = x - p.sharp_center;
    const double qf = 0.5 * p.flat_curvature * df * df;
    const double qs = 0.5 * p.sharp_curvature * dsh * dsh;
    const double qf1 = p.flat_curvature * df;
    const double qs1 = p.sharp_curvature * dsh;

    Profile out{};
    out.value = -p.depth + (1.0 - st.s) * qf + st.s * qs;
    out.slope = (1.0 - st.s) * qf1 + st.s * qs1 + ds * (qs - qf);
    out.curvature = (1.0 - st.s) * p.flat_curvature + st.s * p.sharp_curvature +
                    2.0 * ds * (qs1 - qf1) + d2s * (qs - qf);
    return out;
}

LossAndGrad TwoWellLandscape::value_and_grad(const ParamVector& theta, const Batch& batch) const {
    check_arguments(theta, batch);
    const Profile pr = profile(theta[0]);
    LossAndGrad out{pr.value, ParamVector(dim_)};
    out.grad[0] = pr.slope;
    for (std::size_t i = 1; i < dim_; ++i) {
        out.loss += 0.5 * params_.other_curvature * theta[i] * theta[i];
        out.grad[i] = params_.other_curvature * theta[i];
    }
    return out;
}

ParamVector TwoWellLandscape::flat_minimum() const {
    ParamVector theta(dim_);
    theta[0] = params_.flat_center;
    return theta;
}

ParamVector TwoWellLandscape::sharp_minimum() const {
    ParamVector theta(dim_);
    theta[0] = params_.sharp_center;
    return theta;
}

bool TwoWellLandscape::in_flat_basin(const ParamVector& theta) const {
    const bool sharp_right = params_.sharp_center > params_.flat_center;
    return sharp_right ? theta[0] < barrier_ : theta[0] > barrier_;
}

double TwoWellLandscape::barrier_position() const {
    return barrier_;
}

// ---------------------------------------------------------------------------
// WeightDecayObjective

WeightDecayObjective::WeightDecayObjective(ObjectivePtr base, double weight_decay)
    : base_(std::move(base)), weight_decay_(weight_decay) {
    if (!base_) {
        throw DomainError("WeightDecayObjective: null base objective");
    }
    if (!(weight_decay_ >= 0.0)) {
        throw DomainError("WeightDecayObjective: weight decay must be non-negative");
    }
}

LossAndGrad WeightDecayObjective::value_and_grad(const ParamVector& theta,
                                                 const Batch& batch) const {
    LossAndGrad out = base_->value_and_grad(theta, batch);
    if (weight_decay_ > 0.0) {
        out.loss += 0.5 * weight_decay_ * dot(theta, theta);
        out.grad = axpy(weight_decay_, theta, out.grad);
    }
    return out;
}

double WeightDecayObjective::value(const ParamVector& theta, const Batch& batch) const {
    double v = base_->value(theta, batch);
    if (weight_decay_ > 0.0) {
        v += 0.5 * weight_decay_ * dot(theta, theta);
    }
    return v;
}

} // namespace sssam
