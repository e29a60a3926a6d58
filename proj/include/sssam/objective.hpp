#pragma once

#include "sssam/numeric.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace sssam {

/// Selects the samples a loss is evaluated on: the whole training set, or explicit indices.
class Batch {
public:
    static Batch full() { return Batch{}; }
    static Batch of(std::vector<std::size_t> indices);

    bool is_full() const noexcept { return full_; }
    std::span<const std::size_t> indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }

    friend bool operator==(const Batch&, const Batch&) = default;

private:
    Batch() = default;

    bool full_ = true;
    std::vector<std::size_t> indices_;
};

struct LossAndGrad {
    double loss = 0.0;
    ParamVector grad;
};

/// Differentiable loss L(theta; batch). Every value_and_grad call is one forward-backward
/// propagation. Implementations are immutable and safe to share between threads.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t param_dim() const = 0;
    /// Number of indexable training samples; 0 means only Batch::full() is accepted.
    virtual std::size_t dataset_size() const { return 0; }

    virtual LossAndGrad value_and_grad(const ParamVector& theta, const Batch& batch) const = 0;
    virtual double value(const ParamVector& theta, const Batch& batch) const;

    /// Default starting point drawn from the init stream.
    virtual ParamVector initial_params(RngStream& rng) const;

protected:
    /// Throws DimensionError / DomainError when theta or batch do not fit this objective.
    void check_arguments(const ParamVector& theta, const Batch& batch) const;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// L(theta) = 1/2 (theta - c)^T A (theta - c) with A symmetric.
class QuadraticObjective final : public Objective {
public:
    /// `matrix` is row-major n x n and must be symmetric.
    QuadraticObjective(std::vector<double> matrix, ParamVector center);

    static QuadraticObjective diagonal(const std::vector<double>& curvatures);
    static QuadraticObjective diagonal(const std::vector<double>& curvatures, ParamVector center);

    std::size_t param_dim() const override { return center_.size(); }
    LossAndGrad value_and_grad(const ParamVector& theta, const Batch& batch) const override;

    const std::vector<double>& matrix() const noexcept { return matrix_; }
    const ParamVector& center() const noexcept { return center_; }

private:
    std::vector<double> matrix_;
    ParamVector center_;
};

struct TwoWellParams {
    double flat_center = -1.0;
    double sharp_center = 1.0;
    double flat_curvature = 1.0;
    double sharp_curvature = 25.0;
    /// Both wells bottom out at loss = -depth.
    double depth = 0.0;
    /// Curvature of the convex quadratic on coordinates 1..d-1.
    double other_curvature = 1.0;
    /// Blend window as fractions of the flat-to-sharp segment; outside it each well is an
    /// exact quadratic.
    double blend_begin = 0.55;
    double blend_end = 0.8;
};

/// One-dimensional double well (flat and sharp minimum of equal depth) along coordinate 0,
/// extended by a convex quadratic in the remaining coordinates. The two quadratics are joined
/// with a C2 quintic smoothstep, so each well is exactly quadratic near its center.
class TwoWellLandscape final : public Objective {
public:
    explicit TwoWellLandscape(TwoWellParams params = {}, std::size_t dim = 1);

    std::size_t param_dim() const override { return dim_; }
    LossAndGrad value_and_grad(const ParamVector& theta, const Batch& batch) const override;

    const TwoWellParams& params() const noexcept { return params_; }
    ParamVector flat_minimum() const;
    ParamVector sharp_minimum() const;
    /// True when coordinate 0 is on the flat side of the barrier.
    bool in_flat_basin(const ParamVector& theta) const;
    /// Location of the barrier maximum along coordinate 0.
    double barrier_position() const;

    /// Loss, first and second derivative of the 1-D profile.
    struct Profile {
        double value;
        double slope;
        double curvature;
    };
    Profile profile(double x) const;

private:
    TwoWellParams params_;
    std::size_t dim_;
    double barrier_;
};

/// Adds (wd/2) ||theta||^2 to the wrapped objective. The term is part of every propagation.
class WeightDecayObjective final : public Objective {
public:
    WeightDecayObjective(ObjectivePtr base, double weight_decay);

    std::size_t param_dim() const override { return base_->param_dim(); }
    std::size_t dataset_size() const override { return base_->dataset_size(); }
    LossAndGrad value_and_grad(const ParamVector& theta, const Batch& batch) const override;
    double value(const ParamVector& theta, const Batch& batch) const override;
    ParamVector initial_params(RngStream& rng) const override { return base_->initial_params(rng); }

    const Objective& base() const noexcept { return *base_; }
    double weight_decay() const noexcept { return weight_decay_; }

private:
    ObjectivePtr base_;
    double weight_decay_;
};

} // namespace sssam
