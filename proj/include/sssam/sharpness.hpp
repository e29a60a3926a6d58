#pragma once

#include "sssam/numeric.hpp"
#include "sssam/objective.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace sssam {

struct EigenEstimate {
    double value = 0.0;      ///< dominant-magnitude eigenvalue
    ParamVector vector;      ///< unit-norm eigenvector estimate
    int iterations = 0;
    bool converged = false;
    int propagations = 0;    ///< gradient evaluations spent on Hessian-vector products
};

struct PowerIterationOptions {
    int max_iters = 500;
    double tol = 1e-10;
    /// Finite-difference step for Hessian-vector products; 1e-4 * (1 + ||theta||) when empty.
    std::optional<double> probe_h;
    /// Starting direction; a fixed pseudo-random unit vector when empty.
    std::optional<ParamVector> start;
};

/// Hv ~ (grad L(theta + h v) - grad L(theta - h v)) / 2h.
ParamVector hessian_vector_product(const Objective& obj, const ParamVector& theta,
                                   const Batch& batch, const ParamVector& v, double h);

/// Power iteration on finite-difference Hessian-vector products. Converged when successive
/// Rayleigh quotients differ by less than tol * max(1, |lambda|), or the residual
/// ||Hv - lambda v|| falls below that bound. Never throws for non-convergence; check `converged`.
EigenEstimate hessian_top_eigen(const Objective& obj, const ParamVector& theta, const Batch& batch,
                                const PowerIterationOptions& options = {});

struct SharpnessReport {
    double proxy_gap = 0.0;       ///< L(theta + eps*) - L(theta)
    double top_eigenvalue = 0.0;
    ParamVector top_eigenvector;
    double rho_used = 0.0;
    int probe_count = 0;          ///< propagations spent on the whole report
    bool used_eigen_direction = false;
    bool eigen_converged = false;
};

struct SharpnessOptions {
    /// Below this gradient norm the ascent direction comes from the top Hessian eigenvector.
    double grad_floor = 1e-8;
    PowerIterationOptions power;
};

/// L(theta + rho g / ||g||) - L(theta), the first-order worst case inside the rho-ball. At a
/// stationary point the top Hessian eigenvector replaces g / ||g||.
double sharpness_proxy(const Objective& obj, const ParamVector& theta, double rho,
                       const Batch& batch, const SharpnessOptions& options = {});

/// Proxy gap and top Hessian eigenvalue together.
SharpnessReport measure_sharpness(const Objective& obj, const ParamVector& theta, double rho,
                                  const Batch& batch, const SharpnessOptions& options = {});

struct SlicePoint {
    double offset = 0.0;
    std::optional<double> loss; ///< empty when the loss was non-finite at this probe
};

/// Losses at theta + s d / ||d|| for n equally spaced s in [-half_width, half_width].
std::vector<SlicePoint> loss_slice(const Objective& obj, const ParamVector& theta,
                                   const ParamVector& direction, double half_width,
                                   std::size_t n_points, const Batch& batch = Batch::full());

/// CSV with header "offset,loss"; missing losses are written as empty fields.
void write_slice_csv(const std::vector<SlicePoint>& slice, const std::filesystem::path& path);

} // namespace sssam
