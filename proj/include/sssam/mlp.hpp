#pragma once

#include "sssam/dataset.hpp"
#include "sssam/objective.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace sssam {

enum class Activation { tanh, relu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Fully connected network; hidden layers use `activation`, the output layer feeds a softmax.
/// Parameters are flattened layer by layer as W (out x in, row-major) followed by b.
struct MlpModel {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::tanh;

    std::size_t param_count() const;
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    void validate() const;
};

/// Mean softmax cross-entropy of an MLP over a batch of a dataset, with hand-written backprop.
class MlpObjective final : public Objective {
public:
    MlpObjective(MlpModel model, std::shared_ptr<const Dataset> data);

    std::size_t param_dim() const override { return model_.param_count(); }
    std::size_t dataset_size() const override { return data_->size(); }
    LossAndGrad value_and_grad(const ParamVector& theta, const Batch& batch) const override;
    double value(const ParamVector& theta, const Batch& batch) const override;
    /// Glorot-normal weights, zero biases.
    ParamVector initial_params(RngStream& rng) const override;

    const MlpModel& model() const noexcept { return model_; }
    const Dataset& data() const noexcept { return *data_; }

    /// Output logits for one input row.
    std::vector<double> logits(const ParamVector& theta, std::span<const double> input) const;
    std::size_t predict(const ParamVector& theta, std::span<const double> input) const;

private:
    double accumulate(const ParamVector& theta, const Batch& batch, ParamVector* grad) const;

    MlpModel model_;
    std::shared_ptr<const Dataset> data_;
};

} // namespace sssam
