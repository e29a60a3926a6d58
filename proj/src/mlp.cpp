#include "sssam/mlp.hpp"

#include "sssam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sssam {

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "relu";
}

std::size_t MlpModel::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        n += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
    }
    return n;
}

void MlpModel::validate() const {
    if (layer_sizes.size() < 2) {
        throw ConfigError("MLP needs at least an input and an output layer");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) {
            throw ConfigError("MLP layer sizes must be positive");
        }
    }
    if (layer_sizes.back() < 2) {
        throw ConfigError("MLP output layer needs at least two classes");
    }
}

namespace {

double activate(Activation a, double z) {
    return a == Activation::tanh ? std::tanh(z) : std::max(0.0, z);
}

// Derivative expressed through the activation output (tanh) or the pre-activation (relu).
double activate_prime(Activation a, double z, double out) {
    if (a == Activation::tanh) {
        return 1.0 - out * out;
    }
    return z > 0.0 ? 1.0 : 0.0;
}

} // namespace

MlpObjective::MlpObjective(MlpModel model, std::shared_ptr<const Dataset> data)
    : model_(std::move(model)), data_(std::move(data)) {
    model_.validate();
    if (!data_ || data_->size() == 0) {
        throw DomainError("MlpObjective: empty dataset");
    }
    if (data_->feature_dim != model_.input_dim()) {
        throw DimensionError("MlpObjective: dataset has " + std::to_string(data_->feature_dim) +
                             " features, model expects " + std::to_string(model_.input_dim()));
    }
    if (data_->num_classes > model_.output_dim()) {
        throw DimensionError("MlpObjective: dataset has more classes than model outputs");
    }
}

ParamVector MlpObjective::initial_params(RngStream& rng) const {
    ParamVector theta(param_dim());
    std::size_t offset = 0;
    const auto& sizes = model_.layer_sizes;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(sizes[l] + sizes[l - 1]));
        for (std::size_t k = 0; k < sizes[l] * sizes[l - 1]; ++k) {
            theta[offset++] = stddev * rng.normal();
        }
        offset += sizes[l]; // biases start at zero
    }
    return theta;
}

std::vector<double> MlpObjective::logits(const ParamVector& theta,
                                         std::span<const double> input) const {
    if (theta.size() != param_dim()) {
        throw DimensionError("MlpObjective::logits: wrong parameter count");
    }
    if (input.size() != model_.input_dim()) {
        throw DimensionError("MlpObjective::logits: wrong input width");
    }
    const auto& sizes = model_.layer_sizes;
    std::vector<double> a(input.begin(), input.end());
    std::size_t offset = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        const std::size_t in = sizes[l - 1];
        const std::size_t out = sizes[l];
        const double* w = theta.values().data() + offset;
        const double* b = w + out * in;
        std::vector<double> z(out);
        for (std::size_t i = 0; i < out; ++i) {
            double acc = b[i];
            for (std::size_t j = 0; j < in; ++j) {
                acc += w[i * in + j] * a[j];
            }
            z[i] = (l + 1 < sizes.size()) ? activate(model_.activation, acc) : acc;
        }
        a = std::move(z);
        offset += out * in + out;
    }
    return a;
}

std::size_t MlpObjective::predict(const ParamVector& theta, std::span<const double> input) const {
    const auto z = logits(theta, input);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

double MlpObjective::accumulate(const ParamVector& theta, const Batch& batch,
                                ParamVector* grad) const {
    const auto& sizes = model_.layer_sizes;
    const std::size_t layers = sizes.size() - 1;

    std::vector<std::size_t> offsets(layers);
    for (std::size_t l = 0, off = 0; l < layers; ++l) {
        offsets[l] = off;
        off += sizes[l + 1] * sizes[l] + sizes[l + 1];
    }

    // acts[0] is the input; acts[l] and pre[l] belong to layer l (1-based).
    std::vector<std::vector<double>> acts(layers + 1);
    std::vector<std::vector<double>> pre(layers + 1);
    for (std::size_t l = 1; l <= layers; ++l) {
        acts[l].resize(sizes[l]);
        pre[l].resize(sizes[l]);
    }
    std::vector<double> delta;
    std::vector<double> prev_delta;

    const double* params = theta.values().data();
    double* g = grad ? grad->values().data() : nullptr;

    const std::size_t count = batch.is_full() ? data_->size() : batch.size();
    double total = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t idx = batch.is_full() ? k : batch.indices()[k];
        const auto input = data_->row(idx);
        const std::size_t label = data_->labels[idx];
        acts[0].assign(input.begin(), input.end());

        for (std::size_t l = 1; l <= layers; ++l) {
            const std::size_t in = sizes[l - 1];
            const std::size_t out = sizes[l];
            const double* w = params + offsets[l - 1];
            const double* b = w + out * in;
            for (std::size_t i = 0; i < out; ++i) {
                double acc = b[i];
                for (std::size_t j = 0; j < in; ++j) {
                    acc += w[i * in + j] * acts[l - 1][j];
                }
                pre[l][i] = acc;
                acts[l][i] = l < layers ? activate(model_.activation, acc) : acc;
            }
        }

        // Softmax cross-entropy through log-sum-exp.
        const auto& z = acts[layers];
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) {
            denom += std::exp(v - zmax);
        }
        const double log_norm = zmax + std::log(denom);
        total += log_norm - z[label];

        if (!g) {
            continue;
        }
        delta.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            delta[i] = std::exp(z[i] - log_norm) - (i == label ? 1.0 : 0.0);
        }
        for (std::size_t l = layers; l >= 1; --l) {
            const std::size_t in = sizes[l - 1];
            const std::size_t out = sizes[l];
            const double* w = params + offsets[l - 1];
            double* gw = g + offsets[l - 1];
            double* gb = gw + out * in;
            for (std::size_t i = 0; i < out; ++i) {
                for (std::size_t j = 0; j < in; ++j) {
                    gw[i * in + j] += delta[i] * acts[l - 1][j];
                }
                gb[i] += delta[i];
            }
            if (l == 1) {
                break;
            }
            prev_delta.assign(in, 0.0);
            for (std::size_t i = 0; i < out; ++i) {
                for (std::size_t j = 0; j < in; ++j) {
                    prev_delta[j] += w[i * in + j] * delta[i];
                }
            }
            for (std::size_t j = 0; j < in; ++j) {
                prev_delta[j] *= activate_prime(model_.activation, pre[l - 1][j], acts[l - 1][j]);
            }
            delta.swap(prev_delta);
        }
    }

    const double inv = 1.0 / static_cast<double>(count);
    if (g) {
        for (std::size_t i = 0; i < grad->size(); ++i) {
            g[i] *= inv;
        }
    }
    return total * inv;
}

LossAndGrad MlpObjective::value_and_grad(const ParamVector& theta, const Batch& batch) const {
    check_arguments(theta, batch);
    LossAndGrad out{0.0, ParamVector(param_dim())};
    out.loss = accumulate(theta, batch, &out.grad);
    return out;
}

double MlpObjective::value(const ParamVector& theta, const Batch& batch) const {
    check_arguments(theta, batch);
    return accumulate(theta, batch, nullptr);
}

} // namespace sssam
