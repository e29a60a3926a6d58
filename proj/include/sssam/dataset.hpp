#pragma once

#include "sssam/numeric.hpp"
#include "sssam/objective.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sssam {

enum class Generator { blobs, two_moons, spiral };

/// Throws ConfigError for unknown names.
Generator parse_generator(std::string_view name);
std::string_view to_string(Generator g);

struct DatasetSpec {
    Generator generator = Generator::two_moons;
    std::size_t size = 100;
    double noise = 0.0;
    std::uint64_t seed = 0;
    /// Ignored for two_moons, which always has two classes.
    std::size_t num_classes = 2;
};

/// Labelled feature vectors stored row-major.
struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> inputs;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(inputs).subspan(i * feature_dim, feature_dim);
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Deterministic synthetic classification data. Classes are balanced within one sample.
///  - blobs: class centers evenly spaced on a circle of radius 3, isotropic Gaussian noise.
///  - two_moons: upper arc (cos t, sin t) and lower arc (1 - cos t, 0.5 - sin t), t in [0, pi].
///  - spiral: Archimedean arms, one per class.
Dataset make_dataset(const DatasetSpec& spec);

/// CSV with header x0,...,x{d-1},label; floats use shortest round-trip formatting.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Epoch-shuffled minibatches. Each epoch is a fresh permutation from the batch stream; a batch
/// that crosses an epoch boundary continues into the next permutation, so over T batches every
/// index is used floor(TB/N) or ceil(TB/N) times.
class MinibatchSampler {
public:
    MinibatchSampler(std::size_t dataset_size, std::size_t batch_size, RngStream rng);

    Batch next();

    std::size_t batch_size() const noexcept { return batch_size_; }
    std::size_t epochs_started() const noexcept { return epochs_; }

private:
    void reshuffle();

    std::size_t batch_size_;
    RngStream rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_;
    std::size_t epochs_ = 0;
};

} // namespace sssam
