#pragma once

#include "sssam/dataset.hpp"
#include "sssam/mlp.hpp"
#include "sssam/objective.hpp"
#include "sssam/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sssam {

/// Sectioned key/value text:
///
///     # comment
///     [section]
///     key = value
///
/// Keys are unique within a section. Order is not significant.
class ConfigDocument {
public:
    using Section = std::map<std::string, std::string>;

    static ConfigDocument parse(std::string_view text);
    static ConfigDocument load(const std::filesystem::path& path);

    const std::map<std::string, Section>& sections() const noexcept { return sections_; }
    void set(const std::string& section, const std::string& key, std::string value);

    /// Renders the document back to text, sections and keys sorted.
    std::string render() const;

private:
    std::map<std::string, Section> sections_;
};

enum class ObjectiveKind { quadratic, two_well, mlp };

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::quadratic;
    double weight_decay = 0.0;

    // quadratic
    std::vector<double> curvatures{1.0};
    std::vector<double> center;

    // two_well
    TwoWellParams two_well;
    std::size_t dim = 1;

    // Starting point for analytic objectives: explicit point, or per-coordinate uniform box
    // drawn from the init stream, or standard normal when neither is given.
    std::vector<double> init;
    std::optional<std::pair<double, double>> init_box;

    // mlp
    DatasetSpec train_data;
    std::size_t test_size = 0;
    MlpModel model{{2, 16, 16, 2}, Activation::tanh};
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path out_dir = "runs";
    ObjectiveSpec objective;
    OptimizerConfig optimizer; ///< seed is overwritten per run
    std::string schedule = "constant(a_c=0.5)";
    /// Radius of the sharpness probe written to reports; defaults to optimizer rho.
    std::optional<double> sharpness_rho;
    std::optional<std::filesystem::path> registry;
    ConfigDocument source;     ///< document the config was read from, embedded in reports

    /// Throws ConfigError on any inconsistency (including a schedule invalid for T).
    void validate() const;
};

/// Builds and validates an ExperimentConfig. Unknown sections or keys are config errors.
ExperimentConfig parse_experiment_config(const ConfigDocument& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

} // namespace sssam
