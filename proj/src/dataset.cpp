#include "sssam/dataset.hpp"

#include "sssam/errors.hpp"
#include "sssam/format.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace sssam {

Generator parse_generator(std::string_view name) {
    if (name == "blobs") return Generator::blobs;
    if (name == "two_moons") return Generator::two_moons;
    if (name == "spiral") return Generator::spiral;
    throw ConfigError("unknown dataset generator '" + std::string(name) + "'");
}

std::string_view to_string(Generator g) {
    switch (g) {
    case Generator::blobs: return "blobs";
    case Generator::two_moons: return "two_moons";
    case Generator::spiral: return "spiral";
    }
    return "unknown";
}

namespace {

std::size_t class_count(std::size_t size, std::size_t classes, std::size_t c) {
    return size / classes + (c < size % classes ? 1 : 0);
}

// Evenly spaced position of sample j among n along [0, 1].
double fraction(std::size_t j, std::size_t n) {
    return n > 1 ? static_cast<double>(j) / static_cast<double>(n - 1) : 0.0;
}

} // namespace

Dataset make_dataset(const DatasetSpec& spec) {
    if (spec.size == 0) {
        throw DomainError("make_dataset: size must be positive");
    }
    if (!(spec.noise >= 0.0)) {
        throw DomainError("make_dataset: noise must be non-negative");
    }
    const std::size_t classes = spec.generator == Generator::two_moons ? 2 : spec.num_classes;
    if (classes < 2) {
        throw DomainError("make_dataset: need at least two classes");
    }

    Dataset data;
    data.feature_dim = 2;
    data.num_classes = classes;
    data.inputs.reserve(spec.size * 2);
    data.labels.reserve(spec.size);
    RngStream rng(spec.seed, StreamId::landscape);
    const double pi = std::numbers::pi;

    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = class_count(spec.size, classes, c);
        for (std::size_t j = 0; j < n; ++j) {
            double x = 0.0;
            double y = 0.0;
            switch (spec.generator) {
            case Generator::blobs: {
                const double angle = 2.0 * pi * static_cast<double>(c) / static_cast<double>(classes);
                x = 3.0 * std::cos(angle);
                y = 3.0 * std::sin(angle);
                break;
            }
            case Generator::two_moons: {
                const double t = pi * fraction(j, n);
                if (c == 0) {
                    x = std::cos(t);
                    y = std::sin(t);
                } else {
                    x = 1.0 - std::cos(t);
                    y = 0.5 - std::sin(t);
                }
                break;
            }
            case Generator::spiral: {
                const double r = fraction(j, n);
                const double angle =
                    2.0 * pi * static_cast<double>(c) / static_cast<double>(classes) + 4.0 * r;
                x = r * std::sin(angle);
                y = r * std::cos(angle);
                break;
            }
            }
            if (spec.noise > 0.0) {
                x += spec.noise * rng.normal();
                y += spec.noise * rng.normal();
            }
            data.inputs.push_back(x);
            data.inputs.push_back(y);
            data.labels.push_back(c);
        }
    }
    return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError(path.string(), "cannot open for writing");
    }
    for (std::size_t k = 0; k < data.feature_dim; ++k) {
        out << 'x' << k << ',';
    }
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) {
            out << format_double(v) << ',';
        }
        out << data.labels[i] << '\n';
    }
    if (!out) {
        throw FileError(path.string(), "write failed");
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FileError(path.string(), "missing header");
    }
    const auto header = split(line, ',');
    if (header.size() < 2 || header.back() != "label") {
        throw FileError(path.string(), "header must be feature columns followed by 'label'");
    }
    Dataset data;
    data.feature_dim = header.size() - 1;
    std::size_t max_label = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": wrong field count");
        }
        try {
            for (std::size_t k = 0; k < data.feature_dim; ++k) {
                data.inputs.push_back(parse_double(fields[k], "feature"));
            }
            const long long label = parse_int(fields.back(), "label");
            if (label < 0) {
                throw ConfigError("negative label");
            }
            data.labels.push_back(static_cast<std::size_t>(label));
            max_label = std::max(max_label, static_cast<std::size_t>(label));
        } catch (const ConfigError& e) {
            throw FileError(path.string(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    data.num_classes = data.labels.empty() ? 0 : max_label + 1;
    return data;
}

MinibatchSampler::MinibatchSampler(std::size_t dataset_size, std::size_t batch_size, RngStream rng)
    : batch_size_(batch_size), rng_(rng), order_(dataset_size), cursor_(dataset_size) {
    if (batch_size_ < 1 || batch_size_ > dataset_size) {
        throw DomainError("MinibatchSampler: batch size " + std::to_string(batch_size) +
                          " outside [1, " + std::to_string(dataset_size) + "]");
    }
}

void MinibatchSampler::reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    shuffle(order_, rng_);
    cursor_ = 0;
    ++epochs_;
}

Batch MinibatchSampler::next() {
    std::vector<std::size_t> indices;
    indices.reserve(batch_size_);
    while (indices.size() < batch_size_) {
        if (cursor_ == order_.size()) {
            reshuffle();
        }
        indices.push_back(order_[cursor_++]);
    }
    return Batch::of(std::move(indices));
}

} // namespace sssam
