#include "sssam/config.hpp"

#include "sssam/errors.hpp"
#include "sssam/format.hpp"
#include "sssam/scheduler.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace sssam {

ConfigDocument ConfigDocument::parse(std::string_view text) {
    ConfigDocument doc;
    std::string current;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto where = "line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + ": unterminated section header");
            }
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current.empty()) {
                throw ConfigError(where + ": empty section name");
            }
            doc.sections_[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + ": expected key = value");
        }
        if (current.empty()) {
            throw ConfigError(where + ": key outside of a section");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) {
            throw ConfigError(where + ": empty key");
        }
        auto& section = doc.sections_[current];
        if (!section.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
            throw ConfigError(where + ": duplicate key '" + key + "' in [" + current + "]");
        }
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError(path.string(), "cannot open config");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void ConfigDocument::set(const std::string& section, const std::string& key, std::string value) {
    sections_[section][key] = std::move(value);
}

std::string ConfigDocument::render() const {
    std::string out;
    for (const auto& [name, section] : sections_) {
        out += "[" + name + "]\n";
        for (const auto& [key, value] : section) {
            out += key + " = " + value + "\n";
        }
    }
    return out;
}

namespace {

// Reads keys out of one section and rejects whatever is left over.
class SectionReader {
public:
    SectionReader(const ConfigDocument& doc, std::string name) : name_(std::move(name)) {
        const auto it = doc.sections().find(name_);
        if (it != doc.sections().end()) {
            section_ = &it->second;
        }
    }

    std::optional<std::string> text(const std::string& key) {
        if (!section_) {
            return std::nullopt;
        }
        const auto it = section_->find(key);
        if (it == section_->end()) {
            return std::nullopt;
        }
        used_.insert(key);
        return it->second;
    }

    std::optional<double> real(const std::string& key) {
        const auto v = text(key);
        return v ? std::optional<double>(parse_double(*v, qualified(key))) : std::nullopt;
    }

    std::optional<long long> integer(const std::string& key) {
        const auto v = text(key);
        return v ? std::optional<long long>(parse_int(*v, qualified(key))) : std::nullopt;
    }

    std::optional<std::size_t> count(const std::string& key) {
        const auto v = integer(key);
        if (v && *v < 0) {
            throw ConfigError(qualified(key) + " must be non-negative");
        }
        return v ? std::optional<std::size_t>(static_cast<std::size_t>(*v)) : std::nullopt;
    }

    std::optional<std::vector<double>> reals(const std::string& key) {
        const auto v = text(key);
        if (!v) {
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& item : split(*v, ',')) {
            out.push_back(parse_double(item, qualified(key)));
        }
        return out;
    }

    void finish() const {
        if (!section_) {
            return;
        }
        for (const auto& [key, value] : *section_) {
            if (!used_.count(key)) {
                throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
            }
        }
    }

private:
    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    std::string name_;
    const ConfigDocument::Section* section_ = nullptr;
    std::set<std::string> used_;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : split(text, ',')) {
        const long long v = parse_int(item, "seeds");
        if (v < 0) {
            throw ConfigError("seeds must be non-negative");
        }
        seeds.push_back(static_cast<std::uint64_t>(v));
    }
    return seeds;
}

} // namespace

ExperimentConfig parse_experiment_config(const ConfigDocument& doc) {
    static const std::set<std::string> known{"experiment", "objective", "optimizer", "schedule",
                                             "sharpness"};
    for (const auto& [name, section] : doc.sections()) {
        if (!known.count(name)) {
            throw ConfigError("unknown section [" + name + "]");
        }
    }

    ExperimentConfig cfg;
    cfg.source = doc;

    SectionReader exp(doc, "experiment");
    if (auto v = exp.text("name")) cfg.name = *v;
    if (auto v = exp.text("seeds")) cfg.seeds = parse_seeds(*v);
    if (auto v = exp.text("out")) cfg.out_dir = *v;
    if (auto v = exp.text("registry")) cfg.registry = *v;
    exp.finish();

    SectionReader obj(doc, "objective");
    auto& o = cfg.objective;
    const std::string kind = obj.text("kind").value_or("quadratic");
    if (kind == "quadratic") {
        o.kind = ObjectiveKind::quadratic;
        if (auto v = obj.reals("curvatures")) o.curvatures = *v;
        if (auto v = obj.reals("center")) o.center = *v;
    } else if (kind == "two_well") {
        o.kind = ObjectiveKind::two_well;
        auto& p = o.two_well;
        if (auto v = obj.real("flat_center")) p.flat_center = *v;
        if (auto v = obj.real("sharp_center")) p.sharp_center = *v;
        if (auto v = obj.real("flat_curvature")) p.flat_curvature = *v;
        if (auto v = obj.real("sharp_curvature")) p.sharp_curvature = *v;
        if (auto v = obj.real("depth")) p.depth = *v;
        if (auto v = obj.real("other_curvature")) p.other_curvature = *v;
        if (auto v = obj.real("blend_begin")) p.blend_begin = *v;
        if (auto v = obj.real("blend_end")) p.blend_end = *v;
        if (auto v = obj.count("dim")) o.dim = *v;
    } else if (kind == "mlp") {
        o.kind = ObjectiveKind::mlp;
        auto& d = o.train_data;
        if (auto v = obj.text("dataset")) d.generator = parse_generator(*v);
        if (auto v = obj.count("train_size")) d.size = *v;
        if (auto v = obj.count("test_size")) o.test_size = *v;
        if (auto v = obj.real("noise")) d.noise = *v;
        if (auto v = obj.integer("data_seed")) d.seed = static_cast<std::uint64_t>(*v);
        if (auto v = obj.count("classes")) d.num_classes = *v;
        if (auto v = obj.reals("layers")) {
            o.model.layer_sizes.clear();
            for (double s : *v) {
                if (s < 1.0 || s != static_cast<double>(static_cast<std::size_t>(s))) {
                    throw ConfigError("objective.layers must be positive integers");
                }
                o.model.layer_sizes.push_back(static_cast<std::size_t>(s));
            }
        }
        if (auto v = obj.text("activation")) o.model.activation = parse_activation(*v);
    } else {
        throw ConfigError("unknown objective kind '" + kind + "'");
    }
    if (auto v = obj.real("weight_decay")) o.weight_decay = *v;
    if (o.kind != ObjectiveKind::mlp) {
        if (auto v = obj.reals("init")) o.init = *v;
        const auto low = obj.real("init_low");
        const auto high = obj.real("init_high");
        if (low.has_value() != high.has_value()) {
            throw ConfigError("objective.init_low and init_high must be given together");
        }
        if (low) o.init_box = std::make_pair(*low, *high);
    }
    obj.finish();

    SectionReader opt(doc, "optimizer");
    auto& oc = cfg.optimizer;
    if (auto v = opt.real("rho")) oc.rho = *v;
    if (auto v = opt.real("lr")) oc.lr.lr = *v;
    if (auto v = opt.text("lr_schedule")) oc.lr.kind = parse_lr_kind(*v);
    if (auto v = opt.count("batch_size")) oc.batch_size = *v;
    if (auto v = opt.real("grad_norm_floor")) oc.grad_norm_floor = *v;
    const auto steps = opt.integer("steps");
    const auto epochs = opt.integer("epochs");
    if (steps && epochs) {
        throw ConfigError("give either optimizer.steps or optimizer.epochs, not both");
    }
    if (steps) {
        oc.total_steps = *steps;
    } else if (epochs) {
        if (o.kind != ObjectiveKind::mlp) {
            throw ConfigError("optimizer.epochs needs a dataset objective");
        }
        if (oc.batch_size < 1 || *epochs < 1) {
            throw ConfigError("optimizer.epochs and batch_size must be positive");
        }
        const auto n = static_cast<long long>(o.train_data.size);
        const auto b = static_cast<long long>(oc.batch_size);
        oc.total_steps = *epochs * ((n + b - 1) / b);
    } else {
        throw ConfigError("optimizer.steps or optimizer.epochs is required");
    }
    opt.finish();

    SectionReader sch(doc, "schedule");
    if (auto v = sch.text("spec")) cfg.schedule = *v;
    sch.finish();

    SectionReader shp(doc, "sharpness");
    if (auto v = shp.real("rho")) cfg.sharpness_rho = *v;
    shp.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(ConfigDocument::load(path));
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) {
        throw ConfigError("at least one seed is required");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("seeds must be distinct");
    }
    optimizer.validate();
    try {
        Schedule::parse(schedule).validate(optimizer.total_steps);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    if (sharpness_rho && !(*sharpness_rho > 0.0)) {
        throw ConfigError("sharpness.rho must be positive");
    }
    const auto& o = objective;
    if (!(o.weight_decay >= 0.0)) {
        throw ConfigError("objective.weight_decay must be non-negative");
    }
    switch (o.kind) {
    case ObjectiveKind::quadratic:
        if (o.curvatures.empty()) {
            throw ConfigError("objective.curvatures must be non-empty");
        }
        if (!o.center.empty() && o.center.size() != o.curvatures.size()) {
            throw ConfigError("objective.center must match curvatures in length");
        }
        break;
    case ObjectiveKind::two_well:
        if (o.dim < 1) {
            throw ConfigError("objective.dim must be positive");
        }
        break;
    case ObjectiveKind::mlp:
        o.model.validate();
        if (o.model.input_dim() != 2) {
            throw ConfigError("objective.layers must start with 2 inputs for the 2-D datasets");
        }
        if (o.train_data.size < 1) {
            throw ConfigError("objective.train_size must be positive");
        }
        if (optimizer.batch_size > o.train_data.size) {
            throw ConfigError("optimizer.batch_size exceeds objective.train_size");
        }
        break;
    }
    if (o.kind != ObjectiveKind::mlp && !o.init.empty()) {
        const std::size_t dim = o.kind == ObjectiveKind::quadratic ? o.curvatures.size() : o.dim;
        if (o.init.size() != dim) {
            throw ConfigError("objective.init has wrong dimension");
        }
    }
    if (o.init_box && !(o.init_box->first <= o.init_box->second)) {
        throw ConfigError("objective.init_low must not exceed init_high");
    }
}

} // namespace sssam
