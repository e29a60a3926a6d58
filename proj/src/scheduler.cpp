#include "sssam/scheduler.hpp"

#include "sssam/errors.hpp"
#include "sssam/format.hpp"
#include "sssam/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace sssam {

namespace {

constexpr double kLineTolerance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_unit(double v, std::string_view name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string(name) + " = " + format_double(v) + " outside [0, 1]");
    }
}

void require_steps(std::int64_t total_steps) {
    if (total_steps < 1) {
        throw DomainError("total steps must be at least 1");
    }
}

// Last step index of the first piecewise stage.
std::int64_t first_stage_end(double b_p, std::int64_t total_steps) {
    // The epsilon keeps products like 0.3 * 10000 = 2999.9999999999995 on the intended step.
    return static_cast<std::int64_t>(std::floor(b_p * static_cast<double>(total_steps) + 1e-9));
}

double cot(double x) {
    return std::cos(x) / std::sin(x);
}

} // namespace

Schedule Schedule::constant(double a_c) {
    require_unit(a_c, "a_c");
    return Schedule(Constant{a_c});
}

Schedule Schedule::piecewise(double a_p, double b_p) {
    require_unit(a_p, "a_p");
    require_unit(b_p, "b_p");
    return Schedule(Piecewise{a_p, b_p});
}

Schedule Schedule::linear(double slope, double intercept) {
    if (!std::isfinite(slope) || !std::isfinite(intercept)) {
        throw DomainError("linear schedule coefficients must be finite");
    }
    return Schedule(Linear{std::nullopt, slope, intercept});
}

Schedule Schedule::linear_mid(double mid) {
    require_unit(mid, "mid");
    return Schedule(Linear{mid, 0.0, std::nullopt});
}

Schedule Schedule::linear_mid(double mid, double intercept) {
    require_unit(mid, "mid");
    require_unit(intercept, "b_l");
    return Schedule(Linear{mid, 0.0, intercept});
}

Schedule Schedule::trig(TrigVariant variant) {
    return Schedule(Trig{variant});
}

Schedule::Family Schedule::family() const noexcept {
    return static_cast<Family>(form_.index());
}

std::optional<Schedule::TrigVariant> Schedule::trig_variant() const noexcept {
    if (const auto* t = std::get_if<Trig>(&form_)) {
        return t->variant;
    }
    return std::nullopt;
}

std::string_view to_string(Schedule::Family f) {
    switch (f) {
    case Schedule::Family::constant: return "constant";
    case Schedule::Family::piecewise: return "piecewise";
    case Schedule::Family::linear: return "linear";
    case Schedule::Family::trig: return "trig";
    }
    return "unknown";
}

std::string_view to_string(Schedule::TrigVariant v) {
    switch (v) {
    case Schedule::TrigVariant::cos1: return "cos1";
    case Schedule::TrigVariant::cos2: return "cos2";
    case Schedule::TrigVariant::sin1: return "sin1";
    case Schedule::TrigVariant::sin2: return "sin2";
    }
    return "unknown";
}

std::string Schedule::canonical() const {
    return std::visit(
        overloaded{
            [](const Constant& c) { return "constant(a_c=" + format_double(c.a_c) + ")"; },
            [](const Piecewise& p) {
                return "piecewise(a_p=" + format_double(p.a_p) + ",b_p=" + format_double(p.b_p) +
                       ")";
            },
            [](const Linear& l) {
                if (!l.mid) {
                    return "linear(a_l=" + format_double(l.slope) +
                           ",b_l=" + format_double(*l.intercept) + ")";
                }
                std::string s = "linear(mid=" + format_double(*l.mid);
                if (l.intercept) {
                    s += ",b_l=" + format_double(*l.intercept);
                }
                return s + ")";
            },
            [](const Trig& t) { return "trig(" + std::string(to_string(t.variant)) + ")"; },
        },
        form_);
}

Schedule Schedule::parse(std::string_view text) {
    const std::string_view t = trim(text);
    const auto open = t.find('(');
    if (open == std::string_view::npos || t.back() != ')') {
        throw ConfigError("schedule '" + std::string(text) + "': expected family(args)");
    }
    const std::string family(trim(t.substr(0, open)));
    const std::string_view body = t.substr(open + 1, t.size() - open - 2);

    if (family == "trig") {
        const std::string_view v = trim(body);
        if (v == "cos1") return trig(TrigVariant::cos1);
        if (v == "cos2") return trig(TrigVariant::cos2);
        if (v == "sin1") return trig(TrigVariant::sin1);
        if (v == "sin2") return trig(TrigVariant::sin2);
        throw ConfigError("schedule '" + std::string(text) + "': unknown trig variant");
    }

    std::map<std::string, double> args;
    for (const auto& item : split(body, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("schedule '" + std::string(text) + "': expected key=value");
        }
        const std::string key(trim(std::string_view(item).substr(0, eq)));
        if (!args.emplace(key, parse_double(std::string_view(item).substr(eq + 1), key)).second) {
            throw ConfigError("schedule '" + std::string(text) + "': duplicate key " + key);
        }
    }
    auto take = [&](const std::string& key) -> std::optional<double> {
        const auto it = args.find(key);
        if (it == args.end()) {
            return std::nullopt;
        }
        const double v = it->second;
        args.erase(it);
        return v;
    };
    auto need = [&](const std::string& key) {
        const auto v = take(key);
        if (!v) {
            throw ConfigError("schedule '" + std::string(text) + "': missing " + key);
        }
        return *v;
    };

    std::optional<Schedule> out;
    if (family == "constant") {
        out = constant(need("a_c"));
    } else if (family == "piecewise") {
        const double a = need("a_p");
        out = piecewise(a, need("b_p"));
    } else if (family == "linear") {
        if (const auto mid = take("mid")) {
            const auto b = take("b_l");
            out = b ? linear_mid(*mid, *b) : linear_mid(*mid);
        } else {
            const double a = need("a_l");
            out = linear(a, need("b_l"));
        }
    } else {
        throw ConfigError("schedule '" + std::string(text) + "': unknown family '" + family + "'");
    }
    if (!args.empty()) {
        throw ConfigError("schedule '" + std::string(text) + "': unexpected key " +
                          args.begin()->first);
    }
    return *out;
}

Schedule::Line Schedule::resolve_line(std::int64_t total_steps) const {
    require_steps(total_steps);
    const auto* l = std::get_if<Linear>(&form_);
    if (!l) {
        throw DomainError("resolve_line: schedule is not linear");
    }
    if (!l->mid) {
        return {l->slope, *l->intercept};
    }
    const double half = 0.5 * static_cast<double>(total_steps);
    const double m = *l->mid;
    if (l->intercept) {
        return {(m - *l->intercept) / half, *l->intercept};
    }
    if (m <= 0.5) {
        return {m / half, 0.0}; // through (0, 0)
    }
    return {(1.0 - m) / half, 2.0 * m - 1.0}; // through (T, 1)
}

void Schedule::validate(std::int64_t total_steps) const {
    require_steps(total_steps);
    if (family() != Family::linear) {
        return; // other families are range-checked at construction
    }
    const Line line = resolve_line(total_steps);
    const double start = line.intercept;
    const double end = line.slope * static_cast<double>(total_steps - 1) + line.intercept;
    for (double v : {start, end}) {
        if (v < -kLineTolerance || v > 1.0 + kLineTolerance) {
            throw DomainError("schedule " + canonical() + " leaves [0, 1] on [0, " +
                              std::to_string(total_steps) + ")");
        }
    }
}

double eval_schedule(const Schedule& s, std::int64_t t, std::int64_t total_steps) {
    require_steps(total_steps);
    if (t < 0 || t >= total_steps) {
        throw DomainError("eval_schedule: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(total_steps) + ")");
    }
    const double ratio = static_cast<double>(t) / static_cast<double>(total_steps);
    const double pi = std::numbers::pi;
    const double p = std::visit(
        overloaded{
            [](const Schedule::Constant& c) { return c.a_c; },
            [&](const Schedule::Piecewise& pw) {
                return t <= first_stage_end(pw.b_p, total_steps) ? pw.a_p : 1.0 - pw.a_p;
            },
            [&](const Schedule::Linear&) {
                const auto line = s.resolve_line(total_steps);
                return line.slope * static_cast<double>(t) + line.intercept;
            },
            [&](const Schedule::Trig& tr) {
                switch (tr.variant) {
                case Schedule::TrigVariant::cos1: return 0.5 + 0.5 * std::cos(ratio * pi);
                case Schedule::TrigVariant::cos2: return 0.5 - 0.5 * std::cos(ratio * pi);
                case Schedule::TrigVariant::sin1: return std::sin(ratio * pi);
                case Schedule::TrigVariant::sin2: return 1.0 - std::sin(ratio * pi);
                }
                return 0.0;
            },
        },
        s.form_);
    return std::clamp(p, 0.0, 1.0);
}

double eta_of_step(const Schedule& s, std::int64_t t, std::int64_t total_steps) {
    return 1.0 + eval_schedule(s, t, total_steps);
}

double expected_eta_exact(const Schedule& s, std::int64_t total_steps) {
    s.validate(total_steps);
    CompensatedSum sum;
    for (std::int64_t t = 0; t < total_steps; ++t) {
        sum.add(eval_schedule(s, t, total_steps));
    }
    return 1.0 + sum.value() / static_cast<double>(total_steps);
}

double expected_eta_closed_form(const Schedule& s, std::int64_t total_steps) {
    require_steps(total_steps);
    const double T = static_cast<double>(total_steps);
    const double half_angle = std::numbers::pi / (2.0 * T);
    return std::visit(
        overloaded{
            [](const Schedule::Constant& c) { return 1.0 + c.a_c; },
            [](const Schedule::Piecewise& p) {
                return 2.0 + 2.0 * p.a_p * p.b_p - p.b_p - p.a_p;
            },
            [&](const Schedule::Linear&) {
                const auto line = s.resolve_line(total_steps);
                return 1.0 + line.slope * 0.5 * T + line.intercept;
            },
            [&](const Schedule::Trig& tr) {
                switch (tr.variant) {
                case Schedule::TrigVariant::cos1:
                case Schedule::TrigVariant::cos2: return 1.5;
                // sum_{t=0}^{T-1} sin(t pi / T) = cot(pi / 2T)
                case Schedule::TrigVariant::sin1: return 1.0 + cot(half_angle) / T;
                case Schedule::TrigVariant::sin2: return 2.0 - cot(half_angle) / T;
                }
                return 0.0;
            },
        },
        s.form_);
}

EtaReport eta_report(const Schedule& s, std::int64_t total_steps) {
    return {s.family(), total_steps, expected_eta_exact(s, total_steps),
            expected_eta_closed_form(s, total_steps)};
}

double closed_form_gap_bound(const Schedule& s, std::int64_t total_steps) {
    require_steps(total_steps);
    const double T = static_cast<double>(total_steps);
    switch (s.family()) {
    case Schedule::Family::constant: return 1e-12;
    case Schedule::Family::piecewise: return 2.0 / T;
    case Schedule::Family::linear: return 1.0 / T;
    case Schedule::Family::trig: break;
    }
    const auto variant = s.trig_variant();
    if (variant == Schedule::TrigVariant::cos1 || variant == Schedule::TrigVariant::cos2) {
        return 1.0 / T;
    }
    return 1e-10;
}

} // namespace sssam
