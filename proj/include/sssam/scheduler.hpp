#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace sssam {

/// Scheduling function p(t): probability of taking a SAM step at update step t of T.
///
/// Families:
///   constant(a_c=A)                 p = A
///   piecewise(a_p=A,b_p=B)          p = A for t <= floor(B*T), 1 - A afterwards
///   linear(a_l=S,b_l=C)             p = S*t + C
///   linear(mid=M)                   through (T/2, M) and (0, 0) if M <= 0.5, else (T, 1)
///   linear(mid=M,b_l=C)             through (0, C) and (T/2, M)
///   trig(cos1|cos2|sin1|sin2)       1/2 +- cos(t pi / T) / 2, sin(t pi / T), 1 - sin(t pi / T)
class Schedule {
public:
    enum class Family { constant, piecewise, linear, trig };
    enum class TrigVariant { cos1, cos2, sin1, sin2 };

    static Schedule constant(double a_c);
    static Schedule piecewise(double a_p, double b_p);
    static Schedule linear(double slope, double intercept);
    static Schedule linear_mid(double mid);
    static Schedule linear_mid(double mid, double intercept);
    static Schedule trig(TrigVariant variant);

    /// Parses the canonical string form; throws ConfigError on malformed input.
    static Schedule parse(std::string_view text);

    Family family() const noexcept;
    /// Variant of a trig schedule; empty for other families.
    std::optional<TrigVariant> trig_variant() const noexcept;
    /// Canonical string, e.g. "constant(a_c=0.6)"; parse(canonical()) == *this.
    std::string canonical() const;

    /// Throws DomainError unless p(t) lies in [0, 1] over all of [0, T).
    void validate(std::int64_t total_steps) const;

    /// Slope and intercept of a linear family at horizon T.
    struct Line {
        double slope;
        double intercept;
    };
    Line resolve_line(std::int64_t total_steps) const;

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    struct Constant {
        double a_c;
        friend bool operator==(const Constant&, const Constant&) = default;
    };
    struct Piecewise {
        double a_p;
        double b_p;
        friend bool operator==(const Piecewise&, const Piecewise&) = default;
    };
    struct Linear {
        // Direct form when `mid` is empty, otherwise a two-point form resolved against T.
        std::optional<double> mid;
        double slope = 0.0;
        std::optional<double> intercept;
        friend bool operator==(const Linear&, const Linear&) = default;
    };
    struct Trig {
        TrigVariant variant;
        friend bool operator==(const Trig&, const Trig&) = default;
    };
    using Form = std::variant<Constant, Piecewise, Linear, Trig>;

    explicit Schedule(Form form) : form_(form) {}

    Form form_;

    friend double eval_schedule(const Schedule& s, std::int64_t t, std::int64_t total_steps);
    friend double expected_eta_closed_form(const Schedule& s, std::int64_t total_steps);
};

std::string_view to_string(Schedule::Family f);
std::string_view to_string(Schedule::TrigVariant v);

/// p(t); throws DomainError unless 0 <= t < T. The result is clamped to [0, 1] only against
/// floating-point round-off of validated schedules.
double eval_schedule(const Schedule& s, std::int64_t t, std::int64_t total_steps);

/// Expected propagation count of one step: 1 + p(t).
double eta_of_step(const Schedule& s, std::int64_t t, std::int64_t total_steps);

/// 1 + (1/T) * sum_{t=0}^{T-1} p(t), by direct compensated summation.
double expected_eta_exact(const Schedule& s, std::int64_t total_steps);

/// Closed-form expected average propagation count of each family:
///   constant 1 + a_c;  piecewise 2 + 2 a_p b_p - b_p - a_p;  linear 1 + p(T/2);
///   cos1/cos2 1.5;  sin1 1 + cot(pi/2T)/T;  sin2 2 - cot(pi/2T)/T.
double expected_eta_closed_form(const Schedule& s, std::int64_t total_steps);

struct EtaReport {
    Schedule::Family family;
    std::int64_t total_steps;
    double exact;
    double closed_form;
};

EtaReport eta_report(const Schedule& s, std::int64_t total_steps);

/// Documented bound on |exact - closed_form| for the family at horizon T.
double closed_form_gap_bound(const Schedule& s, std::int64_t total_steps);

} // namespace sssam
