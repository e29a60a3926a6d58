#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace sssam {

/// Flat vector of 64-bit parameters. Length is fixed at construction.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
    ParamVector(std::initializer_list<double> values) : values_(values) {}
    explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

    static ParamVector zeros(std::size_t n) { return ParamVector(n, 0.0); }
    /// Unit vector along coordinate `i`.
    static ParamVector basis(std::size_t n, std::size_t i);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& to_vector() const noexcept { return values_; }

    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    bool all_finite() const noexcept;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
};

/// Returns a*x + y. Throws DimensionError on length mismatch, EvaluationError on overflow.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);
ParamVector scaled(double a, const ParamVector& x);
ParamVector add(const ParamVector& x, const ParamVector& y);
ParamVector subtract(const ParamVector& x, const ParamVector& y);
double dot(const ParamVector& x, const ParamVector& y);
double l2_norm(const ParamVector& x);

void require_same_length(const ParamVector& x, const ParamVector& y, std::string_view context);

/// Named streams derived from one seed. Each label owns its own draw sequence.
enum class StreamId : std::uint64_t {
    trial = 1,
    batch = 2,
    init = 3,
    landscape = 4,
};

std::string_view to_string(StreamId id);

/// Counter-based generator: the k-th draw is a pure function of (seed, stream, k),
/// so output is identical on every platform and streams never share state.
class RngStream {
public:
    RngStream(std::uint64_t seed, StreamId stream);

    std::uint64_t seed() const noexcept { return seed_; }
    StreamId stream_id() const noexcept { return stream_; }
    /// Number of 64-bit draws consumed so far.
    std::uint64_t position() const noexcept { return counter_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double low, double high);
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller; consumes two draws.
    double normal();

private:
    std::uint64_t seed_;
    StreamId stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// One Bernoulli trial. Always consumes exactly one uniform draw, including p = 0 and p = 1.
int bernoulli(RngStream& rng, double p);

/// In-place Fisher-Yates shuffle driven by `rng`.
void shuffle(std::span<std::size_t> items, RngStream& rng);

using ScalarFunction = std::function<double(const ParamVector&)>;

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Throws EvaluationError if f is non-finite at any probe.
ParamVector central_diff_grad(const ScalarFunction& f, const ParamVector& x, double h);

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor). Used by gradient checks.
double max_relative_error(const ParamVector& a, const ParamVector& b, double floor = 1e-12);

/// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double v) noexcept;
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

} // namespace sssam
