#include "sssam/numeric.hpp"

#include "sssam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sssam {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void require_finite(const ParamVector& v, std::string_view context) {
    if (!v.all_finite()) {
        throw EvaluationError(std::string(context) + ": non-finite result");
    }
}

} // namespace

ParamVector ParamVector::basis(std::size_t n, std::size_t i) {
    if (i >= n) {
        throw DomainError("ParamVector::basis: index " + std::to_string(i) + " out of range " +
                          std::to_string(n));
    }
    ParamVector e(n);
    e[i] = 1.0;
    return e;
}

bool ParamVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_length(const ParamVector& x, const ParamVector& y, std::string_view context) {
    if (x.size() != y.size()) {
        throw DimensionError(std::string(context) + ": length mismatch (" + std::to_string(x.size()) +
                             " vs " + std::to_string(y.size()) + ")");
    }
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
    require_same_length(x, y, "axpy");
    if (!std::isfinite(a)) {
        throw DomainError("axpy: non-finite scale");
    }
    ParamVector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = a * x[i] + y[i];
    }
    require_finite(out, "axpy");
    return out;
}

ParamVector scaled(double a, const ParamVector& x) {
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = a * x[i];
    }
    require_finite(out, "scaled");
    return out;
}

ParamVector add(const ParamVector& x, const ParamVector& y) {
    require_same_length(x, y, "add");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + y[i];
    }
    require_finite(out, "add");
    return out;
}

ParamVector subtract(const ParamVector& x, const ParamVector& y) {
    require_same_length(x, y, "subtract");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] - y[i];
    }
    require_finite(out, "subtract");
    return out;
}

double dot(const ParamVector& x, const ParamVector& y) {
    require_same_length(x, y, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

double l2_norm(const ParamVector& x) {
    // Scaled accumulation so huge or tiny entries do not overflow/underflow the squares.
    double scale = 0.0;
    for (double v : x) {
        scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : x) {
        const double r = v / scale;
        acc += r * r;
    }
    return scale * std::sqrt(acc);
}

std::string_view to_string(StreamId id) {
    switch (id) {
    case StreamId::trial: return "trial";
    case StreamId::batch: return "batch";
    case StreamId::init: return "init";
    case StreamId::landscape: return "landscape";
    }
    return "unknown";
}

RngStream::RngStream(std::uint64_t seed, StreamId stream)
    : seed_(seed), stream_(stream),
      key_(mix64(mix64(seed + kGolden) ^ mix64(static_cast<std::uint64_t>(stream) * kGolden))) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double low, double high) {
    return low + (high - low) * uniform();
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0) {
        throw DomainError("RngStream::below: empty range");
    }
    // Lemire's multiply-shift; bias is at most n / 2^64.
    const unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(product >> 64);
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int bernoulli(RngStream& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("bernoulli: probability " + std::to_string(p) + " outside [0, 1]");
    }
    return rng.uniform() < p ? 1 : 0;
}

void shuffle(std::span<std::size_t> items, RngStream& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

ParamVector central_diff_grad(const ScalarFunction& f, const ParamVector& x, double h) {
    if (!(h > 0.0)) {
        throw DomainError("central_diff_grad: step must be positive");
    }
    ParamVector grad(x.size());
    ParamVector probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double plus = f(probe);
        probe[i] = x[i] - h;
        const double minus = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw EvaluationError("central_diff_grad: non-finite function value at coordinate " +
                                  std::to_string(i));
        }
        grad[i] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(const ParamVector& a, const ParamVector& b, double floor) {
    require_same_length(a, b, "max_relative_error");
    double diff = 0.0;
    double scale = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return diff / scale;
}

void CompensatedSum::add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
        compensation_ += (sum_ - t) + v;
    } else {
        compensation_ += (v - t) + sum_;
    }
    sum_ = t;
}

} // namespace sssam
