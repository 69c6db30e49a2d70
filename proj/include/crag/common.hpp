#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crag {

// Thrown for malformed scenarios, experiment configs, or out-of-range
// hyperparameters. Message names the offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when clamped evidence has zero probability under the model
// (variational free energy would be +inf).
class ModelMisfitError : public std::runtime_error {
public:
    explicit ModelMisfitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an exact-enumeration request exceeds the tractable bound.
class SizeError : public std::runtime_error {
public:
    explicit SizeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Wraps a failure inside one stage of the agent cycle; `stage()` names it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& msg)
        : std::runtime_error(stage + ": " + msg), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// All randomness flows from a master seed through `derive_seed`, so adding a
// consumer never perturbs the streams of existing ones. The generator is
// splitmix64; doubles come from the top 53 bits. No std::* distribution is
// used anywhere (their output is implementation-defined).
// ---------------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {
inline void mix_token(std::uint64_t& h, std::string_view tok) {
    h ^= fnv1a64(tok);
    splitmix64(h);
}
inline void mix_token(std::uint64_t& h, std::uint64_t tok) {
    h ^= tok * 0x9e3779b97f4a7c15ULL;
    splitmix64(h);
}
inline void mix_token(std::uint64_t& h, int tok) { mix_token(h, static_cast<std::uint64_t>(tok)); }
}  // namespace detail

// derive_seed(master, "sim", round, node_id) etc. Order-sensitive chain of
// fnv1a/splitmix mixes; documented in the README.
template <typename... Tokens>
std::uint64_t derive_seed(std::uint64_t master, Tokens&&... tokens) {
    std::uint64_t h = master;
    (detail::mix_token(h, std::forward<Tokens>(tokens)), ...);
    std::uint64_t s = h;
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Sample an index from an (unnormalized) nonnegative weight vector.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Formatting helpers. Artifacts must be byte-stable across identical runs, so
// every double that reaches a file goes through fmt_double.
// ---------------------------------------------------------------------------

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt_fixed(double x, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, x);
    return buf;
}

template <typename Range>
std::string join(const Range& parts, std::string_view sep) {
    std::string out;
    bool first = true;
    for (const auto& p : parts) {
        if (!first) out += sep;
        out += p;
        first = false;
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double logsumexp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

}  // namespace crag
