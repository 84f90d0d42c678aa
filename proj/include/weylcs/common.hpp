#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace weylcs {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr double kPi = std::numbers::pi;

/// Invalid input or configuration (CLI exit code 1).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical guarantee could not be established (CLI exit code 2).
class CertificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OperatorKind { euclidean, hyperbolic };

inline std::string_view to_string(OperatorKind kind) {
    return kind == OperatorKind::euclidean ? "euclidean" : "hyperbolic";
}

inline OperatorKind parse_operator_kind(std::string_view s) {
    if (s == "euclidean") return OperatorKind::euclidean;
    if (s == "hyperbolic") return OperatorKind::hyperbolic;
    throw ConfigError("unknown operator kind '" + std::string(s) + "'");
}

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled by exactly one worker, so per-index outputs are deterministic.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace weylcs
