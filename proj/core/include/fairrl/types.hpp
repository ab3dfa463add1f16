#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairrl {

/// Sensitive attribute. `plus` is the advantaged group s+, `minus` is s-.
enum class Group : std::uint8_t { plus = 0, minus = 1 };

/// Binary lending decision: d0 (deny, non-treatment) or d1 (approve).
enum class Decision : std::uint8_t { deny = 0, approve = 1 };

inline constexpr std::array<Group, 2> kGroups{Group::plus, Group::minus};
inline constexpr std::array<Decision, 2> kDecisions{Decision::deny, Decision::approve};

constexpr std::size_t index(Group g) noexcept { return static_cast<std::size_t>(g); }
constexpr std::size_t index(Decision d) noexcept { return static_cast<std::size_t>(d); }
constexpr Group other(Group g) noexcept { return g == Group::plus ? Group::minus : Group::plus; }

std::string_view to_string(Group g) noexcept;
std::string_view to_string(Decision d) noexcept;
Group parse_group(std::string_view name);

/// A value carried once per sensitive group.
template <class T>
struct PerGroup {
    T plus{};
    T minus{};

    T& operator[](Group g) noexcept { return g == Group::plus ? plus : minus; }
    const T& operator[](Group g) const noexcept { return g == Group::plus ? plus : minus; }

    bool operator==(const PerGroup&) const = default;
};

using ProbVector = std::vector<double>;

// Error hierarchy. Everything derives from std::runtime_error or
// std::domain_error so callers can catch broadly.

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OptimizationError : public std::runtime_error {
public:
    explicit OptimizationError(std::string term, const std::string& what)
        : std::runtime_error(what), term_(std::move(term)) {}
    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seeded random stream. Each worker owns one; nothing here is shared.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }

    /// Draws an index from a probability vector by inverse CDF.
    std::size_t categorical(std::span<const double> probs);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fairrl
