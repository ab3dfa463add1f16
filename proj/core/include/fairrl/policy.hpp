#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "fairrl/types.hpp"

namespace fairrl {

/// Scalars indexed by (group, score, decision), 2 x C x 2. Used both for
/// policy logits and for gradients with respect to them.
class LogitTable {
public:
    LogitTable() = default;
    explicit LogitTable(int num_levels, double fill = 0.0)
        : levels_(num_levels), data_(4 * static_cast<std::size_t>(num_levels), fill) {}

    int levels() const noexcept { return levels_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(Group s, int score, Decision d) { return data_[offset(s, score, d)]; }
    double at(Group s, int score, Decision d) const { return data_[offset(s, score, d)]; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    LogitTable& operator+=(const LogitTable& rhs);
    LogitTable& operator-=(const LogitTable& rhs);
    LogitTable& operator*=(double k);
    /// this += k * rhs
    LogitTable& add_scaled(const LogitTable& rhs, double k);

    double max_abs() const;
    bool all_finite() const;

    bool operator==(const LogitTable&) const = default;

private:
    std::size_t offset(Group s, int score, Decision d) const {
        return (index(s) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(score - 1)) * 2 + index(d);
    }

    int levels_ = 0;
    std::vector<double> data_;
};

using PolicyParams = LogitTable;
using PolicyGradient = LogitTable;

/// (p(d0), p(d1)).
struct ActionProbs {
    double deny = 0.5;
    double approve = 0.5;

    double operator[](Decision d) const noexcept { return d == Decision::approve ? approve : deny; }
};

/// Softmax over the two logits at (s, x), computed with max-subtraction.
ActionProbs action_probabilities(const PolicyParams& params, int score, Group s);

/// pi0: always deny.
constexpr ActionProbs baseline_probabilities(int /*score*/, Group /*s*/) noexcept { return {1.0, 0.0}; }

/// Gradient of ln pi(d | x, s) with respect to all logits. Nonzero only on
/// the (s, x) slice, where it equals onehot(d) - softmax.
PolicyGradient log_prob_gradient(const PolicyParams& params, int score, Group s, Decision d);

Decision sample_action(Rng& rng, const PolicyParams& params, int score, Group s);

/// Logits that make the policy (numerically) deterministic in every state.
PolicyParams constant_policy(int num_levels, Decision preferred, double margin = 40.0);

/// Logits drawn uniformly from [-scale, scale].
PolicyParams random_policy(Rng& rng, int num_levels, double scale);

// Policy roles used by the decomposition. Only the behavior policy is ever
// deployed; the other two are analysis devices.
struct BehaviorPolicy {
    PolicyParams params;
};
struct BaselinePolicy {};
/// Transitions follow `params`, per-step gain is attributed as under pi0.
struct VirtualPolicy {
    PolicyParams params;
};
using PolicyKind = std::variant<BehaviorPolicy, BaselinePolicy, VirtualPolicy>;

/// Plain-text checkpoint: one row per (group, score) holding the deny and
/// approve logits. Lines starting with '#' are comments.
void write_policy(std::ostream& os, const PolicyParams& params);
PolicyParams read_policy(std::istream& is);
void save_policy(const std::string& path, const PolicyParams& params);
PolicyParams load_policy(const std::string& path);

}  // namespace fairrl
