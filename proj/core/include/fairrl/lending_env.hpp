#pragma once

#include <array>
#include <vector>

#include "fairrl/types.hpp"

namespace fairrl {

/// Credit-score drift outcomes, in the order used by `EnvConfig::drift_dist`.
inline constexpr std::array<int, 3> kDriftValues{-1, 0, +1};

/// Parameterization of one lending environment.
///
/// Scores are integers 1..num_levels. Probability tables are indexed by
/// score - 1. `gain_potential` is optional: when empty for a group, the
/// normalized cubic gain is used; otherwise g^s(x, x') = phi_s(x') - phi_s(x),
/// which keeps the gain additive for any potential.
struct EnvConfig {
    int num_levels = 7;
    double group_prior = 0.5;  ///< P(s = s+)
    PerGroup<ProbVector> init_score_dist;
    PerGroup<ProbVector> repay_prob;
    PerGroup<std::array<double, 3>> drift_dist{{0.1, 0.8, 0.1}, {0.1, 0.8, 0.1}};
    PerGroup<std::vector<double>> gain_potential;
    double reward_success = 1.0;
    double reward_default = 2.0;
    int horizon = 20;

    /// Throws ConfigError naming the first violated invariant.
    /// `min_levels` is 2 for user-facing configs; analysis code accepts the
    /// degenerate single-level chain.
    void validate(int min_levels = 2) const;

    bool operator==(const EnvConfig&) const = default;
};

/// One applicant. `drift` and `repays` are hidden from the policy.
struct Individual {
    Group group = Group::plus;
    int score = 1;
    int drift = 0;
    bool repays = false;
};

/// Qualification gain g^s(x, x'). Default potential is x^3 scaled so that the
/// largest single-level step has magnitude 1.
double qualification_gain(int from, int to, const EnvConfig& config, Group group = Group::plus);

/// Precomputed gain matrix for both groups, [group][from-1][to-1].
class GainTable {
public:
    explicit GainTable(const EnvConfig& config);

    double operator()(Group g, int from, int to) const {
        return data_[index(g)][static_cast<std::size_t>((from - 1) * levels_ + (to - 1))];
    }
    int levels() const noexcept { return levels_; }

private:
    int levels_;
    std::array<std::vector<double>, 2> data_;
};

/// Score potential phi_s(x) for x = 1..C (index x-1).
std::vector<double> gain_potential(const EnvConfig& config, Group group);

/// Deterministic next-score rule with clamping into 1..C.
int next_score(int score, int drift, bool repays, Decision d, int num_levels) noexcept;

/// P(x' | x, d, s) as a vector over 1..C (index x'-1).
ProbVector transition_distribution(int score, Decision d, Group s, const EnvConfig& config);

/// Full kernel, rows produced by transition_distribution.
class TransitionKernel {
public:
    explicit TransitionKernel(const EnvConfig& config);

    std::span<const double> row(Group s, Decision d, int score) const {
        return {data_.data() + offset(s, d, score), static_cast<std::size_t>(levels_)};
    }
    double operator()(Group s, Decision d, int from, int to) const {
        return data_[offset(s, d, from) + static_cast<std::size_t>(to - 1)];
    }
    int levels() const noexcept { return levels_; }

private:
    std::size_t offset(Group s, Decision d, int score) const noexcept {
        return ((index(s) * 2 + index(d)) * static_cast<std::size_t>(levels_) +
                static_cast<std::size_t>(score - 1)) *
               static_cast<std::size_t>(levels_);
    }

    int levels_;
    std::vector<double> data_;
};

/// Bank profit: 0 on deny, +reward_success on repaid loan, -reward_default on default.
double reward(int score, Decision d, bool repays, const EnvConfig& config);

/// Expected immediate reward of decision d at (x, s), marginalized over repayment.
double expected_reward(int score, Decision d, Group s, const EnvConfig& config);

/// s ~ P(s), x ~ P(x|s), y ~ P(y|x,s), drift ~ P(drift|s).
Individual sample_individual(Rng& rng, const EnvConfig& config);

/// Individual of a fixed group with score drawn from the group's initial distribution.
Individual sample_individual(Rng& rng, const EnvConfig& config, Group group);

/// Fills in the hidden attributes (drift, repays) for an individual at a known score.
void resample_hidden(Rng& rng, Individual& ind, const EnvConfig& config);

struct StepOutcome {
    Individual next;
    double reward = 0.0;
    double gain = 0.0;
};

/// Advances one decision cycle. Reward uses (x_t, d_t, y_t); gain uses (x_t, x_{t+1}).
StepOutcome sample_step(Rng& rng, const Individual& ind, Decision d, const EnvConfig& config);

}  // namespace fairrl
