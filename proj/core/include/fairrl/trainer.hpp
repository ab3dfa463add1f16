#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairrl/analysis.hpp"
#include "fairrl/lending_env.hpp"
#include "fairrl/policy.hpp"

namespace fairrl {

enum class TrainMode { oracle, sampled };
enum class Algo { ppo, ppo_c, ppo_cb };

std::string_view to_string(TrainMode m) noexcept;
std::string_view to_string(Algo a) noexcept;
TrainMode parse_mode(std::string_view s);
Algo parse_algo(std::string_view s);

struct TrainConfig {
    double beta_kl = 10.0;
    double beta_c = 1.0;
    double beta_lambda = 0.0;
    double learning_rate = 0.05;
    int iterations = 300;
    int episodes_per_iter = 200;
    int minibatch_size = 256;
    int epochs_per_batch = 4;
    TrainMode mode = TrainMode::oracle;
    Algo algo = Algo::ppo_c;
    double epsilon = kDefaultEpsilon;  ///< Lambda similarity radius
    bool adjusted_parity = false;      ///< train against the baseline-adjusted constraint
    double init_logit_scale = 0.5;     ///< initial logits ~ U(-scale, scale)

    void validate() const;

    /// beta_c is ignored by plain PPO; beta_lambda only applies to PPO-Cb.
    double effective_beta_c() const noexcept { return algo == Algo::ppo ? 0.0 : beta_c; }
    double effective_beta_lambda() const noexcept { return algo == Algo::ppo_cb ? beta_lambda : 0.0; }

    bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
    Group group = Group::plus;
    int score = 1;
    Decision decision = Decision::deny;
    double reward = 0.0;
    double gain = 0.0;
    double old_prob = 1.0;  ///< pi_old(decision | score, group)
    int episode = 0;
    int t = 1;  ///< 1-based timestep
    double reward_to_go = 0.0;
    double gain_to_go = 0.0;
};

struct RolloutBatch {
    int horizon = 0;
    int episodes = 0;
    std::vector<StepRecord> records;

    std::size_t count(Group g) const;
};

RolloutBatch collect_rollouts(Rng& rng, const PolicyParams& params, const EnvConfig& config, int n_episodes);

/// Reward-based value tables (r in place of g, same backward induction).
ValueTables reward_values(const PolicyParams& params, Group s, const EnvConfig& config);

/// Expected episode reward under the population prior.
double expected_utility(const PolicyParams& params, const EnvConfig& config);

/// Oracle: exact Q_r - V_r at each record's (t, x, s, d). Sampled: reward
/// return-to-go minus the batch mean return-to-go at the same (t, x, s).
std::vector<double> estimate_advantages(const RolloutBatch& batch, const PolicyParams& params,
                                        const EnvConfig& config, TrainMode mode);

/// Importance-weighted estimate of C_pi from a batch collected under
/// `old_params`. Each group's term is the record mean of
/// T * (ratio - [t > 1]) * gain_to_go, which at unit ratios is the mean
/// episode gain and whose gradient is the score-function gradient of the
/// expected episode gain.
double constraint_estimate(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& old_params);

/// Same estimate with its gradient with respect to `params`.
std::pair<double, PolicyGradient> constraint_estimate_with_gradient(const RolloutBatch& batch,
                                                                    const PolicyParams& params,
                                                                    const PolicyParams& old_params);

/// Exact gradient of (C_pi + offset)^2 from the DP tables: 2(C + offset)
/// times the difference of occupancy-weighted score-function terms.
PolicyGradient constraint_gradient_oracle(const PolicyParams& params, const EnvConfig& config, double offset = 0.0);

/// Subgradient of Lambda with the state distributions held fixed.
PolicyGradient benefit_fairness_gradient(const PolicyParams& params, const PerGroup<ProbVector>& state_dists,
                                         const EnvConfig& config, double epsilon);

/// Mean KL[pi_old(.|x,s) || pi(.|x,s)] over the batch records.
double mean_kl(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& old_params);

/// Per-group empirical state frequencies from a batch.
PerGroup<ProbVector> empirical_state_dists(const RolloutBatch& batch, int num_levels);

struct SurrogateTerms {
    double util = 0.0;        ///< L^UTIL
    double kl = 0.0;          ///< L^KL
    double constraint = 0.0;  ///< C used in the penalty (exact or estimated)
    double lambda = 0.0;      ///< Lambda
    double objective = 0.0;   ///< J
};

struct UpdateDiagnostics {
    SurrogateTerms before;
    SurrogateTerms after;
    std::vector<double> util_per_epoch;  ///< full-batch L^UTIL after each epoch
    int steps = 0;
};

/// epochs_per_batch passes of minibatch gradient ascent on
/// J = L^UTIL - beta_kl L^KL - beta_c C^2 - beta_lambda Lambda.
/// `params` must be the policy the batch was collected with.
std::pair<PolicyParams, UpdateDiagnostics> ppo_update(const PolicyParams& params, const RolloutBatch& batch,
                                                      const TrainConfig& train_cfg, const EnvConfig& config,
                                                      Rng& rng);

/// Full-batch surrogate terms at `params` for a batch collected under `old_params`.
SurrogateTerms evaluate_surrogate(const PolicyParams& params, const PolicyParams& old_params,
                                  const RolloutBatch& batch, std::span<const double> advantages,
                                  const TrainConfig& train_cfg, const EnvConfig& config);

struct IterationRecord {
    int iteration = 0;  ///< 1-based
    double utility = 0.0;
    DecompositionReport report;
    double adjusted_c_pi = 0.0;
    UpdateDiagnostics diagnostics;
};

struct TrainHistory {
    double initial_utility = 0.0;
    DecompositionReport initial;
    std::vector<IterationRecord> iterations;
    PolicyParams final_params;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// collect -> estimate -> update, `iterations` times. Diagnostics are exact
/// DP quantities for the post-update policy regardless of training mode.
TrainHistory train(const EnvConfig& env_cfg, const TrainConfig& train_cfg, Rng& rng,
                   const IterationCallback& on_iteration = {});

}  // namespace fairrl
