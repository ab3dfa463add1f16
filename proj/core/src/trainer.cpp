#include "fairrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "fairrl/counterfactual.hpp"

namespace fairrl {

std::string_view to_string(TrainMode m) noexcept { return m == TrainMode::oracle ? "oracle" : "sampled"; }

std::string_view to_string(Algo a) noexcept {
    switch (a) {
        case Algo::ppo: return "ppo";
        case Algo::ppo_c: return "ppo-c";
        case Algo::ppo_cb: return "ppo-cb";
    }
    return "ppo";
}

TrainMode parse_mode(std::string_view s) {
    if (s == "oracle") return TrainMode::oracle;
    if (s == "sampled") return TrainMode::sampled;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected oracle or sampled)");
}

Algo parse_algo(std::string_view s) {
    if (s == "ppo") return Algo::ppo;
    if (s == "ppo-c") return Algo::ppo_c;
    if (s == "ppo-cb") return Algo::ppo_cb;
    throw ConfigError("unknown algo '" + std::string(s) + "' (expected ppo, ppo-c or ppo-cb)");
}

void TrainConfig::validate() const {
    const auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be a finite nonnegative number");
    };
    nonneg(beta_kl, "beta_kl");
    nonneg(beta_c, "beta_c");
    nonneg(beta_lambda, "beta_lambda");
    nonneg(learning_rate, "learning_rate");
    nonneg(init_logit_scale, "init_logit_scale");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (episodes_per_iter < 1) throw ConfigError("episodes_per_iter must be >= 1");
    if (minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
    if (epochs_per_batch < 0) throw ConfigError("epochs_per_batch must be >= 0");
}

std::size_t RolloutBatch::count(Group g) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [g](const StepRecord& r) { return r.group == g; }));
}

RolloutBatch collect_rollouts(Rng& rng, const PolicyParams& params, const EnvConfig& config, int n_episodes) {
    if (n_episodes < 1) throw DomainError("n_episodes must be >= 1");
    RolloutBatch batch;
    batch.horizon = config.horizon;
    batch.episodes = n_episodes;
    batch.records.reserve(static_cast<std::size_t>(n_episodes * config.horizon));
    for (int e = 0; e < n_episodes; ++e) {
        Individual ind = sample_individual(rng, config);
        const std::size_t first = batch.records.size();
        for (int t = 1; t <= config.horizon; ++t) {
            const ActionProbs p = action_probabilities(params, ind.score, ind.group);
            const Decision d = rng.bernoulli(p.approve) ? Decision::approve : Decision::deny;
            const StepOutcome step = sample_step(rng, ind, d, config);
            StepRecord rec;
            rec.group = ind.group;
            rec.score = ind.score;
            rec.decision = d;
            rec.reward = step.reward;
            rec.gain = step.gain;
            rec.old_prob = p[d];
            rec.episode = e;
            rec.t = t;
            batch.records.push_back(rec);
            ind = step.next;
        }
        double r_acc = 0.0, g_acc = 0.0;
        for (std::size_t i = batch.records.size(); i-- > first;) {
            r_acc += batch.records[i].reward;
            g_acc += batch.records[i].gain;
            batch.records[i].reward_to_go = r_acc;
            batch.records[i].gain_to_go = g_acc;
        }
    }
    return batch;
}

ValueTables reward_values(const PolicyParams& params, Group s, const EnvConfig& config) {
    const TransitionKernel kernel(config);
    const int c = config.num_levels;
    ValueTables tables(config.horizon, c);
    for (int t = config.horizon; t >= 1; --t) {
        for (int x = 1; x <= c; ++x) {
            const ActionProbs p = action_probabilities(params, x, s);
            double v = 0.0;
            for (Decision d : kDecisions) {
                double q = expected_reward(x, d, s, config);
                for (int y = 1; y <= c; ++y) q += kernel(s, d, x, y) * tables.v(t + 1, y);
                tables.q(t, x, d) = q;
                v += p[d] * q;
            }
            tables.v(t, x) = v;
        }
    }
    return tables;
}

double expected_utility(const PolicyParams& params, const EnvConfig& config) {
    double u = 0.0;
    for (Group g : kGroups) {
        const double weight = g == Group::plus ? config.group_prior : 1.0 - config.group_prior;
        if (weight == 0.0) continue;
        u += weight * reward_values(params, g, config).expected_initial(config.init_score_dist[g]);
    }
    return u;
}

std::vector<double> estimate_advantages(const RolloutBatch& batch, const PolicyParams& params,
                                        const EnvConfig& config, TrainMode mode) {
    std::vector<double> adv(batch.records.size(), 0.0);
    if (mode == TrainMode::oracle) {
        const PerGroup<ValueTables> tables{reward_values(params, Group::plus, config),
                                           reward_values(params, Group::minus, config)};
        for (std::size_t i = 0; i < adv.size(); ++i) {
            const auto& r = batch.records[i];
            const auto& tab = tables[r.group];
            adv[i] = tab.q(r.t, r.score, r.decision) - tab.v(r.t, r.score);
        }
        return adv;
    }
    // Empirical per-(t, x, s) baseline.
    std::map<std::tuple<int, int, int>, std::pair<double, int>> baseline;
    for (const auto& r : batch.records) {
        auto& cell = baseline[{r.t, r.score, static_cast<int>(index(r.group))}];
        cell.first += r.reward_to_go;
        cell.second += 1;
    }
    for (std::size_t i = 0; i < adv.size(); ++i) {
        const auto& r = batch.records[i];
        const auto& cell = baseline.at({r.t, r.score, static_cast<int>(index(r.group))});
        adv[i] = r.reward_to_go - cell.first / cell.second;
    }
    return adv;
}

std::pair<double, PolicyGradient> constraint_estimate_with_gradient(const RolloutBatch& batch,
                                                                    const PolicyParams& params,
                                                                    const PolicyParams& old_params) {
    PerGroup<std::size_t> counts{batch.count(Group::plus), batch.count(Group::minus)};
    for (Group g : kGroups) {
        if (counts[g] == 0) {
            throw EstimationError("constraint estimate needs records from group " + std::string(to_string(g)) +
                                  ", none in batch");
        }
    }
    PerGroup<double> mean{0.0, 0.0};
    PolicyGradient grad(params.levels());
    const double horizon = batch.horizon;
    for (const auto& r : batch.records) {
        const ActionProbs p = action_probabilities(params, r.score, r.group);
        const ActionProbs p_old = action_probabilities(old_params, r.score, r.group);
        const double ratio = p[r.decision] / p_old[r.decision];
        const double n = static_cast<double>(counts[r.group]);
        const double sign = r.group == Group::plus ? 1.0 : -1.0;
        mean[r.group] += horizon * (ratio - (r.t > 1 ? 1.0 : 0.0)) * r.gain_to_go / n;
        // d ratio / d logit = ratio * (onehot(d) - p)
        const double w = sign * horizon * ratio * r.gain_to_go / n;
        for (Decision d : kDecisions) {
            grad.at(r.group, r.score, d) += w * ((d == r.decision ? 1.0 : 0.0) - p[d]);
        }
    }
    return {mean.plus - mean.minus, std::move(grad)};
}

double constraint_estimate(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& old_params) {
    return constraint_estimate_with_gradient(batch, params, old_params).first;
}

PolicyGradient constraint_gradient_oracle(const PolicyParams& params, const EnvConfig& config, double offset) {
    PolicyGradient grad(params.levels());
    PerGroup<double> expected{0.0, 0.0};
    for (Group g : kGroups) {
        const auto& init = config.init_score_dist[g];
        const auto tables = value_behavior(params, g, config);
        const auto visits = visitation(params, g, config, init);
        expected[g] = tables.expected_initial(init);
        const double sign = g == Group::plus ? 1.0 : -1.0;
        for (int x = 1; x <= config.num_levels; ++x) {
            const ActionProbs p = action_probabilities(params, x, g);
            for (int t = 1; t <= config.horizon; ++t) {
                const double occ = visits.occupancy(t, x);
                if (occ == 0.0) continue;
                const double v = tables.v(t, x);
                // sum_d grad pi(d) Q(d) for softmax: pi(d') (Q(d') - V)
                for (Decision d : kDecisions) {
                    grad.at(g, x, d) += sign * occ * p[d] * (tables.q(t, x, d) - v);
                }
            }
        }
    }
    const double alpha = 2.0 * (expected.plus - expected.minus + offset);
    grad *= alpha;
    return grad;
}

PolicyGradient benefit_fairness_gradient(const PolicyParams& params, const PerGroup<ProbVector>& state_dists,
                                         const EnvConfig& config, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    const int c = config.num_levels;
    const auto delta_plus = benefit_table(Group::plus, config);
    const auto delta_minus = benefit_table(Group::minus, config);
    std::vector<double> d_plus(static_cast<std::size_t>(c), 0.0), d_minus(static_cast<std::size_t>(c), 0.0);
    std::vector<double> a(static_cast<std::size_t>(c)), b(static_cast<std::size_t>(c));
    for (int x = 1; x <= c; ++x) {
        a[static_cast<std::size_t>(x - 1)] = action_probabilities(params, x, Group::plus).approve;
        b[static_cast<std::size_t>(x - 1)] = action_probabilities(params, x, Group::minus).approve;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double w = epsilon / (epsilon + std::abs(delta_plus[i] - delta_minus[j])) * state_dists.plus[i] *
                             state_dists.minus[j];
            const double diff = a[i] - b[j];
            const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            d_plus[i] += w * sgn;
            d_minus[j] -= w * sgn;
        }
    }
    PolicyGradient grad(params.levels());
    for (int x = 1; x <= c; ++x) {
        const auto i = static_cast<std::size_t>(x - 1);
        // d p1 / d l1 = p1 (1 - p1) = -d p1 / d l0
        const double sa = a[i] * (1.0 - a[i]);
        const double sb = b[i] * (1.0 - b[i]);
        grad.at(Group::plus, x, Decision::approve) = d_plus[i] * sa;
        grad.at(Group::plus, x, Decision::deny) = -d_plus[i] * sa;
        grad.at(Group::minus, x, Decision::approve) = d_minus[i] * sb;
        grad.at(Group::minus, x, Decision::deny) = -d_minus[i] * sb;
    }
    return grad;
}

namespace {

double kl_divergence(const ActionProbs& p_old, const ActionProbs& p) {
    double kl = 0.0;
    for (Decision d : kDecisions) {
        if (p_old[d] > 0.0) kl += p_old[d] * std::log(p_old[d] / p[d]);
    }
    return kl;
}

}  // namespace

double mean_kl(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& old_params) {
    if (batch.records.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& r : batch.records) {
        acc += kl_divergence(action_probabilities(old_params, r.score, r.group),
                             action_probabilities(params, r.score, r.group));
    }
    return acc / static_cast<double>(batch.records.size());
}

PerGroup<ProbVector> empirical_state_dists(const RolloutBatch& batch, int num_levels) {
    PerGroup<ProbVector> dists{ProbVector(static_cast<std::size_t>(num_levels), 0.0),
                               ProbVector(static_cast<std::size_t>(num_levels), 0.0)};
    PerGroup<double> totals{0.0, 0.0};
    for (const auto& r : batch.records) {
        dists[r.group][static_cast<std::size_t>(r.score - 1)] += 1.0;
        totals[r.group] += 1.0;
    }
    for (Group g : kGroups) {
        if (totals[g] == 0.0) continue;
        for (double& v : dists[g]) v /= totals[g];
    }
    return dists;
}

namespace {

double exact_constraint(const PolicyParams& params, const EnvConfig& config) {
    PerGroup<double> e;
    for (Group g : kGroups) e[g] = value_behavior(params, g, config).expected_initial(config.init_score_dist[g]);
    return e.plus - e.minus;
}

struct UpdateContext {
    const PolicyParams& old_params;
    const RolloutBatch& batch;
    std::span<const double> advantages;
    const TrainConfig& train_cfg;
    const EnvConfig& config;
    double offset;                          // baseline gap when training against the adjusted constraint
    PerGroup<ProbVector> sampled_dists;     // Lambda state distributions in sampled mode
};

PerGroup<ProbVector> lambda_dists(const UpdateContext& ctx, const PolicyParams& params) {
    if (ctx.train_cfg.mode == TrainMode::oracle) return occupancy_distributions(params, ctx.config);
    return ctx.sampled_dists;
}

SurrogateTerms terms_at(const UpdateContext& ctx, const PolicyParams& params) {
    SurrogateTerms terms;
    const auto& recs = ctx.batch.records;
    double util = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        util += action_probabilities(params, r.score, r.group)[r.decision] / r.old_prob * ctx.advantages[i];
    }
    terms.util = recs.empty() ? 0.0 : util / static_cast<double>(recs.size());
    terms.kl = mean_kl(ctx.batch, params, ctx.old_params);
    const double beta_c = ctx.train_cfg.effective_beta_c();
    const double beta_l = ctx.train_cfg.effective_beta_lambda();
    if (ctx.train_cfg.mode == TrainMode::oracle) {
        terms.constraint = exact_constraint(params, ctx.config) + ctx.offset;
    } else if (ctx.batch.count(Group::plus) > 0 && ctx.batch.count(Group::minus) > 0) {
        terms.constraint = constraint_estimate(ctx.batch, params, ctx.old_params) + ctx.offset;
    }
    terms.lambda = benefit_fairness_gap(params, lambda_dists(ctx, params), ctx.config, ctx.train_cfg.epsilon);
    terms.objective = terms.util - ctx.train_cfg.beta_kl * terms.kl - beta_c * terms.constraint * terms.constraint -
                      beta_l * terms.lambda;
    return terms;
}

void check_finite(const SurrogateTerms& t) {
    if (!std::isfinite(t.util)) throw OptimizationError("L_UTIL", "non-finite objective term L_UTIL");
    if (!std::isfinite(t.kl)) throw OptimizationError("L_KL", "non-finite objective term L_KL");
    if (!std::isfinite(t.constraint)) throw OptimizationError("C", "non-finite objective term C");
    if (!std::isfinite(t.lambda)) throw OptimizationError("Lambda", "non-finite objective term Lambda");
}

// Gradient of J at `params` using the records in `minibatch` for the
// utility and KL terms. The constraint and Lambda terms use the full batch
// (sampled) or the exact model (oracle).
PolicyGradient objective_gradient(const UpdateContext& ctx, const PolicyParams& params,
                                  std::span<const std::size_t> minibatch) {
    PolicyGradient grad(params.levels());
    const auto& recs = ctx.batch.records;
    const double m = static_cast<double>(minibatch.size());
    const double beta_kl = ctx.train_cfg.beta_kl;
    for (std::size_t idx : minibatch) {
        const auto& r = recs[idx];
        const ActionProbs p = action_probabilities(params, r.score, r.group);
        const ActionProbs p_old = action_probabilities(ctx.old_params, r.score, r.group);
        const double ratio = p[r.decision] / r.old_prob;
        const double w = ratio * ctx.advantages[idx] / m;
        for (Decision d : kDecisions) {
            const double util_g = w * ((d == r.decision ? 1.0 : 0.0) - p[d]);
            const double kl_g = (p[d] - p_old[d]) / m;
            grad.at(r.group, r.score, d) += util_g - beta_kl * kl_g;
        }
    }
    const double beta_c = ctx.train_cfg.effective_beta_c();
    if (beta_c > 0.0) {
        if (ctx.train_cfg.mode == TrainMode::oracle) {
            grad.add_scaled(constraint_gradient_oracle(params, ctx.config, ctx.offset), -beta_c);
        } else {
            auto [c_hat, c_grad] = constraint_estimate_with_gradient(ctx.batch, params, ctx.old_params);
            grad.add_scaled(c_grad, -beta_c * 2.0 * (c_hat + ctx.offset));
        }
    }
    const double beta_l = ctx.train_cfg.effective_beta_lambda();
    if (beta_l > 0.0) {
        grad.add_scaled(benefit_fairness_gradient(params, lambda_dists(ctx, params), ctx.config, ctx.train_cfg.epsilon),
                        -beta_l);
    }
    return grad;
}

}  // namespace

SurrogateTerms evaluate_surrogate(const PolicyParams& params, const PolicyParams& old_params,
                                  const RolloutBatch& batch, std::span<const double> advantages,
                                  const TrainConfig& train_cfg, const EnvConfig& config) {
    UpdateContext ctx{old_params, batch, advantages, train_cfg, config,
                      train_cfg.adjusted_parity ? baseline_gap(config) : 0.0,
                      empirical_state_dists(batch, config.num_levels)};
    return terms_at(ctx, params);
}

std::pair<PolicyParams, UpdateDiagnostics> ppo_update(const PolicyParams& params, const RolloutBatch& batch,
                                                      const TrainConfig& train_cfg, const EnvConfig& config,
                                                      Rng& rng) {
    if (params.levels() != config.num_levels) throw DomainError("policy table does not match num_levels");
    if (train_cfg.mode == TrainMode::sampled && train_cfg.effective_beta_c() > 0.0) {
        for (Group g : kGroups) {
            if (batch.count(g) == 0) {
                throw EstimationError("constraint estimate needs records from group " + std::string(to_string(g)) +
                                      ", none in batch");
            }
        }
    }
    const auto advantages = estimate_advantages(batch, params, config, train_cfg.mode);
    const UpdateContext ctx{params, batch, advantages, train_cfg, config,
                            train_cfg.adjusted_parity ? baseline_gap(config) : 0.0,
                            empirical_state_dists(batch, config.num_levels)};

    UpdateDiagnostics diag;
    diag.before = terms_at(ctx, params);
    check_finite(diag.before);

    PolicyParams current = params;
    std::vector<std::size_t> order(batch.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto mb = static_cast<std::size_t>(train_cfg.minibatch_size);
    for (int epoch = 0; epoch < train_cfg.epochs_per_batch; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const std::size_t len = std::min(mb, order.size() - start);
            const auto grad = objective_gradient(ctx, current, std::span(order).subspan(start, len));
            if (!grad.all_finite()) throw OptimizationError("gradient", "non-finite gradient of the objective");
            current.add_scaled(grad, train_cfg.learning_rate);
            ++diag.steps;
        }
        const SurrogateTerms epoch_terms = terms_at(ctx, current);
        check_finite(epoch_terms);
        diag.util_per_epoch.push_back(epoch_terms.util);
    }
    diag.after = terms_at(ctx, current);
    check_finite(diag.after);
    return {std::move(current), std::move(diag)};
}

TrainHistory train(const EnvConfig& env_cfg, const TrainConfig& train_cfg, Rng& rng,
                   const IterationCallback& on_iteration) {
    env_cfg.validate();
    train_cfg.validate();
    const double gap = baseline_gap(env_cfg);
    TrainHistory history;
    PolicyParams params = random_policy(rng, env_cfg.num_levels, train_cfg.init_logit_scale);
    history.initial = decompose(params, env_cfg, train_cfg.epsilon);
    history.initial_utility = expected_utility(params, env_cfg);
    history.iterations.reserve(static_cast<std::size_t>(train_cfg.iterations));
    for (int it = 1; it <= train_cfg.iterations; ++it) {
        const RolloutBatch batch = collect_rollouts(rng, params, env_cfg, train_cfg.episodes_per_iter);
        auto [next, diag] = ppo_update(params, batch, train_cfg, env_cfg, rng);
        params = std::move(next);
        IterationRecord rec;
        rec.iteration = it;
        rec.utility = expected_utility(params, env_cfg);
        rec.report = decompose(params, env_cfg, train_cfg.epsilon);
        rec.adjusted_c_pi = rec.report.c_pi + gap;
        rec.diagnostics = std::move(diag);
        if (on_iteration) on_iteration(rec);
        history.iterations.push_back(std::move(rec));
    }
    history.final_params = std::move(params);
    return history;
}

}  // namespace fairrl
