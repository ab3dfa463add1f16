#include "fairrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace fairrl {

double ValueTables::expected_initial(std::span<const double> dist) const {
    double e = 0.0;
    for (int x = 1; x <= levels_; ++x) e += dist[static_cast<std::size_t>(x - 1)] * v(1, x);
    return e;
}

ProbVector VisitationTable::time_average() const {
    ProbVector avg(eta_.size());
    for (std::size_t i = 0; i < eta_.size(); ++i) avg[i] = eta_[i] / horizon_;
    return avg;
}

namespace {

using ProbFn = std::function<ActionProbs(int)>;

ProbFn behavior_probs(const PolicyParams& params, Group s) {
    return [&params, s](int x) { return action_probabilities(params, x, s); };
}

ProbFn baseline_probs(Group s) {
    return [s](int x) { return baseline_probabilities(x, s); };
}

// Shared backward induction. `immediate(x, d, x')` is the per-step credit
// for landing in x' after decision d at x.
template <class Immediate>
ValueTables backward_induction(const ProbFn& probs, Group s, const EnvConfig& config, Immediate immediate) {
    const TransitionKernel kernel(config);
    const int c = config.num_levels;
    const int horizon = config.horizon;
    ValueTables tables(horizon, c);
    for (int t = horizon; t >= 1; --t) {
        for (int x = 1; x <= c; ++x) {
            const ActionProbs p = probs(x);
            double v = 0.0;
            for (Decision d : kDecisions) {
                double q = 0.0;
                for (int y = 1; y <= c; ++y) {
                    const double pr = kernel(s, d, x, y);
                    if (pr == 0.0) continue;
                    q += pr * (immediate(x, d, y) + tables.v(t + 1, y));
                }
                tables.q(t, x, d) = q;
                v += p[d] * q;
            }
            tables.v(t, x) = v;
        }
    }
    return tables;
}

VisitationTable propagate(const ProbFn& probs, Group s, const EnvConfig& config, std::span<const double> init) {
    const int c = config.num_levels;
    if (init.size() != static_cast<std::size_t>(c)) throw DomainError("initial distribution has wrong length");
    double total = 0.0;
    for (double v : init) {
        if (!(v >= 0.0)) throw DomainError("initial distribution has a negative entry");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-10) throw DomainError("initial distribution does not sum to 1");

    const TransitionKernel kernel(config);
    VisitationTable table(config.horizon, c);
    for (int x = 1; x <= c; ++x) table.occupancy(1, x) = init[static_cast<std::size_t>(x - 1)];
    for (int t = 1; t <= config.horizon; ++t) {
        for (int x = 1; x <= c; ++x) {
            const double mass = table.occupancy(t, x);
            if (mass == 0.0) continue;
            const ActionProbs p = probs(x);
            for (Decision d : kDecisions) {
                if (p[d] == 0.0) continue;
                for (int y = 1; y <= c; ++y) table.occupancy(t + 1, y) += mass * p[d] * kernel(s, d, x, y);
            }
        }
    }
    auto& eta = table.eta();
    for (int t = 1; t <= config.horizon; ++t) {
        for (int x = 1; x <= c; ++x) eta[static_cast<std::size_t>(x - 1)] += table.occupancy(t, x);
    }
    return table;
}

std::vector<double> expected_deny_gain(Group s, const EnvConfig& config, const TransitionKernel& kernel,
                                       const GainTable& gains) {
    std::vector<double> out(static_cast<std::size_t>(config.num_levels), 0.0);
    for (int x = 1; x <= config.num_levels; ++x) {
        double acc = 0.0;
        for (int y = 1; y <= config.num_levels; ++y) acc += kernel(s, Decision::deny, x, y) * gains(s, x, y);
        out[static_cast<std::size_t>(x - 1)] = acc;
    }
    return out;
}

}  // namespace

ValueTables value_behavior(const PolicyParams& params, Group s, const EnvConfig& config) {
    const GainTable gains(config);
    return backward_induction(behavior_probs(params, s), s, config,
                              [&](int x, Decision, int y) { return gains(s, x, y); });
}

ValueTables value_baseline(Group s, const EnvConfig& config) {
    const GainTable gains(config);
    return backward_induction(baseline_probs(s), s, config, [&](int x, Decision, int y) { return gains(s, x, y); });
}

ValueTables value_virtual(const PolicyParams& params, Group s, const EnvConfig& config) {
    const GainTable gains(config);
    const TransitionKernel kernel(config);
    const auto deny_gain = expected_deny_gain(s, config, kernel, gains);
    // The immediate term does not depend on where the pi-driven transition
    // lands, so it is spread as deny_gain(x) over a row that sums to 1.
    return backward_induction(behavior_probs(params, s), s, config,
                              [&](int x, Decision, int) { return deny_gain[static_cast<std::size_t>(x - 1)]; });
}

ValueTables value_tables(const PolicyKind& kind, Group s, const EnvConfig& config) {
    return std::visit(
        [&](const auto& k) -> ValueTables {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, BehaviorPolicy>) return value_behavior(k.params, s, config);
            else if constexpr (std::is_same_v<K, BaselinePolicy>) return value_baseline(s, config);
            else return value_virtual(k.params, s, config);
        },
        kind);
}

VisitationTable visitation(const PolicyParams& params, Group s, const EnvConfig& config,
                           std::span<const double> init) {
    return propagate(behavior_probs(params, s), s, config, init);
}

VisitationTable visitation(const PolicyKind& kind, Group s, const EnvConfig& config, std::span<const double> init) {
    if (std::holds_alternative<BaselinePolicy>(kind)) return propagate(baseline_probs(s), s, config, init);
    const auto& params = std::holds_alternative<BehaviorPolicy>(kind) ? std::get<BehaviorPolicy>(kind).params
                                                                      : std::get<VirtualPolicy>(kind).params;
    return propagate(behavior_probs(params, s), s, config, init);
}

double benefit(int score, Group s, const EnvConfig& config) {
    const auto approve = transition_distribution(score, Decision::approve, s, config);
    const auto deny = transition_distribution(score, Decision::deny, s, config);
    double acc = 0.0;
    for (int y = 1; y <= config.num_levels; ++y) {
        const auto i = static_cast<std::size_t>(y - 1);
        acc += (approve[i] - deny[i]) * qualification_gain(score, y, config, s);
    }
    return acc;
}

std::vector<double> benefit_table(Group s, const EnvConfig& config) {
    std::vector<double> out(static_cast<std::size_t>(config.num_levels));
    for (int x = 1; x <= config.num_levels; ++x) out[static_cast<std::size_t>(x - 1)] = benefit(x, s, config);
    return out;
}

PerGroup<ProbVector> occupancy_distributions(const PolicyParams& params, const EnvConfig& config) {
    PerGroup<ProbVector> out;
    for (Group g : kGroups) out[g] = visitation(params, g, config, config.init_score_dist[g]).time_average();
    return out;
}

DecompositionReport decompose(const PolicyParams& params, const EnvConfig& config, double epsilon) {
    config.validate(1);
    PerGroup<double> e_pi, e_ps, e_0;
    PerGroup<ProbVector> avg_occupancy;
    PerGroup<ProbVector> final_dist;
    DecompositionReport report;
    for (Group g : kGroups) {
        const auto& init = config.init_score_dist[g];
        e_pi[g] = value_behavior(params, g, config).expected_initial(init);
        e_ps[g] = value_virtual(params, g, config).expected_initial(init);
        e_0[g] = value_baseline(g, config).expected_initial(init);

        const auto visits = visitation(params, g, config, init);
        avg_occupancy[g] = visits.time_average();
        const auto last = visits.slice(config.horizon + 1);
        final_dist[g].assign(last.begin(), last.end());

        double rate = 0.0;
        for (int x = 1; x <= config.num_levels; ++x) {
            rate += avg_occupancy[g][static_cast<std::size_t>(x - 1)] * action_probabilities(params, x, g).approve;
        }
        report.loan_rate[g] = rate;
    }
    report.c_pi = e_pi.plus - e_pi.minus;
    report.dpe = (e_pi.plus - e_ps.plus) - (e_pi.minus - e_ps.minus);
    report.ipe = (e_ps.plus - e_0.plus) - (e_ps.minus - e_0.minus);
    report.spe = e_0.plus - e_0.minus;
    report.lambda_metric = benefit_fairness_gap(params, avg_occupancy, config, epsilon);
    report.wasserstein_gap = wasserstein_gap(final_dist.plus, final_dist.minus);
    return report;
}

double dpe_via_benefit(const PolicyParams& params, const EnvConfig& config) {
    config.validate(1);
    PerGroup<double> term;
    for (Group g : kGroups) {
        const auto visits = visitation(params, g, config, config.init_score_dist[g]);
        const auto delta = benefit_table(g, config);
        double acc = 0.0;
        for (int x = 1; x <= config.num_levels; ++x) {
            const auto i = static_cast<std::size_t>(x - 1);
            acc += visits.eta()[i] * action_probabilities(params, x, g).approve * delta[i];
        }
        term[g] = acc;
    }
    return term.plus - term.minus;
}

namespace {

// eta(x -> x') for every start state by walking every (decision, next score)
// sequence of length T. Row-major [start-1][visited-1].
std::vector<double> enumerate_visits(const ProbFn& probs, Group s, const EnvConfig& config,
                                     const TransitionKernel& kernel) {
    const int c = config.num_levels;
    const int horizon = config.horizon;
    std::vector<double> eta(static_cast<std::size_t>(c * c), 0.0);
    std::function<void(int, int, int, double)> walk = [&](int start, int t, int x, double prob) {
        eta[static_cast<std::size_t>((start - 1) * c + (x - 1))] += prob;
        if (t == horizon) return;
        const ActionProbs p = probs(x);
        for (Decision d : kDecisions) {
            if (p[d] == 0.0) continue;
            for (int y = 1; y <= c; ++y) {
                const double pr = kernel(s, d, x, y);
                if (pr == 0.0) continue;
                walk(start, t + 1, y, prob * p[d] * pr);
            }
        }
    };
    for (int x = 1; x <= c; ++x) walk(x, 1, x, 1.0);
    return eta;
}

}  // namespace

PropositionResidual proposition1_residual(const PolicyParams& params, Group s, const EnvConfig& config) {
    if (config.num_levels > kMaxEnumerationLevels || config.horizon > kMaxEnumerationHorizon) {
        throw CapacityError("trajectory enumeration needs C <= " + std::to_string(kMaxEnumerationLevels) +
                            " and T <= " + std::to_string(kMaxEnumerationHorizon));
    }
    config.validate(1);
    const int c = config.num_levels;
    const TransitionKernel kernel(config);
    const GainTable gains(config);

    const auto v_pi = value_behavior(params, s, config);
    const auto v_ps = value_virtual(params, s, config);
    const auto v_0 = value_baseline(s, config);

    const auto eta_pi = enumerate_visits(behavior_probs(params, s), s, config, kernel);
    const auto eta_0 = enumerate_visits(baseline_probs(s), s, config, kernel);
    const auto delta = benefit_table(s, config);
    const auto deny_gain = expected_deny_gain(s, config, kernel, gains);

    PropositionResidual res;
    for (int x = 1; x <= c; ++x) {
        double direct = 0.0;
        double delayed = 0.0;
        for (int y = 1; y <= c; ++y) {
            const auto k = static_cast<std::size_t>((x - 1) * c + (y - 1));
            const auto i = static_cast<std::size_t>(y - 1);
            direct += eta_pi[k] * action_probabilities(params, y, s).approve * delta[i];
            delayed += (eta_pi[k] - eta_0[k]) * deny_gain[i];
        }
        res.direct = std::max(res.direct, std::abs((v_pi.v(1, x) - v_ps.v(1, x)) - direct));
        res.delayed = std::max(res.delayed, std::abs((v_ps.v(1, x) - v_0.v(1, x)) - delayed));
    }
    return res;
}

double benefit_fairness_gap(const PolicyParams& params, const PerGroup<ProbVector>& state_dists,
                            const EnvConfig& config, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    const int c = config.num_levels;
    for (Group g : kGroups) {
        if (state_dists[g].size() != static_cast<std::size_t>(c)) {
            throw DomainError("state distribution for group " + std::string(to_string(g)) + " has wrong length");
        }
    }
    const auto delta_plus = benefit_table(Group::plus, config);
    const auto delta_minus = benefit_table(Group::minus, config);
    double lambda = 0.0;
    for (int x = 1; x <= c; ++x) {
        const auto i = static_cast<std::size_t>(x - 1);
        const double wx = state_dists.plus[i];
        if (wx == 0.0) continue;
        const double a = action_probabilities(params, x, Group::plus).approve;
        for (int y = 1; y <= c; ++y) {
            const auto j = static_cast<std::size_t>(y - 1);
            const double wy = state_dists.minus[j];
            if (wy == 0.0) continue;
            const double b = action_probabilities(params, y, Group::minus).approve;
            lambda += epsilon * std::abs(a - b) / (epsilon + std::abs(delta_plus[i] - delta_minus[j])) * wx * wy;
        }
    }
    return lambda;
}

double wasserstein_gap(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DomainError("wasserstein_gap: length mismatch");
    double cp = 0.0, cq = 0.0, w = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        cp += p[i];
        cq += q[i];
        w += std::abs(cp - cq);
    }
    return w;
}

}  // namespace fairrl
