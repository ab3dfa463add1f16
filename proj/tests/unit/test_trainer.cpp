#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "fairrl/config.hpp"
#include "fairrl/trainer.hpp"
#include "oracles.hpp"

using namespace fairrl;

namespace {

TrainConfig quick(Algo algo, int iterations = 5) {
    TrainConfig t;
    t.algo = algo;
    t.iterations = iterations;
    t.episodes_per_iter = 50;
    return t;
}

PolicyParams mirrored(PolicyParams p) {
    for (int x = 1; x <= p.levels(); ++x)
        for (Decision d : kDecisions) p.at(Group::minus, x, d) = p.at(Group::plus, x, d);
    return p;
}

}  // namespace

TEST(CollectRollouts, ShapeAndBookkeeping) {
    const auto cfg = preset("setting1");
    Rng rng(1);
    const auto batch = collect_rollouts(rng, PolicyParams(7), cfg, 3);
    ASSERT_EQ(batch.records.size(), 60u);
    EXPECT_EQ(batch.count(Group::plus) + batch.count(Group::minus), 60u);
    for (int e = 0; e < 3; ++e) {
        double reward_tail = 0.0, gain_tail = 0.0;
        for (int t = 20; t >= 1; --t) {
            const auto& r = batch.records[static_cast<std::size_t>(e * 20 + t - 1)];
            EXPECT_EQ(r.episode, e);
            EXPECT_EQ(r.t, t);
            EXPECT_GT(r.old_prob, 0.0);
            EXPECT_LE(r.old_prob, 1.0);
            reward_tail += r.reward;
            gain_tail += r.gain;
            EXPECT_NEAR(r.reward_to_go, reward_tail, 1e-12);
            EXPECT_NEAR(r.gain_to_go, gain_tail, 1e-12);
        }
    }
}

TEST(CollectRollouts, SeedReproducesBatch) {
    const auto cfg = preset("setting2");
    Rng a(7), b(7);
    const auto x = collect_rollouts(a, PolicyParams(7), cfg, 20);
    const auto y = collect_rollouts(b, PolicyParams(7), cfg, 20);
    ASSERT_EQ(x.records.size(), y.records.size());
    for (std::size_t i = 0; i < x.records.size(); ++i) {
        EXPECT_EQ(x.records[i].score, y.records[i].score);
        EXPECT_EQ(x.records[i].decision, y.records[i].decision);
        EXPECT_EQ(x.records[i].gain, y.records[i].gain);
    }
}

TEST(Advantages, ZeroRewardMeansZeroAdvantage) {
    auto cfg = preset("setting1");
    cfg.reward_success = 0.0;
    cfg.reward_default = 0.0;
    Rng rng(2);
    const auto params = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, params, cfg, 10);
    for (double a : estimate_advantages(batch, params, cfg, TrainMode::oracle)) EXPECT_EQ(a, 0.0);
}

TEST(Advantages, OracleAdvantagesAverageToZero) {
    oracle::Engine eng(3);
    const auto cfg = oracle::random_config(eng, 7, 20);
    const auto params = oracle::random_logits(eng, 7);
    for (Group s : kGroups) {
        const auto v = reward_values(params, s, cfg);
        for (int t = 1; t <= 20; ++t)
            for (int x = 1; x <= 7; ++x) {
                const auto p = action_probabilities(params, x, s);
                const double mix = p.deny * (v.q(t, x, Decision::deny) - v.v(t, x)) +
                                   p.approve * (v.q(t, x, Decision::approve) - v.v(t, x));
                EXPECT_NEAR(mix, 0.0, 1e-10);
            }
    }
}

TEST(Advantages, SampledConvergesToOracle) {
    const auto cfg = preset("setting1");
    Rng rng(4);
    const auto params = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, params, cfg, 100000);
    const auto sampled = estimate_advantages(batch, params, cfg, TrainMode::sampled);
    const auto exact = estimate_advantages(batch, params, cfg, TrainMode::oracle);
    // Pool by (t, x, s, d) cell and compare the mean sampled advantage with the
    // exact one, using the spread of the sampled values.
    std::map<std::tuple<int, int, int, int>, std::vector<double>> cells;
    std::map<std::tuple<int, int, int, int>, double> truth;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        const auto& r = batch.records[i];
        if (r.t > 3) continue;
        const auto key = std::make_tuple(r.t, r.score, static_cast<int>(r.group), static_cast<int>(r.decision));
        cells[key].push_back(sampled[i]);
        truth[key] = exact[i];
    }
    int checked = 0;
    for (const auto& [key, xs] : cells) {
        if (xs.size() < 2000) continue;
        const auto st = oracle::summarize(xs);
        EXPECT_LT(std::abs(st.mean - truth[key]), 3.0 * st.std_error + 1e-12);
        ++checked;
    }
    EXPECT_GT(checked, 10);
}

TEST(ConstraintEstimate, UnitRatiosGiveGroupMeanGap) {
    const auto cfg = preset("setting1");
    Rng rng(5);
    const auto params = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, params, cfg, 500);
    PerGroup<double> sum{0, 0}, n{0, 0};
    for (const auto& r : batch.records) {
        if (r.t != 1) continue;
        sum[r.group] += r.gain_to_go;
        n[r.group] += 1;
    }
    EXPECT_NEAR(constraint_estimate(batch, params, params), sum.plus / n.plus - sum.minus / n.minus, 1e-12);
}

TEST(ConstraintEstimate, SymmetricWorldIsNearZero) {
    oracle::Engine eng(6);
    const auto cfg = oracle::random_config(eng, 7, 20, true);
    const auto params = mirrored(oracle::random_logits(eng, 7));
    Rng rng(6);
    const auto batch = collect_rollouts(rng, params, cfg, 100000);
    std::vector<double> gp, gm;
    for (const auto& r : batch.records)
        if (r.t == 1) (r.group == Group::plus ? gp : gm).push_back(r.gain_to_go);
    const auto a = oracle::summarize(gp), b = oracle::summarize(gm);
    const double se = std::hypot(a.std_error, b.std_error);
    EXPECT_LT(std::abs(constraint_estimate(batch, params, params)), 3.0 * se);
}

TEST(ConstraintEstimate, MissingGroupIsNamed) {
    auto cfg = preset("setting1");
    cfg.group_prior = 1.0;
    Rng rng(7);
    const auto batch = collect_rollouts(rng, PolicyParams(7), cfg, 5);
    try {
        constraint_estimate(batch, PolicyParams(7), PolicyParams(7));
        FAIL() << "expected EstimationError";
    } catch (const EstimationError& e) {
        EXPECT_NE(std::string(e.what()).find("minus"), std::string::npos) << e.what();
    }
}

TEST(ConstraintEstimate, GradientIsDerivativeOfEstimate) {
    const auto cfg = preset("setting2");
    Rng rng(8);
    const auto old = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, old, cfg, 200);
    auto params = old;
    for (auto& v : params.flat()) v += rng.uniform(-0.3, 0.3);
    const auto [value, grad] = constraint_estimate_with_gradient(batch, params, old);
    EXPECT_NEAR(value, constraint_estimate(batch, params, old), 1e-12);
    const auto fd = oracle::finite_difference(
        [&](const PolicyParams& p) { return constraint_estimate(batch, p, old); }, params);
    for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad.flat()[i], fd.flat()[i], 1e-7);
}

TEST(ConstraintGradient, SymmetricWorldHasZeroGradient) {
    oracle::Engine eng(9);
    const auto cfg = oracle::random_config(eng, 7, 20, true);
    const auto params = mirrored(oracle::random_logits(eng, 7));
    EXPECT_EQ(constraint_gradient_oracle(params, cfg).max_abs(), 0.0);
}

TEST(ConstraintGradient, MatchesFiniteDifferences) {
    oracle::Engine eng(10);
    for (int rep = 0; rep < 5; ++rep) {
        const auto cfg = oracle::random_config(eng, 7, 20);
        const auto params = oracle::random_logits(eng, 7);
        const auto g = constraint_gradient_oracle(params, cfg);
        const auto fd = oracle::finite_difference(
            [&](const PolicyParams& p) {
                const double c = decompose(p, cfg).c_pi;
                return c * c;
            },
            params);
        auto diff = g;
        diff -= fd;
        EXPECT_LT(diff.max_abs() / fd.max_abs(), 1e-5);
    }
}

TEST(ConstraintGradient, OffsetShiftsTheSquare) {
    oracle::Engine eng(11);
    const auto cfg = oracle::random_config(eng, 5, 10);
    const auto params = oracle::random_logits(eng, 5);
    const double off = 0.37;
    const auto g = constraint_gradient_oracle(params, cfg, off);
    const auto fd = oracle::finite_difference(
        [&](const PolicyParams& p) {
            const double c = decompose(p, cfg).c_pi + off;
            return c * c;
        },
        params);
    auto diff = g;
    diff -= fd;
    EXPECT_LT(diff.max_abs() / fd.max_abs(), 1e-5);
}

TEST(ConstraintGradient, BaselinePolicyTouchesOnlyReachableStates) {
    // Plus can only drift up from 4 and minus only down. The deny policy
    // still approves with probability ~e^-40, so the other side leaks in
    // only at that order.
    EnvConfig cfg;
    cfg.num_levels = 7;
    cfg.horizon = 6;
    cfg.init_score_dist = {{0, 0, 0, 1, 0, 0, 0}, {0, 0, 0, 1, 0, 0, 0}};
    cfg.repay_prob = {std::vector<double>(7, 0.6), std::vector<double>(7, 0.6)};
    cfg.drift_dist = {{0.0, 0.5, 0.5}, {0.5, 0.5, 0.0}};
    const auto deny = constant_policy(7, Decision::deny);
    ASSERT_GT(std::abs(decompose(deny, cfg).spe), 0.1);
    const auto g = constraint_gradient_oracle(deny, cfg);
    double reachable = 0.0, unreachable = 0.0;
    for (int x = 1; x <= 7; ++x)
        for (Decision d : kDecisions) {
            (x >= 4 ? reachable : unreachable) += std::abs(g.at(Group::plus, x, d));
            (x <= 4 ? reachable : unreachable) += std::abs(g.at(Group::minus, x, d));
        }
    EXPECT_GT(reachable, 0.0);
    EXPECT_LT(unreachable, 1e-12 * reachable);
}

TEST(BenefitFairnessGradient, MatchesFiniteDifferencesAwayFromKinks) {
    const auto cfg = preset("setting1");
    oracle::Engine eng(12);
    const auto params = oracle::random_logits(eng, 7, 2.0);
    const auto dists = occupancy_distributions(params, cfg);
    const auto g = benefit_fairness_gradient(params, dists, cfg, 0.05);
    const auto fd = oracle::finite_difference(
        [&](const PolicyParams& p) { return benefit_fairness_gap(p, dists, cfg, 0.05); }, params, 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g.flat()[i], fd.flat()[i], 1e-6);
}

TEST(MeanKl, ZeroAtOldParamsPositiveElsewhere) {
    const auto cfg = preset("setting1");
    Rng rng(13);
    const auto old = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, old, cfg, 20);
    EXPECT_EQ(mean_kl(batch, old, old), 0.0);
    auto moved = old;
    moved.at(Group::plus, 5, Decision::approve) += 1.0;
    EXPECT_GT(mean_kl(batch, moved, old), 0.0);
}

TEST(PpoUpdate, ZeroLearningRateLeavesParams) {
    const auto cfg = preset("setting1");
    Rng rng(14);
    const auto params = random_policy(rng, 7, 0.5);
    const auto batch = collect_rollouts(rng, params, cfg, 30);
    auto t = quick(Algo::ppo_cb);
    t.learning_rate = 0.0;
    t.beta_lambda = 1.0;
    const auto [next, diag] = ppo_update(params, batch, t, cfg, rng);
    EXPECT_EQ(next, params);
    EXPECT_EQ(diag.after.kl, 0.0);
    EXPECT_EQ(diag.before.kl, 0.0);
}

TEST(PpoUpdate, UnitRatiosBeforeTheFirstStep) {
    const auto cfg = preset("setting2");
    Rng rng(15);
    const auto params = random_policy(rng, 7, 0.5);
    const auto batch = collect_rollouts(rng, params, cfg, 30);
    const auto adv = estimate_advantages(batch, params, cfg, TrainMode::oracle);
    const auto [next, diag] = ppo_update(params, batch, quick(Algo::ppo), cfg, rng);
    EXPECT_EQ(diag.before.kl, 0.0);
    EXPECT_NEAR(diag.before.util, std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size()),
                1e-12);
    EXPECT_GT(diag.after.kl, 0.0);
}

TEST(PpoUpdate, PlainSurrogateAscends) {
    const auto cfg = preset("setting1");
    for (TrainMode mode : {TrainMode::oracle, TrainMode::sampled}) {
        Rng rng(16);
        const auto params = random_policy(rng, 7, 0.5);
        const auto batch = collect_rollouts(rng, params, cfg, 100);
        auto t = quick(Algo::ppo);
        t.beta_kl = 0.0;
        t.learning_rate = 0.01;
        t.epochs_per_batch = 8;
        t.mode = mode;
        const auto [next, diag] = ppo_update(params, batch, t, cfg, rng);
        double last = diag.before.util;
        for (double u : diag.util_per_epoch) {
            EXPECT_GE(u, last - 1e-12);
            last = u;
        }
    }
}

TEST(PpoUpdate, NonFiniteObjectiveNamesTerm) {
    auto cfg = preset("setting1");
    cfg.reward_success = 1e308;
    cfg.reward_default = 1e308;
    Rng rng(17);
    const auto params = random_policy(rng, 7, 0.5);
    const auto batch = collect_rollouts(rng, params, cfg, 5);
    try {
        ppo_update(params, batch, quick(Algo::ppo), cfg, rng);
        FAIL() << "expected OptimizationError";
    } catch (const OptimizationError& e) {
        EXPECT_EQ(e.term(), "L_UTIL");
    }
}

TEST(Train, HistoryLengthAndDeterminism) {
    const auto cfg = preset("setting1");
    for (TrainMode mode : {TrainMode::oracle, TrainMode::sampled}) {
        auto t = quick(Algo::ppo_cb);
        t.beta_lambda = 0.5;
        t.mode = mode;
        Rng a(3), b(3);
        const auto h1 = train(cfg, t, a);
        const auto h2 = train(cfg, t, b);
        ASSERT_EQ(h1.iterations.size(), 5u);
        EXPECT_EQ(h1.final_params, h2.final_params);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_EQ(h1.iterations[i].iteration, static_cast<int>(i) + 1);
            EXPECT_EQ(h1.iterations[i].utility, h2.iterations[i].utility);
            EXPECT_EQ(h1.iterations[i].report.c_pi, h2.iterations[i].report.c_pi);
        }
    }
}

TEST(Train, CallbackSeesEveryIteration) {
    int calls = 0;
    Rng rng(4);
    train(preset("setting3"), quick(Algo::ppo_c, 3), rng, [&](const IterationRecord& r) { EXPECT_EQ(r.iteration, ++calls); });
    EXPECT_EQ(calls, 3);
}

TEST(Train, UnconstrainedUtilityClimbs) {
    const auto cfg = preset("setting1");
    auto t = quick(Algo::ppo, 60);
    t.beta_kl = 0.0;
    t.learning_rate = 0.02;
    Rng rng(5);
    const auto h = train(cfg, t, rng);
    int drops = 0;
    double last = h.initial_utility;
    for (const auto& it : h.iterations) {
        if (it.utility < last) ++drops;
        last = it.utility;
    }
    EXPECT_LE(drops, 3);
    EXPECT_GT(h.iterations.back().utility, h.initial_utility);
}

TEST(Train, ParityPenaltyShrinksGap) {
    const auto cfg = preset("setting1");
    auto t = quick(Algo::ppo_c, 60);
    t.beta_c = 5.0;
    double before = 0.0, after = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const auto h = train(cfg, t, rng);
        before += std::abs(h.initial.c_pi);
        after += std::abs(h.iterations.back().report.c_pi);
    }
    EXPECT_LT(after, before);
}

TEST(Train, BenefitPenaltyLowersLambda) {
    const auto cfg = preset("setting2");
    double lam0 = 0.0, lam2 = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (double bl : {0.0, 2.0}) {
            auto t = quick(Algo::ppo_cb, 60);
            t.beta_lambda = bl;
            Rng rng(seed);
            (bl == 0.0 ? lam0 : lam2) += train(cfg, t, rng).iterations.back().report.lambda_metric;
        }
    }
    EXPECT_LT(lam2, lam0);
}

TEST(TrainConfig, RejectsNegativeWeights) {
    TrainConfig t;
    t.beta_c = -1.0;
    EXPECT_THROW(t.validate(), ConfigError);
    t = TrainConfig{};
    t.iterations = 0;
    EXPECT_THROW(t.validate(), ConfigError);
    EXPECT_THROW(parse_algo("ppo-x"), ConfigError);
    EXPECT_EQ(parse_algo("ppo-cb"), Algo::ppo_cb);
    EXPECT_EQ(parse_mode("sampled"), TrainMode::sampled);
}

TEST(TrainConfig, AlgoSelectsPenalties) {
    TrainConfig t;
    t.beta_c = 3.0;
    t.beta_lambda = 2.0;
    t.algo = Algo::ppo;
    EXPECT_EQ(t.effective_beta_c(), 0.0);
    EXPECT_EQ(t.effective_beta_lambda(), 0.0);
    t.algo = Algo::ppo_c;
    EXPECT_EQ(t.effective_beta_c(), 3.0);
    EXPECT_EQ(t.effective_beta_lambda(), 0.0);
    t.algo = Algo::ppo_cb;
    EXPECT_EQ(t.effective_beta_lambda(), 2.0);
}

TEST(ExpectedUtility, MatchesSimulatedReward) {
    const auto cfg = preset("setting1");
    Rng rng(6);
    const auto params = random_policy(rng, 7, 1.0);
    const auto batch = collect_rollouts(rng, params, cfg, 100000);
    std::vector<double> totals;
    for (const auto& r : batch.records)
        if (r.t == 1) totals.push_back(r.reward_to_go);
    const auto st = oracle::summarize(totals);
    EXPECT_LT(std::abs(st.mean - expected_utility(params, cfg)), 3.0 * st.std_error);
}
