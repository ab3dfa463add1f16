#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fairrl/config.hpp"
#include "fairrl/lending_env.hpp"
#include "oracles.hpp"

using namespace fairrl;

namespace {

EnvConfig still_config(int levels = 7) {
    EnvConfig cfg;
    cfg.num_levels = levels;
    for (Group g : kGroups) {
        cfg.init_score_dist[g].assign(static_cast<std::size_t>(levels), 1.0 / levels);
        cfg.repay_prob[g].assign(static_cast<std::size_t>(levels), 0.5);
        cfg.drift_dist[g] = {0.0, 1.0, 0.0};
    }
    return cfg;
}

}  // namespace

TEST(QualificationGain, SameStateIsZero) {
    EXPECT_EQ(qualification_gain(3, 3, preset("setting1")), 0.0);
}

TEST(QualificationGain, TopStepIsUnit) {
    EXPECT_DOUBLE_EQ(qualification_gain(6, 7, still_config()), 1.0);
}

TEST(QualificationGain, TwoStepsMatchClosedFormAndSum) {
    const auto cfg = still_config();
    EXPECT_NEAR(qualification_gain(1, 3, cfg), 26.0 / 127.0, 1e-15);
    EXPECT_NEAR(qualification_gain(1, 3, cfg), qualification_gain(1, 2, cfg) + qualification_gain(2, 3, cfg), 1e-15);
}

TEST(QualificationGain, AntisymmetricEverywhere) {
    const auto cfg = still_config();
    for (int a = 1; a <= 7; ++a)
        for (int b = 1; b <= 7; ++b) EXPECT_EQ(qualification_gain(a, b, cfg), -qualification_gain(b, a, cfg));
}

TEST(QualificationGain, OutOfRangeScoreThrows) {
    const auto cfg = still_config();
    EXPECT_THROW(qualification_gain(0, 3, cfg), DomainError);
    EXPECT_THROW(qualification_gain(3, 8, cfg), DomainError);
}

TEST(QualificationGain, CustomPotentialPerGroup) {
    auto cfg = still_config(3);
    cfg.gain_potential.minus = {0.0, 2.0, 5.0};
    EXPECT_DOUBLE_EQ(qualification_gain(1, 3, cfg, Group::minus), 5.0);
    EXPECT_NEAR(qualification_gain(1, 3, cfg, Group::plus), 26.0 / 19.0, 1e-15);
}

TEST(Transition, DenyWithoutDriftStays) {
    const auto p = transition_distribution(4, Decision::deny, Group::plus, still_config());
    EXPECT_EQ(p[3], 1.0);
}

TEST(Transition, CertainRepaymentMovesUp) {
    auto cfg = still_config();
    cfg.repay_prob.plus.assign(7, 1.0);
    const auto p = transition_distribution(4, Decision::approve, Group::plus, cfg);
    EXPECT_EQ(p[4], 1.0);
}

TEST(Transition, CoinFlipRepaymentSplits) {
    const auto p = transition_distribution(4, Decision::approve, Group::plus, still_config());
    EXPECT_DOUBLE_EQ(p[2], 0.5);
    EXPECT_DOUBLE_EQ(p[4], 0.5);
    EXPECT_EQ(p[3], 0.0);
}

TEST(Transition, RowsAreStochasticAndLocal) {
    oracle::Engine eng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto cfg = oracle::random_config(eng, 7, 5);
        const TransitionKernel k(cfg);
        for (Group g : kGroups)
            for (Decision d : kDecisions)
                for (int x = 1; x <= 7; ++x) {
                    const auto row = k.row(g, d, x);
                    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
                    for (int y = 1; y <= 7; ++y) {
                        if (std::abs(y - x) > 2) EXPECT_EQ(row[static_cast<std::size_t>(y - 1)], 0.0);
                    }
                }
    }
}

TEST(Reward, BankProfitModel) {
    const auto cfg = still_config();
    EXPECT_EQ(reward(3, Decision::deny, true, cfg), 0.0);
    EXPECT_EQ(reward(3, Decision::deny, false, cfg), 0.0);
    EXPECT_EQ(reward(3, Decision::approve, true, cfg), 1.0);
    EXPECT_EQ(reward(3, Decision::approve, false, cfg), -2.0);
    EXPECT_DOUBLE_EQ(expected_reward(3, Decision::approve, Group::plus, cfg), -0.5);
}

TEST(Sampling, DegeneratePriorAndInit) {
    auto cfg = still_config();
    cfg.group_prior = 1.0;
    cfg.init_score_dist.plus = {0, 0, 1, 0, 0, 0, 0};
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto ind = sample_individual(rng, cfg);
        EXPECT_EQ(ind.group, Group::plus);
        EXPECT_EQ(ind.score, 3);
    }
}

TEST(Sampling, SeededStreamsRepeat) {
    const auto cfg = preset("setting1");
    Rng a(42), b(42);
    for (int i = 0; i < 50; ++i) {
        const auto x = sample_individual(a, cfg);
        const auto y = sample_individual(b, cfg);
        EXPECT_EQ(x.group, y.group);
        EXPECT_EQ(x.score, y.score);
        EXPECT_EQ(x.drift, y.drift);
        EXPECT_EQ(x.repays, y.repays);
    }
}

TEST(Step, DenyNoDrift) {
    Rng rng(1);
    const Individual ind{Group::plus, 4, 0, true};
    const auto out = sample_step(rng, ind, Decision::deny, still_config());
    EXPECT_EQ(out.next.score, 4);
    EXPECT_EQ(out.gain, 0.0);
    EXPECT_EQ(out.reward, 0.0);
}

TEST(Step, RepaidLoanAtSixReachesTop) {
    Rng rng(1);
    const Individual ind{Group::plus, 6, 0, true};
    const auto out = sample_step(rng, ind, Decision::approve, still_config());
    EXPECT_EQ(out.next.score, 7);
    EXPECT_DOUBLE_EQ(out.gain, 1.0);
    EXPECT_EQ(out.reward, 1.0);
}

TEST(Step, DefaultAtBottomClamps) {
    Rng rng(1);
    const Individual ind{Group::minus, 1, -1, false};
    const auto out = sample_step(rng, ind, Decision::approve, still_config());
    EXPECT_EQ(out.next.score, 1);
    EXPECT_EQ(out.gain, 0.0);
    EXPECT_EQ(out.reward, -2.0);
}

TEST(Step, EmpiricalLawMatchesKernel) {
    const auto cfg = preset("setting2");
    Rng rng(99);
    constexpr int n = 100000;
    for (Decision d : kDecisions) {
        std::vector<double> hist(7, 0.0);
        for (int i = 0; i < n; ++i) {
            Individual ind{Group::minus, 4, 0, false};
            resample_hidden(rng, ind, cfg);
            hist[static_cast<std::size_t>(sample_step(rng, ind, d, cfg).next.score - 1)] += 1.0 / n;
        }
        const auto p = transition_distribution(4, d, Group::minus, cfg);
        for (std::size_t k = 0; k < 7; ++k) EXPECT_NEAR(hist[k], p[k], 4.0 / std::sqrt(n));
    }
}

TEST(EnvValidation, RejectsBadTables) {
    auto cfg = preset("setting1");
    cfg.init_score_dist.plus[0] += 0.2;
    try {
        cfg.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("1.2"), std::string::npos) << e.what();
    }
    cfg = preset("setting1");
    cfg.repay_prob.minus.pop_back();
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = preset("setting1");
    cfg.repay_prob.minus[2] = 1.2;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = preset("setting1");
    cfg.horizon = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = preset("setting1");
    cfg.num_levels = 1;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
