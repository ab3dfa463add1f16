#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fairrl/config.hpp"
#include "fairrl/counterfactual.hpp"
#include "oracles.hpp"

using namespace fairrl;

namespace {

ProbVector point_mass(int levels, int at) {
    ProbVector p(static_cast<std::size_t>(levels), 0.0);
    p[static_cast<std::size_t>(at - 1)] = 1.0;
    return p;
}

}  // namespace

TEST(MonotoneCoupling, IdentityIsDiagonal) {
    const ProbVector p{0.2, 0.0, 0.5, 0.3};
    const auto c = monotone_coupling(p, p);
    for (int i = 1; i <= 4; ++i)
        for (int j = 1; j <= 4; ++j)
            EXPECT_NEAR(c(i, j), i == j ? p[static_cast<std::size_t>(i - 1)] : 0.0, 1e-15);
}

TEST(MonotoneCoupling, PointMasses) {
    const auto c = monotone_coupling(point_mass(7, 3), point_mass(7, 5));
    EXPECT_EQ(c(3, 5), 1.0);
    double rest = 0.0;
    for (int i = 1; i <= 7; ++i)
        for (int j = 1; j <= 7; ++j)
            if (!(i == 3 && j == 5)) rest += c(i, j);
    EXPECT_EQ(rest, 0.0);
}

TEST(MonotoneCoupling, TwoLevelHandExample) {
    const auto c = monotone_coupling(ProbVector{0.6, 0.4}, ProbVector{0.3, 0.7});
    EXPECT_NEAR(c(1, 1), 0.3, 1e-15);
    EXPECT_NEAR(c(1, 2), 0.3, 1e-15);
    EXPECT_NEAR(c(2, 1), 0.0, 1e-15);
    EXPECT_NEAR(c(2, 2), 0.4, 1e-15);
}

TEST(MonotoneCoupling, MarginalsNonCrossingAndOptimal) {
    oracle::Engine eng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = oracle::random_distribution(eng, 7);
        const auto q = oracle::random_distribution(eng, 7);
        const auto c = monotone_coupling(p, q);
        const auto rows = c.row_marginal();
        const auto cols = c.column_marginal();
        double cost = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            EXPECT_NEAR(rows[i], p[i], 1e-10);
            EXPECT_NEAR(cols[i], q[i], 1e-10);
        }
        for (int i = 1; i <= 7; ++i)
            for (int j = 1; j <= 7; ++j) {
                EXPECT_GE(c(i, j), 0.0);
                cost += c(i, j) * std::abs(i - j);
                if (c(i, j) <= 0.0) continue;
                for (int k = i + 1; k <= 7; ++k)
                    for (int l = 1; l < j; ++l) EXPECT_EQ(c(k, l), 0.0) << "crossing cells";
            }
        EXPECT_NEAR(cost, oracle::transport_lp(p, q), 1e-9);
    }
}

TEST(MonotoneCoupling, ConditionalRowsAreDistributions) {
    const auto c = monotone_coupling(ProbVector{0.5, 0.0, 0.5}, ProbVector{0.2, 0.3, 0.5});
    const auto row = c.conditional(1);
    EXPECT_NEAR(row[0] + row[1] + row[2], 1.0, 1e-15);
    const auto empty = c.conditional(2);
    EXPECT_EQ(empty[0] + empty[1] + empty[2], 0.0);
}

TEST(MonotoneCoupling, CsvListsNonzeroCells) {
    const auto c = monotone_coupling(ProbVector{0.6, 0.4}, ProbVector{0.3, 0.7});
    std::ostringstream os;
    c.write_csv(os);
    const std::string text = os.str();
    EXPECT_EQ(text.rfind("row,column,mass\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(BaselineGain, IdenticalGroupsHaveNoGap) {
    const auto cfg = preset("setting3");
    EXPECT_NEAR(baseline_gain(Group::plus, cfg), baseline_gain(Group::minus, cfg), 1e-15);
    EXPECT_EQ(baseline_gap(cfg), 0.0);
    EXPECT_EQ(adjusted_parity(constant_policy(7, Decision::deny), cfg), decompose(constant_policy(7, Decision::deny), cfg).c_pi);
}

TEST(BaselineGain, SingleCellCoupling) {
    // With prior 0 the pooled marginal is the minus distribution, a point
    // mass at 3, and the plus group maps it onto a point mass at 5.
    auto cfg = preset("setting1");
    cfg.group_prior = 0.0;
    cfg.init_score_dist.minus = point_mass(7, 3);
    cfg.init_score_dist.plus = point_mass(7, 5);
    EXPECT_NEAR(baseline_gain(Group::plus, cfg), (125.0 - 27.0) / 127.0, 1e-15);
    EXPECT_EQ(baseline_gain(Group::minus, cfg), 0.0);
}

TEST(BaselineGain, CommonMarginalIsPriorMixture) {
    const auto cfg = preset("setting2");
    const auto m = common_marginal(cfg);
    for (std::size_t i = 0; i < 7; ++i)
        EXPECT_NEAR(m[i], cfg.group_prior * cfg.init_score_dist.plus[i] +
                              (1 - cfg.group_prior) * cfg.init_score_dist.minus[i], 1e-15);
}

TEST(BaselineGain, MonteCarloAgreement) {
    const auto cfg = preset("setting1");
    Rng rng(33);
    for (Group s : kGroups) {
        const auto mc = baseline_gain_monte_carlo(rng, s, cfg, 100000);
        EXPECT_LT(std::abs(mc.mean - baseline_gain(s, cfg)), 3.0 * mc.std_error);
    }
}

TEST(AdjustedParity, IsGapPlusParity) {
    oracle::Engine eng(34);
    for (int rep = 0; rep < 20; ++rep) {
        const auto cfg = oracle::random_config(eng, 7, 20);
        const auto params = oracle::random_logits(eng, 7);
        EXPECT_NEAR(adjusted_parity(params, cfg), baseline_gap(cfg) + decompose(params, cfg).c_pi, 1e-12);
    }
}

TEST(AdjustedParity, BaselinePolicyWithSharedDynamics) {
    auto cfg = preset("setting1");
    cfg.repay_prob.minus = cfg.repay_prob.plus;
    const auto deny = constant_policy(7, Decision::deny);
    const auto r = decompose(deny, cfg);
    EXPECT_NEAR(adjusted_parity(deny, cfg), baseline_gain(Group::plus, cfg) - baseline_gain(Group::minus, cfg) + r.spe,
                1e-12);
}
