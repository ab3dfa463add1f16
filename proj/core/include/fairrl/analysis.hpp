#pragma once

#include <utility>
#include <vector>

#include "fairrl/lending_env.hpp"
#include "fairrl/policy.hpp"

namespace fairrl {

/// Time-indexed value tables for one group under one policy kind.
///
/// Timesteps run 1..T+1; v(T+1, .) is identically zero. For the virtual
/// policy q(t, x, d) is the pi0-attributed immediate gain plus the
/// continuation under decision d, so v = sum_d pi(d) q still holds.
class ValueTables {
public:
    ValueTables(int horizon, int num_levels)
        : horizon_(horizon), levels_(num_levels),
          v_(static_cast<std::size_t>((horizon + 1) * num_levels), 0.0),
          q_(static_cast<std::size_t>(horizon * num_levels * 2), 0.0) {}

    int horizon() const noexcept { return horizon_; }
    int levels() const noexcept { return levels_; }

    double& v(int t, int score) { return v_[vi(t, score)]; }
    double v(int t, int score) const { return v_[vi(t, score)]; }
    double& q(int t, int score, Decision d) { return q_[qi(t, score, d)]; }
    double q(int t, int score, Decision d) const { return q_[qi(t, score, d)]; }

    /// Expected v(1, x) under a distribution over x.
    double expected_initial(std::span<const double> dist) const;

private:
    std::size_t vi(int t, int score) const {
        return static_cast<std::size_t>((t - 1) * levels_ + (score - 1));
    }
    std::size_t qi(int t, int score, Decision d) const {
        return static_cast<std::size_t>(((t - 1) * levels_ + (score - 1)) * 2) + index(d);
    }

    int horizon_;
    int levels_;
    std::vector<double> v_;
    std::vector<double> q_;
};

/// Occupancy probabilities for slices t = 1..T+1, plus the expected visit
/// count eta(x) = sum_{t=1..T} occupancy(t, x).
class VisitationTable {
public:
    VisitationTable(int horizon, int num_levels)
        : horizon_(horizon), levels_(num_levels),
          occ_(static_cast<std::size_t>((horizon + 1) * num_levels), 0.0),
          eta_(static_cast<std::size_t>(num_levels), 0.0) {}

    int horizon() const noexcept { return horizon_; }
    int levels() const noexcept { return levels_; }

    double& occupancy(int t, int score) { return occ_[static_cast<std::size_t>((t - 1) * levels_ + (score - 1))]; }
    double occupancy(int t, int score) const {
        return occ_[static_cast<std::size_t>((t - 1) * levels_ + (score - 1))];
    }
    std::span<const double> slice(int t) const {
        return {occ_.data() + static_cast<std::size_t>((t - 1) * levels_), static_cast<std::size_t>(levels_)};
    }

    std::vector<double>& eta() noexcept { return eta_; }
    const std::vector<double>& eta() const noexcept { return eta_; }

    /// eta / T: time-averaged state distribution over t = 1..T.
    ProbVector time_average() const;

private:
    int horizon_;
    int levels_;
    std::vector<double> occ_;
    std::vector<double> eta_;
};

struct DecompositionReport {
    double c_pi = 0.0;
    double dpe = 0.0;
    double ipe = 0.0;
    double spe = 0.0;
    double lambda_metric = 0.0;
    double wasserstein_gap = 0.0;
    PerGroup<double> loan_rate;
};

inline constexpr double kDefaultEpsilon = 0.05;

/// Backward induction for pi: Q(t,x,d) = sum_x' P(x'|x,d,s)(g(x,x') + V(t+1,x')).
ValueTables value_behavior(const PolicyParams& params, Group s, const EnvConfig& config);

/// Backward induction for pi0 (always deny).
ValueTables value_baseline(Group s, const EnvConfig& config);

/// Virtual policy: immediate gain from the d0 kernel, continuation through the pi-mixed kernel.
ValueTables value_virtual(const PolicyParams& params, Group s, const EnvConfig& config);

/// Dispatches on the policy kind.
ValueTables value_tables(const PolicyKind& kind, Group s, const EnvConfig& config);

/// Forward propagation of `init` through the pi-mixed kernel.
VisitationTable visitation(const PolicyParams& params, Group s, const EnvConfig& config,
                           std::span<const double> init);
VisitationTable visitation(const PolicyKind& kind, Group s, const EnvConfig& config, std::span<const double> init);

/// Delta(x, s) = sum_x' (P(x'|x,d1,s) - P(x'|x,d0,s)) g(x, x').
double benefit(int score, Group s, const EnvConfig& config);
std::vector<double> benefit_table(Group s, const EnvConfig& config);

DecompositionReport decompose(const PolicyParams& params, const EnvConfig& config,
                              double epsilon = kDefaultEpsilon);

/// DPE as E_{eta+}[pi(d1|x,s+) Delta(x,s+)] - E_{eta-}[pi(d1|x,s-) Delta(x,s-)].
double dpe_via_benefit(const PolicyParams& params, const EnvConfig& config);

struct PropositionResidual {
    double direct = 0.0;   ///< V_pi - V_PS against the eta-weighted benefit term
    double delayed = 0.0;  ///< V_PS - V_pi0 against the eta-difference-weighted d0 gain
};

inline constexpr int kMaxEnumerationLevels = 4;
inline constexpr int kMaxEnumerationHorizon = 4;

/// Checks both direct-impact and delayed-impact identities at every start
/// state, with the visit counts obtained by enumerating all trajectories.
/// Throws CapacityError when C > 4 or T > 4.
PropositionResidual proposition1_residual(const PolicyParams& params, Group s, const EnvConfig& config);

/// Lambda: benefit-distance-weighted gap in approval rates across group pairs.
double benefit_fairness_gap(const PolicyParams& params, const PerGroup<ProbVector>& state_dists,
                            const EnvConfig& config, double epsilon = kDefaultEpsilon);

/// W1 on the unit-spaced ordered score support.
double wasserstein_gap(std::span<const double> p, std::span<const double> q);

/// Exact per-group time-averaged occupancy from the initial distributions.
PerGroup<ProbVector> occupancy_distributions(const PolicyParams& params, const EnvConfig& config);

}  // namespace fairrl
