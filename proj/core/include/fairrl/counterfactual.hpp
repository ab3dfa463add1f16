#pragma once

#include <iosfwd>
#include <vector>

#include "fairrl/analysis.hpp"
#include "fairrl/lending_env.hpp"
#include "fairrl/policy.hpp"

namespace fairrl {

/// Joint table P(X = x, X_s = x') with rows indexed by the observed score x
/// (source) and columns by the counterfactual score x' (target).
class Coupling {
public:
    explicit Coupling(int num_levels)
        : levels_(num_levels), mass_(static_cast<std::size_t>(num_levels * num_levels), 0.0) {}

    int levels() const noexcept { return levels_; }
    double& operator()(int from, int to) { return mass_[static_cast<std::size_t>((from - 1) * levels_ + (to - 1))]; }
    double operator()(int from, int to) const {
        return mass_[static_cast<std::size_t>((from - 1) * levels_ + (to - 1))];
    }

    ProbVector row_marginal() const;
    ProbVector column_marginal() const;

    /// P(X_s = x' | X = x); empty-row conditionals are left at zero.
    ProbVector conditional(int from) const;

    /// CSV with header `row,column,mass`, one line per nonzero cell.
    void write_csv(std::ostream& os) const;

private:
    int levels_;
    std::vector<double> mass_;
};

/// Rank-preserving (comonotonic) coupling: mass is matched in sorted order,
/// splitting at CDF boundaries.
Coupling monotone_coupling(std::span<const double> from_dist, std::span<const double> to_dist);

/// Pooled mixture P(s+) P(x|s+) + P(s-) P(x|s-).
ProbVector common_marginal(const EnvConfig& config);

/// G_s = sum_{x, x'} g^s(x, x') P(X_s = x' | X = x) P(x), with P(x) the common
/// marginal and the conditional from the monotone coupling onto P(x|s).
double baseline_gain(Group s, const EnvConfig& config);

/// G_{s+} - G_{s-}.
double baseline_gap(const EnvConfig& config);

/// (G_{s+} - G_{s-}) + c_pi.
double adjusted_parity(const PolicyParams& params, const EnvConfig& config);

/// Monte Carlo estimate of G_s with its standard error.
struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
MonteCarloEstimate baseline_gain_monte_carlo(Rng& rng, Group s, const EnvConfig& config, std::size_t samples);

}  // namespace fairrl
