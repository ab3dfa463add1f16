#include "fairrl/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace fairrl {

ProbVector Coupling::row_marginal() const {
    ProbVector out(static_cast<std::size_t>(levels_), 0.0);
    for (int x = 1; x <= levels_; ++x) {
        for (int y = 1; y <= levels_; ++y) out[static_cast<std::size_t>(x - 1)] += (*this)(x, y);
    }
    return out;
}

ProbVector Coupling::column_marginal() const {
    ProbVector out(static_cast<std::size_t>(levels_), 0.0);
    for (int x = 1; x <= levels_; ++x) {
        for (int y = 1; y <= levels_; ++y) out[static_cast<std::size_t>(y - 1)] += (*this)(x, y);
    }
    return out;
}

ProbVector Coupling::conditional(int from) const {
    ProbVector out(static_cast<std::size_t>(levels_), 0.0);
    double row = 0.0;
    for (int y = 1; y <= levels_; ++y) row += (*this)(from, y);
    if (row <= 0.0) return out;
    for (int y = 1; y <= levels_; ++y) out[static_cast<std::size_t>(y - 1)] = (*this)(from, y) / row;
    return out;
}

void Coupling::write_csv(std::ostream& os) const {
    std::ostringstream buf;
    buf.precision(17);
    buf << "row,column,mass\n";
    for (int x = 1; x <= levels_; ++x) {
        for (int y = 1; y <= levels_; ++y) {
            if ((*this)(x, y) != 0.0) buf << x << ',' << y << ',' << (*this)(x, y) << '\n';
        }
    }
    os << buf.str();
}

Coupling monotone_coupling(std::span<const double> from_dist, std::span<const double> to_dist) {
    if (from_dist.size() != to_dist.size() || from_dist.empty()) {
        throw DomainError("monotone_coupling: distributions must be non-empty and equal length");
    }
    const int c = static_cast<int>(from_dist.size());
    Coupling coupling(c);
    // Northwest-corner walk over the two CDFs.
    std::size_t i = 0, j = 0;
    double left_i = from_dist[0];
    double left_j = to_dist[0];
    while (i < from_dist.size() && j < to_dist.size()) {
        const double moved = std::min(left_i, left_j);
        if (moved > 0.0) coupling(static_cast<int>(i) + 1, static_cast<int>(j) + 1) += moved;
        left_i -= moved;
        left_j -= moved;
        // Advance whichever side is exhausted. Ties advance both; residues
        // below rounding noise are treated as exhausted.
        constexpr double kSlack = 1e-15;
        const bool done_i = left_i <= kSlack;
        const bool done_j = left_j <= kSlack;
        if (done_i) {
            if (++i < from_dist.size()) left_i = from_dist[i];
        }
        if (done_j) {
            if (++j < to_dist.size()) left_j = to_dist[j];
        }
        if (!done_i && !done_j) break;  // unreachable: min() exhausts one side
    }
    return coupling;
}

ProbVector common_marginal(const EnvConfig& config) {
    ProbVector out(static_cast<std::size_t>(config.num_levels));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = config.group_prior * config.init_score_dist.plus[i] +
                 (1.0 - config.group_prior) * config.init_score_dist.minus[i];
    }
    return out;
}

double baseline_gain(Group s, const EnvConfig& config) {
    config.validate(1);
    const auto marginal = common_marginal(config);
    const auto coupling = monotone_coupling(marginal, config.init_score_dist[s]);
    double g = 0.0;
    for (int x = 1; x <= config.num_levels; ++x) {
        for (int y = 1; y <= config.num_levels; ++y) {
            const double m = coupling(x, y);
            if (m != 0.0) g += m * qualification_gain(x, y, config, s);
        }
    }
    return g;
}

double baseline_gap(const EnvConfig& config) { return baseline_gain(Group::plus, config) - baseline_gain(Group::minus, config); }

double adjusted_parity(const PolicyParams& params, const EnvConfig& config) {
    return baseline_gap(config) + decompose(params, config).c_pi;
}

MonteCarloEstimate baseline_gain_monte_carlo(Rng& rng, Group s, const EnvConfig& config, std::size_t samples) {
    if (samples < 2) throw DomainError("Monte Carlo estimate needs at least two samples");
    const auto marginal = common_marginal(config);
    const auto coupling = monotone_coupling(marginal, config.init_score_dist[s]);
    std::vector<ProbVector> conditionals;
    conditionals.reserve(static_cast<std::size_t>(config.num_levels));
    for (int x = 1; x <= config.num_levels; ++x) conditionals.push_back(coupling.conditional(x));

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t n = 0; n < samples; ++n) {
        const int x = static_cast<int>(rng.categorical(marginal)) + 1;
        const int y = static_cast<int>(rng.categorical(conditionals[static_cast<std::size_t>(x - 1)])) + 1;
        const double g = qualification_gain(x, y, config, s);
        sum += g;
        sum_sq += g * g;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

}  // namespace fairrl
