#include "fairrl/lending_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fairrl {

std::string_view to_string(Group g) noexcept { return g == Group::plus ? "plus" : "minus"; }

std::string_view to_string(Decision d) noexcept { return d == Decision::approve ? "approve" : "deny"; }

Group parse_group(std::string_view name) {
    if (name == "plus" || name == "s+") return Group::plus;
    if (name == "minus" || name == "s-") return Group::minus;
    throw DomainError("unknown group '" + std::string(name) + "'");
}

std::size_t Rng::categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    // u landed in the rounding slack above the accumulated sum.
    return last_positive;
}

namespace {

constexpr double kProbTolerance = 1e-12;

void check_prob_vector(std::span<const double> v, const std::string& field) {
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
            std::ostringstream os;
            os << field << "[" << i << "] = " << v[i] << " is outside [0, 1]";
            throw ConfigError(os.str());
        }
        sum += v[i];
    }
    if (std::abs(sum - 1.0) > kProbTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << field << " sums to " << sum << ", expected 1";
        throw ConfigError(os.str());
    }
}

void check_score(int score, int levels) {
    if (score < 1 || score > levels) {
        throw DomainError("score " + std::to_string(score) + " outside 1.." + std::to_string(levels));
    }
}

}  // namespace

void EnvConfig::validate(int min_levels) const {
    if (num_levels < min_levels) {
        throw ConfigError("num_levels must be >= " + std::to_string(min_levels) + ", got " +
                          std::to_string(num_levels));
    }
    if (horizon < 1) throw ConfigError("horizon must be >= 1, got " + std::to_string(horizon));
    if (!(group_prior >= 0.0 && group_prior <= 1.0)) {
        throw ConfigError("group_prior must lie in [0, 1]");
    }
    if (!std::isfinite(reward_success) || !std::isfinite(reward_default)) {
        throw ConfigError("rewards must be finite");
    }
    const auto levels = static_cast<std::size_t>(num_levels);
    for (Group g : kGroups) {
        const std::string tag = std::string(to_string(g));
        if (init_score_dist[g].size() != levels) {
            throw ConfigError("init_score_dist." + tag + " has " + std::to_string(init_score_dist[g].size()) +
                              " entries, expected " + std::to_string(levels));
        }
        check_prob_vector(init_score_dist[g], "init_score_dist." + tag);
        if (repay_prob[g].size() != levels) {
            throw ConfigError("repay_prob." + tag + " has " + std::to_string(repay_prob[g].size()) +
                              " entries, expected " + std::to_string(levels));
        }
        for (std::size_t i = 0; i < levels; ++i) {
            if (!(repay_prob[g][i] >= 0.0 && repay_prob[g][i] <= 1.0)) {
                std::ostringstream os;
                os << "repay_prob." << tag << "[" << i << "] = " << repay_prob[g][i] << " is outside [0, 1]";
                throw ConfigError(os.str());
            }
        }
        check_prob_vector(drift_dist[g], "drift_dist." + tag);
        if (!gain_potential[g].empty()) {
            if (gain_potential[g].size() != levels) {
                throw ConfigError("gain_potential." + tag + " must have " + std::to_string(levels) + " entries");
            }
            for (double v : gain_potential[g]) {
                if (!std::isfinite(v)) throw ConfigError("gain_potential." + tag + " has a non-finite entry");
            }
        }
    }
}

std::vector<double> gain_potential(const EnvConfig& config, Group group) {
    if (!config.gain_potential[group].empty()) return config.gain_potential[group];
    const int c = config.num_levels;
    // Largest single-level step of x^3 is between C-1 and C.
    const double scale = c >= 2 ? std::pow(c, 3) - std::pow(c - 1, 3) : 1.0;
    std::vector<double> phi(static_cast<std::size_t>(c));
    for (int x = 1; x <= c; ++x) phi[static_cast<std::size_t>(x - 1)] = std::pow(x, 3) / scale;
    return phi;
}

double qualification_gain(int from, int to, const EnvConfig& config, Group group) {
    check_score(from, config.num_levels);
    check_score(to, config.num_levels);
    if (from == to) return 0.0;
    if (config.gain_potential[group].empty()) {
        const int c = config.num_levels;
        const double scale = c >= 2 ? std::pow(c, 3) - std::pow(c - 1, 3) : 1.0;
        const double num = std::pow(to, 3) - std::pow(from, 3);  // exact in double for any sane C
        return num / scale;
    }
    const auto& phi = config.gain_potential[group];
    return phi[static_cast<std::size_t>(to - 1)] - phi[static_cast<std::size_t>(from - 1)];
}

GainTable::GainTable(const EnvConfig& config) : levels_(config.num_levels) {
    for (Group g : kGroups) {
        auto& table = data_[index(g)];
        table.resize(static_cast<std::size_t>(levels_ * levels_));
        for (int x = 1; x <= levels_; ++x) {
            for (int y = 1; y <= levels_; ++y) {
                table[static_cast<std::size_t>((x - 1) * levels_ + (y - 1))] = qualification_gain(x, y, config, g);
            }
        }
    }
}

int next_score(int score, int drift, bool repays, Decision d, int num_levels) noexcept {
    int offset = 0;
    if (d == Decision::approve) offset = repays ? 1 : -1;
    return std::clamp(score + drift + offset, 1, num_levels);
}

ProbVector transition_distribution(int score, Decision d, Group s, const EnvConfig& config) {
    check_score(score, config.num_levels);
    ProbVector out(static_cast<std::size_t>(config.num_levels), 0.0);
    const double p_repay = config.repay_prob[s][static_cast<std::size_t>(score - 1)];
    for (std::size_t k = 0; k < kDriftValues.size(); ++k) {
        const double p_drift = config.drift_dist[s][k];
        if (p_drift == 0.0) continue;
        if (d == Decision::deny) {
            out[static_cast<std::size_t>(next_score(score, kDriftValues[k], false, d, config.num_levels) - 1)] +=
                p_drift;
            continue;
        }
        out[static_cast<std::size_t>(next_score(score, kDriftValues[k], true, d, config.num_levels) - 1)] +=
            p_drift * p_repay;
        out[static_cast<std::size_t>(next_score(score, kDriftValues[k], false, d, config.num_levels) - 1)] +=
            p_drift * (1.0 - p_repay);
    }
    return out;
}

TransitionKernel::TransitionKernel(const EnvConfig& config) : levels_(config.num_levels) {
    data_.resize(4 * static_cast<std::size_t>(levels_ * levels_));
    for (Group s : kGroups) {
        for (Decision d : kDecisions) {
            for (int x = 1; x <= levels_; ++x) {
                const auto row = transition_distribution(x, d, s, config);
                std::copy(row.begin(), row.end(), data_.begin() + static_cast<std::ptrdiff_t>(offset(s, d, x)));
            }
        }
    }
}

double reward(int /*score*/, Decision d, bool repays, const EnvConfig& config) {
    if (d == Decision::deny) return 0.0;
    return repays ? config.reward_success : -config.reward_default;
}

double expected_reward(int score, Decision d, Group s, const EnvConfig& config) {
    if (d == Decision::deny) return 0.0;
    const double p = config.repay_prob[s][static_cast<std::size_t>(score - 1)];
    return p * config.reward_success - (1.0 - p) * config.reward_default;
}

void resample_hidden(Rng& rng, Individual& ind, const EnvConfig& config) {
    ind.repays = rng.bernoulli(config.repay_prob[ind.group][static_cast<std::size_t>(ind.score - 1)]);
    ind.drift = kDriftValues[rng.categorical(config.drift_dist[ind.group])];
}

Individual sample_individual(Rng& rng, const EnvConfig& config, Group group) {
    Individual ind;
    ind.group = group;
    ind.score = static_cast<int>(rng.categorical(config.init_score_dist[group])) + 1;
    resample_hidden(rng, ind, config);
    return ind;
}

Individual sample_individual(Rng& rng, const EnvConfig& config) {
    const Group g = rng.bernoulli(config.group_prior) ? Group::plus : Group::minus;
    return sample_individual(rng, config, g);
}

StepOutcome sample_step(Rng& rng, const Individual& ind, Decision d, const EnvConfig& config) {
    StepOutcome out;
    out.next = ind;
    out.next.score = next_score(ind.score, ind.drift, ind.repays, d, config.num_levels);
    out.reward = reward(ind.score, d, ind.repays, config);
    out.gain = qualification_gain(ind.score, out.next.score, config, ind.group);
    resample_hidden(rng, out.next, config);
    return out;
}

}  // namespace fairrl
