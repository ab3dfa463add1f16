#include "fairrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace fairrl {

LogitTable& LogitTable::operator+=(const LogitTable& rhs) { return add_scaled(rhs, 1.0); }

LogitTable& LogitTable::operator-=(const LogitTable& rhs) { return add_scaled(rhs, -1.0); }

LogitTable& LogitTable::operator*=(double k) {
    for (double& v : data_) v *= k;
    return *this;
}

LogitTable& LogitTable::add_scaled(const LogitTable& rhs, double k) {
    if (rhs.levels_ != levels_) throw DomainError("logit table shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += k * rhs.data_[i];
    return *this;
}

double LogitTable::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool LogitTable::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ActionProbs action_probabilities(const PolicyParams& params, int score, Group s) {
    if (score < 1 || score > params.levels()) {
        throw DomainError("score " + std::to_string(score) + " outside policy table");
    }
    const double l0 = params.at(s, score, Decision::deny);
    const double l1 = params.at(s, score, Decision::approve);
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m);
    const double e1 = std::exp(l1 - m);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

PolicyGradient log_prob_gradient(const PolicyParams& params, int score, Group s, Decision d) {
    const ActionProbs p = action_probabilities(params, score, s);
    PolicyGradient grad(params.levels());
    grad.at(s, score, Decision::deny) = (d == Decision::deny ? 1.0 : 0.0) - p.deny;
    grad.at(s, score, Decision::approve) = (d == Decision::approve ? 1.0 : 0.0) - p.approve;
    return grad;
}

Decision sample_action(Rng& rng, const PolicyParams& params, int score, Group s) {
    return rng.bernoulli(action_probabilities(params, score, s).approve) ? Decision::approve : Decision::deny;
}

PolicyParams constant_policy(int num_levels, Decision preferred, double margin) {
    PolicyParams p(num_levels);
    for (Group g : kGroups) {
        for (int x = 1; x <= num_levels; ++x) p.at(g, x, preferred) = margin;
    }
    return p;
}

PolicyParams random_policy(Rng& rng, int num_levels, double scale) {
    PolicyParams p(num_levels);
    for (double& v : p.flat()) v = scale > 0.0 ? rng.uniform(-scale, scale) : 0.0;
    return p;
}

void write_policy(std::ostream& os, const PolicyParams& params) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "# group score logit_deny logit_approve\n";
    for (Group g : kGroups) {
        for (int x = 1; x <= params.levels(); ++x) {
            buf << to_string(g) << ' ' << x << ' ' << params.at(g, x, Decision::deny) << ' '
                << params.at(g, x, Decision::approve) << '\n';
        }
    }
    os << buf.str();
}

PolicyParams read_policy(std::istream& is) {
    std::map<std::pair<int, int>, std::pair<double, double>> rows;
    int max_score = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string group;
        int score = 0;
        double l0 = 0.0, l1 = 0.0;
        if (!(ls >> group >> score >> l0 >> l1)) {
            throw DomainError("policy table line " + std::to_string(lineno) + ": expected 'group score l0 l1'");
        }
        if (score < 1) throw DomainError("policy table line " + std::to_string(lineno) + ": score must be >= 1");
        const Group g = parse_group(group);
        if (!rows.emplace(std::make_pair(static_cast<int>(index(g)), score), std::make_pair(l0, l1)).second) {
            throw DomainError("policy table line " + std::to_string(lineno) + ": duplicate row");
        }
        max_score = std::max(max_score, score);
    }
    if (rows.size() != static_cast<std::size_t>(2 * max_score) || max_score == 0) {
        throw DomainError("policy table must have one row for every (group, score) pair");
    }
    PolicyParams params(max_score);
    for (const auto& [key, logits] : rows) {
        const Group g = key.first == 0 ? Group::plus : Group::minus;
        params.at(g, key.second, Decision::deny) = logits.first;
        params.at(g, key.second, Decision::approve) = logits.second;
    }
    if (!params.all_finite()) throw DomainError("policy table contains non-finite logits");
    return params;
}

void save_policy(const std::string& path, const PolicyParams& params) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_policy(os, params);
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

PolicyParams load_policy(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_policy(is);
}

}  // namespace fairrl
