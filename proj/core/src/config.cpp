#include "fairrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "presets_data.hpp"

namespace fairrl {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + path + key + "'");
    }
}

const json& require_object(const json& j, const std::string& field) {
    if (!j.is_object()) throw ConfigError("field '" + field + "' must be an object");
    return j;
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError("field '" + field + "' must be a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw ConfigError("field '" + field + "' must be an integer");
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) throw ConfigError("field '" + field + "' must be a boolean");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError("field '" + field + "' must be a string");
    return j.get<std::string>();
}

std::vector<double> get_vector(const json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError("field '" + field + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

template <class F>
void per_group(const json& j, const std::string& field, F&& assign) {
    require_object(j, field);
    reject_unknown(j, {"plus", "minus"}, field + ".");
    for (Group g : kGroups) {
        const std::string name(to_string(g));
        if (!j.contains(name)) throw ConfigError("missing field '" + field + "." + name + "'");
        assign(g, get_vector(j.at(name), field + "." + name));
    }
}

EnvConfig parse_env(const json& j) {
    require_object(j, "env");
    reject_unknown(j,
                   {"preset", "num_levels", "group_prior", "init_score_dist", "repay_prob", "drift_dist",
                    "gain_potential", "reward_success", "reward_default", "horizon"},
                   "env.");
    EnvConfig cfg;
    const bool has_base = j.contains("preset");
    if (has_base) cfg = preset(get_string(j.at("preset"), "env.preset"));

    const auto need = [&](const char* key) {
        if (!has_base && !j.contains(key)) throw ConfigError(std::string("missing field 'env.") + key + "'");
        return j.contains(key);
    };
    if (need("num_levels")) cfg.num_levels = get_int(j.at("num_levels"), "env.num_levels");
    if (need("group_prior")) cfg.group_prior = get_number(j.at("group_prior"), "env.group_prior");
    if (need("init_score_dist")) {
        per_group(j.at("init_score_dist"), "env.init_score_dist",
                  [&](Group g, std::vector<double> v) { cfg.init_score_dist[g] = std::move(v); });
    }
    if (need("repay_prob")) {
        per_group(j.at("repay_prob"), "env.repay_prob",
                  [&](Group g, std::vector<double> v) { cfg.repay_prob[g] = std::move(v); });
    }
    if (need("drift_dist")) {
        per_group(j.at("drift_dist"), "env.drift_dist", [&](Group g, std::vector<double> v) {
            if (v.size() != 3) {
                throw ConfigError("field 'env.drift_dist." + std::string(to_string(g)) +
                                  "' must have 3 entries (drift -1, 0, +1)");
            }
            cfg.drift_dist[g] = {v[0], v[1], v[2]};
        });
    }
    if (j.contains("gain_potential")) {
        per_group(j.at("gain_potential"), "env.gain_potential",
                  [&](Group g, std::vector<double> v) { cfg.gain_potential[g] = std::move(v); });
    }
    if (need("reward_success")) cfg.reward_success = get_number(j.at("reward_success"), "env.reward_success");
    if (need("reward_default")) cfg.reward_default = get_number(j.at("reward_default"), "env.reward_default");
    if (need("horizon")) cfg.horizon = get_int(j.at("horizon"), "env.horizon");
    cfg.validate();
    return cfg;
}

TrainConfig parse_train(const json& j) {
    require_object(j, "train");
    reject_unknown(j,
                   {"beta_kl", "beta_c", "beta_lambda", "learning_rate", "iterations", "episodes_per_iter",
                    "minibatch_size", "epochs_per_batch", "mode", "algo", "epsilon", "adjusted_parity",
                    "init_logit_scale"},
                   "train.");
    TrainConfig cfg;
    const auto num = [&](const char* key, double& out) {
        if (j.contains(key)) out = get_number(j.at(key), std::string("train.") + key);
    };
    const auto integer = [&](const char* key, int& out) {
        if (j.contains(key)) out = get_int(j.at(key), std::string("train.") + key);
    };
    num("beta_kl", cfg.beta_kl);
    num("beta_c", cfg.beta_c);
    num("beta_lambda", cfg.beta_lambda);
    num("learning_rate", cfg.learning_rate);
    num("epsilon", cfg.epsilon);
    num("init_logit_scale", cfg.init_logit_scale);
    integer("iterations", cfg.iterations);
    integer("episodes_per_iter", cfg.episodes_per_iter);
    integer("minibatch_size", cfg.minibatch_size);
    integer("epochs_per_batch", cfg.epochs_per_batch);
    if (j.contains("mode")) cfg.mode = parse_mode(get_string(j.at("mode"), "train.mode"));
    if (j.contains("algo")) cfg.algo = parse_algo(get_string(j.at("algo"), "train.algo"));
    if (j.contains("adjusted_parity")) cfg.adjusted_parity = get_bool(j.at("adjusted_parity"), "train.adjusted_parity");
    cfg.validate();
    return cfg;
}

}  // namespace

LoadedConfig parse_config(std::string_view text, std::string_view source) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
    try {
        require_object(doc, "<root>");
        reject_unknown(doc, {"env", "train"}, "");
        if (!doc.contains("env")) throw ConfigError("missing field 'env'");
        LoadedConfig out;
        out.env = parse_env(doc.at("env"));
        if (doc.contains("train")) out.train = parse_train(doc.at("train"));
        return out;
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
}

LoadedConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string_view preset_source(std::string_view name) {
    for (const auto& p : detail::kPresets) {
        if (p.name == name) return p.json;
    }
    std::string known;
    for (const auto& p : detail::kPresets) known += (known.empty() ? "" : ", ") + std::string(p.name);
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

EnvConfig preset(std::string_view name) {
    const auto text = preset_source(name);
    const auto doc = json::parse(text.begin(), text.end());
    if (doc.at("env").contains("preset")) throw ConfigError("preset '" + std::string(name) + "' must not chain");
    return parse_env(doc.at("env"));
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& p : detail::kPresets) out.emplace_back(p.name);
    return out;
}

}  // namespace fairrl
