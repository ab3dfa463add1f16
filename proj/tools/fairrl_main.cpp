// fairrl: train, decompose and sweep on the lending environment.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fairrl/analysis.hpp"
#include "fairrl/config.hpp"
#include "fairrl/counterfactual.hpp"
#include "fairrl/experiment.hpp"
#include "fairrl/policy.hpp"

namespace {

using namespace fairrl;

struct CommonOptions {
    std::string config_path;
    std::string preset_name;
    std::string out_dir = "fairrl_out";
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::string> algos;
    std::optional<std::string> mode;
    std::optional<double> beta_kl, beta_c, beta_lambda, epsilon, learning_rate;
    std::optional<int> iterations, episodes;
    bool adjusted = false;
    int threads = 0;
};

void add_source_flags(CLI::App* cmd, CommonOptions& o) {
    auto* cfg = cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* pre = cmd->add_option("--preset", o.preset_name, "built-in environment (setting1, setting2, setting3)");
    cfg->excludes(pre);
    cmd->add_option("--epsilon", o.epsilon, "Lambda similarity radius");
}

void add_train_flags(CLI::App* cmd, CommonOptions& o) {
    add_source_flags(cmd, o);
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seeds", o.seeds, "comma-separated seed list")->delimiter(',')->capture_default_str();
    cmd->add_option("--algo", o.algos, "ppo, ppo-c or ppo-cb (repeatable or comma-separated)")
        ->delimiter(',')
        ->check(CLI::IsMember({"ppo", "ppo-c", "ppo-cb"}));
    cmd->add_option("--mode", o.mode, "oracle or sampled")->check(CLI::IsMember({"oracle", "sampled"}));
    cmd->add_option("--beta-kl", o.beta_kl, "KL penalty weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta-c", o.beta_c, "parity penalty weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta-lambda", o.beta_lambda, "benefit-fairness penalty weight")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", o.learning_rate, "learning rate")->check(CLI::NonNegativeNumber);
    cmd->add_option("--iterations", o.iterations, "training iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--episodes", o.episodes, "episodes per iteration")->check(CLI::PositiveNumber);
    cmd->add_flag("--adjusted", o.adjusted, "train against the baseline-adjusted parity");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

LoadedConfig resolve(const CommonOptions& o) {
    LoadedConfig loaded;
    if (!o.config_path.empty()) {
        loaded = load_config(o.config_path);
    } else {
        loaded.env = preset(o.preset_name.empty() ? "setting1" : o.preset_name);
    }
    auto& t = loaded.train;
    if (o.mode) t.mode = parse_mode(*o.mode);
    if (o.beta_kl) t.beta_kl = *o.beta_kl;
    if (o.beta_c) t.beta_c = *o.beta_c;
    if (o.beta_lambda) t.beta_lambda = *o.beta_lambda;
    if (o.epsilon) t.epsilon = *o.epsilon;
    if (o.learning_rate) t.learning_rate = *o.learning_rate;
    if (o.iterations) t.iterations = *o.iterations;
    if (o.episodes) t.episodes_per_iter = *o.episodes;
    if (o.adjusted) t.adjusted_parity = true;
    t.validate();
    return loaded;
}

ExperimentSpec make_spec(const CommonOptions& o) {
    const auto loaded = resolve(o);
    ExperimentSpec spec;
    spec.env = loaded.env;
    spec.train = loaded.train;
    spec.seeds = o.seeds;
    spec.out_dir = o.out_dir;
    spec.adjusted = o.adjusted;
    spec.threads = o.threads;
    spec.algos.clear();
    for (const auto& a : o.algos) spec.algos.push_back(parse_algo(a));
    if (spec.algos.empty()) spec.algos.push_back(loaded.train.algo);
    return spec;
}

void print_summary(const ArtifactManifest& m) {
    std::printf("%-28s %10s %10s %10s %10s %10s %10s %10s\n", "run", "utility", "c_pi", "dpe", "ipe", "spe",
                "lambda", "w1");
    for (const auto& [label, rows] : m.means) {
        if (rows.empty()) continue;
        const auto& r = rows.back();
        std::printf("%-28s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n", label.c_str(), r.utility, r.c_pi,
                    r.dpe, r.ipe, r.spe, r.lambda_metric, r.wasserstein_gap);
    }
    std::printf("wrote %zu files\n", m.all().size());
}

void print_report(const DecompositionReport& r, double utility, double adjusted) {
    std::printf("utility          %.10g\n", utility);
    std::printf("c_pi             %.10g\n", r.c_pi);
    std::printf("dpe              %.10g\n", r.dpe);
    std::printf("ipe              %.10g\n", r.ipe);
    std::printf("spe              %.10g\n", r.spe);
    std::printf("lambda           %.10g\n", r.lambda_metric);
    std::printf("wasserstein_gap  %.10g\n", r.wasserstein_gap);
    std::printf("loan_rate_plus   %.10g\n", r.loan_rate.plus);
    std::printf("loan_rate_minus  %.10g\n", r.loan_rate.minus);
    std::printf("adjusted_c_pi    %.10g\n", adjusted);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware lending RL lab"};
    app.require_subcommand(1);

    CommonOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "train one or more algorithms over a seed list");
    add_train_flags(train_cmd, train_opts);

    CommonOptions sweep_opts;
    std::string sweep_param = "beta_lambda";
    std::vector<double> sweep_values{0.0, 0.5, 1.0, 2.0};
    auto* sweep_cmd = app.add_subcommand("sweep", "train one algorithm across values of a penalty weight");
    add_train_flags(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--param", sweep_param, "beta_kl, beta_c, beta_lambda or epsilon")
        ->check(CLI::IsMember({"beta_kl", "beta_c", "beta_lambda", "epsilon"}))
        ->capture_default_str();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->capture_default_str();

    CommonOptions dec_opts;
    std::string policy_path;
    std::string coupling_path;
    std::uint64_t policy_seed = 1;
    std::string constant;
    auto* dec_cmd = app.add_subcommand("decompose", "exact decomposition of a fixed policy");
    add_source_flags(dec_cmd, dec_opts);
    auto* pol = dec_cmd->add_option("--policy", policy_path, "policy logit table")->check(CLI::ExistingFile);
    auto* cst = dec_cmd->add_option("--constant", constant, "always approve or always deny")
                    ->check(CLI::IsMember({"approve", "deny"}));
    pol->excludes(cst);
    dec_cmd->add_option("--policy-seed", policy_seed, "seed for a random policy when no table is given");
    dec_cmd->add_option("--dump-coupling", coupling_path, "write the plus-group baseline coupling as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*train_cmd) {
            print_summary(run_experiment(make_spec(train_opts)));
        } else if (*sweep_cmd) {
            if (sweep_opts.algos.size() > 1) throw std::invalid_argument("sweep takes a single --algo");
            const auto spec = make_spec(sweep_opts);
            print_summary(run_variants(spec, sweep_variants(spec, sweep_param, sweep_values)));
        } else if (*dec_cmd) {
            const auto loaded = resolve(dec_opts);
            const auto& env = loaded.env;
            PolicyParams params(env.num_levels);
            if (!policy_path.empty()) {
                params = load_policy(policy_path);
                if (params.levels() != env.num_levels) {
                    throw std::invalid_argument("policy has " + std::to_string(params.levels()) +
                                                " levels, environment has " + std::to_string(env.num_levels));
                }
            } else if (!constant.empty()) {
                params = constant_policy(env.num_levels, constant == "approve" ? Decision::approve : Decision::deny);
            } else {
                Rng rng(policy_seed);
                params = random_policy(rng, env.num_levels, loaded.train.init_logit_scale);
            }
            const auto report = decompose(params, env, loaded.train.epsilon);
            print_report(report, expected_utility(params, env), adjusted_parity(params, env));
            if (!coupling_path.empty()) {
                const auto c = monotone_coupling(common_marginal(env), env.init_score_dist.plus);
                std::ofstream os(coupling_path);
                if (!os) throw std::runtime_error("cannot open '" + coupling_path + "' for writing");
                c.write_csv(os);
                std::printf("coupling written to %s\n", coupling_path.c_str());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fairrl: %s\n", e.what());
        return 1;
    }
    return 0;
}
