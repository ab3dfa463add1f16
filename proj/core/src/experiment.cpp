#include "fairrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fairrl {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

void check_output_dir(const fs::path& dir) {
    if (dir.empty()) throw std::runtime_error("output directory not set");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream os(probe);
        if (!os || !(os << "ok")) throw std::runtime_error("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

std::string format_value(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::vector<fs::path> ArtifactManifest::all() const {
    std::vector<fs::path> out(run_csvs);
    out.insert(out.end(), mean_csvs.begin(), mean_csvs.end());
    out.insert(out.end(), charts.begin(), charts.end());
    return out;
}

std::vector<RunVariant> algo_variants(const ExperimentSpec& spec) {
    std::vector<RunVariant> out;
    for (Algo a : spec.algos) {
        TrainConfig t = spec.train;
        t.algo = a;
        out.push_back({std::string(to_string(a)), t});
    }
    return out;
}

std::vector<RunVariant> sweep_variants(const ExperimentSpec& spec, const std::string& param,
                                       const std::vector<double>& values) {
    if (spec.algos.empty()) throw std::invalid_argument("sweep needs an algo");
    const Algo algo = spec.algos.front();
    std::vector<RunVariant> out;
    for (double v : values) {
        TrainConfig t = spec.train;
        t.algo = algo;
        if (param == "beta_kl") t.beta_kl = v;
        else if (param == "beta_c") t.beta_c = v;
        else if (param == "beta_lambda") t.beta_lambda = v;
        else if (param == "epsilon") t.epsilon = v;
        else throw std::invalid_argument("cannot sweep '" + param + "' (beta_kl, beta_c, beta_lambda, epsilon)");
        out.push_back({std::string(to_string(algo)) + "_" + param + "_" + format_value(v), t});
    }
    return out;
}

ArtifactManifest run_variants(const ExperimentSpec& spec, const std::vector<RunVariant>& input) {
    if (spec.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
    if (input.empty()) throw std::invalid_argument("experiment needs at least one algo");
    spec.env.validate();
    std::vector<RunVariant> variants = input;
    std::set<std::string> labels;
    for (auto& v : variants) {
        v.train.adjusted_parity = v.train.adjusted_parity || spec.adjusted;
        v.train.validate();
        if (v.label.empty() || v.label.find_first_of("/\\,\n") != std::string::npos) {
            throw std::invalid_argument("bad run label '" + v.label + "'");
        }
        if (!labels.insert(v.label).second) throw std::invalid_argument("duplicate run label '" + v.label + "'");
    }
    std::set<std::uint64_t> seen;
    for (auto s : spec.seeds) {
        if (!seen.insert(s).second) throw std::invalid_argument("duplicate seed " + std::to_string(s));
    }
    check_output_dir(spec.out_dir);

    struct Job {
        std::size_t variant;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (std::size_t k = 0; k < spec.seeds.size(); ++k) jobs.push_back({v, k});
    }

    ArtifactManifest manifest;
    std::vector<std::vector<std::vector<MetricRow>>> results(variants.size(),
                                                             std::vector<std::vector<MetricRow>>(spec.seeds.size()));
    for (const auto& job : jobs) {
        manifest.run_csvs.push_back(spec.out_dir / (variants[job.variant].label + "_seed" +
                                                    std::to_string(spec.seeds[job.seed_index]) + ".csv"));
    }

    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            try {
                const auto& job = jobs[j];
                const auto& variant = variants[job.variant];
                const std::uint64_t seed = spec.seeds[job.seed_index];
                CsvStreamWriter writer(manifest.run_csvs[j]);
                auto& rows = results[job.variant][job.seed_index];
                Rng rng(seed);
                train(spec.env, variant.train, rng, [&](const IterationRecord& rec) {
                    rows.push_back(make_row(rec, static_cast<std::int64_t>(seed), variant.label));
                    writer.append(rows.back());
                });
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_threads =
        std::min<std::size_t>(jobs.size(), spec.threads > 0 ? static_cast<std::size_t>(spec.threads) : hw);
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t v = 0; v < variants.size(); ++v) {
        const auto& label = variants[v].label;
        auto mean = average_rows(results[v], label);
        const fs::path path = spec.out_dir / (label + "_mean.csv");
        emit_csv(mean, path);
        manifest.mean_csvs.push_back(path);
        manifest.runs[label] = std::move(results[v]);
        manifest.means[label] = std::move(mean);
    }

    for (auto metric : kMetricNames) {
        std::vector<Series> series;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto& label = variants[v].label;
            const std::string color = kPalette[v % kPalette.size()];
            const auto& per_seed = manifest.runs.at(label);
            for (std::size_t k = 0; k < per_seed.size(); ++k) {
                Series s{label + " seed " + std::to_string(spec.seeds[k]), {}, color, 1.0, 0.3};
                for (const auto& r : per_seed[k]) s.y.push_back(metric_value(r, metric));
                series.push_back(std::move(s));
            }
            Series m{label + " mean", {}, color, 2.5, 1.0};
            for (const auto& r : manifest.means.at(label)) m.y.push_back(metric_value(r, metric));
            series.push_back(std::move(m));
        }
        const fs::path path = spec.out_dir / (std::string(metric) + ".svg");
        emit_svg(series, {std::string(metric) + " over training", "iteration", std::string(metric)}, path);
        manifest.charts.push_back(path);
    }
    return manifest;
}

ArtifactManifest run_experiment(const ExperimentSpec& spec) { return run_variants(spec, algo_variants(spec)); }

}  // namespace fairrl
