#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairrl/trainer.hpp"

namespace fairrl {

/// One CSV row per (run, iteration). Seed-averaged rows carry seed = -1.
struct MetricRow {
    int iteration = 0;
    std::int64_t seed = 0;
    std::string algo;
    double utility = 0.0;
    double c_pi = 0.0;
    double dpe = 0.0;
    double ipe = 0.0;
    double spe = 0.0;
    double lambda_metric = 0.0;
    double wasserstein_gap = 0.0;
    double loan_rate_plus = 0.0;
    double loan_rate_minus = 0.0;
    double adjusted_c_pi = 0.0;

    bool operator==(const MetricRow&) const = default;
};

inline constexpr std::array<std::string_view, 13> kMetricColumns{
    "iteration",    "seed",       "algo",           "utility",        "c_pi",
    "dpe",          "ipe",        "spe",            "lambda_metric",  "wasserstein_gap",
    "loan_rate_plus", "loan_rate_minus", "adjusted_c_pi"};

/// The ten numeric metric columns, in CSV order.
inline constexpr std::array<std::string_view, 10> kMetricNames{
    "utility", "c_pi", "dpe", "ipe", "spe", "lambda_metric", "wasserstein_gap",
    "loan_rate_plus", "loan_rate_minus", "adjusted_c_pi"};

double metric_value(const MetricRow& row, std::string_view name);
double& metric_value(MetricRow& row, std::string_view name);

MetricRow make_row(const IterationRecord& rec, std::int64_t seed, std::string_view algo);

std::string csv_header();
/// Throws std::runtime_error naming the iteration when a metric is not finite.
std::string format_row(const MetricRow& row);
MetricRow parse_row(std::string_view line);

/// Header plus one line per row, LF endings. Refuses to write NaN/inf.
void emit_csv(std::span<const MetricRow> rows, const std::filesystem::path& path);
std::vector<MetricRow> read_csv(const std::filesystem::path& path);

/// Appends rows one at a time and flushes after each, so an interrupted run
/// keeps what it has.
class CsvStreamWriter {
public:
    explicit CsvStreamWriter(const std::filesystem::path& path);
    void append(const MetricRow& row);

private:
    std::filesystem::path path_;
    std::ofstream os_;
};

/// Element-wise mean of per-seed histories with matching iteration counts.
std::vector<MetricRow> average_rows(std::span<const std::vector<MetricRow>> runs, std::string_view algo);

struct Series {
    std::string name;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double stroke_width = 2.0;
    double opacity = 1.0;
};

struct ChartLabels {
    std::string title;
    std::string x_label = "iteration";
    std::string y_label;
};

/// Static SVG 1.1 line chart, one polyline per series, x = 1..n.
std::string render_svg(std::span<const Series> series, const ChartLabels& labels);
void emit_svg(std::span<const Series> series, const ChartLabels& labels, const std::filesystem::path& path);

}  // namespace fairrl
