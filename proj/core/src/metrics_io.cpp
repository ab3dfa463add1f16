#include "fairrl/metrics_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fairrl {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_double(std::string_view s, std::string_view column) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("cannot parse column '" + std::string(column) + "' value '" + std::string(s) + "'");
    }
    return v;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view column) {
    Int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("cannot parse column '" + std::string(column) + "' value '" + std::string(s) + "'");
    }
    return v;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

double& metric_value(MetricRow& row, std::string_view name) {
    if (name == "utility") return row.utility;
    if (name == "c_pi") return row.c_pi;
    if (name == "dpe") return row.dpe;
    if (name == "ipe") return row.ipe;
    if (name == "spe") return row.spe;
    if (name == "lambda_metric") return row.lambda_metric;
    if (name == "wasserstein_gap") return row.wasserstein_gap;
    if (name == "loan_rate_plus") return row.loan_rate_plus;
    if (name == "loan_rate_minus") return row.loan_rate_minus;
    if (name == "adjusted_c_pi") return row.adjusted_c_pi;
    throw std::out_of_range("unknown metric '" + std::string(name) + "'");
}

double metric_value(const MetricRow& row, std::string_view name) {
    return metric_value(const_cast<MetricRow&>(row), name);
}

MetricRow make_row(const IterationRecord& rec, std::int64_t seed, std::string_view algo) {
    MetricRow row;
    row.iteration = rec.iteration;
    row.seed = seed;
    row.algo = std::string(algo);
    row.utility = rec.utility;
    row.c_pi = rec.report.c_pi;
    row.dpe = rec.report.dpe;
    row.ipe = rec.report.ipe;
    row.spe = rec.report.spe;
    row.lambda_metric = rec.report.lambda_metric;
    row.wasserstein_gap = rec.report.wasserstein_gap;
    row.loan_rate_plus = rec.report.loan_rate.plus;
    row.loan_rate_minus = rec.report.loan_rate.minus;
    row.adjusted_c_pi = rec.adjusted_c_pi;
    return row;
}

std::string csv_header() {
    std::string out;
    for (std::size_t i = 0; i < kMetricColumns.size(); ++i) {
        if (i) out += ',';
        out += kMetricColumns[i];
    }
    return out;
}

std::string format_row(const MetricRow& row) {
    for (auto name : kMetricNames) {
        if (!std::isfinite(metric_value(row, name))) {
            throw std::runtime_error("refusing to emit non-finite " + std::string(name) + " at iteration " +
                                     std::to_string(row.iteration));
        }
    }
    if (row.algo.find_first_of(",\n\r\"") != std::string::npos) {
        throw std::runtime_error("algo label contains a CSV delimiter");
    }
    std::string out = std::to_string(row.iteration) + ',' + std::to_string(row.seed) + ',' + row.algo;
    for (auto name : kMetricNames) out += ',' + shortest(metric_value(row, name));
    return out;
}

MetricRow parse_row(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (cells.size() != kMetricColumns.size()) {
        throw std::runtime_error("expected " + std::to_string(kMetricColumns.size()) + " columns, got " +
                                 std::to_string(cells.size()));
    }
    MetricRow row;
    row.iteration = parse_int<int>(cells[0], "iteration");
    row.seed = parse_int<std::int64_t>(cells[1], "seed");
    row.algo = std::string(cells[2]);
    for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
        metric_value(row, kMetricNames[i]) = parse_double(cells[3 + i], kMetricNames[i]);
    }
    return row;
}

void emit_csv(std::span<const MetricRow> rows, const std::filesystem::path& path) {
    std::string text = csv_header() + '\n';
    for (const auto& r : rows) text += format_row(r) + '\n';
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<MetricRow> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line != csv_header()) {
        throw std::runtime_error("'" + path.string() + "' does not start with the metric header");
    }
    std::vector<MetricRow> rows;
    while (std::getline(is, line)) {
        if (!line.empty()) rows.push_back(parse_row(line));
    }
    return rows;
}

CsvStreamWriter::CsvStreamWriter(const std::filesystem::path& path)
    : path_(path), os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os_ << csv_header() << '\n' << std::flush;
}

void CsvStreamWriter::append(const MetricRow& row) {
    os_ << format_row(row) << '\n' << std::flush;
    if (!os_) throw std::runtime_error("failed writing '" + path_.string() + "'");
}

std::vector<MetricRow> average_rows(std::span<const std::vector<MetricRow>> runs, std::string_view algo) {
    if (runs.empty()) return {};
    const std::size_t n = runs.front().size();
    for (const auto& r : runs) {
        if (r.size() != n) throw std::runtime_error("cannot average runs of different lengths");
    }
    std::vector<MetricRow> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        MetricRow& avg = out[i];
        avg.iteration = runs.front()[i].iteration;
        avg.seed = -1;
        avg.algo = std::string(algo);
        for (auto name : kMetricNames) {
            double sum = 0.0;
            for (const auto& r : runs) sum += metric_value(r[i], name);
            metric_value(avg, name) = sum / static_cast<double>(runs.size());
        }
    }
    return out;
}

std::string render_svg(std::span<const Series> series, const ChartLabels& labels) {
    constexpr double width = 800.0, height = 480.0;
    constexpr double left = 80.0, right = 180.0, top = 50.0, bottom = 60.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t n_max = 1;
    for (const auto& s : series) {
        n_max = std::max(n_max, s.y.size());
        for (double v : s.y) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const auto sx = [&](std::size_t i) {
        return left + (n_max > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n_max - 1) : plot_w / 2);
    };
    const auto sy = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream os;
    os.precision(6);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << xml_escape(labels.title) << "</text>\n"
       << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
       << top + plot_h << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << sy(v) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << v << "</text>\n";
        const std::size_t i = (n_max - 1) * static_cast<std::size_t>(k) / 4;
        os << "<text x=\"" << sx(i) << "\" y=\"" << top + plot_h + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << i + 1 << "</text>\n";
    }
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(labels.x_label)
       << "</text>\n"
       << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"13\" transform=\"rotate(-90 18 " << top + plot_h / 2 << ")\">" << xml_escape(labels.y_label)
       << "</text>\n";

    int legend_row = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << xml_escape(s.color) << "\" stroke-width=\"" << s.stroke_width
           << "\" stroke-opacity=\"" << s.opacity << "\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            os << sx(i) << ',' << sy(s.y[i]) << ' ';
        }
        os << "\"><title>" << xml_escape(s.name) << "</title></polyline>\n";
        if (s.opacity >= 0.99) {
            const double ly = top + 14.0 + 18.0 * legend_row++;
            os << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 36
               << "\" y2=\"" << ly << "\" stroke=\"" << xml_escape(s.color) << "\" stroke-width=\"" << s.stroke_width
               << "\"/>\n"
               << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << ly + 4
               << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.name) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void emit_svg(std::span<const Series> series, const ChartLabels& labels, const std::filesystem::path& path) {
    const std::string text = render_svg(series, labels);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace fairrl
