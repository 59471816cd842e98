#include "cdg/analysis.hpp"

#include "cdg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdg {

CorrelationResult channel_correlation(const Tensor4& x, Axis axis, std::size_t distance) {
    const Tensor4 oriented = axis == Axis::output ? x : transpose_axes(x, Perm{1, 0, 2, 3});
    const auto n = static_cast<std::size_t>(oriented.rows());
    if (distance == 0 || distance >= n)
        throw std::invalid_argument("channel_correlation: distance " + std::to_string(distance) +
                                    " must lie in [1, " + std::to_string(n) + ")");

    Eigen::MatrixXd slices = oriented.matrix();
    const Eigen::VectorXd means = slices.rowwise().mean();
    slices.colwise() -= means;
    const Eigen::VectorXd norms = slices.rowwise().norm();

    CorrelationResult res;
    double total = 0.0;
    for (std::size_t i = 0; i + distance < n; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(i + distance);
        if (norms[a] == 0.0 || norms[b] == 0.0) {
            ++res.n_degenerate;
            continue;
        }
        const double r = slices.row(a).dot(slices.row(b)) / (norms[a] * norms[b]);
        total += std::clamp(r, -1.0, 1.0);
        ++res.n_pairs;
    }
    if (res.n_pairs > 0) res.mean = total / static_cast<double>(res.n_pairs);
    return res;
}

TrialStats trial_stats(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("trial_stats: no values");
    TrialStats s;
    s.count = values.size();
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
        s.std_defined = true;
    }
    return s;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    if (!os) throw IoError("write failed: " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string text;
    while (std::getline(is, text)) {
        std::vector<std::string> cells;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!text.empty() && text.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

void emit_report(std::span<const TrialReport> trials, const std::filesystem::path& dir) {
    if (trials.empty()) throw std::invalid_argument("emit_report: no trials");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::vector<std::string>> acc_rows;
    std::vector<std::vector<std::string>> corr_rows;
    for (const auto& t : trials) {
        for (const auto& e : t.epochs)
            acc_rows.push_back({std::to_string(e.epoch), std::to_string(t.seed), t.metric, format_real(e.train_acc),
                                e.test_acc ? format_real(*e.test_acc) : std::string{}});
        for (const auto& c : t.correlations)
            corr_rows.push_back({c.layer, std::string(to_string(c.axis)), std::to_string(c.distance),
                                 c.mean_corr ? format_real(*c.mean_corr) : std::string{},
                                 std::to_string(c.n_pairs)});
    }
    write_csv(dir / "accuracy.csv", {"epoch", "seed", "metric", "train_acc", "test_acc"}, acc_rows);
    write_csv(dir / "correlation.csv", {"layer", "axis", "d", "mean_corr", "n_pairs"}, corr_rows);

    // Per-metric final accuracy statistics, metrics in first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> finals;
    for (const auto& t : trials) {
        if (!finals.contains(t.metric)) order.push_back(t.metric);
        finals[t.metric].push_back(t.final_test_acc);
    }
    nlohmann::ordered_json summary;
    summary["config"] = trials.front().config;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::array();
    for (const auto& name : order) {
        const TrialStats s = trial_stats(finals[name]);
        nlohmann::ordered_json m;
        m["metric"] = name;
        m["n_trials"] = s.count;
        m["mean_final_test_acc"] = s.mean;
        m["std_final_test_acc"] = s.std;
        m["std_defined"] = s.std_defined;
        m["min_final_test_acc"] = s.min;
        m["max_final_test_acc"] = s.max;
        metrics.push_back(std::move(m));
    }
    summary["metrics"] = std::move(metrics);
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (const auto& t : trials) seeds.push_back({{"seed", t.seed}, {"metric", t.metric},
                                                  {"final_test_acc", t.final_test_acc},
                                                  {"final_loss", t.final_loss}});
    summary["trials"] = std::move(seeds);

    std::ofstream os(dir / "summary.json", std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + (dir / "summary.json").string() + " for writing");
    os << summary.dump(2) << '\n';
    if (!os) throw IoError("write failed: summary.json");
}

}  // namespace cdg
