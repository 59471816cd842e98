#pragma once

#include "cdg/precondition.hpp"
#include "cdg/tensor.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdg {

struct CorrelationResult {
    /// Mean Pearson correlation; empty when every pair had a constant slice.
    std::optional<double> mean;
    std::size_t n_pairs = 0;
    std::size_t n_degenerate = 0;
};

/// Mean Pearson correlation between slices i, j along `axis` with |i - j| = d.
/// Each slice is flattened over the remaining axes and centered on its own mean.
CorrelationResult channel_correlation(const Tensor4& x, Axis axis, std::size_t distance);

struct TrialStats {
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator); 0 when n == 1.
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
    bool std_defined = false;
};

TrialStats trial_stats(std::span<const double> values);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    /// Absent on epochs that were not evaluated.
    std::optional<double> test_acc;
};

struct CorrelationRecord {
    std::string layer;
    Axis axis = Axis::output;
    std::size_t distance = 0;
    std::optional<double> mean_corr;
    std::size_t n_pairs = 0;
};

struct TrialReport {
    std::uint64_t seed = 0;
    std::string metric;  // label identifying the optimizer configuration
    double lambda = 0.0;
    std::vector<EpochRecord> epochs;
    std::vector<CorrelationRecord> correlations;
    double final_test_acc = 0.0;
    double final_loss = 0.0;
    /// Flat key/value echo of the run configuration.
    std::map<std::string, std::string> config;
};

/// Writes accuracy.csv, correlation.csv and summary.json into `dir`.
void emit_report(std::span<const TrialReport> trials, const std::filesystem::path& dir);

/// Decimal text of a double with 17 significant digits ("nan" for NaN).
std::string format_real(double v);

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace cdg
