#pragma once

#include "cdg/analysis.hpp"
#include "cdg/config.hpp"
#include "cdg/data.hpp"
#include "cdg/nn.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdg {

struct TrainingData {
    Dataset train;
    Dataset test;
};

/// Resolves and reads the IDX files named by cfg. Missing files raise IoError.
TrainingData load_training_data(const RunConfig& cfg);

/// Preconditioner for one network parameter under cfg (identity for skipped layers).
PrecondConfig layer_precond(const RunConfig& cfg, std::size_t param_id);

/// One seeded CNN training run.
TrialReport run_cnn_trial(const RunConfig& cfg, const TrainingData& data, std::uint64_t seed,
                          ModelParams* final_params = nullptr);

/// One seeded run on the synthetic quadratic.
TrialReport run_synthetic_trial(const RunConfig& cfg, std::uint64_t seed);

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every seed of cfg and writes reports into cfg.out_dir.
std::vector<TrialReport> cmd_train(const RunConfig& cfg, const ProgressFn& progress = {});

/// Same as cmd_train with preloaded data and no file output.
std::vector<TrialReport> run_trials(const RunConfig& cfg, const TrainingData* data,
                                    const ProgressFn& progress = {});

struct SummaryRow {
    std::string direction;
    std::string metric;
    double lambda = 0.0;
    TrialStats test_acc;
    /// Mean over seeds of the conv2 output/input correlation at distance 1.
    std::optional<double> output_corr_d1;
    std::optional<double> input_corr_d1;
};

SummaryRow summarize(const std::string& direction, const RunConfig& cfg, std::span<const TrialReport> trials);

/// lambda = 0 rows are the unpreconditioned baseline. Writes sweep.csv.
std::vector<SummaryRow> cmd_sweep(const RunConfig& cfg, const std::vector<double>& lambdas,
                                  const ProgressFn& progress = {});

/// Output-axis, input-axis, rasterized LS and output re-weighted H0 against
/// the baseline. Writes ablation.csv.
std::vector<SummaryRow> cmd_ablate_direction(const RunConfig& cfg, const ProgressFn& progress = {});

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

/// Correlation of one tensor for d = 1..max_d along axis; writes the CSV.
std::vector<CorrelationRecord> cmd_analyze(const std::filesystem::path& in, Axis axis, std::size_t max_d,
                                           const std::filesystem::path& out);

struct VerifyOptions {
    std::string suite;            // empty = all suites
    std::vector<double> lambdas;  // empty = {0.1, 1, 10}
    std::uint64_t seed = 7;
};

/// Runs the numerical verification suites and prints one line per suite.
/// Returns true iff every selected suite passed.
bool cmd_verify(const VerifyOptions& opts, std::ostream& out);

const std::vector<std::string>& verify_suite_names();

}  // namespace cdg
