#pragma once

// Run configuration. The file format is flat `key = value` text, one setting
// per line, `#` starts a comment. Keys:
//
//   task            mnist | fashion_mnist | synthetic
//   data_dir        directory holding the IDX files (falls back to $CDG_DATA_DIR)
//   train_images, train_labels, test_images, test_labels
//                   explicit IDX paths, relative ones resolved against data_dir
//   train_n         training samples drawn from the training source (2000)
//   test_n          cap on test samples, 0 = all (0)
//   split_seed      seed of the train/test selection (0)
//   optimizer       sgd | adam
//   lr momentum weight_decay beta1 beta2 eps
//   metric          identity | reweighted_h0 | reweighted_h0_code_variant |
//                   sobolev_h1 | sobolev_tilde_h1 | laplacian_rasterized
//   lambda          smoothness (1); 0 selects the identity metric
//   beta            weight of the raw gradient added to Sobolev gradients (1)
//   axis            output | input
//   rasterize       true | false
//   sigma           laplacian_rasterized strength (1)
//   layers          conv | all   parameters that get preconditioned
//   epochs batch_size lr_period eval_every
//   seeds           comma-separated list
//   corr_max_d      largest slice distance in correlation reports (8)
//   precision       float | double   working precision of the network
//   synthetic_dims  O,I,H,W of the synthetic quadratic
//   synthetic_steps optimizer steps per synthetic epoch
//   lambdas         sweep values, comma-separated
//   sweep_metrics   metrics swept by `sweep`, comma-separated
//   out_dir         report directory
//   save_params     write final parameters as CDG1 files
//   jobs            concurrent trials

#include "cdg/optim.hpp"
#include "cdg/precondition.hpp"
#include "cdg/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace cdg {

enum class Task { mnist, fashion_mnist, synthetic };
enum class OptimizerKind { sgd, adam };
enum class LayerScope { conv, all };
enum class Precision { single, double_ };

struct RunConfig {
    Task task = Task::mnist;
    std::filesystem::path data_dir;
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::size_t train_n = 2000;
    std::size_t test_n = 0;
    std::uint64_t split_seed = 0;

    OptimizerKind optimizer = OptimizerKind::sgd;
    SgdOptions sgd;
    AdamOptions adam;

    PrecondConfig precond;
    /// Raw smoothness setting; 0 means plain SGD/Adam.
    double lambda = 1.0;
    LayerScope layers = LayerScope::conv;

    std::size_t epochs = 20;
    std::size_t batch_size = 100;
    std::size_t lr_period = 40;
    std::size_t eval_every = 1;
    std::vector<std::uint64_t> seeds{1};
    std::size_t corr_max_d = 8;
    Precision precision = Precision::single;

    Dims synthetic_dims{16, 8, 3, 3};
    std::size_t synthetic_steps = 100;

    std::vector<double> lambdas;
    std::vector<Metric> sweep_metrics;

    std::filesystem::path out_dir = "cdg_out";
    bool save_params = false;
    std::size_t jobs = 1;

    void validate() const;
    /// Preconditioner actually applied: identity when lambda == 0.
    PrecondConfig effective_precond() const;
    /// Settings that influence numeric results (out_dir and jobs excluded).
    std::map<std::string, std::string> echo() const;
    /// Label identifying the optimizer configuration in reports.
    std::string label() const;
};

/// Applies one `key = value` setting; unknown keys and bad values raise
/// std::invalid_argument.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

std::vector<double> parse_real_list(const std::string& text);

}  // namespace cdg
