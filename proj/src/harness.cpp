#include "cdg/harness.hpp"

#include "cdg/errors.hpp"
#include "cdg/optim.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace cdg {

namespace {

std::filesystem::path data_root(const RunConfig& cfg) {
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    if (const char* env = std::getenv("CDG_DATA_DIR"); env && *env) return env;
    return {};
}

std::filesystem::path resolve(const std::filesystem::path& root, const std::filesystem::path& p) {
    return p.is_absolute() || root.empty() ? p : root / p;
}

void require_file(const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) throw IoError("missing data file " + p.string());
}

Dataset seeded_subset(const Dataset& d, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n >= d.size()) return d;
    return inverted_split(d, n, seed).train;
}

}  // namespace

TrainingData load_training_data(const RunConfig& cfg) {
    if (cfg.task == Task::synthetic) return {};
    const auto root = data_root(cfg);

    // Training draws from the small official test split and evaluation uses the
    // large training split, which makes generalization harder.
    const auto train_images = resolve(root, cfg.train_images.empty() ? "t10k-images-idx3-ubyte" : cfg.train_images);
    const auto train_labels = resolve(root, cfg.train_labels.empty() ? "t10k-labels-idx1-ubyte" : cfg.train_labels);
    require_file(train_images);
    require_file(train_labels);

    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    if (!cfg.test_images.empty() || !cfg.test_labels.empty()) {
        test_images = resolve(root, cfg.test_images);
        test_labels = resolve(root, cfg.test_labels);
        require_file(test_images);
        require_file(test_labels);
    } else if (cfg.train_images.empty()) {
        const auto img = resolve(root, "train-images-idx3-ubyte");
        const auto lab = resolve(root, "train-labels-idx1-ubyte");
        if (std::filesystem::is_regular_file(img) && std::filesystem::is_regular_file(lab)) {
            test_images = img;
            test_labels = lab;
        }
    }

    const Dataset source = load_idx(train_images, train_labels);
    TrainingData out;
    if (!test_images.empty()) {
        if (cfg.train_n > source.size())
            throw std::invalid_argument("train_n exceeds the training source size " + std::to_string(source.size()));
        out.train = seeded_subset(source, cfg.train_n, cfg.split_seed);
        out.test = seeded_subset(load_idx(test_images, test_labels), cfg.test_n, cfg.split_seed + 1);
    } else {
        Split split = inverted_split(source, cfg.train_n, cfg.split_seed);
        out.train = std::move(split.train);
        out.test = seeded_subset(split.test, cfg.test_n, cfg.split_seed + 1);
    }
    return out;
}

PrecondConfig layer_precond(const RunConfig& cfg, std::size_t param_id) {
    const ParamKind kind = param_info()[param_id].kind;
    const bool smoothed = kind == ParamKind::conv || (kind == ParamKind::dense && cfg.layers == LayerScope::all);
    if (!smoothed) return PrecondConfig{};
    return cfg.effective_precond();
}

namespace {

void optimizer_step(const RunConfig& cfg, Tensor4& param, const Tensor4& grad, OptimState& state,
                    const PrecondConfig& precond, double lr_scale) {
    if (cfg.optimizer == OptimizerKind::sgd)
        sgd_step(param, grad, state, cfg.sgd, precond, lr_scale);
    else
        adam_step(param, grad, state, cfg.adam, precond, lr_scale);
}

TrialReport new_report(const RunConfig& cfg, std::uint64_t seed) {
    TrialReport r;
    r.seed = seed;
    r.metric = cfg.label();
    r.lambda = cfg.lambda;
    r.config = cfg.echo();
    return r;
}

}  // namespace

TrialReport run_cnn_trial(const RunConfig& cfg, const TrainingData& data, std::uint64_t seed,
                          ModelParams* final_params) {
    if (data.train.empty()) throw std::invalid_argument("training set is empty");
    TrialReport report = new_report(cfg, seed);

    ModelParams params = init_params(seed);
    std::array<OptimState, kNumParams> states;
    std::array<PrecondConfig, kNumParams> preconds;
    for (std::size_t k = 0; k < kNumParams; ++k) preconds[k] = layer_precond(cfg, k);

    const std::size_t n = data.train.size();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_scale = lr_schedule(epoch, cfg.lr_period);
        const auto order = shuffled_indices(n, seed, epoch);
        const std::span<const std::size_t> all(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const auto idx = all.subspan(start, std::min(cfg.batch_size, n - start));
            const Batch batch = data.train.batch(idx);
            const LossAndGrads lg = cfg.precision == Precision::single ? loss_and_grads<float>(params, batch)
                                                                       : loss_and_grads<double>(params, batch);
            loss_sum += lg.loss * static_cast<double>(idx.size());
            correct += lg.correct;
            for (std::size_t k = 0; k < kNumParams; ++k)
                optimizer_step(cfg, params[k], lg.grads[k], states[k], preconds[k], lr_scale);
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
        const bool evaluate = (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs;
        if (evaluate && !data.test.empty()) rec.test_acc = accuracy(params, data.test);
        report.epochs.push_back(rec);
    }
    if (!params.all_finite()) throw std::runtime_error("training diverged (non-finite parameters)");

    report.final_loss = report.epochs.back().train_loss;
    report.final_test_acc = report.epochs.back().test_acc.value_or(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t id : {std::size_t{conv1_weight}, std::size_t{conv2_weight}}) {
        for (Axis axis : {Axis::output, Axis::input}) {
            const std::size_t extent = params[id].dim(static_cast<int>(axis));
            for (std::size_t d = 1; d <= cfg.corr_max_d && d < extent; ++d) {
                const auto c = channel_correlation(params[id], axis, d);
                report.correlations.push_back(
                    {std::string(param_info()[id].name), axis, d, c.mean, c.n_pairs});
            }
        }
    }
    if (final_params) *final_params = std::move(params);
    return report;
}

TrialReport run_synthetic_trial(const RunConfig& cfg, std::uint64_t seed) {
    TrialReport report = new_report(cfg, seed);
    const SyntheticQuadratic problem = synthetic_quadratic(cfg.synthetic_dims, seed);
    const PrecondConfig precond = cfg.effective_precond();
    Tensor4 x(cfg.synthetic_dims);
    OptimState state;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_scale = lr_schedule(epoch, cfg.lr_period);
        for (std::size_t s = 0; s < cfg.synthetic_steps; ++s)
            optimizer_step(cfg, x, problem.gradient(x), state, precond, lr_scale);
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = problem.loss(x);
        report.epochs.push_back(rec);
    }
    report.final_loss = report.epochs.back().train_loss;
    report.final_test_acc = std::numeric_limits<double>::quiet_NaN();
    return report;
}

std::vector<TrialReport> run_trials(const RunConfig& cfg, const TrainingData* data, const ProgressFn& progress) {
    cfg.validate();
    if (cfg.task != Task::synthetic && !data) throw std::invalid_argument("run_trials: training data required");

    std::vector<TrialReport> reports(cfg.seeds.size());
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < cfg.seeds.size(); k = next++) {
            try {
                const std::uint64_t seed = cfg.seeds[k];
                if (cfg.task == Task::synthetic) {
                    reports[k] = run_synthetic_trial(cfg, seed);
                } else {
                    ModelParams final_params;
                    reports[k] = run_cnn_trial(cfg, *data, seed, &final_params);
                    if (cfg.save_params) {
                        const auto dir = cfg.out_dir / "params";
                        std::filesystem::create_directories(dir);
                        for (std::size_t id = 0; id < kNumParams; ++id)
                            write_cdg(dir / ("seed" + std::to_string(seed) + "_" +
                                             std::string(param_info()[id].name) + ".cdg"),
                                      final_params[id]);
                    }
                }
                if (progress) {
                    std::lock_guard lock(log_mutex);
                    progress(reports[k].metric + " seed " + std::to_string(seed) + ": final loss " +
                             format_real(reports[k].final_loss) + ", test acc " +
                             format_real(reports[k].final_test_acc));
                }
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.seeds.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

std::vector<TrialReport> cmd_train(const RunConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const TrainingData data = load_training_data(cfg);
    auto reports = run_trials(cfg, &data, progress);
    emit_report(reports, cfg.out_dir);
    return reports;
}

SummaryRow summarize(const std::string& direction, const RunConfig& cfg, std::span<const TrialReport> trials) {
    SummaryRow row;
    row.direction = direction;
    row.metric = cfg.label();
    row.lambda = cfg.lambda;
    std::vector<double> finals;
    for (const auto& t : trials) finals.push_back(t.final_test_acc);
    row.test_acc = trial_stats(finals);

    auto mean_corr = [&](Axis axis) -> std::optional<double> {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& t : trials)
            for (const auto& c : t.correlations)
                if (c.layer == param_info()[conv2_weight].name && c.axis == axis && c.distance == 1 && c.mean_corr) {
                    sum += *c.mean_corr;
                    ++count;
                }
        if (count == 0) return std::nullopt;
        return sum / static_cast<double>(count);
    };
    row.output_corr_d1 = mean_corr(Axis::output);
    row.input_corr_d1 = mean_corr(Axis::input);
    return row;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; };
    for (const auto& r : rows)
        cells.push_back({r.direction, r.metric, format_real(r.lambda), std::to_string(r.test_acc.count),
                         format_real(r.test_acc.mean), format_real(r.test_acc.std), format_real(r.test_acc.min),
                         format_real(r.test_acc.max), opt(r.output_corr_d1), opt(r.input_corr_d1)});
    write_csv(path,
              {"direction", "metric", "lambda", "n_seeds", "mean_test_acc", "std_test_acc", "min_test_acc",
               "max_test_acc", "output_corr_d1", "input_corr_d1"},
              cells);
}

namespace {

std::string run_dir_name(const RunConfig& cfg) {
    std::string name = cfg.label() + "_lambda" + format_real(cfg.lambda);
    for (char& ch : name)
        if (ch == '@' || ch == '+') ch = '_';
    return name;
}

}  // namespace

std::vector<SummaryRow> cmd_sweep(const RunConfig& cfg, const std::vector<double>& lambdas,
                                  const ProgressFn& progress) {
    if (lambdas.empty()) throw std::invalid_argument("sweep: lambda list is empty");
    cfg.validate();
    for (double l : lambdas)
        if (!(l >= 0.0)) throw std::invalid_argument("sweep: lambdas must be >= 0");
    const TrainingData data = load_training_data(cfg);
    const std::vector<Metric> metrics =
        cfg.sweep_metrics.empty() ? std::vector<Metric>{cfg.precond.metric} : cfg.sweep_metrics;

    std::vector<SummaryRow> rows;
    auto run = [&](RunConfig variant) {
        variant.out_dir = cfg.out_dir / run_dir_name(variant);
        const auto reports = run_trials(variant, &data, progress);
        emit_report(reports, variant.out_dir);
        rows.push_back(summarize("output", variant, reports));
        if (variant.precond.axis == Axis::input) rows.back().direction = "input";
    };
    for (double l : lambdas) {
        if (l == 0.0) {
            RunConfig base = cfg;
            base.lambda = 0.0;
            run(base);
            rows.back().direction = "none";
            continue;
        }
        for (Metric m : metrics) {
            RunConfig variant = cfg;
            variant.lambda = l;
            variant.precond.metric = m;
            run(variant);
        }
    }
    std::filesystem::create_directories(cfg.out_dir);
    write_summary_csv(cfg.out_dir / "sweep.csv", rows);
    return rows;
}

std::vector<SummaryRow> cmd_ablate_direction(const RunConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const TrainingData data = load_training_data(cfg);
    const double lambda = cfg.lambda > 0.0 ? cfg.lambda : 1.0;
    Metric smoother = cfg.precond.metric;
    if (smoother == Metric::identity || smoother == Metric::laplacian_rasterized) smoother = Metric::sobolev_tilde_h1;

    struct Cell {
        std::string direction;
        Metric metric;
        Axis axis;
    };
    std::vector<Cell> cells{{"none", Metric::identity, Axis::output},
                            {"output", smoother, Axis::output},
                            {"input", smoother, Axis::input},
                            {"rasterized", Metric::laplacian_rasterized, Axis::output}};
    if (smoother != Metric::reweighted_h0) cells.push_back({"output", Metric::reweighted_h0, Axis::output});

    std::vector<SummaryRow> rows;
    for (const auto& cell : cells) {
        RunConfig variant = cfg;
        variant.layers = LayerScope::conv;
        variant.precond.metric = cell.metric;
        variant.precond.axis = cell.axis;
        variant.precond.rasterize = false;
        variant.lambda = cell.metric == Metric::identity ? 0.0 : lambda;
        variant.out_dir = cfg.out_dir / (cell.direction + "_" + std::string(to_string(cell.metric)));
        const auto reports = run_trials(variant, &data, progress);
        emit_report(reports, variant.out_dir);
        rows.push_back(summarize(cell.direction, variant, reports));
    }
    std::filesystem::create_directories(cfg.out_dir);
    write_summary_csv(cfg.out_dir / "ablation.csv", rows);
    return rows;
}

std::vector<CorrelationRecord> cmd_analyze(const std::filesystem::path& in, Axis axis, std::size_t max_d,
                                           const std::filesystem::path& out) {
    const Tensor4 t = read_cdg(in);
    const std::size_t extent = t.dim(static_cast<int>(axis));
    std::vector<CorrelationRecord> records;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t d = 1; d <= max_d && d < extent; ++d) {
        const auto c = channel_correlation(t, axis, d);
        records.push_back({in.stem().string(), axis, d, c.mean, c.n_pairs});
        rows.push_back({in.stem().string(), std::string(to_string(axis)), std::to_string(d),
                        c.mean ? format_real(*c.mean) : std::string{}, std::to_string(c.n_pairs)});
    }
    write_csv(out, {"layer", "axis", "d", "mean_corr", "n_pairs"}, rows);
    return records;
}

}  // namespace cdg
