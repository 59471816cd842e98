// Acceptance checks. Prints one PASS / FAIL / SKIP line per criterion and
// exits nonzero if any hard criterion fails. The training-trend criteria (8, 9)
// need MNIST IDX files in $CDG_DATA_DIR and are skipped without them; set
// CDG_ACCEPT_SKIP_TRAINING=1 to skip them explicitly.

#include "oracles.hpp"

#include "cdg/harness.hpp"
#include "cdg/metrics.hpp"
#include "cdg/optim.hpp"
#include "cdg/precondition.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>

using namespace cdg;

namespace {

// Tolerances and sizes.
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 5.0;
constexpr double kResidualTol = 1e-10;
constexpr double kDualityTol = 1e-9;
constexpr int kDualityTriples = 1000;
constexpr int kDescentTrials = 1000;
constexpr double kLinearityTol = 1e-10;
constexpr double kMeanTol = 1e-12;
constexpr double kKernelGapAt256 = 0.02;
constexpr double kGradTol = 1e-5;
constexpr double kGradStep = 1e-4;
constexpr std::size_t kGradCoords = 200;
// Denominator floor of the relative error; central differences at h = 1e-4
// carry ~1e-11 absolute rounding noise.
constexpr double kGradFloor = 1e-6;
constexpr double kGradSeconds = 120.0;
constexpr double kQuadraticLoss = 1e-6;
constexpr std::size_t kQuadraticSteps = 10000;
constexpr double kTrendSlackPoints = 0.2;
constexpr double kScalingRatio = 3.0;

const std::size_t kSizes[] = {2, 3, 8, 64, 257};
const double kLambdas[] = {0.1, 1.0, 10.0};

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    bool hard;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

// 1 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
    Rng rng(101);
    double worst = 0.0;
    double solve_time = 0.0;
    for (std::size_t n : kSizes)
        for (double lambda : kLambdas) {
            const Tensor4 f = oracle::normal({n, 20, 1, 1}, rng);
            const auto t0 = std::chrono::steady_clock::now();
            const Tensor4 g = sobolev_tilde_h1(f, lambda);
            solve_time += seconds_since(t0);
            worst = std::max(worst, oracle::rel_l2(g, oracle::tilde_h1_dense(f, lambda)));
        }
    return pass_if(worst <= kOracleTol && solve_time < kOracleSeconds,
                   "max rel L2 " + fmt("%.2e", worst) + " over 15 (O, lambda) cells x 20 fibers; cumsum time " +
                       fmt("%.4f", solve_time) + " s");
}

// 2 -------------------------------------------------------------------------
Outcome residuals() {
    Rng rng(102);
    double h1 = 0.0;
    double tilde = 0.0;
    for (std::size_t n : kSizes)
        for (double lambda : kLambdas) {
            const Tensor4 f = oracle::normal({n, 20, 1, 1}, rng);
            const double c = lambda * static_cast<double>(n * n);
            const Tensor4 g = sobolev_h1(f, lambda);
            h1 = std::max(h1, oracle::l2(g - oracle::second_diff(g) * c - f) / oracle::l2(f));
            const Tensor4 gt = sobolev_tilde_h1(f, lambda);
            tilde = std::max(tilde, oracle::l2(oracle::mean_along_o(f) - oracle::second_diff(gt) * c - f) / oracle::l2(f));
        }
    return pass_if(h1 <= kResidualTol && tilde <= kResidualTol,
                   "max relative residual h1 " + fmt("%.2e", h1) + ", tilde h1 " + fmt("%.2e", tilde));
}

// 3 -------------------------------------------------------------------------
Outcome duality() {
    Rng rng(103);
    double worst_h0 = 0.0;
    double worst_tilde = 0.0;
    for (int t = 0; t < kDualityTriples; ++t) {
        const Dims d{2 + rng.below(15), 1 + rng.below(4), 1 + rng.below(3), 1 + rng.below(3)};
        const double lambda = std::pow(10.0, rng.uniform(-1.0, 1.0));
        const Tensor4 f = oracle::normal(d, rng);
        const Tensor4 k = oracle::normal(d, rng);
        const double scale = oracle::l2(f) * oracle::l2(k);
        const double rhs = oracle::sum_product(f, k);
        // Both metrics written out from their definitions.
        const Tensor4 g0 = reweighted_h0(f, lambda);
        const Tensor4 g0m = oracle::mean_along_o(g0);
        const Tensor4 km = oracle::mean_along_o(k);
        const double ip0 = oracle::sum_product(g0m, km) + lambda * oracle::sum_product(g0 - g0m, k - km);
        worst_h0 = std::max(worst_h0, std::abs(ip0 - rhs) / scale);

        const Tensor4 g1 = sobolev_tilde_h1(f, lambda);
        const double c = lambda * static_cast<double>(d[0] * d[0]);
        const double ip1 = oracle::sum_product(oracle::mean_along_o(g1), km) +
                           c * oracle::sum_product(oracle::forward_diff(g1), oracle::forward_diff(k));
        worst_tilde = std::max(worst_tilde, std::abs(ip1 - rhs) / scale);
        // The library metric agrees with the longhand one.
        if (std::abs(ip_tilde_h1(g1, k, lambda) - ip1) > 1e-12 * (std::abs(ip1) + scale))
            return {Status::fail, "ip_tilde_h1 disagrees with its definition"};
    }
    return pass_if(worst_h0 <= kDualityTol && worst_tilde <= kDualityTol,
                   std::to_string(kDualityTriples) + " triples; max |<g,k>_m - <f,k>|/(|f||k|): H0_lambda " +
                       fmt("%.2e", worst_h0) + ", tilde H1 " + fmt("%.2e", worst_tilde));
}

// 4 -------------------------------------------------------------------------
struct Op {
    const char* name;
    std::function<Tensor4(const Tensor4&, double)> apply;
    bool mean_preserving;
    bool smoothing;
    bool fixes_constants;  // constant along O (constant overall for the rasterized smoother)
};

Outcome invariants() {
    const Op ops[] = {
        {"reweighted_h0", reweighted_h0, true, false, true},
        {"code_variant", reweighted_h0_code_variant, false, false, false},
        {"sobolev_h1", sobolev_h1, true, true, true},
        {"sobolev_tilde_h1", sobolev_tilde_h1, true, true, true},
        {"laplacian_rasterized", laplacian_rasterized, false, false, true},
        {"tilde_h1_blended",
         [](const Tensor4& f, double l) {
             PrecondConfig c;
             c.metric = Metric::sobolev_tilde_h1;
             c.lambda = l;
             return precondition(f, c);
         },
         false, false, false},
    };
    Rng rng(104);
    std::size_t descent_fail = 0;
    std::size_t rough = 0;
    double linear = 0.0;
    double mean = 0.0;
    double constant = 0.0;
    double min_ratio = 1e300;
    for (const Op& op : ops)
        for (double lambda : kLambdas) {
            for (int t = 0; t < kDescentTrials; ++t) {
                const Dims d{1 + rng.below(16), 1 + rng.below(3), 1 + rng.below(3), 1 + rng.below(2)};
                const Tensor4 f = oracle::normal(d, rng);
                const double r = oracle::sum_product(f, op.apply(f, lambda)) / oracle::sum_product(f, f);
                min_ratio = std::min(min_ratio, r);
                if (!(r > 0.0)) ++descent_fail;
            }
            for (int t = 0; t < 100; ++t) {
                const Dims d{2 + rng.below(30), 1 + rng.below(3), 1 + rng.below(3), 1};
                const Tensor4 a = oracle::normal(d, rng);
                const Tensor4 b = oracle::normal(d, rng);
                const double al = rng.uniform(-3, 3);
                const double be = rng.uniform(-3, 3);
                const Tensor4 pa = op.apply(a, lambda);
                linear = std::max(linear, oracle::rel_l2(op.apply(a * al + b * be, lambda), pa * al + op.apply(b, lambda) * be));
                if (op.mean_preserving)
                    mean = std::max(mean, (oracle::mean_along_o(pa) - oracle::mean_along_o(a)).data().cwiseAbs().maxCoeff());
                if (op.smoothing &&
                    oracle::sum_product(oracle::forward_diff(pa), oracle::forward_diff(pa)) >
                        oracle::sum_product(oracle::forward_diff(a), oracle::forward_diff(a)) * (1 + 1e-12))
                    ++rough;
                if (op.fixes_constants) {
                    Tensor4 c(d);
                    if (std::string(op.name) == "laplacian_rasterized") {
                        c = Tensor4::constant(d, rng.normal());
                    } else {
                        const Tensor4 row = oracle::normal({1, d[1], d[2], d[3]}, rng);
                        for (std::size_t o = 0; o < d[0]; ++o)
                            for (std::size_t s = 0; s < oracle::slice(d); ++s) oracle::at(c, o, s) = oracle::at(row, 0, s);
                    }
                    constant = std::max(constant, oracle::rel_l2(op.apply(c, lambda), c));
                }
            }
        }
    const bool ok = descent_fail == 0 && linear <= kLinearityTol && mean <= kMeanTol && constant <= kMeanTol && rough == 0;
    return pass_if(ok, "descent failures " + std::to_string(descent_fail) + " (min <f,Pf>/|f|^2 " + fmt("%.2e", min_ratio) +
                           "), linearity " + fmt("%.1e", linear) + ", mean drift " + fmt("%.1e", mean) +
                           ", constant drift " + fmt("%.1e", constant) + ", energy increases " + std::to_string(rough));
}

// 5 -------------------------------------------------------------------------
Outcome kernel_convergence() {
    Rng rng(105);
    std::string detail = "K~ conv vs tilde H1 rel L2 gap:";
    double previous = 1e300;
    bool decreasing = true;
    for (std::size_t n : {64, 128, 256}) {
        const Tensor4 f = oracle::normal({n, 16, 1, 1}, rng);
        std::vector<double> k(n);
        for (std::size_t o = 0; o < n; ++o) k[o] = kernel_ktilde(double(o) / double(n), 1.0);
        const double gap = oracle::rel_l2(conv_oracle(f, k), sobolev_tilde_h1(f, 1.0));
        detail += " O=" + std::to_string(n) + " " + fmt("%.3e", gap);
        decreasing = decreasing && gap < previous;
        previous = gap;
    }
    // H1 Green's row against the printed kernel and the standard periodic form.
    detail += "; H1 Green row (O=256) vs printed K / periodic Green:";
    bool report = true;
    for (double lambda : {0.1, 1.0, 10.0}) {
        const std::size_t n = 256;
        Tensor4 spike({n, 1, 1, 1});
        spike.data()[0] = double(n);
        const Tensor4 row = sobolev_h1(spike, lambda);
        Tensor4 printed({n, 1, 1, 1});
        Tensor4 green({n, 1, 1, 1});
        for (std::size_t o = 0; o < n; ++o) {
            // Standard form, written independently: s cosh(s(x - 1/2)) / (2 sinh(s/2)), s = lambda^-1/2.
            const double x = double(o) / double(n);
            const double s = 1.0 / std::sqrt(lambda);
            printed.data()[static_cast<Eigen::Index>(o)] = kernel_k(x, lambda);
            green.data()[static_cast<Eigen::Index>(o)] = s * std::cosh(s * (x - 0.5)) / (2.0 * std::sinh(s / 2.0));
        }
        const double gp = oracle::rel_l2(printed, row);
        const double gg = oracle::rel_l2(green, row);
        report = report && std::isfinite(gp) && std::isfinite(gg);
        detail += " lambda=" + fmt("%g", lambda) + " " + fmt("%.2e", gp) + "/" + fmt("%.2e", gg);
    }
    return pass_if(decreasing && previous <= kKernelGapAt256 && report, detail);
}

// 6 -------------------------------------------------------------------------
Outcome gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelParams params = init_params(106);
    Rng rng(106);
    Batch batch;
    batch.images = Eigen::MatrixXd(kImagePixels, 2);
    for (Eigen::Index k = 0; k < batch.images.size(); ++k) batch.images.data()[k] = rng.uniform();
    batch.labels = {3, 8};
    const LossAndGrads analytic = loss_and_grads<double>(params, batch);
    ForwardCache<double> base;
    batch_loss<double>(params, batch, &base);

    double worst = 0.0;
    std::size_t skipped = 0;
    std::string per_tensor;
    bool enough = true;
    for (std::size_t id = 0; id < kNumParams; ++id) {
        const std::size_t size = params[id].size();
        std::vector<std::size_t> order(size);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const std::size_t want = std::min(size, kGradCoords);
        std::size_t good = 0;
        double tensor_worst = 0.0;
        for (std::size_t k : order) {
            if (good == want) break;
            const auto e = static_cast<Eigen::Index>(k);
            ModelParams p = params;
            p[id].data()[e] = params[id].data()[e] + kGradStep;
            ForwardCache<double> cp;
            const double lp = batch_loss<double>(p, batch, &cp);
            p[id].data()[e] = params[id].data()[e] - kGradStep;
            ForwardCache<double> cm;
            const double lm = batch_loss<double>(p, batch, &cm);
            // A ReLU or pooling switch inside [-h, h] makes the loss non-smooth there.
            if (!same_activation_pattern(base, cp) || !same_activation_pattern(base, cm)) {
                ++skipped;
                continue;
            }
            const double fd = (lp - lm) / (2 * kGradStep);
            const double an = analytic.grads[id].data()[e];
            tensor_worst = std::max(tensor_worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), kGradFloor}));
            ++good;
        }
        // Tensors smaller than the sample size are checked completely (minus kinks).
        enough = enough && (good == want || want == size);
        worst = std::max(worst, tensor_worst);
        per_tensor += " " + std::string(param_info()[id].name) + ":" + std::to_string(good) + "/" + fmt("%.1e", tensor_worst);
    }
    const double elapsed = seconds_since(t0);
    return pass_if(worst <= kGradTol && enough && elapsed < kGradSeconds,
                   "max rel err " + fmt("%.2e", worst) + ";" + per_tensor + "; kinks skipped " + std::to_string(skipped) +
                       "; " + fmt("%.1f", elapsed) + " s");
}

// 7 -------------------------------------------------------------------------
Outcome quadratic_convergence() {
    const Dims dims{16, 8, 3, 3};
    std::size_t worst_steps = 0;
    std::string failures;
    for (Metric m : {Metric::identity, Metric::reweighted_h0, Metric::reweighted_h0_code_variant, Metric::sobolev_h1,
                     Metric::sobolev_tilde_h1, Metric::laplacian_rasterized})
        for (double lambda : {0.5, 1.0, 5.0}) {
            PrecondConfig pc;
            pc.metric = m;
            pc.lambda = lambda;
            pc.sigma = lambda;
            const SyntheticQuadratic q = synthetic_quadratic(dims, 107);
            const double lr = 0.5 / operator_norm_bound(pc, dims);
            Tensor4 x(dims);
            OptimState st;
            std::size_t step = 0;
            bool monotone = true;
            double previous = q.loss(x);
            while (q.loss(x) > kQuadraticLoss && step < kQuadraticSteps) {
                sgd_step(x, q.gradient(x), st, {lr, 0.0, 0.0}, pc);
                ++step;
                const double now = q.loss(x);
                monotone = monotone && now <= previous;
                previous = now;
            }
            worst_steps = std::max(worst_steps, step);
            if (q.loss(x) > kQuadraticLoss || !monotone)
                failures += " " + std::string(to_string(m)) + "@" + fmt("%g", lambda);
        }
    return pass_if(failures.empty(), "18 (metric, lambda) runs, worst " + std::to_string(worst_steps) +
                                         " steps to loss <= 1e-6" + (failures.empty() ? "" : "; failed:" + failures));
}

// 8, 9 ----------------------------------------------------------------------
struct TrainingStudy {
    bool available = false;
    std::string reason;
    TrainingData data;
    RunConfig base;
    std::map<std::string, std::vector<TrialReport>> runs;

    std::vector<TrialReport>& get(const std::string& key, Metric metric, double lambda) {
        auto it = runs.find(key);
        if (it != runs.end()) return it->second;
        RunConfig cfg = base;
        cfg.precond.metric = metric;
        cfg.lambda = lambda;
        std::fprintf(stderr, "  training %s (%zu seeds)\n", key.c_str(), cfg.seeds.size());
        const auto t0 = std::chrono::steady_clock::now();
        auto reports = run_trials(cfg, &data);
        std::fprintf(stderr, "  ... %.0f s\n", seconds_since(t0));
        return runs.emplace(key, std::move(reports)).first->second;
    }

    double mean_acc(const std::vector<TrialReport>& rs) const {
        double s = 0;
        for (const auto& r : rs) s += r.final_test_acc;
        return s / double(rs.size());
    }

    double mean_corr(const std::vector<TrialReport>& rs, Axis axis) const {
        double s = 0;
        std::size_t n = 0;
        for (const auto& r : rs)
            for (const auto& c : r.correlations)
                if (c.layer == "conv2.weight" && c.axis == axis && c.distance == 1 && c.mean_corr) {
                    s += *c.mean_corr;
                    ++n;
                }
        return n ? s / double(n) : std::nan("");
    }
};

TrainingStudy& study() {
    static TrainingStudy s = [] {
        TrainingStudy t;
        if (const char* skip = std::getenv("CDG_ACCEPT_SKIP_TRAINING"); skip && std::string(skip) == "1") {
            t.reason = "CDG_ACCEPT_SKIP_TRAINING=1";
            return t;
        }
        const char* dir = std::getenv("CDG_DATA_DIR");
        if (!dir || !*dir) {
            t.reason = "CDG_DATA_DIR not set";
            return t;
        }
        t.base.data_dir = dir;
        t.base.seeds = {1, 2, 3, 4, 5};
        t.base.epochs = 20;
        t.base.batch_size = 100;
        t.base.train_n = 2000;
        t.base.eval_every = 20;
        t.base.corr_max_d = 1;
        t.base.jobs = std::max(1u, std::thread::hardware_concurrency());
        try {
            t.data = load_training_data(t.base);
        } catch (const std::exception& e) {
            t.reason = e.what();
            return t;
        }
        t.available = true;
        return t;
    }();
    return s;
}

std::string pct(double v) { return fmt("%.2f%%", 100.0 * v); }

Outcome fig7_trend() {
    TrainingStudy& s = study();
    if (!s.available) return {Status::skip, s.reason};
    const double sgd = s.mean_acc(s.get("sgd", Metric::identity, 0.0));
    const double tilde = s.mean_acc(s.get("tilde@1", Metric::sobolev_tilde_h1, 1.0));
    const double code = s.mean_acc(s.get("code@1", Metric::reweighted_h0_code_variant, 1.0));
    const double slack = kTrendSlackPoints / 100.0;
    std::string detail = "train " + std::to_string(s.data.train.size()) + " / test " + std::to_string(s.data.test.size()) +
                         ", 5 seeds; SGD " + pct(sgd) + ", tilde H1 " + pct(tilde) + ", code-variant H0 " + pct(code);
    const bool within = tilde >= sgd - slack && code >= sgd - slack;

    // At least one lambda in {0.5, 1, 2, 5} reaches the SGD mean (checked per metric, extra lambdas only if needed).
    auto reaches = [&](const char* tag, Metric m, double at_one) {
        if (at_one >= sgd) return std::string(tag) + " reaches SGD at lambda=1";
        for (double l : {0.5, 2.0, 5.0}) {
            const double acc = s.mean_acc(s.get(std::string(tag) + "@" + fmt("%g", l), m, l));
            detail += ", " + std::string(tag) + "@" + fmt("%g", l) + " " + pct(acc);
            if (acc >= sgd) return std::string(tag) + " reaches SGD at lambda=" + fmt("%g", l);
        }
        return std::string();
    };
    const std::string rt = reaches("tilde", Metric::sobolev_tilde_h1, tilde);
    const std::string rc = reaches("code", Metric::reweighted_h0_code_variant, code);
    detail += "; " + (rt.empty() ? std::string("tilde never reaches SGD") : rt) + "; " +
              (rc.empty() ? std::string("code never reaches SGD") : rc);
    return pass_if(within && !rt.empty() && !rc.empty(), detail);
}

Outcome fig6_regularity() {
    TrainingStudy& s = study();
    if (!s.available) return {Status::skip, s.reason};
    const auto& sgd = s.get("sgd", Metric::identity, 0.0);
    const auto& tilde = s.get("tilde@1", Metric::sobolev_tilde_h1, 1.0);
    const double out_sgd = s.mean_corr(sgd, Axis::output);
    const double out_tilde = s.mean_corr(tilde, Axis::output);
    const double in_sgd = s.mean_corr(sgd, Axis::input);
    const double in_tilde = s.mean_corr(tilde, Axis::input);
    const double d_out = out_tilde - out_sgd;
    const double d_in = in_tilde - in_sgd;
    return pass_if(d_out > 0.0 && d_in < d_out,
                   "conv2 d=1 corr, output: SGD " + fmt("%.4f", out_sgd) + " -> tilde " + fmt("%.4f", out_tilde) +
                       " (" + fmt("%+.4f", d_out) + "); input: SGD " + fmt("%.4f", in_sgd) + " -> tilde " +
                       fmt("%.4f", in_tilde) + " (" + fmt("%+.4f", d_in) + ")");
}

// 10 ------------------------------------------------------------------------
Outcome linear_scaling() {
    constexpr std::size_t total = std::size_t{1} << 22;
    Rng rng(110);
    auto best_time = [&](std::size_t n) {
        const Tensor4 f = oracle::normal({n, total / n, 1, 1}, rng);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const Tensor4 g = sobolev_tilde_h1(f, 1.0);
            best = std::min(best, seconds_since(t0));
            if (!g.all_finite()) return std::nan("");
        }
        return best;
    };
    const double t2048 = best_time(2048);
    const double t4096 = best_time(4096);
    const double ratio = t4096 / t2048;
    return pass_if(ratio <= kScalingRatio, "2^22 elements: O=2048 " + fmt("%.4f", t2048) + " s, O=4096 " +
                                               fmt("%.4f", t4096) + " s, ratio " + fmt("%.2f", ratio));
}

// 11 ------------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    RunConfig cfg;
    std::string what;
    const char* dir = std::getenv("CDG_DATA_DIR");
    if (dir && *dir && study().available) {
        cfg.data_dir = dir;
        cfg.train_n = 300;
        cfg.test_n = 500;
        cfg.epochs = 2;
        cfg.precond.metric = Metric::sobolev_tilde_h1;
        what = "MNIST CNN, 2 epochs, tilde H1";
    } else {
        cfg.task = Task::synthetic;
        cfg.epochs = 3;
        cfg.sgd = {0.1, 0.9, 5e-4};
        cfg.precond.metric = Metric::sobolev_tilde_h1;
        what = "synthetic quadratic (no MNIST data), tilde H1";
    }
    cfg.seeds = {11, 12};
    const auto root = std::filesystem::temp_directory_path() / "cdg_acceptance_determinism";
    std::filesystem::remove_all(root);
    cfg.out_dir = root / "a";
    cmd_train(cfg);
    cfg.out_dir = root / "b";
    cmd_train(cfg);
    bool same = true;
    for (const char* f : {"accuracy.csv", "correlation.csv", "summary.json"}) {
        const std::string a = slurp(root / "a" / f);
        same = same && !a.empty() && a == slurp(root / "b" / f);
    }
    std::filesystem::remove_all(root);
    return pass_if(same, what + "; accuracy.csv, correlation.csv, summary.json " +
                             (same ? "byte-identical" : "DIFFER"));
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", true, oracle_equivalence},
        {2, "residuals", true, residuals},
        {3, "duality", true, duality},
        {4, "operator invariants", true, invariants},
        {5, "kernel convergence", true, kernel_convergence},
        {6, "CNN gradient check", true, gradient_check},
        {7, "quadratic convergence", true, quadratic_convergence},
        {8, "accuracy trend vs SGD", false, fig7_trend},
        {9, "output-channel regularity", false, fig6_regularity},
        {10, "linear-time scaling", true, linear_scaling},
        {11, "determinism", true, determinism},
    };
    int hard_failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
        std::printf("%s %2d %s [%s]: %s\n", tag, c.id, c.name, c.hard ? "hard" : "soft", o.detail.c_str());
        std::fflush(stdout);
        if (o.status == Status::fail && c.hard) ++hard_failures;
    }
    return hard_failures == 0 ? 0 : 1;
}
