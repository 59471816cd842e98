// Numerical self-checks behind `cdg verify`. Oracles here are dense
// factorizations and finite differences, deliberately independent of the
// linear-time paths they check.

#include "cdg/analysis.hpp"
#include "cdg/harness.hpp"
#include "cdg/metrics.hpp"
#include "cdg/random.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

namespace cdg {

namespace {

struct SuiteResult {
    bool pass = true;
    std::string detail;
};

using SuiteFn = std::function<SuiteResult(const VerifyOptions&, const std::vector<double>&)>;

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

Eigen::MatrixXd periodic_d2(Eigen::Index n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, (i + n - 1) % n) += 1.0;
        m(i, i) -= 2.0;
        m(i, (i + 1) % n) += 1.0;
    }
    return m;
}

// Extended precision keeps the oracle's own error (~cond * eps) well below the
// tolerances at O = 257, lambda = 10, where cond is ~3e6.
Tensor4 dense_solve(const Eigen::MatrixXd& a, const Tensor4& f) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    Tensor4 g(f.dims());
    const MatL x = a.cast<long double>().partialPivLu().solve(MatL(f.matrix().cast<long double>()));
    g.matrix() = x.cast<double>();
    return g;
}

Eigen::MatrixXd h1_matrix(Eigen::Index n, double c) {
    return Eigen::MatrixXd::Identity(n, n) - c * periodic_d2(n);
}

Eigen::MatrixXd tilde_matrix(Eigen::Index n, double c) {
    return Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)) - c * periodic_d2(n);
}

double rel_gap(const Tensor4& a, const Tensor4& b) {
    const double nb = norm(b);
    return nb == 0.0 ? norm(a) : norm(a - b) / nb;
}

Dims random_dims(Rng& rng, std::size_t min_o, std::size_t max_o) {
    return {min_o + rng.below(max_o - min_o + 1), 1 + rng.below(3), 1 + rng.below(3), 1 + rng.below(2)};
}

const std::array<std::size_t, 5> kOracleSizes{2, 3, 8, 64, 257};

SuiteResult suite_duality(const VerifyOptions& opts, const std::vector<double>& lambdas) {
    Rng rng(opts.seed, 1);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double lambda = lambdas[static_cast<std::size_t>(t) % lambdas.size()];
        const Dims dims = random_dims(rng, 2, 12);
        const Tensor4 f = random_normal(dims, rng);
        const Tensor4 k = random_normal(dims, rng);
        const double scale = norm(f) * norm(k);
        const double rhs = ip_h0(f, k);
        worst = std::max(worst, std::abs(ip_h0_lambda(reweighted_h0(f, lambda), k, lambda) - rhs) / scale);
        worst = std::max(worst, std::abs(ip_tilde_h1(sobolev_tilde_h1(f, lambda), k, lambda) - rhs) / scale);
    }
    return {worst <= 1e-9, "max |<g,k>_m - <f,k>| / (|f||k|) = " + sci(worst)};
}

SuiteResult suite_residual(const VerifyOptions& opts, const std::vector<double>& lambdas) {
    Rng rng(opts.seed, 2);
    double worst = 0.0;
    for (std::size_t n : kOracleSizes) {
        for (double lambda : lambdas) {
            const Tensor4 f = random_normal({n, 20, 1, 1}, rng);
            const double c = lambda * static_cast<double>(n * n);
            const Tensor4 g = sobolev_h1(f, lambda);
            worst = std::max(worst, norm(g - second_difference(g) * c - f) / norm(f));
            const Tensor4 gt = sobolev_tilde_h1(f, lambda);
            worst = std::max(worst, norm(channel_mean(f) - second_difference(gt) * c - f) / norm(f));
        }
    }
    return {worst <= 1e-10, "max relative residual " + sci(worst)};
}

SuiteResult suite_oracle(const VerifyOptions& opts, const std::vector<double>& lambdas) {
    Rng rng(opts.seed, 3);
    double worst_tilde = 0.0;
    double worst_h1 = 0.0;
    for (std::size_t n : kOracleSizes) {
        const auto rows = static_cast<Eigen::Index>(n);
        for (double lambda : lambdas) {
            const double c = lambda * static_cast<double>(n * n);
            const Tensor4 f = random_normal({n, 20, 1, 1}, rng);
            worst_tilde = std::max(worst_tilde, rel_gap(sobolev_tilde_h1(f, lambda), dense_solve(tilde_matrix(rows, c), f)));
            worst_h1 = std::max(worst_h1, rel_gap(sobolev_h1(f, lambda), dense_solve(h1_matrix(rows, c), f)));
        }
    }
    // Rasterized smoothing on a small tensor, dense solve over all 24 entries.
    const Tensor4 f = random_normal({2, 3, 2, 2}, rng);
    Tensor4 flat({f.size(), 1, 1, 1}, f.data());
    const Tensor4 dense = dense_solve(h1_matrix(static_cast<Eigen::Index>(f.size()), 0.7), flat);
    const double lap = rel_gap(laplacian_rasterized(f, 0.7), Tensor4(f.dims(), dense.data()));

    const bool pass = worst_tilde <= 1e-9 && worst_h1 <= 1e-10 && lap <= 1e-10;
    return {pass, "tilde " + sci(worst_tilde) + ", h1 " + sci(worst_h1) + ", laplacian " + sci(lap)};
}

std::vector<double> sampled_kernel(std::size_t n, const std::function<double(double)>& k) {
    std::vector<double> out(n);
    for (std::size_t o = 0; o < n; ++o) out[o] = k(static_cast<double>(o) / static_cast<double>(n));
    return out;
}

SuiteResult suite_kernel(const VerifyOptions& opts, const std::vector<double>&) {
    Rng rng(opts.seed, 4);
    std::ostringstream detail;
    bool pass = true;
    double previous = 1e300;
    detail << "ktilde gap";
    for (std::size_t n : {64, 128, 256}) {
        const Tensor4 f = random_normal({n, 8, 1, 1}, rng);
        const auto kernel = sampled_kernel(n, [](double o) { return kernel_ktilde(o, 1.0); });
        const double gap = rel_gap(conv_oracle(f, kernel), sobolev_tilde_h1(f, 1.0));
        detail << ' ' << n << ':' << sci(gap);
        pass = pass && gap < previous;
        previous = gap;
    }
    pass = pass && previous <= 0.02;

    // H1 Green's row: the response to O * e0 samples the continuum kernel.
    const std::size_t n = 256;
    Tensor4 spike({n, 1, 1, 1});
    spike.data()[0] = static_cast<double>(n);
    const Tensor4 row = sobolev_h1(spike, 1.0);
    Tensor4 printed({n, 1, 1, 1});
    Tensor4 green({n, 1, 1, 1});
    for (std::size_t o = 0; o < n; ++o) {
        const double x = static_cast<double>(o) / static_cast<double>(n);
        printed.data()[static_cast<Eigen::Index>(o)] = kernel_k(x, 1.0);
        green.data()[static_cast<Eigen::Index>(o)] = kernel_k_green(x, 1.0);
    }
    detail << "; h1 green row vs printed K " << sci(rel_gap(printed, row)) << ", vs periodic green "
           << sci(rel_gap(green, row));
    return {pass, detail.str()};
}

struct NamedOperator {
    std::string name;
    std::function<Tensor4(const Tensor4&, double)> apply;
    bool mean_preserving;
    bool smoothing;
};

std::vector<NamedOperator> operators() {
    return {
        {"reweighted_h0", reweighted_h0, true, false},
        {"reweighted_h0_code_variant", reweighted_h0_code_variant, false, false},
        {"sobolev_h1", sobolev_h1, true, true},
        {"sobolev_tilde_h1", sobolev_tilde_h1, true, true},
        {"laplacian_rasterized", laplacian_rasterized, false, false},
        {"sobolev_tilde_h1+blend",
         [](const Tensor4& f, double l) {
             PrecondConfig cfg;
             cfg.metric = Metric::sobolev_tilde_h1;
             cfg.lambda = l;
             return precondition(f, cfg);
         },
         false, false},
    };
}

SuiteResult suite_descent(const VerifyOptions& opts, const std::vector<double>& lambdas) {
    Rng rng(opts.seed, 5);
    std::size_t failures = 0;
    double smallest = 1e300;
    for (const auto& op : operators())
        for (double lambda : lambdas)
            for (int t = 0; t < 1000; ++t) {
                const Tensor4 f = random_normal(random_dims(rng, 1, 9), rng);
                const double ratio = ip_h0(f, op.apply(f, lambda)) / squared_norm(f);
                smallest = std::min(smallest, ratio);
                if (!(ratio > 0.0)) ++failures;
            }
    return {failures == 0, "min <f,Pf>/|f|^2 = " + sci(smallest) + ", failures " + std::to_string(failures)};
}

SuiteResult suite_invariants(const VerifyOptions& opts, const std::vector<double>& lambdas) {
    Rng rng(opts.seed, 6);
    double linear = 0.0;
    double mean = 0.0;
    double constant = 0.0;
    std::size_t rough = 0;
    for (const auto& op : operators())
        for (double lambda : lambdas)
            for (int t = 0; t < 50; ++t) {
                const Dims dims = random_dims(rng, 2, 16);
                const Tensor4 a = random_normal(dims, rng);
                const Tensor4 b = random_normal(dims, rng);
                const double alpha = rng.uniform(-2.0, 2.0);
                const double beta = rng.uniform(-2.0, 2.0);
                const Tensor4 lhs = op.apply(a * alpha + b * beta, lambda);
                const Tensor4 rhs = op.apply(a, lambda) * alpha + op.apply(b, lambda) * beta;
                linear = std::max(linear, rel_gap(lhs, rhs));

                const Tensor4 pa = op.apply(a, lambda);
                if (op.mean_preserving)
                    mean = std::max(mean, (channel_mean(pa) - channel_mean(a)).data().cwiseAbs().maxCoeff());
                if (op.smoothing && squared_norm(forward_difference(pa)) > squared_norm(forward_difference(a)) * (1 + 1e-12))
                    ++rough;

                // Constant along O (for the rasterized smoother: constant everywhere).
                Tensor4 c(dims);
                const double value = rng.normal();
                if (op.name == "laplacian_rasterized") {
                    c = Tensor4::constant(dims, value);
                } else {
                    const Tensor4 row = random_normal({1, dims[1], dims[2], dims[3]}, rng);
                    for (std::size_t o = 0; o < dims[0]; ++o) c.matrix().row(static_cast<Eigen::Index>(o)) = row.matrix().row(0);
                }
                if (op.name != "reweighted_h0_code_variant" && op.name != "sobolev_tilde_h1+blend")
                    constant = std::max(constant, rel_gap(op.apply(c, lambda), c));
            }
    const bool pass = linear <= 1e-10 && mean <= 1e-12 && constant <= 1e-12 && rough == 0;
    return {pass, "linearity " + sci(linear) + ", mean drift " + sci(mean) + ", constant drift " + sci(constant) +
                      ", energy increases " + std::to_string(rough)};
}

SuiteResult suite_gradcheck(const VerifyOptions& opts, const std::vector<double>&) {
    Rng rng(opts.seed, 7);
    const ModelParams params = init_params(opts.seed);
    Batch batch;
    batch.images = Eigen::MatrixXd(kImagePixels, 2);
    for (Eigen::Index k = 0; k < batch.images.size(); ++k) batch.images.data()[k] = rng.uniform();
    batch.labels = {static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))};

    const LossAndGrads analytic = loss_and_grads<double>(params, batch);
    ForwardCache<double> base;
    batch_loss<double>(params, batch, &base);

    const double h = 1e-5;
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    for (std::size_t id = 0; id < kNumParams; ++id) {
        const std::size_t size = params[id].size();
        const std::size_t want = std::min<std::size_t>(size, 40);
        std::size_t good = 0;
        for (std::size_t attempt = 0; good < want && attempt < 20 * want; ++attempt) {
            const auto k = static_cast<Eigen::Index>(size == want ? attempt : rng.below(size));
            if (size == want && attempt >= size) break;
            ModelParams plus = params;
            ModelParams minus = params;
            plus[id].data()[k] += h;
            minus[id].data()[k] -= h;
            ForwardCache<double> cp;
            ForwardCache<double> cm;
            const double lp = batch_loss<double>(plus, batch, &cp);
            const double lm = batch_loss<double>(minus, batch, &cm);
            if (!same_activation_pattern(base, cp) || !same_activation_pattern(base, cm)) {
                ++skipped;
                continue;
            }
            const double numeric = (lp - lm) / (2 * h);
            const double exact = analytic.grads[id].data()[k];
            worst = std::max(worst, std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-6}));
            ++good;
            ++checked;
        }
    }
    return {worst <= 1e-5, "max relative error " + sci(worst) + " over " + std::to_string(checked) +
                               " coordinates (" + std::to_string(skipped) + " skipped at kinks)"};
}

const std::vector<std::pair<std::string, SuiteFn>>& suites() {
    static const std::vector<std::pair<std::string, SuiteFn>> all{
        {"duality", suite_duality},   {"residual", suite_residual},     {"oracle", suite_oracle},
        {"kernel", suite_kernel},     {"descent", suite_descent},       {"invariants", suite_invariants},
        {"gradcheck", suite_gradcheck},
    };
    return all;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, fn] : suites()) out.push_back(name);
        return out;
    }();
    return names;
}

bool cmd_verify(const VerifyOptions& opts, std::ostream& out) {
    const std::vector<double> lambdas = opts.lambdas.empty() ? std::vector<double>{0.1, 1.0, 10.0} : opts.lambdas;
    for (double l : lambdas)
        if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("verify: lambda must be > 0");
    if (!opts.suite.empty() &&
        std::find(verify_suite_names().begin(), verify_suite_names().end(), opts.suite) == verify_suite_names().end())
        throw std::invalid_argument("verify: unknown suite '" + opts.suite + "'");

    bool ok = true;
    for (const auto& [name, fn] : suites()) {
        if (!opts.suite.empty() && name != opts.suite) continue;
        const SuiteResult r = fn(opts, lambdas);
        out << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << '\n';
        ok = ok && r.pass;
    }
    return ok;
}

}  // namespace cdg
