#include "cdg/precondition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cdg {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::identity: return "identity";
        case Metric::reweighted_h0: return "reweighted_h0";
        case Metric::reweighted_h0_code_variant: return "reweighted_h0_code_variant";
        case Metric::sobolev_h1: return "sobolev_h1";
        case Metric::sobolev_tilde_h1: return "sobolev_tilde_h1";
        case Metric::laplacian_rasterized: return "laplacian_rasterized";
    }
    return "?";
}

std::string_view to_string(Axis a) { return a == Axis::output ? "output" : "input"; }

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::identity, Metric::reweighted_h0, Metric::reweighted_h0_code_variant,
                     Metric::sobolev_h1, Metric::sobolev_tilde_h1, Metric::laplacian_rasterized})
        if (to_string(m) == name) return m;
    if (name == "sgd" || name == "h0") return Metric::identity;
    throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

Axis parse_axis(std::string_view name) {
    if (name == "output" || name == "0") return Axis::output;
    if (name == "input" || name == "1") return Axis::input;
    throw std::invalid_argument("unknown axis '" + std::string(name) + "'");
}

bool is_sobolev(Metric m) { return m == Metric::sobolev_h1 || m == Metric::sobolev_tilde_h1; }

void PrecondConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be a positive finite number");
    if (!(blend_beta >= 0.0) || !std::isfinite(blend_beta))
        throw std::invalid_argument("blend beta must be nonnegative");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be a positive finite number");
}

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument(std::string(what) + " must be a positive finite number");
}

double scale_invariant_strength(const Tensor4& f, double lambda) {
    const double o = static_cast<double>(f.dim(0));
    return lambda * o * o;
}

}  // namespace

Tensor4 reweighted_h0(const Tensor4& f, double lambda) {
    require_positive(lambda, "reweighted_h0: lambda");
    if (lambda == 1.0 || f.dim(0) == 1) return f;
    const Tensor4 mean = channel_mean(f);
    Tensor4 g = f - mean;
    g *= 1.0 / lambda;
    return g += mean;
}

Tensor4 reweighted_h0_code_variant(const Tensor4& f, double lambda) {
    require_positive(lambda, "reweighted_h0_code_variant: lambda");
    if (f.dim(0) == 1) return f;
    Tensor4 g = f;
    const Eigen::RowVectorXd shift = lambda * f.matrix().colwise().mean();
    g.matrix().rowwise() += shift;
    return g;
}

void solve_periodic_helmholtz(Tensor4::MatrixMap x, double c) {
    const Eigen::Index n = x.rows();
    if (n <= 1 || c == 0.0) return;

    // Constants pass through unchanged, so only the zero-mean part is solved.
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    if (n == 2) {
        // Both neighbours of a row coincide: [[1+2c, -2c], [-2c, 1+2c]].
        const double inv_det = 1.0 / (1.0 + 4.0 * c);
        const Eigen::RowVectorXd b0 = x.row(0);
        x.row(0) = ((1.0 + 2.0 * c) * b0 + 2.0 * c * x.row(1)) * inv_det;
        x.row(1) = (2.0 * c * b0 + (1.0 + 2.0 * c) * x.row(1)) * inv_det;
        x.rowwise() += mean;
        return;
    }

    // A = B + u v^T with B tridiagonal, u = (gamma, 0, ..., 0, e),
    // v = (1, 0, ..., 0, e / gamma), gamma = -d.
    const double d = 1.0 + 2.0 * c;
    const double e = -c;
    const double gamma = -d;

    std::vector<double> inv(static_cast<std::size_t>(n));
    std::vector<double> upper(static_cast<std::size_t>(n));
    auto diag = [&](Eigen::Index i) {
        if (i == 0) return d - gamma;
        if (i == n - 1) return d - e * e / gamma;
        return d;
    };
    inv[0] = 1.0 / diag(0);
    upper[0] = e * inv[0];
    for (Eigen::Index i = 1; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        inv[k] = 1.0 / (diag(i) - e * upper[k - 1]);
        upper[k] = e * inv[k];
    }

    auto thomas = [&](auto&& rhs) {
        rhs.row(0) *= inv[0];
        for (Eigen::Index i = 1; i < n; ++i)
            rhs.row(i) = (rhs.row(i) - e * rhs.row(i - 1)) * inv[static_cast<std::size_t>(i)];
        for (Eigen::Index i = n - 2; i >= 0; --i)
            rhs.row(i) -= upper[static_cast<std::size_t>(i)] * rhs.row(i + 1);
    };

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    z[0] = gamma;
    z[n - 1] = e;
    thomas(z);
    thomas(x);

    const double vz = z[0] + (e / gamma) * z[n - 1];
    const Eigen::RowVectorXd scale = (x.row(0) + (e / gamma) * x.row(n - 1)) / (1.0 + vz);
    x.noalias() -= z * scale;
    x.rowwise() += mean;
}

Tensor4 sobolev_h1(const Tensor4& f, double lambda) {
    require_positive(lambda, "sobolev_h1: lambda");
    Tensor4 g = f;
    if (f.dim(0) < 2) return g;
    solve_periodic_helmholtz(g.matrix(), scale_invariant_strength(f, lambda));
    return g;
}

Tensor4 sobolev_tilde_h1(const Tensor4& f, double lambda) {
    require_positive(lambda, "sobolev_tilde_h1: lambda");
    Tensor4 g = f;
    const Eigen::Index n = f.rows();
    if (n < 2) return g;
    const double c = scale_invariant_strength(f, lambda);

    // g = mean(f) + h with D2 h = -(f - mean(f)) / c and mean(h) = 0. The first
    // running sum gives the periodic first difference of h up to a constant
    // fixed by periodicity of h; the second running sum integrates it and the
    // constant of integration is fixed by mean(h) = 0.
    auto m = g.matrix();
    const Eigen::RowVectorXd mean = m.colwise().mean();
    m.rowwise() -= mean;
    for (Eigen::Index o = 1; o < n; ++o) m.row(o) += m.row(o - 1);
    m *= -1.0 / c;
    const Eigen::RowVectorXd drift = m.colwise().mean();
    m.rowwise() -= drift;

    Eigen::RowVectorXd carry = m.row(0);
    m.row(0).setZero();
    for (Eigen::Index o = 1; o < n; ++o) {
        Eigen::RowVectorXd next = m.row(o);
        m.row(o) = m.row(o - 1) + carry;
        carry.swap(next);
    }
    const Eigen::RowVectorXd shift = mean - m.colwise().mean();
    m.rowwise() += shift;
    return g;
}

Tensor4 laplacian_rasterized(const Tensor4& f, double sigma) {
    require_positive(sigma, "laplacian_rasterized: sigma");
    Tensor4 flat = rasterize(f);
    solve_periodic_helmholtz(flat.matrix(), sigma);
    return derasterize(flat, f.dims());
}

namespace {

constexpr Perm kSwapChannels{1, 0, 2, 3};

Tensor4 apply_operator(const Tensor4& f, const PrecondConfig& cfg) {
    switch (cfg.metric) {
        case Metric::identity: return f;
        case Metric::reweighted_h0: return reweighted_h0(f, cfg.lambda);
        case Metric::reweighted_h0_code_variant: return reweighted_h0_code_variant(f, cfg.lambda);
        case Metric::sobolev_h1: return sobolev_h1(f, cfg.lambda);
        case Metric::sobolev_tilde_h1: return sobolev_tilde_h1(f, cfg.lambda);
        case Metric::laplacian_rasterized: return laplacian_rasterized(f, cfg.sigma);
    }
    return f;
}

}  // namespace

Tensor4 precondition(const Tensor4& f, const PrecondConfig& cfg) {
    cfg.validate();
    if (cfg.metric == Metric::identity) return f;

    const bool swap = cfg.axis == Axis::input;
    Tensor4 oriented = swap ? transpose_axes(f, kSwapChannels) : f;
    const bool flatten = cfg.rasterize && cfg.metric != Metric::laplacian_rasterized;
    if (flatten) oriented = rasterize(oriented);

    Tensor4 g = apply_operator(oriented, cfg);

    if (flatten) g = derasterize(g, swap ? transpose_axes(f, kSwapChannels).dims() : f.dims());
    if (swap) g = transpose_axes(g, kSwapChannels);
    if (is_sobolev(cfg.metric) && cfg.blend_beta != 0.0) g.data() += cfg.blend_beta * f.data();
    return g;
}

double operator_norm_bound(const PrecondConfig& cfg, const Dims& dims) {
    cfg.validate();
    const bool flat = cfg.rasterize || cfg.metric == Metric::laplacian_rasterized;
    const std::size_t n = flat ? element_count(dims) : dims[static_cast<std::size_t>(cfg.axis)];
    const double beta = is_sobolev(cfg.metric) ? cfg.blend_beta : 0.0;
    if (n <= 1) return 1.0 + beta;
    switch (cfg.metric) {
        case Metric::identity: return 1.0;
        case Metric::reweighted_h0: return std::max(1.0, 1.0 / cfg.lambda);
        case Metric::reweighted_h0_code_variant: return 1.0 + cfg.lambda;
        case Metric::sobolev_h1: return 1.0 + beta;
        case Metric::sobolev_tilde_h1: {
            const double nn = static_cast<double>(n);
            const double s = std::sin(std::numbers::pi / nn);
            return std::max(1.0, 1.0 / (4.0 * cfg.lambda * nn * nn * s * s)) + beta;
        }
        case Metric::laplacian_rasterized: return 1.0;
    }
    return 1.0;
}

namespace {

void check_kernel_args(double o, double lambda) {
    if (!(o >= 0.0 && o <= 1.0)) throw std::invalid_argument("kernel position must lie in [0, 1]");
    require_positive(lambda, "kernel lambda");
}

}  // namespace

double kernel_k(double o, double lambda) {
    check_kernel_args(o, lambda);
    const double s = 1.0 / std::sqrt(lambda);
    return std::cosh(s * (o - 0.5)) / (2.0 * std::sinh(s));
}

double kernel_k_green(double o, double lambda) {
    check_kernel_args(o, lambda);
    const double s = 1.0 / std::sqrt(lambda);
    return s * std::cosh(s * (o - 0.5)) / (2.0 * std::sinh(0.5 * s));
}

double kernel_ktilde(double o, double lambda) {
    check_kernel_args(o, lambda);
    return 1.0 + (o * o - o + 1.0 / 6.0) / (2.0 * lambda);
}

Tensor4 conv_oracle(const Tensor4& f, std::span<const double> kernel) {
    const auto n = static_cast<std::size_t>(f.rows());
    if (kernel.size() != n)
        throw std::invalid_argument("conv_oracle: kernel length " + std::to_string(kernel.size()) +
                                    " != O = " + std::to_string(n));
    Tensor4 g(f.dims());
    auto in = f.matrix();
    auto out = g.matrix();
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t o = 0; o < n; ++o)
        for (std::size_t j = 0; j < n; ++j)
            out.row(static_cast<Eigen::Index>(o)) +=
                (w * kernel[(o + n - j) % n]) * in.row(static_cast<Eigen::Index>(j));
    return g;
}

}  // namespace cdg
