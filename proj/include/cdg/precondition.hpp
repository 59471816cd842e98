#pragma once

// Channel-directed gradients. Every operator maps the ordinary (H0) gradient
// f of a parameter tensor to the gradient under another metric, acting along
// the output-channel axis O with periodic boundary conditions. All operators
// are linear, symmetric positive definite, and the identity when O == 1.
//
//   reweighted_h0              g = mean(f) + (f - mean(f)) / lambda
//   reweighted_h0_code_variant g = f + lambda * mean(f)
//   sobolev_h1                 (Id - lambda O^2 D2) g = f
//   sobolev_tilde_h1           mean(g) - lambda O^2 D2 g = f
//   laplacian_rasterized       (Id - sigma D2) g = f on the flattened tensor
//
// D2 is the periodic second difference with unit index spacing. The Sobolev
// systems are solved exactly in O(O) per fiber.

#include "cdg/tensor.hpp"

#include <span>
#include <string>
#include <string_view>

namespace cdg {

enum class Metric {
    identity,
    reweighted_h0,
    reweighted_h0_code_variant,
    sobolev_h1,
    sobolev_tilde_h1,
    laplacian_rasterized,
};

enum class Axis { output = 0, input = 1 };

std::string_view to_string(Metric m);
std::string_view to_string(Axis a);
Metric parse_metric(std::string_view name);
Axis parse_axis(std::string_view name);

bool is_sobolev(Metric m);

struct PrecondConfig {
    Metric metric = Metric::identity;
    double lambda = 1.0;
    /// Weight of the raw gradient added back to Sobolev gradients.
    double blend_beta = 1.0;
    Axis axis = Axis::output;
    bool rasterize = false;
    /// Smoothing strength of laplacian_rasterized.
    double sigma = 1.0;

    void validate() const;
};

Tensor4 reweighted_h0(const Tensor4& f, double lambda);
Tensor4 reweighted_h0_code_variant(const Tensor4& f, double lambda);
Tensor4 sobolev_h1(const Tensor4& f, double lambda);
Tensor4 sobolev_tilde_h1(const Tensor4& f, double lambda);
Tensor4 laplacian_rasterized(const Tensor4& f, double sigma);

/// Applies cfg.metric along cfg.axis (or to the rasterized tensor) and, for the
/// Sobolev metrics, adds cfg.blend_beta * f.
Tensor4 precondition(const Tensor4& f, const PrecondConfig& cfg);

/// Upper bound on the largest eigenvalue of precondition(., cfg) for tensors of
/// the given dims. Used to scale step sizes.
double operator_norm_bound(const PrecondConfig& cfg, const Dims& dims);

/// Solves (Id - c D2) x = b in place for every column of an n x m row-major
/// block (one fiber per column), c >= 0. Cyclic tridiagonal elimination with a
/// rank-one correction; O(n m).
void solve_periodic_helmholtz(Tensor4::MatrixMap columns, double c);

// Continuum kernels on o in [0, 1].

/// H1 kernel exactly as printed alongside the H1~ kernel.
double kernel_k(double o, double lambda);
/// Periodic Green's function of (Id - lambda d^2/do^2) on [0, 1]; unit mass.
double kernel_k_green(double o, double lambda);
double kernel_ktilde(double o, double lambda);

/// g[o] = (1/O) sum_j kernel[(o - j) mod O] f[j] along axis O, O(O^2) per fiber.
Tensor4 conv_oracle(const Tensor4& f, std::span<const double> kernel);

}  // namespace cdg
