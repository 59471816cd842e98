#pragma once

// Forward-Euler discretizations of the gradient flow dX/dt = -grad_m L(X).
// The raw loss gradient is preconditioned first; weight decay, momentum and
// Adam moments then act on the preconditioned gradient.

#include "cdg/precondition.hpp"
#include "cdg/tensor.hpp"

#include <cstdint>

namespace cdg {

struct SgdOptions {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;

    void validate() const;
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    void validate() const;
};

/// Per-parameter optimizer buffers. Buffers are allocated lazily on the first
/// step and must keep the parameter's shape afterwards.
struct OptimState {
    Tensor4 momentum;
    Tensor4 first_moment;
    Tensor4 second_moment;
    std::uint64_t step = 0;
};

/// buffer <- mu * buffer + (P(raw_grad) + wd * param); param <- param - lr * lr_scale * buffer.
void sgd_step(Tensor4& param, const Tensor4& raw_grad, OptimState& state, const SgdOptions& opts,
              const PrecondConfig& precond, double lr_scale = 1.0);

/// Bias-corrected Adam on g = P(raw_grad) + wd * param.
void adam_step(Tensor4& param, const Tensor4& raw_grad, OptimState& state, const AdamOptions& opts,
               const PrecondConfig& precond, double lr_scale = 1.0);

/// Step decay: 10^-floor(epoch / period).
double lr_schedule(std::size_t epoch, std::size_t period = 40);

}  // namespace cdg
