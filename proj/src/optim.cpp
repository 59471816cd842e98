#include "cdg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cdg {

void SgdOptions::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd: lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("sgd: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("sgd: weight decay must be >= 0");
}

void AdamOptions::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("adam: weight decay must be >= 0");
}

namespace {

Tensor4 effective_gradient(const Tensor4& param, const Tensor4& raw_grad, const PrecondConfig& precond,
                           double weight_decay) {
    Tensor4::require_same_dims(param, raw_grad, "optimizer step");
    Tensor4 g = precondition(raw_grad, precond);
    if (weight_decay != 0.0) g.data() += weight_decay * param.data();
    return g;
}

void ensure_buffer(Tensor4& buffer, const Tensor4& param) {
    if (buffer.empty())
        buffer = Tensor4(param.dims());
    else
        Tensor4::require_same_dims(buffer, param, "optimizer state");
}

}  // namespace

void sgd_step(Tensor4& param, const Tensor4& raw_grad, OptimState& state, const SgdOptions& opts,
              const PrecondConfig& precond, double lr_scale) {
    opts.validate();
    const Tensor4 g = effective_gradient(param, raw_grad, precond, opts.weight_decay);
    ensure_buffer(state.momentum, param);
    state.momentum.data() = opts.momentum * state.momentum.data() + g.data();
    param.data() -= (opts.lr * lr_scale) * state.momentum.data();
    ++state.step;
}

void adam_step(Tensor4& param, const Tensor4& raw_grad, OptimState& state, const AdamOptions& opts,
               const PrecondConfig& precond, double lr_scale) {
    opts.validate();
    const Tensor4 g = effective_gradient(param, raw_grad, precond, opts.weight_decay);
    ensure_buffer(state.first_moment, param);
    ensure_buffer(state.second_moment, param);
    ++state.step;

    auto& m = state.first_moment.data();
    auto& v = state.second_moment.data();
    m = opts.beta1 * m + (1.0 - opts.beta1) * g.data();
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.data().cwiseAbs2();

    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(opts.beta1, t);
    const double c2 = 1.0 - std::pow(opts.beta2, t);
    param.data().array() -=
        (opts.lr * lr_scale) * (m.array() / c1) / ((v.array() / c2).sqrt() + opts.eps);
}

double lr_schedule(std::size_t epoch, std::size_t period) {
    if (period == 0) return 1.0;
    return std::pow(10.0, -static_cast<double>(epoch / period));
}

}  // namespace cdg
