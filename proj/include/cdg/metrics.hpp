#pragma once

// Discrete inner products on the tangent space of (O, I, H, W) tensors. They
// are not needed to compute gradients; they exist so the defining relation
// <grad_m L, k>_m = <grad_H0 L, k>_H0 can be checked for every metric m.
//
// Conventions (unit measure per index, periodic along O):
//   H0          sum k1 * k2
//   H0_lambda   H0(mean k1, mean k2) + lambda * H0(k1 - mean k1, k2 - mean k2)
//   H1~         H0(mean k1, mean k2) + lambda * O^2 * H0(D k1, D k2)
// where mean is the broadcast output-channel mean and D the periodic forward
// difference along O.

#include "cdg/tensor.hpp"

namespace cdg {

double ip_h0(const Tensor4& k1, const Tensor4& k2);
double ip_h0_lambda(const Tensor4& k1, const Tensor4& k2, double lambda);
double ip_tilde_h1(const Tensor4& k1, const Tensor4& k2, double lambda);

}  // namespace cdg
