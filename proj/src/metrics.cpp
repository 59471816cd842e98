#include "cdg/metrics.hpp"

#include <stdexcept>

namespace cdg {

namespace {

void require_positive_lambda(double lambda, const char* what) {
    if (!(lambda > 0.0)) throw std::invalid_argument(std::string(what) + ": lambda must be > 0");
}

}  // namespace

double ip_h0(const Tensor4& k1, const Tensor4& k2) {
    Tensor4::require_same_dims(k1, k2, "ip_h0");
    return k1.data().dot(k2.data());
}

double ip_h0_lambda(const Tensor4& k1, const Tensor4& k2, double lambda) {
    require_positive_lambda(lambda, "ip_h0_lambda");
    Tensor4::require_same_dims(k1, k2, "ip_h0_lambda");
    const Tensor4 m1 = channel_mean(k1);
    const Tensor4 m2 = channel_mean(k2);
    return ip_h0(m1, m2) + lambda * ip_h0(k1 - m1, k2 - m2);
}

double ip_tilde_h1(const Tensor4& k1, const Tensor4& k2, double lambda) {
    require_positive_lambda(lambda, "ip_tilde_h1");
    Tensor4::require_same_dims(k1, k2, "ip_tilde_h1");
    if (k1.dim(0) < 2) throw std::invalid_argument("ip_tilde_h1: needs O >= 2");
    const double o = static_cast<double>(k1.dim(0));
    return ip_h0(channel_mean(k1), channel_mean(k2)) +
           lambda * o * o * ip_h0(forward_difference(k1), forward_difference(k2));
}

}  // namespace cdg
