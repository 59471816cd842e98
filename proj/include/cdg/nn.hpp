#pragma once

// Two-layer convolutional classifier for 28x28 single-channel images:
//
//   conv 5x5 (50) -> ReLU -> maxpool 2x2 -> conv 5x5 (100) -> ReLU -> maxpool 2x2
//   -> flatten (100*4*4) -> dense (10)
//
// Valid convolutions, stride-2 pooling with ties going to the first element in
// row-major window order. Gradients are derived by hand; the network is
// templated on the working precision while parameters stay 64-bit.

#include "cdg/data.hpp"
#include "cdg/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string_view>

namespace cdg {

enum class ParamKind { conv, dense, bias };

enum ParamId : std::size_t {
    conv1_weight,
    conv1_bias,
    conv2_weight,
    conv2_bias,
    dense_weight,
    dense_bias,
    kNumParams,
};

struct ParamInfo {
    std::string_view name;
    ParamKind kind;
    Dims dims;
    std::size_t fan_in;
};

const std::array<ParamInfo, kNumParams>& param_info();

struct ModelParams {
    std::array<Tensor4, kNumParams> tensors;

    static ModelParams zeros();

    Tensor4& operator[](std::size_t id) { return tensors[id]; }
    const Tensor4& operator[](std::size_t id) const { return tensors[id]; }
    std::size_t parameter_count() const;
    bool all_finite() const;
};

/// Weights uniform in +-sqrt(3 / fan_in) (unit-variance outputs), biases zero.
ModelParams init_params(std::uint64_t seed);

template <typename Scalar>
struct ForwardCache {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using IndexMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix cols1;     // 25 x (B*576)
    Matrix pre1;      // 50 x (B*576) conv1 output
    Matrix pooled1;   // 50 x (B*144) max over windows of pre1
    IndexMatrix arg1;
    Matrix cols2;     // 1250 x (B*64)
    Matrix pre2;      // 100 x (B*64)
    Matrix pooled2;   // 100 x (B*16)
    IndexMatrix arg2;
    Matrix features;  // 1600 x B
    Matrix logits;    // 10 x B
};

/// Returns logits as a 10 x B matrix (one column per sample).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> forward(const ModelParams& params, const Batch& batch,
                                                              ForwardCache<Scalar>* cache = nullptr);

/// True if both passes took the same ReLU branches and pooling winners.
template <typename Scalar>
bool same_activation_pattern(const ForwardCache<Scalar>& a, const ForwardCache<Scalar>& b);

struct LossAndGrads {
    double loss = 0.0;
    std::size_t correct = 0;
    ModelParams grads;
};

/// Mean softmax cross-entropy over the batch and its gradient for every parameter.
template <typename Scalar>
LossAndGrads loss_and_grads(const ModelParams& params, const Batch& batch);

template <typename Scalar>
double batch_loss(const ModelParams& params, const Batch& batch, ForwardCache<Scalar>* cache = nullptr);

/// Fraction of correctly classified samples, evaluated in chunks.
double accuracy(const ModelParams& params, const Dataset& data, std::size_t chunk = 100);

}  // namespace cdg
