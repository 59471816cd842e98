#include "cdg/nn.hpp"

#include "cdg/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cdg {

namespace {

constexpr Eigen::Index kK = 5;
constexpr Eigen::Index kIn = 28;
constexpr Eigen::Index kC1 = 50;
constexpr Eigen::Index kOut1 = kIn - kK + 1;  // 24
constexpr Eigen::Index kPool1 = kOut1 / 2;    // 12
constexpr Eigen::Index kC2 = 100;
constexpr Eigen::Index kOut2 = kPool1 - kK + 1;  // 8
constexpr Eigen::Index kPool2 = kOut2 / 2;       // 4
constexpr Eigen::Index kFeatures = kC2 * kPool2 * kPool2;

constexpr std::size_t sz(Eigen::Index v) { return static_cast<std::size_t>(v); }

}  // namespace

const std::array<ParamInfo, kNumParams>& param_info() {
    static const std::array<ParamInfo, kNumParams> info{{
        {"conv1.weight", ParamKind::conv, {sz(kC1), 1, sz(kK), sz(kK)}, sz(kK * kK)},
        {"conv1.bias", ParamKind::bias, {sz(kC1), 1, 1, 1}, sz(kK * kK)},
        {"conv2.weight", ParamKind::conv, {sz(kC2), sz(kC1), sz(kK), sz(kK)}, sz(kC1 * kK * kK)},
        {"conv2.bias", ParamKind::bias, {sz(kC2), 1, 1, 1}, sz(kC1 * kK * kK)},
        {"dense.weight", ParamKind::dense, {sz(kNumClasses), sz(kFeatures), 1, 1}, sz(kFeatures)},
        {"dense.bias", ParamKind::bias, {sz(kNumClasses), 1, 1, 1}, sz(kFeatures)},
    }};
    return info;
}

ModelParams ModelParams::zeros() {
    ModelParams p;
    for (std::size_t k = 0; k < kNumParams; ++k) p.tensors[k] = Tensor4(param_info()[k].dims);
    return p;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
}

bool ModelParams::all_finite() const {
    return std::all_of(tensors.begin(), tensors.end(), [](const Tensor4& t) { return t.all_finite(); });
}

ModelParams init_params(std::uint64_t seed) {
    ModelParams p = ModelParams::zeros();
    for (std::size_t k = 0; k < kNumParams; ++k) {
        const auto& info = param_info()[k];
        if (info.kind == ParamKind::bias) continue;
        Rng rng(seed, 0x1417 + k);
        const double bound = std::sqrt(3.0 / static_cast<double>(info.fan_in));
        p.tensors[k] = random_uniform(info.dims, rng, -bound, bound);
    }
    return p;
}

namespace {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using IndexMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Matrix<Scalar> weight_matrix(const Tensor4& t) {
    return t.matrix().template cast<Scalar>();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias_vector(const Tensor4& t) {
    return t.data().template cast<Scalar>();
}

// 2x2 stride-2 max pooling over each channel (row) of a C x (B*side*side)
// map; arg records the winning window slot (dy*2 + dx).
template <typename Scalar>
void max_pool(const Matrix<Scalar>& in, Eigen::Index side, Eigen::Index batch, Matrix<Scalar>& out,
              IndexMatrix& arg) {
    const Eigen::Index half = side / 2;
    const Eigen::Index channels = in.rows();
    out.resize(channels, batch * half * half);
    arg.resize(channels, batch * half * half);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index py = 0; py < half; ++py)
            for (Eigen::Index px = 0; px < half; ++px) {
                const Eigen::Index dst = (b * half + py) * half + px;
                const Eigen::Index base = (b * side + 2 * py) * side + 2 * px;
                const Eigen::Index src[4] = {base, base + 1, base + side, base + side + 1};
                out.col(dst) = in.col(src[0]);
                arg.col(dst).setZero();
                for (std::uint8_t slot = 1; slot < 4; ++slot)
                    for (Eigen::Index c = 0; c < channels; ++c)
                        if (in(c, src[slot]) > out(c, dst)) {
                            out(c, dst) = in(c, src[slot]);
                            arg(c, dst) = slot;
                        }
            }
}

// Routes d(pooled) back to the winning positions, gated by ReLU(pooled) > 0.
template <typename Scalar>
void unpool_relu(const Matrix<Scalar>& grad, const Matrix<Scalar>& pooled, const IndexMatrix& arg,
                 Eigen::Index side, Eigen::Index batch, Matrix<Scalar>& out) {
    const Eigen::Index half = side / 2;
    out.setZero(grad.rows(), batch * side * side);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index py = 0; py < half; ++py)
            for (Eigen::Index px = 0; px < half; ++px) {
                const Eigen::Index src = (b * half + py) * half + px;
                const Eigen::Index base = (b * side + 2 * py) * side + 2 * px;
                for (Eigen::Index c = 0; c < grad.rows(); ++c) {
                    if (!(pooled(c, src) > Scalar(0))) continue;
                    const int slot = arg(c, src);
                    out(c, base + (slot / 2) * side + (slot % 2)) = grad(c, src);
                }
            }
}

// Patch matrix for a valid kxk convolution of a C x (B*side*side) map:
// row (c*k + kh)*k + kw, column (b*out + y)*out + x. Buffers are resized in
// place so repeated batches of one size do not reallocate.
template <typename Scalar>
void im2col(const Matrix<Scalar>& in, Eigen::Index side, Eigen::Index batch, Matrix<Scalar>& cols) {
    const Eigen::Index out_side = side - kK + 1;
    const Eigen::Index channels = in.rows();
    cols.resize(channels * kK * kK, batch * out_side * out_side);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index y = 0; y < out_side; ++y)
            for (Eigen::Index x = 0; x < out_side; ++x) {
                const Eigen::Index col = (b * out_side + y) * out_side + x;
                Scalar* dst = cols.col(col).data();
                for (Eigen::Index c = 0; c < channels; ++c)
                    for (Eigen::Index kh = 0; kh < kK; ++kh)
                        for (Eigen::Index kw = 0; kw < kK; ++kw)
                            *dst++ = in(c, (b * side + y + kh) * side + x + kw);
            }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& cols, Eigen::Index channels, Eigen::Index side, Eigen::Index batch,
            Matrix<Scalar>& out) {
    const Eigen::Index out_side = side - kK + 1;
    out.setZero(channels, batch * side * side);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index y = 0; y < out_side; ++y)
            for (Eigen::Index x = 0; x < out_side; ++x) {
                const Scalar* src = cols.col((b * out_side + y) * out_side + x).data();
                for (Eigen::Index c = 0; c < channels; ++c)
                    for (Eigen::Index kh = 0; kh < kK; ++kh)
                        for (Eigen::Index kw = 0; kw < kK; ++kw)
                            out(c, (b * side + y + kh) * side + x + kw) += *src++;
            }
}

template <typename Scalar>
Matrix<Scalar> relu(const Matrix<Scalar>& m) {
    return m.cwiseMax(Scalar(0));
}

// 1600 x B features from a 100 x (B*16) map, feature index c*16 + q.
template <typename Scalar>
Matrix<Scalar> flatten(const Matrix<Scalar>& pooled, Eigen::Index batch) {
    constexpr Eigen::Index q = kPool2 * kPool2;
    Matrix<Scalar> f(kFeatures, batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index c = 0; c < kC2; ++c)
            for (Eigen::Index k = 0; k < q; ++k) f(c * q + k, b) = pooled(c, b * q + k);
    return f;
}

template <typename Scalar>
Matrix<Scalar> unflatten(const Matrix<Scalar>& f, Eigen::Index batch) {
    constexpr Eigen::Index q = kPool2 * kPool2;
    Matrix<Scalar> pooled(kC2, batch * q);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index c = 0; c < kC2; ++c)
            for (Eigen::Index k = 0; k < q; ++k) pooled(c, b * q + k) = f(c * q + k, b);
    return pooled;
}

void check_params(const ModelParams& params) {
    for (std::size_t k = 0; k < kNumParams; ++k)
        if (params[k].dims() != param_info()[k].dims)
            throw std::invalid_argument(std::string("parameter ") + std::string(param_info()[k].name) +
                                        " has dims " + to_string(params[k].dims()) + ", expected " +
                                        to_string(param_info()[k].dims));
}

// Mean cross-entropy and (softmax - onehot) / B.
template <typename Scalar>
double softmax_cross_entropy(const Matrix<Scalar>& logits, const std::vector<int>& labels,
                             Matrix<Scalar>* dlogits, std::size_t* correct) {
    const Eigen::Index batch = logits.cols();
    double total = 0.0;
    std::size_t hits = 0;
    if (dlogits) dlogits->resize(logits.rows(), batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        Eigen::Index best = 0;
        const Scalar top = logits.col(b).maxCoeff(&best);
        if (best == labels[sz(b)]) ++hits;
        const Eigen::Matrix<double, Eigen::Dynamic, 1> shifted = (logits.col(b).array() - top).template cast<double>();
        const double denom = shifted.array().exp().sum();
        total += std::log(denom) - shifted[labels[sz(b)]];
        if (dlogits) {
            Eigen::Matrix<double, Eigen::Dynamic, 1> p = shifted.array().exp() / denom;
            p[labels[sz(b)]] -= 1.0;
            dlogits->col(b) = (p / static_cast<double>(batch)).template cast<Scalar>();
        }
    }
    if (correct) *correct = hits;
    return total / static_cast<double>(batch);
}

}  // namespace

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> forward(const ModelParams& params, const Batch& batch,
                                                              ForwardCache<Scalar>* cache) {
    check_params(params);
    batch.validate();
    const auto n = static_cast<Eigen::Index>(batch.size());

    ForwardCache<Scalar> local;
    ForwardCache<Scalar>& c = cache ? *cache : local;

    // The input is a 1 x (B*784) map: image b occupies columns b*784 ...
    const Matrix<Scalar> input =
        Eigen::Map<const Eigen::MatrixXd>(batch.images.data(), 1, n * kIn * kIn).template cast<Scalar>();
    im2col(input, kIn, n, c.cols1);
    c.pre1.noalias() = weight_matrix<Scalar>(params[conv1_weight]) * c.cols1;
    c.pre1.colwise() += bias_vector<Scalar>(params[conv1_bias]);
    max_pool(c.pre1, kOut1, n, c.pooled1, c.arg1);

    im2col(Matrix<Scalar>(relu(c.pooled1)), kPool1, n, c.cols2);
    c.pre2.noalias() = weight_matrix<Scalar>(params[conv2_weight]) * c.cols2;
    c.pre2.colwise() += bias_vector<Scalar>(params[conv2_bias]);
    max_pool(c.pre2, kOut2, n, c.pooled2, c.arg2);

    c.features = flatten(Matrix<Scalar>(relu(c.pooled2)), n);
    c.logits.noalias() = weight_matrix<Scalar>(params[dense_weight]) * c.features;
    c.logits.colwise() += bias_vector<Scalar>(params[dense_bias]);
    return c.logits;
}

template <typename Scalar>
bool same_activation_pattern(const ForwardCache<Scalar>& a, const ForwardCache<Scalar>& b) {
    return a.arg1 == b.arg1 && a.arg2 == b.arg2 &&
           (a.pooled1.array() > Scalar(0)).matrix() == (b.pooled1.array() > Scalar(0)).matrix() &&
           (a.pooled2.array() > Scalar(0)).matrix() == (b.pooled2.array() > Scalar(0)).matrix();
}

template <typename Scalar>
double batch_loss(const ModelParams& params, const Batch& batch, ForwardCache<Scalar>* cache) {
    const auto logits = forward<Scalar>(params, batch, cache);
    return softmax_cross_entropy<Scalar>(logits, batch.labels, nullptr, nullptr);
}

template <typename Scalar>
LossAndGrads loss_and_grads(const ModelParams& params, const Batch& batch) {
    thread_local ForwardCache<Scalar> c;
    thread_local Matrix<Scalar> dpre2, dcols2, drelu1, dpre1;
    forward<Scalar>(params, batch, &c);
    const auto n = static_cast<Eigen::Index>(batch.size());

    LossAndGrads out;
    out.grads = ModelParams::zeros();
    Matrix<Scalar> dlogits;
    out.loss = softmax_cross_entropy<Scalar>(c.logits, batch.labels, &dlogits, &out.correct);

    auto store = [&](ParamId id, const auto& m) {
        out.grads[id].matrix() = m.template cast<double>();
    };

    // Dense layer.
    store(dense_weight, Matrix<Scalar>(dlogits * c.features.transpose()));
    out.grads[dense_bias].data() = dlogits.rowwise().sum().template cast<double>();
    const Matrix<Scalar> dfeatures = weight_matrix<Scalar>(params[dense_weight]).transpose() * dlogits;

    // Pool2 / ReLU / conv2.
    unpool_relu<Scalar>(unflatten(dfeatures, n), c.pooled2, c.arg2, kOut2, n, dpre2);
    store(conv2_weight, Matrix<Scalar>(dpre2 * c.cols2.transpose()));
    out.grads[conv2_bias].data() = dpre2.rowwise().sum().template cast<double>();
    dcols2.noalias() = weight_matrix<Scalar>(params[conv2_weight]).transpose() * dpre2;

    // Pool1 / ReLU / conv1.
    col2im<Scalar>(dcols2, kC1, kPool1, n, drelu1);
    unpool_relu<Scalar>(drelu1, c.pooled1, c.arg1, kOut1, n, dpre1);
    store(conv1_weight, Matrix<Scalar>(dpre1 * c.cols1.transpose()));
    out.grads[conv1_bias].data() = dpre1.rowwise().sum().template cast<double>();
    return out;
}

double accuracy(const ModelParams& params, const Dataset& data, std::size_t chunk) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        const std::size_t end = std::min(data.size(), start + chunk);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Batch b = data.batch(idx);
        const auto logits = forward<float>(params, b);
        for (Eigen::Index k = 0; k < logits.cols(); ++k) {
            Eigen::Index best = 0;
            logits.col(k).maxCoeff(&best);
            if (best == b.labels[sz(k)]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

#define CDG_INSTANTIATE_NN(T)                                                                               \
    template Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> forward<T>(const ModelParams&, const Batch&, \
                                                                         ForwardCache<T>*);                \
    template bool same_activation_pattern<T>(const ForwardCache<T>&, const ForwardCache<T>&);             \
    template double batch_loss<T>(const ModelParams&, const Batch&, ForwardCache<T>*);                     \
    template LossAndGrads loss_and_grads<T>(const ModelParams&, const Batch&);

CDG_INSTANTIATE_NN(float)
CDG_INSTANTIATE_NN(double)

#undef CDG_INSTANTIATE_NN

}  // namespace cdg
