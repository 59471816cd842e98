#pragma once

// Dense rank-4 tensors (O, I, H, W) stored row-major with the output-channel
// axis outermost. Element (o, i, h, w) lives at ((o*I + i)*H + h)*W + w, so a
// tensor is also an O x S row-major matrix with S = I*H*W: row o is the o-th
// output-channel slice and column r is the fiber along O at slice offset r.

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace cdg {

using Dims = std::array<std::size_t, 4>;
using Perm = std::array<int, 4>;

inline std::size_t element_count(const Dims& dims) {
    return dims[0] * dims[1] * dims[2] * dims[3];
}

std::string to_string(const Dims& dims);

template <typename Scalar>
class BasicTensor4 {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowMajorMatrix =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatrixMap = Eigen::Map<RowMajorMatrix>;
    using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

    BasicTensor4() : dims_{0, 0, 0, 0} {}

    explicit BasicTensor4(const Dims& dims) : dims_(dims) {
        check_dims(dims);
        data_.setZero(static_cast<Eigen::Index>(element_count(dims)));
    }

    BasicTensor4(const Dims& dims, Vector data) : dims_(dims), data_(std::move(data)) {
        check_dims(dims);
        if (static_cast<std::size_t>(data_.size()) != element_count(dims))
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match dims " + to_string(dims));
    }

    static BasicTensor4 zeros(const Dims& dims) { return BasicTensor4(dims); }

    static BasicTensor4 constant(const Dims& dims, Scalar value) {
        BasicTensor4 t(dims);
        t.data_.setConstant(value);
        return t;
    }

    const Dims& dims() const { return dims_; }
    std::size_t dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const { return static_cast<std::size_t>(data_.size()); }
    bool empty() const { return data_.size() == 0; }

    /// Number of output-channel slices (O).
    Eigen::Index rows() const { return static_cast<Eigen::Index>(dims_[0]); }
    /// Elements per output-channel slice (I*H*W).
    Eigen::Index slice_size() const {
        return static_cast<Eigen::Index>(dims_[1] * dims_[2] * dims_[3]);
    }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    MatrixMap matrix() { return MatrixMap(data_.data(), rows(), slice_size()); }
    ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), slice_size()); }

    std::size_t offset(std::size_t o, std::size_t i, std::size_t h, std::size_t w) const {
        return ((o * dims_[1] + i) * dims_[2] + h) * dims_[3] + w;
    }
    Scalar& operator()(std::size_t o, std::size_t i, std::size_t h, std::size_t w) {
        return data_[static_cast<Eigen::Index>(offset(o, i, h, w))];
    }
    Scalar operator()(std::size_t o, std::size_t i, std::size_t h, std::size_t w) const {
        return data_[static_cast<Eigen::Index>(offset(o, i, h, w))];
    }

    bool all_finite() const { return data_.allFinite(); }

    template <typename Other>
    BasicTensor4<Other> cast() const {
        return BasicTensor4<Other>(dims_, data_.template cast<Other>());
    }

    BasicTensor4& operator+=(const BasicTensor4& rhs) {
        require_same_dims(*this, rhs, "operator+=");
        data_ += rhs.data_;
        return *this;
    }
    BasicTensor4& operator-=(const BasicTensor4& rhs) {
        require_same_dims(*this, rhs, "operator-=");
        data_ -= rhs.data_;
        return *this;
    }
    BasicTensor4& operator*=(Scalar s) {
        data_ *= s;
        return *this;
    }

    friend BasicTensor4 operator+(BasicTensor4 lhs, const BasicTensor4& rhs) { return lhs += rhs; }
    friend BasicTensor4 operator-(BasicTensor4 lhs, const BasicTensor4& rhs) { return lhs -= rhs; }
    friend BasicTensor4 operator*(BasicTensor4 t, Scalar s) { return t *= s; }
    friend BasicTensor4 operator*(Scalar s, BasicTensor4 t) { return t *= s; }

    friend bool operator==(const BasicTensor4& a, const BasicTensor4& b) {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

    static void require_same_dims(const BasicTensor4& a, const BasicTensor4& b, const char* what) {
        if (a.dims_ != b.dims_)
            throw std::invalid_argument(std::string(what) + ": dims " + to_string(a.dims_) +
                                        " vs " + to_string(b.dims_));
    }

private:
    static void check_dims(const Dims& dims) {
        for (auto d : dims)
            if (d == 0) throw std::invalid_argument("tensor dims must be positive, got " + to_string(dims));
    }

    Dims dims_;
    Vector data_;
};

using Tensor4 = BasicTensor4<double>;

// ---------------------------------------------------------------------------
// Channel-axis operations
// ---------------------------------------------------------------------------

/// Mean over the output-channel axis, broadcast back to the input shape.
template <typename Scalar>
BasicTensor4<Scalar> channel_mean(const BasicTensor4<Scalar>& f) {
    if (f.empty()) throw std::invalid_argument("channel_mean: empty tensor");
    BasicTensor4<Scalar> out(f.dims());
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    const RowVector mean = f.matrix().colwise().mean();
    out.matrix().rowwise() = mean;
    return out;
}

/// Periodic forward difference along O: (Dk)[o] = k[o+1 mod O] - k[o].
template <typename Scalar>
BasicTensor4<Scalar> forward_difference(const BasicTensor4<Scalar>& k) {
    BasicTensor4<Scalar> out(k.dims());
    const auto n = k.rows();
    auto in = k.matrix();
    auto res = out.matrix();
    for (Eigen::Index o = 0; o < n; ++o) res.row(o) = in.row((o + 1) % n) - in.row(o);
    return out;
}

/// Periodic second difference along O: g[o-1] - 2 g[o] + g[o+1].
template <typename Scalar>
BasicTensor4<Scalar> second_difference(const BasicTensor4<Scalar>& g) {
    BasicTensor4<Scalar> out(g.dims());
    const auto n = g.rows();
    auto in = g.matrix();
    auto res = out.matrix();
    for (Eigen::Index o = 0; o < n; ++o)
        res.row(o) = in.row((o + n - 1) % n) - Scalar(2) * in.row(o) + in.row((o + 1) % n);
    return out;
}

inline void check_permutation(const Perm& perm) {
    std::array<bool, 4> seen{};
    for (int p : perm) {
        if (p < 0 || p > 3 || seen[static_cast<std::size_t>(p)])
            throw std::invalid_argument("transpose_axes: not a permutation of (0,1,2,3)");
        seen[static_cast<std::size_t>(p)] = true;
    }
}

/// out(a0,a1,a2,a3) = f(idx) with idx[perm[k]] = a_k, i.e. output axis k is input axis perm[k].
template <typename Scalar>
BasicTensor4<Scalar> transpose_axes(const BasicTensor4<Scalar>& f, const Perm& perm) {
    check_permutation(perm);
    const Dims& in = f.dims();
    Dims out_dims{};
    for (std::size_t k = 0; k < 4; ++k) out_dims[k] = in[static_cast<std::size_t>(perm[k])];
    if (perm == Perm{0, 1, 2, 3}) return f;

    std::array<std::size_t, 4> in_stride{in[1] * in[2] * in[3], in[2] * in[3], in[3], 1};
    std::array<std::size_t, 4> step{};
    for (std::size_t k = 0; k < 4; ++k) step[k] = in_stride[static_cast<std::size_t>(perm[k])];

    BasicTensor4<Scalar> out(out_dims);
    const Scalar* src = f.data().data();
    Scalar* dst = out.data().data();
    for (std::size_t a = 0; a < out_dims[0]; ++a)
        for (std::size_t b = 0; b < out_dims[1]; ++b)
            for (std::size_t c = 0; c < out_dims[2]; ++c) {
                const std::size_t base = a * step[0] + b * step[1] + c * step[2];
                for (std::size_t d = 0; d < out_dims[3]; ++d) *dst++ = src[base + d * step[3]];
            }
    return out;
}

inline Perm inverse_permutation(const Perm& perm) {
    check_permutation(perm);
    Perm inv{};
    for (int k = 0; k < 4; ++k) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = k;
    return inv;
}

/// Row-major flattening to dims (N, 1, 1, 1).
template <typename Scalar>
BasicTensor4<Scalar> rasterize(const BasicTensor4<Scalar>& f) {
    return BasicTensor4<Scalar>(Dims{f.size(), 1, 1, 1}, f.data());
}

template <typename Scalar>
BasicTensor4<Scalar> derasterize(const BasicTensor4<Scalar>& flat, const Dims& dims) {
    if (flat.size() != element_count(dims))
        throw std::invalid_argument("derasterize: " + std::to_string(flat.size()) +
                                    " elements cannot fill dims " + to_string(dims));
    return BasicTensor4<Scalar>(dims, flat.data());
}

template <typename Scalar>
Scalar squared_norm(const BasicTensor4<Scalar>& t) {
    return t.data().squaredNorm();
}

template <typename Scalar>
Scalar norm(const BasicTensor4<Scalar>& t) {
    return t.data().norm();
}

// ---------------------------------------------------------------------------
// CDG1 binary format: "CDG1", u32 ndim (=4), u32 dims[4], f64 data; all
// little-endian, data row-major with O outermost.
// ---------------------------------------------------------------------------

void write_cdg(const std::filesystem::path& path, const Tensor4& t);
Tensor4 read_cdg(const std::filesystem::path& path);

std::string encode_cdg(const Tensor4& t);
Tensor4 decode_cdg(const std::string& bytes);

}  // namespace cdg
