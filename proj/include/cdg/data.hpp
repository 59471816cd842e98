#pragma once

#include "cdg/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cdg {

constexpr std::size_t kImageSide = 28;
constexpr std::size_t kImagePixels = kImageSide * kImageSide;
constexpr int kNumClasses = 10;

/// A mini-batch: one 28x28 image per column (row-major pixel order), pixel
/// values in [0, 1].
struct Batch {
    Eigen::MatrixXd images;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    void validate() const;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<double> pixels, std::vector<std::uint8_t> labels);

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    int label(std::size_t k) const { return labels_[k]; }
    std::span<const double> image(std::size_t k) const {
        return {pixels_.data() + k * kImagePixels, kImagePixels};
    }

    Batch batch(std::span<const std::size_t> indices) const;
    Dataset subset(std::span<const std::size_t> indices) const;

private:
    std::vector<double> pixels_;
    std::vector<std::uint8_t> labels_;
};

/// Reads big-endian IDX image (magic 0x00000803, 28x28) and label (magic
/// 0x00000801) files. Malformed input raises ParseError, unreadable files IoError.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Encoders used to build fixtures and convert other distributions to IDX.
std::string encode_idx_images(std::span<const std::uint8_t> pixels, std::size_t count);
std::string encode_idx_labels(std::span<const std::uint8_t> labels);

struct Split {
    Dataset train;
    Dataset test;
};

/// Seeded selection of train_n samples for training; the remainder is the test set.
Split inverted_split(const Dataset& data, std::size_t train_n, std::uint64_t seed);

/// Seeded permutation of 0..n-1; one epoch visits indices in this order.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// L(X) = 0.5 * ||X - X*||^2 with a seeded standard-normal target.
class SyntheticQuadratic {
public:
    explicit SyntheticQuadratic(Tensor4 target) : target_(std::move(target)) {}

    const Tensor4& target() const { return target_; }
    double loss(const Tensor4& x) const;
    Tensor4 gradient(const Tensor4& x) const;

private:
    Tensor4 target_;
};

SyntheticQuadratic synthetic_quadratic(const Dims& dims, std::uint64_t seed);

}  // namespace cdg
