#include "cdg/data.hpp"

#include "cdg/errors.hpp"
#include "cdg/random.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace cdg {

void Batch::validate() const {
    if (labels.empty()) throw std::invalid_argument("batch: empty");
    if (images.rows() != static_cast<Eigen::Index>(kImagePixels) ||
        images.cols() != static_cast<Eigen::Index>(labels.size()))
        throw std::invalid_argument("batch: images must be 784 x B with B = number of labels");
    for (int y : labels)
        if (y < 0 || y >= kNumClasses) throw std::invalid_argument("batch: label out of range");
}

Dataset::Dataset(std::vector<double> pixels, std::vector<std::uint8_t> labels)
    : pixels_(std::move(pixels)), labels_(std::move(labels)) {
    if (pixels_.size() != labels_.size() * kImagePixels)
        throw std::invalid_argument("dataset: pixel count does not match label count");
    for (auto y : labels_)
        if (y >= kNumClasses) throw std::invalid_argument("dataset: label out of range");
}

Batch Dataset::batch(std::span<const std::size_t> indices) const {
    Batch b;
    b.images.resize(static_cast<Eigen::Index>(kImagePixels), static_cast<Eigen::Index>(indices.size()));
    b.labels.reserve(indices.size());
    for (std::size_t c = 0; c < indices.size(); ++c) {
        const auto img = image(indices[c]);
        b.images.col(static_cast<Eigen::Index>(c)) =
            Eigen::Map<const Eigen::VectorXd>(img.data(), static_cast<Eigen::Index>(kImagePixels));
        b.labels.push_back(labels_[indices[c]]);
    }
    return b;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<double> px;
    std::vector<std::uint8_t> lb;
    px.reserve(indices.size() * kImagePixels);
    lb.reserve(indices.size());
    for (auto k : indices) {
        const auto img = image(k);
        px.insert(px.end(), img.begin(), img.end());
        lb.push_back(labels_[k]);
    }
    return Dataset(std::move(px), std::move(lb));
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::uint32_t read_be32(const std::string& bytes, std::size_t pos, const std::filesystem::path& path) {
    if (bytes.size() < pos + 4) throw ParseError(path.string() + ": truncated header");
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) v = (v << 8) | static_cast<unsigned char>(bytes[pos + k]);
    return v;
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
    if (got != want) {
        std::ostringstream os;
        os << path.string() << ": wrong magic 0x" << std::hex << got << " (expected 0x" << want << ')';
        throw ParseError(os.str());
    }
}

void put_be32(std::string& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xFFu));
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const std::string img = slurp(images_path);
    const std::string lab = slurp(labels_path);

    check_magic(read_be32(img, 0, images_path), kImageMagic, images_path);
    const std::size_t n_images = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    if (rows != kImageSide || cols != kImageSide)
        throw ParseError(images_path.string() + ": expected 28x28 images, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    if (img.size() != 16 + n_images * kImagePixels)
        throw ParseError(images_path.string() + ": truncated file (expected " +
                         std::to_string(16 + n_images * kImagePixels) + " bytes, got " +
                         std::to_string(img.size()) + ")");

    check_magic(read_be32(lab, 0, labels_path), kLabelMagic, labels_path);
    const std::size_t n_labels = read_be32(lab, 4, labels_path);
    if (lab.size() != 8 + n_labels)
        throw ParseError(labels_path.string() + ": truncated file (expected " + std::to_string(8 + n_labels) +
                         " bytes, got " + std::to_string(lab.size()) + ")");
    if (n_images != n_labels)
        throw ParseError("count mismatch: " + std::to_string(n_images) + " images vs " +
                         std::to_string(n_labels) + " labels");

    std::vector<double> pixels(n_images * kImagePixels);
    for (std::size_t k = 0; k < pixels.size(); ++k)
        pixels[k] = static_cast<unsigned char>(img[16 + k]) / 255.0;
    std::vector<std::uint8_t> labels(n_labels);
    for (std::size_t k = 0; k < n_labels; ++k) {
        labels[k] = static_cast<std::uint8_t>(lab[8 + k]);
        if (labels[k] >= kNumClasses)
            throw ParseError(labels_path.string() + ": label " + std::to_string(labels[k]) + " out of range");
    }
    return Dataset(std::move(pixels), std::move(labels));
}

std::string encode_idx_images(std::span<const std::uint8_t> pixels, std::size_t count) {
    if (pixels.size() != count * kImagePixels) throw std::invalid_argument("encode_idx_images: size mismatch");
    std::string out;
    put_be32(out, kImageMagic);
    put_be32(out, static_cast<std::uint32_t>(count));
    put_be32(out, kImageSide);
    put_be32(out, kImageSide);
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

std::string encode_idx_labels(std::span<const std::uint8_t> labels) {
    std::string out;
    put_be32(out, kLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.append(reinterpret_cast<const char*>(labels.data()), labels.size());
    return out;
}

Split inverted_split(const Dataset& data, std::size_t train_n, std::uint64_t seed) {
    if (train_n > data.size())
        throw std::invalid_argument("inverted_split: train_n " + std::to_string(train_n) +
                                    " exceeds dataset size " + std::to_string(data.size()));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, 0x5eed5);
    rng.shuffle(order);
    const std::span<const std::size_t> all(order);
    return Split{data.subset(all.first(train_n)), data.subset(all.subspan(train_n))};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, 0xba7c4000 + epoch);
    rng.shuffle(order);
    return order;
}

double SyntheticQuadratic::loss(const Tensor4& x) const {
    Tensor4::require_same_dims(x, target_, "synthetic loss");
    return 0.5 * (x.data() - target_.data()).squaredNorm();
}

Tensor4 SyntheticQuadratic::gradient(const Tensor4& x) const {
    Tensor4::require_same_dims(x, target_, "synthetic gradient");
    return x - target_;
}

SyntheticQuadratic synthetic_quadratic(const Dims& dims, std::uint64_t seed) {
    Rng rng(seed, 0x9a7);
    return SyntheticQuadratic(random_normal(dims, rng));
}

}  // namespace cdg
