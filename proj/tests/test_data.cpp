#include "oracles.hpp"

#include "cdg/data.hpp"
#include "cdg/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace cdg;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("cdg_data_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
}

std::string be32(std::uint32_t v) {
    return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

// Two 28x28 images assembled byte by byte.
std::string image_fixture(std::uint32_t magic, std::uint32_t count) {
    std::string s = be32(magic) + be32(count) + be32(28) + be32(28);
    for (std::uint32_t k = 0; k < count * 784; ++k) s.push_back(static_cast<char>(k % 256));
    return s;
}

Dataset toy(std::size_t n) {
    std::vector<double> px(n * kImagePixels);
    std::vector<std::uint8_t> lab(n);
    for (std::size_t k = 0; k < n; ++k) {
        px[k * kImagePixels] = static_cast<double>(k);
        lab[k] = static_cast<std::uint8_t>(k % 10);
    }
    return Dataset(std::move(px), std::move(lab));
}

}  // namespace

TEST_CASE("IDX fixture loads with exact pixel values") {
    TempDir dir;
    write_bytes(dir.path / "img", image_fixture(0x803, 2));
    write_bytes(dir.path / "lab", be32(0x801) + be32(2) + std::string{7, 3});
    const Dataset d = load_idx(dir.path / "img", dir.path / "lab");
    REQUIRE(d.size() == 2);
    CHECK(d.label(0) == 7);
    CHECK(d.label(1) == 3);
    CHECK(d.image(0)[0] == 0.0);
    CHECK(d.image(0)[255] == 1.0);
    CHECK(d.image(0)[100] == 100.0 / 255.0);
    CHECK(d.image(1)[0] == double(784 % 256) / 255.0);

    // The library encoder writes the same bytes.
    std::vector<std::uint8_t> px(2 * 784);
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = static_cast<std::uint8_t>(k % 256);
    CHECK(encode_idx_images(px, 2) == image_fixture(0x803, 2));
    const std::uint8_t labels[] = {7, 3};
    CHECK(encode_idx_labels(labels) == be32(0x801) + be32(2) + std::string{7, 3});
}

TEST_CASE("IDX validation errors name the offense") {
    TempDir dir;
    write_bytes(dir.path / "img", image_fixture(0x803, 3));
    write_bytes(dir.path / "lab2", be32(0x801) + be32(2) + std::string{1, 2});
    write_bytes(dir.path / "labmagic", be32(0x803) + be32(3) + std::string{1, 2, 3});
    write_bytes(dir.path / "short", image_fixture(0x803, 3).substr(0, 1000));

    auto message = [](auto fn) {
        try {
            fn();
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message([&] { load_idx(dir.path / "img", dir.path / "labmagic"); }).find("wrong magic") != std::string::npos);
    CHECK(message([&] { load_idx(dir.path / "img", dir.path / "lab2"); }).find("count mismatch") != std::string::npos);
    CHECK(message([&] { load_idx(dir.path / "short", dir.path / "lab2"); }).find("truncated") != std::string::npos);
    CHECK_THROWS_AS(load_idx(dir.path / "absent", dir.path / "lab2"), IoError);
}

TEST_CASE("inverted split is seeded, disjoint and complete") {
    const Dataset d = toy(50);
    const Split a = inverted_split(d, 20, 3);
    const Split b = inverted_split(d, 20, 3);
    REQUIRE(a.train.size() == 20);
    REQUIRE(a.test.size() == 30);
    std::set<double> seen;
    for (std::size_t k = 0; k < a.train.size(); ++k) {
        CHECK(a.train.image(k)[0] == b.train.image(k)[0]);
        seen.insert(a.train.image(k)[0]);
    }
    for (std::size_t k = 0; k < a.test.size(); ++k) CHECK(seen.insert(a.test.image(k)[0]).second);
    CHECK(seen.size() == 50);
    CHECK(inverted_split(d, 50, 1).test.empty());
    CHECK_THROWS_AS(inverted_split(d, 51, 1), std::invalid_argument);
}

TEST_CASE("epoch order is a seeded permutation") {
    const auto a = shuffled_indices(100, 4, 0);
    CHECK(a == shuffled_indices(100, 4, 0));
    CHECK(a != shuffled_indices(100, 4, 1));
    std::vector<std::size_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < 100; ++k) CHECK(sorted[k] == k);
}

TEST_CASE("batches carry images as columns") {
    const Dataset d = toy(5);
    const std::size_t idx[] = {4, 1};
    const Batch b = d.batch(idx);
    CHECK(b.images.cols() == 2);
    CHECK(b.images(0, 0) == 4.0);
    CHECK(b.labels == std::vector<int>{4, 1});
}

TEST_CASE("synthetic quadratic") {
    const SyntheticQuadratic q = synthetic_quadratic({3, 2, 2, 1}, 5);
    CHECK(q.loss(q.target()) == 0.0);
    CHECK(q.gradient(q.target()).data().isZero());
    Tensor4 x = q.target();
    x.data()[0] += 1.0;
    CHECK(q.loss(x) == doctest::Approx(0.5));
    CHECK(q.gradient(x).data()[0] == doctest::Approx(1.0));
    CHECK(q.gradient(x).data().tail(11).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(6);
    const Tensor4 y = random_normal({3, 2, 2, 1}, rng);
    const Tensor4 g = q.gradient(y);
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < y.data().size(); ++k) {
        Tensor4 p = y;
        Tensor4 m = y;
        p.data()[k] += h;
        m.data()[k] -= h;
        CHECK((q.loss(p) - q.loss(m)) / (2 * h) == doctest::Approx(g.data()[k]).epsilon(1e-8));
    }
    CHECK(synthetic_quadratic({3, 2, 2, 1}, 5).target() == q.target());
}
