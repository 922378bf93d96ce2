#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "gevit/data.hpp"

using namespace gevit;

TEST_CASE("synthetic digits are deterministic, bounded, and labeled") {
    Dataset a = synth_digits(64, 5, 14, 14);
    Dataset b = synth_digits(64, 5, 14, 14);
    CHECK(a.count() == 64);
    CHECK(a.width == 14);
    CHECK(a.images == b.images);
    CHECK(a.labels == b.labels);
    std::set<int> classes;
    for (float v : a.images) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    for (uint8_t l : a.labels) {
        CHECK(l <= 9);
        classes.insert(l);
    }
    CHECK(classes.size() == 10);  // 64 draws cover every digit
    Dataset c = synth_digits(64, 6, 14, 14);
    CHECK(a.images != c.images);  // seed matters
    CHECK_THROWS(synth_digits(4, 1, 6, 6));  // too small to render a glyph
}

TEST_CASE("exact 90-degree rotation is an order-4 permutation") {
    Dataset d = synth_digits(3, 9, 12, 12);
    const float* img = d.image(0);
    auto r1 = rotate_image(img, 12, 12, 90.0, RotateMode::exact90);
    auto r2 = rotate_image(r1.data(), 12, 12, 90.0, RotateMode::exact90);
    auto r3 = rotate_image(r2.data(), 12, 12, 90.0, RotateMode::exact90);
    auto r4 = rotate_image(r3.data(), 12, 12, 90.0, RotateMode::exact90);
    CHECK(std::equal(r4.begin(), r4.end(), img));
    auto r180 = rotate_image(img, 12, 12, 180.0, RotateMode::exact90);
    CHECK(r180 == r2);
    auto back = rotate_image(r1.data(), 12, 12, -90.0, RotateMode::exact90);
    CHECK(std::equal(back.begin(), back.end(), img));
    CHECK_THROWS(rotate_image(img, 12, 12, 45.0, RotateMode::exact90));
}

TEST_CASE("bilinear rotation by zero is the identity and stays in range") {
    Dataset d = synth_digits(2, 11, 12, 12);
    auto same = rotate_image(d.image(0), 12, 12, 0.0, RotateMode::bilinear);
    for (int i = 0; i < 144; ++i) CHECK(same[i] == doctest::Approx(d.image(0)[i]).epsilon(1e-6));
    auto rot = rotate_image(d.image(0), 12, 12, 33.0, RotateMode::bilinear);
    for (float v : rot) {
        CHECK(v >= -1e-6f);
        CHECK(v <= 1.0f + 1e-6f);
    }
}

TEST_CASE("rotated dataset construction is seeded and label-preserving") {
    Dataset base = synth_digits(50, 2, 10, 10);
    Dataset a = make_rotmnist(base, 3, 40, RotateMode::exact90);
    Dataset b = make_rotmnist(base, 3, 40, RotateMode::exact90);
    CHECK(a.count() == 40);
    CHECK(a.images == b.images);
    CHECK(a.labels == b.labels);
    CHECK_THROWS(make_rotmnist(base, 3, 51, RotateMode::exact90));
    // every sample is some quarter-rotation of some base image
    for (size_t i = 0; i < 5; ++i) {
        bool found = false;
        for (size_t j = 0; j < base.count() && !found; ++j)
            for (int q = 0; q < 4 && !found; ++q) {
                auto rot = rotate_image(base.image(j), 10, 10, 90.0 * q, RotateMode::exact90);
                if (std::equal(rot.begin(), rot.end(), a.image(i)) && base.labels[j] == a.labels[i])
                    found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("batches partition the index range deterministically") {
    auto b1 = batches(23, 8, 7, 0);
    auto b2 = batches(23, 8, 7, 0);
    auto b3 = batches(23, 8, 7, 1);
    CHECK(b1 == b2);
    CHECK(b1 != b3);  // epoch reshuffles
    REQUIRE(b1.size() == 3);
    CHECK(b1[0].size() == 8);
    CHECK(b1[2].size() == 7);  // short final batch is kept
    std::set<int> seen;
    for (auto& batch : b1)
        for (int i : batch) CHECK(seen.insert(i).second);
    CHECK(seen.size() == 23);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 22);
    CHECK_THROWS(batches(10, 0, 1, 0));
}

TEST_CASE("IDX round trip preserves images and labels") {
    namespace fs = std::filesystem;
    Dataset d = synth_digits(12, 13, 9, 9);
    fs::path dir = fs::temp_directory_path() / "gevit_idx_test";
    fs::create_directories(dir);
    std::string ip = (dir / "im.idx").string(), lp = (dir / "lb.idx").string();
    save_idx(d, ip, lp);
    Dataset back = load_idx(ip, lp);
    CHECK(back.count() == d.count());
    CHECK(back.width == d.width);
    CHECK(back.height == d.height);
    CHECK(back.labels == d.labels);
    // intensities survive the 8-bit quantization to within half a level
    for (size_t i = 0; i < d.images.size(); ++i)
        CHECK(std::abs(back.images[i] - d.images[i]) <= 0.5f / 255.0f + 1e-6f);
    CHECK_THROWS(load_idx((dir / "missing.idx").string(), lp));
    CHECK_THROWS(load_idx(lp, ip));  // swapped magics rejected
    fs::remove_all(dir);
}
