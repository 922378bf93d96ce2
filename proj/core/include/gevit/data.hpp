#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gevit {

// Image classification dataset with intensities in [0,1].
struct Dataset {
    int width = 28;
    int height = 28;
    std::vector<float> images;   // count * width * height, row-major
    std::vector<uint8_t> labels;  // digits 0..9
    std::string provenance;

    size_t count() const { return labels.size(); }
    const float* image(size_t i) const { return images.data() + i * width * height; }
};

enum class RotateMode { exact90, bilinear };

// Big-endian IDX containers (magic 2051 for images, 2049 for labels).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& d, const std::string& images_path, const std::string& labels_path);

// Rotation about the image center. exact90 is a lossless pixel
// permutation and accepts only multiples of 90; bilinear interpolates
// with zero fill outside the source.
std::vector<float> rotate_image(const float* img, int width, int height, double angle_degrees,
                                RotateMode mode);

// Deterministic subsample of `base` with one uniform random rotation per
// image drawn from the seeded generator.
Dataset make_rotmnist(const Dataset& base, uint64_t seed, size_t count, RotateMode angle_mode);

// Per-epoch deterministic shuffle keyed on (seed, epoch); the final short
// batch is emitted.
std::vector<std::vector<int>> batches(size_t count, size_t batch_size, uint64_t seed, int epoch);

// Procedurally rendered digit glyphs with random placement, scale,
// stroke intensity and noise; a self-contained stand-in for the MNIST
// base corpus.
Dataset synth_digits(size_t count, uint64_t seed, int width = 28, int height = 28);

}  // namespace gevit
