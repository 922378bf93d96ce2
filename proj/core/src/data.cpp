#include "gevit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gevit {

namespace {

uint32_t read_u32_be(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("IDX file truncated while reading " + what);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imf(images_path, std::ios::binary);
    if (!imf) throw std::runtime_error("cannot open " + images_path);
    uint32_t magic = read_u32_be(imf, "image magic");
    if (magic != 2051)
        throw std::runtime_error("bad image magic " + std::to_string(magic) + " in " + images_path);
    uint32_t count = read_u32_be(imf, "image count");
    uint32_t rows = read_u32_be(imf, "rows");
    uint32_t cols = read_u32_be(imf, "cols");
    std::vector<unsigned char> raw(static_cast<size_t>(count) * rows * cols);
    imf.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!imf) throw std::runtime_error("IDX image file truncated: " + images_path);

    std::ifstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw std::runtime_error("cannot open " + labels_path);
    uint32_t lmagic = read_u32_be(lbf, "label magic");
    if (lmagic != 2049)
        throw std::runtime_error("bad label magic " + std::to_string(lmagic) + " in " + labels_path);
    uint32_t lcount = read_u32_be(lbf, "label count");
    if (lcount != count)
        throw std::runtime_error("image/label count mismatch: " + std::to_string(count) + " vs " +
                                 std::to_string(lcount));
    Dataset d;
    d.width = static_cast<int>(cols);
    d.height = static_cast<int>(rows);
    d.labels.resize(count);
    lbf.read(reinterpret_cast<char*>(d.labels.data()), count);
    if (!lbf) throw std::runtime_error("IDX label file truncated: " + labels_path);
    d.images.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) d.images[i] = raw[i] / 255.0f;
    d.provenance = "idx:" + images_path + "," + labels_path;
    return d;
}

void save_idx(const Dataset& d, const std::string& images_path, const std::string& labels_path) {
    std::ofstream imf(images_path, std::ios::binary);
    if (!imf) throw std::runtime_error("cannot write " + images_path);
    write_u32_be(imf, 2051);
    write_u32_be(imf, static_cast<uint32_t>(d.count()));
    write_u32_be(imf, static_cast<uint32_t>(d.height));
    write_u32_be(imf, static_cast<uint32_t>(d.width));
    for (float v : d.images) {
        unsigned char b = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        imf.write(reinterpret_cast<char*>(&b), 1);
    }
    std::ofstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw std::runtime_error("cannot write " + labels_path);
    write_u32_be(lbf, 2049);
    write_u32_be(lbf, static_cast<uint32_t>(d.count()));
    lbf.write(reinterpret_cast<const char*>(d.labels.data()),
              static_cast<std::streamsize>(d.labels.size()));
}

std::vector<float> rotate_image(const float* img, int width, int height, double angle_degrees,
                                RotateMode mode) {
    std::vector<float> out(static_cast<size_t>(width) * height, 0.0f);
    double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    if (mode == RotateMode::exact90) {
        long k = std::lround(angle_degrees / 90.0);
        if (std::abs(angle_degrees - 90.0 * k) > 1e-9)
            throw std::invalid_argument("exact90 rotation requires a multiple of 90 degrees");
        k = ((k % 4) + 4) % 4;
        // Inverse rotation maps each output pixel onto its source pixel.
        double c = (k == 0 || k == 2) ? (k == 0 ? 1 : -1) : 0;
        double s = (k == 1 || k == 3) ? (k == 1 ? 1 : -1) : 0;
        for (int row = 0; row < height; ++row)
            for (int col = 0; col < width; ++col) {
                double dx = col - cx, dy = row - cy;
                int sc = static_cast<int>(std::lround(c * dx + s * dy + cx));
                int sr = static_cast<int>(std::lround(-s * dx + c * dy + cy));
                out[row * width + col] = img[sr * width + sc];
            }
        return out;
    }
    double th = angle_degrees * 3.14159265358979323846 / 180.0;
    double c = std::cos(th), s = std::sin(th);
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
            double dx = col - cx, dy = row - cy;
            double sx = c * dx + s * dy + cx;
            double sy = -s * dx + c * dy + cy;
            int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
            double fx = sx - x0, fy = sy - y0;
            auto at = [&](int x, int y) -> double {
                return (x >= 0 && x < width && y >= 0 && y < height) ? img[y * width + x] : 0.0;
            };
            out[row * width + col] = static_cast<float>(
                (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) +
                fy * ((1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1)));
        }
    return out;
}

Dataset make_rotmnist(const Dataset& base, uint64_t seed, size_t count, RotateMode angle_mode) {
    if (count > base.count())
        throw std::invalid_argument("requested " + std::to_string(count) + " samples from a base of " +
                                    std::to_string(base.count()));
    std::mt19937_64 rng(seed);
    std::vector<int> order(base.count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Dataset d;
    d.width = base.width;
    d.height = base.height;
    d.images.reserve(count * base.width * base.height);
    d.labels.reserve(count);
    std::uniform_real_distribution<double> ang(0.0, 360.0);
    std::uniform_int_distribution<int> quarter(0, 3);
    for (size_t k = 0; k < count; ++k) {
        int idx = order[k];
        double a = angle_mode == RotateMode::exact90 ? 90.0 * quarter(rng) : ang(rng);
        auto rot = rotate_image(base.image(idx), base.width, base.height, a, angle_mode);
        d.images.insert(d.images.end(), rot.begin(), rot.end());
        d.labels.push_back(base.labels[idx]);
    }
    d.provenance = "rotmnist(base=[" + base.provenance + "], seed=" + std::to_string(seed) +
                   ", count=" + std::to_string(count) +
                   ", angles=" + (angle_mode == RotateMode::exact90 ? "exact90" : "uniform-bilinear") +
                   ")";
    return d;
}

std::vector<std::vector<int>> batches(size_t count, size_t batch_size, uint64_t seed, int epoch) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::seed_seq sq{seed, static_cast<uint64_t>(epoch)};
    std::mt19937_64 rng(sq);
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> out;
    for (size_t off = 0; off < count; off += batch_size) {
        size_t n = std::min(batch_size, count - off);
        out.emplace_back(order.begin() + off, order.begin() + off + n);
    }
    return out;
}

namespace {

// 6x9 glyph masks. 6 and 9 (and 2 and 5) are deliberately not half-turn
// images of each other, so rotation-invariant classifiers can separate
// them from cues in the strokes.
const char* kGlyphs[10][9] = {
    {".XXXX.", "X....X", "X....X", "X....X", "X....X", "X....X", "X....X", "X....X", ".XXXX."},
    {"..XX..", ".XXX..", "..XX..", "..XX..", "..XX..", "..XX..", "..XX..", "..XX..", ".XXXX."},
    {".XXXX.", "X....X", ".....X", "....X.", "...X..", "..X...", ".X....", "X.....", "XXXXXX"},
    {"XXXXX.", ".....X", ".....X", "..XXX.", ".....X", ".....X", ".....X", "X....X", ".XXXX."},
    {"...XX.", "..X.X.", ".X..X.", "X...X.", "XXXXXX", "....X.", "....X.", "....X.", "....X."},
    {"XXXXXX", "X.....", "X.....", "XXXXX.", ".....X", ".....X", ".....X", "X....X", ".XXXX."},
    {"..XXX.", ".X....", "X.....", "XXXXX.", "X....X", "X....X", "X....X", "X....X", ".XXXX."},
    {"XXXXXX", ".....X", "....X.", "....X.", "...X..", "...X..", "..X...", "..X...", "..X..."},
    {".XXXX.", "X....X", "X....X", ".XXXX.", "X....X", "X....X", "X....X", "X....X", ".XXXX."},
    {".XXXX.", "X....X", "X....X", "X....X", ".XXXXX", ".....X", ".....X", "....X.", "..XX.."},
};

constexpr int kGlyphW = 6, kGlyphH = 9;

double glyph_at(int digit, double gx, double gy) {
    // Bilinear sample of the binary mask; coordinates in glyph units.
    int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
    double fx = gx - x0, fy = gy - y0;
    auto m = [&](int x, int y) -> double {
        if (x < 0 || x >= kGlyphW || y < 0 || y >= kGlyphH) return 0.0;
        return kGlyphs[digit][y][x] == 'X' ? 1.0 : 0.0;
    };
    return (1 - fy) * ((1 - fx) * m(x0, y0) + fx * m(x0 + 1, y0)) +
           fy * ((1 - fx) * m(x0, y0 + 1) + fx * m(x0 + 1, y0 + 1));
}

}  // namespace

Dataset synth_digits(size_t count, uint64_t seed, int width, int height) {
    const int W = width, H = height;
    if (W < 8 || H < 8) throw std::invalid_argument("synth_digits needs at least 8x8 images");
    Dataset d;
    d.width = W;
    d.height = H;
    d.images.resize(count * W * H);
    d.labels.resize(count);
    std::mt19937_64 rng(seed);
    double sz = std::min(W, H) / 28.0;  // glyph metrics are tuned at 28x28
    // MNIST digits are centre-of-mass centred and size-normalized, so the
    // stand-in keeps placement and scale jitter modest.
    std::uniform_real_distribution<double> uscale(2.0 * sz, 2.5 * sz);  // glyph rows -> pixels
    std::uniform_real_distribution<double> ushift(-1.2 * sz, 1.2 * sz);
    std::uniform_real_distribution<double> ustroke(0.8, 1.0);
    std::uniform_real_distribution<double> unoise(-0.03, 0.03);
    for (size_t i = 0; i < count; ++i) {
        int digit = static_cast<int>(i % 10);
        double sy = uscale(rng);
        double sx = sy * (0.85 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng));
        double ox = ushift(rng), oy = ushift(rng);
        double stroke = ustroke(rng);
        float* img = d.images.data() + i * W * H;
        double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
        double gcx = (kGlyphW - 1) / 2.0, gcy = (kGlyphH - 1) / 2.0;
        for (int row = 0; row < H; ++row)
            for (int col = 0; col < W; ++col) {
                double gx = (col - cx - ox) / sx + gcx;
                double gy = (row - cy - oy) / sy + gcy;
                double v = stroke * glyph_at(digit, gx, gy) + unoise(rng);
                img[row * W + col] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        d.labels[i] = static_cast<uint8_t>(digit);
    }
    // Deterministic class shuffle so sequential splits stay balanced.
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Dataset shuffled;
    shuffled.width = W;
    shuffled.height = H;
    shuffled.images.resize(d.images.size());
    shuffled.labels.resize(count);
    for (size_t k = 0; k < count; ++k) {
        std::copy_n(d.image(order[k]), W * H, shuffled.images.data() + k * W * H);
        shuffled.labels[k] = d.labels[order[k]];
    }
    shuffled.provenance = "synth_digits(count=" + std::to_string(count) +
                          ", seed=" + std::to_string(seed) + ", " + std::to_string(W) + "x" +
                          std::to_string(H) + ")";
    return shuffled;
}

}  // namespace gevit
