#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gevit/attention.hpp"
#include "gevit/encoder.hpp"
#include "gevit/group.hpp"
#include "gevit/network.hpp"

namespace gevit {

struct CheckRecord {
    std::string name;
    std::string detail;
    std::string precision;  // "f64" or "f32"
    double max_err = 0.0;
    double mean_err = 0.0;
    double threshold = 0.0;
    bool expected_violation = false;  // negative control: pass iff max_err >= threshold
    bool pass = false;
};

struct CertReport {
    std::vector<CheckRecord> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::string to_text() const;
    std::string to_csv() const;
};

struct CertOptions {
    std::string group = "c4";
    int neighborhood = 5;
    PeVariant pe_variant = PeVariant::gevit;
    uint64_t seed = 7;
};

// Runs the full numerical certification suite with fresh random weights
// (equivariance here is architectural, not learned). Checks are sorted by
// name so the report is byte-stable.
CertReport run_cert_suite(const CertOptions& opt);

// ---- transformation helpers shared by checks and error maps ----

// Regular-representation action of g = (shift, h_bar) on a planar map:
// out(i) = in(h_bar^-1 (i - shift)) about the grid center. shift wraps in
// torus mode; h_bar must act exactly.
template <class T>
std::vector<T> transform_planar(const FiniteGroup& g, GroupElement h_bar, int shift_x, int shift_y,
                                const std::vector<T>& v, int width, int height, int channels) {
    GroupElement inv = g.inverse(h_bar);
    std::vector<T> out(v.size());
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
            int c = (((col - shift_x) % width) + width) % width;
            int r = (((row - shift_y) % height) + height) % height;
            int src = g.act_grid(inv, r * width + c, width, height);
            for (int ch = 0; ch < channels; ++ch)
                out[(static_cast<size_t>(row) * width + col) * channels + ch] =
                    v[static_cast<size_t>(src) * channels + ch];
        }
    return out;
}

// Same action on a lifted map: spatial motion plus the group-axis
// permutation k -> h_bar^-1 * element(k).
template <class T>
std::vector<T> transform_lifted(const FiniteGroup& g, GroupElement h_bar, int shift_x, int shift_y,
                                const std::vector<T>& v, int width, int height, int channels) {
    GroupElement inv = g.inverse(h_bar);
    int G = g.order();
    std::vector<int> perm = g.regular_permutation(h_bar);
    std::vector<T> out(v.size());
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
            int c = (((col - shift_x) % width) + width) % width;
            int r = (((row - shift_y) % height) + height) % height;
            int src = g.act_grid(inv, r * width + c, width, height);
            for (int k = 0; k < G; ++k)
                for (int ch = 0; ch < channels; ++ch)
                    out[((static_cast<size_t>(row) * width + col) * G + k) * channels + ch] =
                        v[(static_cast<size_t>(src) * G + perm[k]) * channels + ch];
        }
    return out;
}

// Literal nested-loop evaluation of group self-attention, straight off the
// raw parameter arrays. Kept independent of the fused kernels; used as the
// equivalence oracle. Torus boundaries, shared encoder.
std::vector<double> dense_group_attention_oracle(const FiniteGroup& g,
                                                 const AttentionParams<double>& p,
                                                 const EncoderNet<double>& enc,
                                                 const Neighborhood& nb,
                                                 const std::vector<double>& lifted);

// ---- error maps (feature-map ground-truth comparison) ----

// 90 degree counter-clockwise pixel permutation (exact).
std::vector<float> rotate_image_quarter(const std::vector<float>& img, int width, int height);

struct ErrorMapResult {
    int width = 0, height = 0, group_order = 0, channels = 0;
    double avg_abs_err = 0.0;
    double max_abs_err = 0.0;
    std::vector<double> error;  // P * G * C, F'' - F'
};

// Compares features of a rotated image against the transformed features
// of the original image (ground truth via exact grid rotation plus cyclic
// permutation of the group axis).
template <class T>
ErrorMapResult compute_error_map(const Model<T>& model, const std::vector<float>& image,
                                 int quarter_turns, int stage) {
    const FiniteGroup& g = model.group();
    const ModelConfig& cfg = model.config();
    int W = cfg.image_width, H = cfg.image_height, P = W * H;
    // The grid element realizing a 90*k degree rotation.
    GroupElement h_bar = g.identity();
    bool found = false;
    for (int k = 0; k < g.order(); ++k) {
        GroupElement e{k};
        if (g.is_reflection(e)) continue;
        Vec2 r = g.act_point(e, Vec2{1, 0});
        double th = quarter_turns * 3.14159265358979323846 / 2.0;
        if (std::abs(r.x - std::cos(th)) < 1e-9 && std::abs(r.y - std::sin(th)) < 1e-9) {
            h_bar = e;
            found = true;
            break;
        }
    }
    if (!found || !g.grid_action_exact(h_bar, W, H))
        throw ExactActionUnavailable("group " + g.spec() + " has no exact rotation by " +
                                     std::to_string(90 * quarter_turns) + " degrees");
    auto to_tensor = [&](const std::vector<float>& img) {
        std::vector<T> v(img.begin(), img.end());
        return Tensor<T>::constant({P, 1}, std::move(v));
    };
    std::vector<float> rotated = image;
    for (int k = 0; k < ((quarter_turns % 4) + 4) % 4; ++k)
        rotated = rotate_image_quarter(rotated, W, H);
    Tensor<T> F = model.features(to_tensor(image), stage);
    Tensor<T> Fp = model.features(to_tensor(rotated), stage);
    std::vector<T> Fpp = transform_lifted(g, h_bar, 0, 0, F.value(), W, H, cfg.embed_dim);
    ErrorMapResult res;
    res.width = W;
    res.height = H;
    res.group_order = g.order();
    res.channels = cfg.embed_dim;
    res.error.resize(Fpp.size());
    double sum = 0.0;
    for (size_t i = 0; i < Fpp.size(); ++i) {
        double e = static_cast<double>(Fpp[i]) - static_cast<double>(Fp.value()[i]);
        res.error[i] = e;
        sum += std::abs(e);
        res.max_abs_err = std::max(res.max_abs_err, std::abs(e));
    }
    res.avg_abs_err = sum / static_cast<double>(Fpp.size());
    return res;
}

// Grayscale P5 output with per-map min-max normalization; the numeric
// scale lives in the CSV sidecar.
void write_pgm(const std::string& path, int width, int height, const std::vector<double>& values);
void write_error_csv(const std::string& path, const ErrorMapResult& res);

}  // namespace gevit
