#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gevit/attention.hpp"
#include "gevit/encoder.hpp"
#include "gevit/group.hpp"
#include "gevit/tensor.hpp"

namespace gevit {

struct ModelConfig {
    std::string group = "c4";
    int image_width = 28;
    int image_height = 28;
    int neighborhood = 5;  // odd n, window is n x n
    int embed_dim = 16;    // c_in of every attention layer
    int heads = 4;
    int head_dim = 8;
    int blocks = 2;
    int mlp_hidden = 32;
    int classes = 10;
    int pe_hidden_width = 16;
    bool pe_share_heads = true;
    PeVariant pe_variant = PeVariant::gevit;
    double attn_dropout = 0.0;
    double value_dropout = 0.0;
    Boundary boundary = Boundary::torus;
    bool scale_scores = false;
    double ln_eps = 1e-5;
    // Pixel intensities arrive in [0,1] and are mostly background; tokens
    // are zero-centred and amplified before the embedding so that image
    // content, not the constant bias, dominates the attention inputs.
    double input_mean = 0.125;
    double input_scale = 17.5;

    std::vector<std::string> validate() const {
        std::vector<std::string> bad;
        if (neighborhood < 1 || neighborhood % 2 == 0) bad.push_back("neighborhood must be odd and >= 1");
        if (image_width < 1 || image_height < 1) bad.push_back("image dims must be >= 1");
        if (embed_dim < 1) bad.push_back("embed_dim must be >= 1");
        if (heads < 1) bad.push_back("heads must be >= 1");
        if (head_dim < 1) bad.push_back("head_dim must be >= 1");
        if (blocks < 0) bad.push_back("blocks must be >= 0");
        if (mlp_hidden < 1) bad.push_back("mlp_hidden must be >= 1");
        if (classes < 1) bad.push_back("classes must be >= 1");
        if (pe_hidden_width < 1) bad.push_back("pe_hidden_width must be >= 1");
        if (attn_dropout < 0 || attn_dropout >= 1) bad.push_back("attn_dropout must be in [0,1)");
        if (value_dropout < 0 || value_dropout >= 1) bad.push_back("value_dropout must be in [0,1)");
        try {
            FiniteGroup::from_spec(group);
        } catch (const std::exception& e) {
            bad.push_back(e.what());
        }
        return bad;
    }
};

// max over the group axis, then both spatial mean and spatial max,
// concatenated: (P,|H|,C) -> (2C). Both reductions are invariant under
// the permutation action on positions, and the max half keeps localized
// evidence ("pattern present somewhere") from being averaged away.
template <class T>
Tensor<T> global_pool(const Tensor<T>& lifted) {
    Tensor<T> fibers = max_mid(lifted);  // (P,C)
    int P = fibers.shape()[0], C = fibers.shape()[1];
    Tensor<T> spatial_max = reshape(max_mid(reshape(fibers, {1, P, C})), {1, C});
    Tensor<T> spatial_mean = reshape(mean_rows(fibers), {1, C});
    return reshape(concat_cols(std::vector<Tensor<T>>{spatial_mean, spatial_max}), {2 * C});
}

template <class T>
Tensor<T> classification_loss(const Tensor<T>& logits, int label) {
    return cross_entropy_logits(logits, label);
}

// GE-ViT: pixel embedding, lifting self-attention, N pre-norm residual
// blocks of group self-attention + swish MLP, final norm, invariant
// pooling, classifier head. Pixel tokens (1x1 patches).
template <class T>
class Model {
public:
    Model(const ModelConfig& config, uint64_t seed)
        : cfg_(config), group_(FiniteGroup::from_spec(config.group)) {
        auto bad = cfg_.validate();
        if (!bad.empty()) {
            std::string msg = "invalid model config:";
            for (auto& b : bad) msg += "\n  - " + b;
            throw std::invalid_argument(msg);
        }
        std::mt19937_64 rng(seed);
        nb_ = Neighborhood::make(cfg_.image_width, cfg_.image_height, cfg_.neighborhood,
                                 cfg_.boundary);
        double radius = nb_.radius();
        int C = cfg_.embed_dim;
        int pe_out = cfg_.pe_share_heads ? C : cfg_.heads * C;

        embed_w_ = uniform_param(rng, 1, C);
        // A random bias keeps the token direction intensity-dependent;
        // with a zero bias, scalar-pixel tokens are a pure amplitude
        // modulation that the per-token layer norms would cancel.
        {
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            std::vector<T> b(C);
            for (auto& x : b) x = static_cast<T>(u(rng));
            embed_b_ = Tensor<T>::param({C}, std::move(b));
        }
        lift_attn_ = AttentionParams<T>::init(cfg_.heads, C, cfg_.head_dim, C, rng);
        lift_enc_ = std::make_unique<EncoderNet<T>>(group_, EncoderKind::lifting,
                                                    cfg_.pe_hidden_width, pe_out, radius,
                                                    cfg_.pe_variant, rng);
        for (int b = 0; b < cfg_.blocks; ++b) {
            Block blk;
            blk.ln1_g = ones_param(C);
            blk.ln1_b = Tensor<T>::param({C}, std::vector<T>(C, T(0)));
            blk.attn = AttentionParams<T>::init(cfg_.heads, C, cfg_.head_dim, C, rng);
            blk.enc = std::make_unique<EncoderNet<T>>(group_, EncoderKind::group,
                                                      cfg_.pe_hidden_width, pe_out, radius,
                                                      cfg_.pe_variant, rng);
            blk.ln2_g = ones_param(C);
            blk.ln2_b = Tensor<T>::param({C}, std::vector<T>(C, T(0)));
            blk.mlp_w1 = uniform_param(rng, C, cfg_.mlp_hidden);
            blk.mlp_b1 = Tensor<T>::param({cfg_.mlp_hidden}, std::vector<T>(cfg_.mlp_hidden, T(0)));
            blk.mlp_w2 = uniform_param(rng, cfg_.mlp_hidden, C);
            blk.mlp_b2 = Tensor<T>::param({C}, std::vector<T>(C, T(0)));
            blocks_.push_back(std::move(blk));
        }
        final_ln_g_ = ones_param(C);
        final_ln_b_ = Tensor<T>::param({C}, std::vector<T>(C, T(0)));
        cls_w_ = uniform_param(rng, 2 * C, cfg_.classes);
        cls_b_ = Tensor<T>::param({cfg_.classes}, std::vector<T>(cfg_.classes, T(0)));
    }

    const ModelConfig& config() const { return cfg_; }
    const FiniteGroup& group() const { return group_; }
    const Neighborhood& neighborhood() const { return nb_; }

    std::vector<std::pair<std::string, Tensor<T>>> params() const {
        std::vector<std::pair<std::string, Tensor<T>>> out{{"embed.w", embed_w_},
                                                           {"embed.b", embed_b_}};
        auto append = [&](auto v) { out.insert(out.end(), v.begin(), v.end()); };
        append(lift_attn_.params("lift.attn"));
        append(lift_enc_->params("lift.pe"));
        for (size_t b = 0; b < blocks_.size(); ++b) {
            std::string p = "block" + std::to_string(b);
            const Block& blk = blocks_[b];
            out.push_back({p + ".ln1.g", blk.ln1_g});
            out.push_back({p + ".ln1.b", blk.ln1_b});
            append(blk.attn.params(p + ".attn"));
            append(blk.enc->params(p + ".pe"));
            out.push_back({p + ".ln2.g", blk.ln2_g});
            out.push_back({p + ".ln2.b", blk.ln2_b});
            out.push_back({p + ".mlp.w1", blk.mlp_w1});
            out.push_back({p + ".mlp.b1", blk.mlp_b1});
            out.push_back({p + ".mlp.w2", blk.mlp_w2});
            out.push_back({p + ".mlp.b2", blk.mlp_b2});
        }
        out.push_back({"final_ln.g", final_ln_g_});
        out.push_back({"final_ln.b", final_ln_b_});
        out.push_back({"cls.w", cls_w_});
        out.push_back({"cls.b", cls_b_});
        return out;
    }

    size_t param_count() const {
        size_t n = 0;
        for (auto& [name, t] : params()) n += t.numel();
        return n;
    }

    // Lifted feature map after the lifting layer (stage 0) or after block
    // k (stage k). Dropout never applies here.
    Tensor<T> features(const Tensor<T>& image, int stage) const {
        if (stage < 0 || stage > cfg_.blocks)
            throw std::out_of_range("feature stage must be in [0, blocks]");
        Tensor<T> x = lifted_trunk(image, stage, AttnOptions{});
        return x;
    }

    Tensor<T> forward(const Tensor<T>& image, const AttnOptions& opt = {}) const {
        Tensor<T> x = lifted_trunk(image, cfg_.blocks, opt);
        int P = nb_.positions(), G = group_.order(), C = cfg_.embed_dim;
        x = layer_norm(x, final_ln_g_, final_ln_b_, T(cfg_.ln_eps));
        Tensor<T> pooled = reshape(global_pool(x), {1, 2 * C});
        (void)P;
        (void)G;
        return reshape(add_bias(matmul(pooled, cls_w_), cls_b_), {cfg_.classes});
    }

private:
    struct Block {
        Tensor<T> ln1_g, ln1_b;
        AttentionParams<T> attn;
        std::unique_ptr<EncoderNet<T>> enc;
        Tensor<T> ln2_g, ln2_b;
        Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    };

    static Tensor<T> ones_param(int n) { return Tensor<T>::param({n}, std::vector<T>(n, T(1))); }

    static Tensor<T> uniform_param(std::mt19937_64& rng, int rows, int cols) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        std::vector<T> w(static_cast<size_t>(rows) * cols);
        for (auto& x : w) x = static_cast<T>(u(rng) * bound);
        return Tensor<T>::param({rows, cols}, std::move(w));
    }

    Tensor<T> lifted_trunk(const Tensor<T>& image, int stages, const AttnOptions& opt) const {
        int P = nb_.positions(), G = group_.order(), C = cfg_.embed_dim;
        if (image.shape() != std::vector<int>{P, 1})
            throw std::invalid_argument("image must be (" + std::to_string(P) + ",1), got " +
                                        shape_str(image.shape()));
        std::vector<T> norm = image.value();
        for (auto& v : norm) v = static_cast<T>((v - cfg_.input_mean) * cfg_.input_scale);
        Tensor<T> x0 = linear(Tensor<T>::constant(image.shape(), std::move(norm)), embed_w_,
                              embed_b_);
        Tensor<T> x = lifting_attention(x0, lift_attn_, nb_, *lift_enc_, opt);
        for (int b = 0; b < stages; ++b) {
            const Block& blk = blocks_[b];
            Tensor<T> a = group_attention(layer_norm(x, blk.ln1_g, blk.ln1_b, T(cfg_.ln_eps)),
                                          blk.attn, nb_, *blk.enc, opt);
            x = add(x, a);
            Tensor<T> m = reshape(layer_norm(x, blk.ln2_g, blk.ln2_b, T(cfg_.ln_eps)), {P * G, C});
            m = linear(swish(linear(m, blk.mlp_w1, blk.mlp_b1)), blk.mlp_w2, blk.mlp_b2);
            x = add(x, reshape(m, {P, G, C}));
        }
        return x;
    }

    ModelConfig cfg_;
    FiniteGroup group_;
    Neighborhood nb_;
    Tensor<T> embed_w_, embed_b_;
    AttentionParams<T> lift_attn_;
    std::unique_ptr<EncoderNet<T>> lift_enc_;
    std::vector<Block> blocks_;
    Tensor<T> final_ln_g_, final_ln_b_;
    Tensor<T> cls_w_, cls_b_;
};

}  // namespace gevit
