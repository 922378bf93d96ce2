#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gevit/group.hpp"
#include "gevit/tensor.hpp"

namespace gevit {

enum class PeVariant { gevit, baseline };

enum class EncoderKind {
    lifting,  // offset only
    group     // offset plus a group element
};

// Relative position between a query and a key token.
struct RelPos {
    Vec2 offset;                             // x(j) - x(i), in pixels
    std::optional<GroupElement> twist_elem;  // group-layer encoders only
};

// Columns [start, start+len) of (N,C).
template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, int start, int len) {
    if (x.shape().size() != 2) throw std::invalid_argument("slice_cols expects (N,C)");
    int N = x.shape()[0], C = x.shape()[1];
    if (start < 0 || len <= 0 || start + len > C) throw std::out_of_range("slice_cols: bad range");
    std::vector<T> v(static_cast<size_t>(N) * len);
    for (int i = 0; i < N; ++i)
        std::copy_n(x.value().begin() + static_cast<size_t>(i) * C + start, len,
                    v.begin() + static_cast<size_t>(i) * len);
    auto xn = x.node();
    return Tensor<T>::from_op({N, len}, std::move(v), {x}, [xn, N, C, start, len](TensorNode<T>& out) {
        auto& g = xn->ensure_grad();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < len; ++j) g[i * C + start + j] += out.grad[i * len + j];
    });
}

// Learnable map from (relative offset, group element) to a channel vector:
// a two-layer perceptron with swish, continuous in the offset so that
// non-integer offsets under C8/C12 actions are well defined. Offsets are
// normalized by the neighborhood radius; a group element enters as
// (cos, sin, reflection bit) of its planar matrix.
template <class T>
class EncoderNet {
public:
    EncoderNet(const FiniteGroup& group, EncoderKind kind, int hidden_width, int out_dim,
               double radius, PeVariant variant, std::mt19937_64& rng)
        : group_(group),
          kind_(kind),
          out_dim_(out_dim),
          radius_(radius <= 0 ? 1.0 : radius),
          variant_(variant) {
        int in = in_dim();
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<T> w1(static_cast<size_t>(in) * hidden_width);
        for (auto& w : w1) w = static_cast<T>(u(rng) * bound);
        w1_ = Tensor<T>::param({in, hidden_width}, std::move(w1));
        b1_ = Tensor<T>::param({hidden_width}, std::vector<T>(hidden_width, T(0)));
        double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_width));
        std::vector<T> w2(static_cast<size_t>(hidden_width) * out_dim);
        for (auto& w : w2) w = static_cast<T>(u(rng) * bound2);
        w2_ = Tensor<T>::param({hidden_width, out_dim}, std::move(w2));
        b2_ = Tensor<T>::param({out_dim}, std::vector<T>(out_dim, T(0)));
    }

    const FiniteGroup& group() const { return group_; }
    EncoderKind kind() const { return kind_; }
    PeVariant variant() const { return variant_; }
    int out_dim() const { return out_dim_; }
    int in_dim() const { return kind_ == EncoderKind::lifting ? 2 : 5; }

    std::vector<std::pair<std::string, Tensor<T>>> params(const std::string& prefix) const {
        return {{prefix + ".w1", w1_}, {prefix + ".b1", b1_}, {prefix + ".w2", w2_},
                {prefix + ".b2", b2_}};
    }

    // Raw input features for one (offset, element) pair.
    std::vector<T> embed(Vec2 offset, std::optional<GroupElement> elem) const {
        std::vector<T> row{static_cast<T>(offset.x / radius_), static_cast<T>(offset.y / radius_)};
        if (kind_ == EncoderKind::group) {
            if (!elem) throw std::invalid_argument("group-layer encoder needs a twist element");
            const Mat2& m = group_.matrix(*elem);
            row.push_back(static_cast<T>(m[0]));
            row.push_back(static_cast<T>(m[2]));
            row.push_back(group_.is_reflection(*elem) ? T(1) : T(0));
        } else if (elem) {
            throw std::invalid_argument("lifting-layer encoder takes no twist element");
        }
        return row;
    }

    // (M, in_dim) -> (M, out_dim), differentiable w.r.t. the encoder params.
    Tensor<T> forward(const Tensor<T>& inputs) const {
        return linear(swish(linear(inputs, w1_, b1_)), w2_, b2_);
    }

    Tensor<T> encode(const RelPos& r) const {
        auto row = embed(r.offset, r.twist_elem);
        return forward(Tensor<T>::constant({1, in_dim()}, std::move(row)));
    }

    // L_h[rho](i,j) = rho^P(h^-1 (x(j)-x(i))) for the lifting layer.
    Tensor<T> lifting_action(GroupElement h, Vec2 offset) const {
        Vec2 d = group_.act_point(group_.inverse(h), offset);
        return encode(RelPos{d, std::nullopt});
    }

    // Second encoder argument under action element h, for query/key fibers
    // (h_tilde, h_hat). The twist product is what makes the group layer
    // equivariant; the baseline uses the plain fiber difference instead.
    GroupElement action_element(GroupElement h, GroupElement h_tilde, GroupElement h_hat) const {
        GroupElement core = variant_ == PeVariant::gevit
                                ? group_.twist(h_tilde, h_hat)
                                : group_.compose(group_.inverse(h_tilde), h_hat);
        return group_.compose(group_.inverse(h), core);
    }

    Tensor<T> group_action(GroupElement h, GroupElement h_tilde, GroupElement h_hat,
                           Vec2 offset) const {
        Vec2 d = group_.act_point(group_.inverse(h), offset);
        return encode(RelPos{d, action_element(h, h_tilde, h_hat)});
    }

    // Encoder outputs for a whole offset window under action element h.
    // Lifting: rows ordered by offset, shape (D, out_dim).
    Tensor<T> lifting_table(GroupElement h, const std::vector<Vec2>& offsets) const {
        GroupElement hinv = group_.inverse(h);
        std::vector<T> rows;
        rows.reserve(offsets.size() * 2);
        for (const Vec2& d : offsets) {
            auto r = embed(group_.act_point(hinv, d), std::nullopt);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        return forward(
            Tensor<T>::constant({static_cast<int>(offsets.size()), 2}, std::move(rows)));
    }

    // Group layer: rows ordered (offset-major, element-minor) over all
    // second arguments u in H, shape (D*|H|, out_dim). The caller selects
    // row d*|H| + action_element(h,h_tilde,h_hat).index.
    Tensor<T> group_table(GroupElement h, const std::vector<Vec2>& offsets) const {
        GroupElement hinv = group_.inverse(h);
        int G = group_.order();
        std::vector<T> rows;
        rows.reserve(offsets.size() * G * 5);
        for (const Vec2& d : offsets) {
            Vec2 dd = group_.act_point(hinv, d);
            for (int u = 0; u < G; ++u) {
                auto r = embed(dd, GroupElement{u});
                rows.insert(rows.end(), r.begin(), r.end());
            }
        }
        return forward(Tensor<T>::constant({static_cast<int>(offsets.size()) * G, 5},
                                           std::move(rows)));
    }

private:
    FiniteGroup group_;
    EncoderKind kind_;
    int out_dim_;
    double radius_;
    PeVariant variant_;
    Tensor<T> w1_, b1_, w2_, b2_;
};

}  // namespace gevit
