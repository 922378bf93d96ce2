#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gevit/encoder.hpp"
#include "gevit/group.hpp"
#include "gevit/tensor.hpp"

namespace gevit {

enum class Boundary { torus, clamp };

// Square n x n window around each query position. In torus mode indices
// wrap; in clamp mode out-of-grid neighbors carry zero features but stay
// in the softmax (zero padding).
struct Neighborhood {
    int width = 0, height = 0, n = 1;
    Boundary boundary = Boundary::torus;
    std::vector<Vec2> offsets;   // D = n*n entries, x(j)-x(i)
    std::vector<int> neighbors;  // P*D linear indices, -1 = outside

    static Neighborhood make(int width, int height, int n, Boundary boundary) {
        if (n < 1 || n % 2 == 0) throw std::invalid_argument("neighborhood size must be odd");
        Neighborhood nb;
        nb.width = width;
        nb.height = height;
        nb.n = n;
        nb.boundary = boundary;
        int r = n / 2;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                nb.offsets.push_back(Vec2{static_cast<double>(dx), static_cast<double>(dy)});
        nb.neighbors.resize(static_cast<size_t>(width) * height * nb.offsets.size());
        size_t k = 0;
        for (int row = 0; row < height; ++row)
            for (int col = 0; col < width; ++col)
                for (const Vec2& d : nb.offsets) {
                    int c = col + static_cast<int>(d.x), rr = row + static_cast<int>(d.y);
                    if (boundary == Boundary::torus) {
                        c = ((c % width) + width) % width;
                        rr = ((rr % height) + height) % height;
                        nb.neighbors[k++] = rr * width + c;
                    } else {
                        nb.neighbors[k++] =
                            (c >= 0 && c < width && rr >= 0 && rr < height) ? rr * width + c : -1;
                    }
                }
        return nb;
    }
    int positions() const { return width * height; }
    int window() const { return static_cast<int>(offsets.size()); }
    double radius() const { return std::max(1, n / 2); }
};

// Per-head projections plus the shared output projection.
template <class T>
struct AttentionParams {
    int heads = 1, c_in = 1, c_h = 1, c_out = 1;
    std::vector<Tensor<T>> w_qry, w_key, w_val;  // each (c_in, c_h)
    Tensor<T> w_out;                             // (heads*c_h, c_out)
    Tensor<T> b_out;                             // (c_out)

    static AttentionParams init(int heads, int c_in, int c_h, int c_out, std::mt19937_64& rng) {
        if (heads < 1 || c_in < 1 || c_h < 1 || c_out < 1)
            throw std::invalid_argument("attention dims must be >= 1");
        AttentionParams p;
        p.heads = heads;
        p.c_in = c_in;
        p.c_h = c_h;
        p.c_out = c_out;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        auto make = [&](int rows, int cols, double gain) {
            double bound = gain / std::sqrt(static_cast<double>(rows));
            std::vector<T> w(static_cast<size_t>(rows) * cols);
            for (auto& x : w) x = static_cast<T>(u(rng) * bound);
            return Tensor<T>::param({rows, cols}, std::move(w));
        };
        // Query/key projections start small so the initial attention map
        // is close to uniform; large random q.k scores saturate the
        // softmax and freeze the attention pattern early in training.
        for (int h = 0; h < heads; ++h) {
            p.w_qry.push_back(make(c_in, c_h, 0.1));
            p.w_key.push_back(make(c_in, c_h, 0.1));
            p.w_val.push_back(make(c_in, c_h, 1.0));
        }
        p.w_out = make(heads * c_h, c_out, 1.0);
        p.b_out = Tensor<T>::param({c_out}, std::vector<T>(c_out, T(0)));
        return p;
    }

    std::vector<std::pair<std::string, Tensor<T>>> params(const std::string& prefix) const {
        std::vector<std::pair<std::string, Tensor<T>>> out;
        for (int h = 0; h < heads; ++h) {
            std::string hp = prefix + ".h" + std::to_string(h);
            out.push_back({hp + ".w_qry", w_qry[h]});
            out.push_back({hp + ".w_key", w_key[h]});
            out.push_back({hp + ".w_val", w_val[h]});
        }
        out.push_back({prefix + ".w_out", w_out});
        out.push_back({prefix + ".b_out", b_out});
        return out;
    }
};

// Runtime knobs shared by the attention layers.
struct AttnOptions {
    double attn_drop = 0.0;
    double value_drop = 0.0;
    std::mt19937_64* rng = nullptr;  // required when a dropout rate is set
    bool scale_scores = false;       // optional 1/sqrt(c_h) factor, off by default
};

namespace detail {

template <class T>
std::vector<T> make_attn_mask(size_t n, double rate, std::mt19937_64* rng) {
    std::vector<T> mask;
    if (rate > 0.0) {
        if (!rng) throw std::invalid_argument("attention dropout needs an rng");
        std::bernoulli_distribution keep(1.0 - rate);
        T inv = static_cast<T>(1.0 / (1.0 - rate));
        mask.resize(n);
        for (auto& m : mask) m = keep(*rng) ? inv : T(0);
    }
    return mask;
}

}  // namespace detail

// Single-head local attention on a planar map. Q,K,V: (P,c_h); pe, when
// defined, is the key-projected positional term per window slot (D,c_h).
// Scores are <q_i, k_j + pe_d>, softmax over the window, value-weighted sum.
template <class T>
Tensor<T> local_attention_planar(const Tensor<T>& Q, const Tensor<T>& K, const Tensor<T>& V,
                                 const Tensor<T>& pe, const Neighborhood& nb,
                                 const AttnOptions& opt = {}) {
    int P = nb.positions(), D = nb.window(), Ch = Q.shape()[1];
    if (Q.shape() != std::vector<int>{P, Ch} || K.shape() != Q.shape() || V.shape() != Q.shape())
        throw std::invalid_argument("local_attention_planar: Q/K/V must be (P,c_h)");
    if (pe.defined() && pe.shape() != std::vector<int>{D, Ch})
        throw std::invalid_argument("local_attention_planar: pe must be (window,c_h)");
    const T* qv = Q.value().data();
    const T* kv = K.value().data();
    const T* vv = V.value().data();
    const T* pv = pe.defined() ? pe.value().data() : nullptr;
    const int* nbr = nb.neighbors.data();
    T sc = opt.scale_scores ? static_cast<T>(1.0 / std::sqrt(static_cast<double>(Ch))) : T(1);

    std::vector<T> alpha(static_cast<size_t>(P) * D);
    std::vector<T> mask = detail::make_attn_mask<T>(alpha.size(), opt.attn_drop, opt.rng);
    std::vector<T> out(static_cast<size_t>(P) * Ch, T(0));
    std::vector<T> z(D);
    for (int i = 0; i < P; ++i) {
        const T* q = qv + static_cast<size_t>(i) * Ch;
        for (int d = 0; d < D; ++d) {
            int j = nbr[static_cast<size_t>(i) * D + d];
            T acc = T(0);
            const T* k = j >= 0 ? kv + static_cast<size_t>(j) * Ch : nullptr;
            const T* p = pv ? pv + static_cast<size_t>(d) * Ch : nullptr;
            for (int c = 0; c < Ch; ++c) acc += q[c] * ((k ? k[c] : T(0)) + (p ? p[c] : T(0)));
            z[d] = acc * sc;
        }
        T mx = *std::max_element(z.begin(), z.end());
        T ssum = T(0);
        T* arow = alpha.data() + static_cast<size_t>(i) * D;
        for (int d = 0; d < D; ++d) ssum += (arow[d] = std::exp(z[d] - mx));
        for (int d = 0; d < D; ++d) arow[d] /= ssum;
        T* o = out.data() + static_cast<size_t>(i) * Ch;
        for (int d = 0; d < D; ++d) {
            int j = nbr[static_cast<size_t>(i) * D + d];
            if (j < 0) continue;
            T w = arow[d] * (mask.empty() ? T(1) : mask[static_cast<size_t>(i) * D + d]);
            const T* val = vv + static_cast<size_t>(j) * Ch;
            for (int c = 0; c < Ch; ++c) o[c] += w * val[c];
        }
    }

    auto qn = Q.node(), kn = K.node(), vn = V.node();
    auto pn = pe.defined() ? pe.node() : nullptr;
    std::vector<Tensor<T>> parents{Q, K, V};
    if (pe.defined()) parents.push_back(pe);
    const Neighborhood* nbp = &nb;  // neighborhoods outlive the graph by construction
    return Tensor<T>::from_op(
        {P, Ch}, std::move(out), std::move(parents),
        [qn, kn, vn, pn, nbp, P, D, Ch, sc, alpha = std::move(alpha),
         mask = std::move(mask)](TensorNode<T>& o) {
            const int* nbr = nbp->neighbors.data();
            std::vector<T> dz(D), da(D);
            for (int i = 0; i < P; ++i) {
                const T* arow = alpha.data() + static_cast<size_t>(i) * D;
                const T* dy = o.grad.data() + static_cast<size_t>(i) * Ch;
                T s = T(0);
                for (int d = 0; d < D; ++d) {
                    int j = nbr[static_cast<size_t>(i) * D + d];
                    T acc = T(0);
                    if (j >= 0) {
                        const T* val = vn->value.data() + static_cast<size_t>(j) * Ch;
                        for (int c = 0; c < Ch; ++c) acc += dy[c] * val[c];
                    }
                    da[d] = acc * (mask.empty() ? T(1) : mask[static_cast<size_t>(i) * D + d]);
                    s += arow[d] * da[d];
                }
                for (int d = 0; d < D; ++d) dz[d] = sc * arow[d] * (da[d] - s);
                const T* q = qn->value.data() + static_cast<size_t>(i) * Ch;
                for (int d = 0; d < D; ++d) {
                    int j = nbr[static_cast<size_t>(i) * D + d];
                    const T* k = j >= 0 ? kn->value.data() + static_cast<size_t>(j) * Ch : nullptr;
                    const T* p = pn ? pn->value.data() + static_cast<size_t>(d) * Ch : nullptr;
                    if (qn->on_grad_path) {
                        auto& gq = qn->ensure_grad();
                        T* g = gq.data() + static_cast<size_t>(i) * Ch;
                        for (int c = 0; c < Ch; ++c)
                            g[c] += dz[d] * ((k ? k[c] : T(0)) + (p ? p[c] : T(0)));
                    }
                    if (j >= 0 && kn->on_grad_path) {
                        auto& gk = kn->ensure_grad();
                        T* g = gk.data() + static_cast<size_t>(j) * Ch;
                        for (int c = 0; c < Ch; ++c) g[c] += dz[d] * q[c];
                    }
                    if (pn && pn->on_grad_path) {
                        auto& gp = pn->ensure_grad();
                        T* g = gp.data() + static_cast<size_t>(d) * Ch;
                        for (int c = 0; c < Ch; ++c) g[c] += dz[d] * q[c];
                    }
                    if (j >= 0 && vn->on_grad_path) {
                        T w = arow[d] * (mask.empty() ? T(1) : mask[static_cast<size_t>(i) * D + d]);
                        auto& gv = vn->ensure_grad();
                        T* g = gv.data() + static_cast<size_t>(j) * Ch;
                        for (int c = 0; c < Ch; ++c) g[c] += w * dy[c];
                    }
                }
            }
        });
}

// Single-head group self-attention core for one output group index.
// Q,K,V: (P*G, c_h) over (position, fiber); pe: (D*G, c_h) with rows
// ordered slot-major over the encoder's second argument u; u_idx maps
// (query fiber, key fiber) -> u for this output index. Every query fiber
// attends over its full (window x G) neighborhood with its own softmax;
// the fiber sum collapses to a (P, c_h) output.
template <class T>
Tensor<T> local_attention_group(const Tensor<T>& Q, const Tensor<T>& K, const Tensor<T>& V,
                                const Tensor<T>& pe, const std::vector<int>& u_idx, int G,
                                const Neighborhood& nb, const AttnOptions& opt = {}) {
    int P = nb.positions(), D = nb.window();
    int Ch = Q.shape()[1];
    if (Q.shape() != std::vector<int>{P * G, Ch} || K.shape() != Q.shape() || V.shape() != Q.shape())
        throw std::invalid_argument("local_attention_group: Q/K/V must be (P*G,c_h)");
    if (pe.shape() != std::vector<int>{D * G, Ch})
        throw std::invalid_argument("local_attention_group: pe must be (window*G,c_h)");
    if (static_cast<int>(u_idx.size()) != G * G)
        throw std::invalid_argument("local_attention_group: u_idx must have G*G entries");
    const T* qv = Q.value().data();
    const T* kv = K.value().data();
    const T* vv = V.value().data();
    const T* pv = pe.value().data();
    const int* nbr = nb.neighbors.data();
    T sc = opt.scale_scores ? static_cast<T>(1.0 / std::sqrt(static_cast<double>(Ch))) : T(1);

    const int W = D * G;  // softmax width per query fiber
    std::vector<T> alpha(static_cast<size_t>(P) * G * W);
    std::vector<T> mask = detail::make_attn_mask<T>(alpha.size(), opt.attn_drop, opt.rng);
    std::vector<T> out(static_cast<size_t>(P) * Ch, T(0));
    std::vector<T> z(W);
    for (int i = 0; i < P; ++i) {
        T* o = out.data() + static_cast<size_t>(i) * Ch;
        for (int ht = 0; ht < G; ++ht) {
            const T* q = qv + (static_cast<size_t>(i) * G + ht) * Ch;
            for (int d = 0; d < D; ++d) {
                int j = nbr[static_cast<size_t>(i) * D + d];
                for (int hh = 0; hh < G; ++hh) {
                    const T* p = pv + (static_cast<size_t>(d) * G + u_idx[ht * G + hh]) * Ch;
                    T acc = T(0);
                    if (j >= 0) {
                        const T* k = kv + (static_cast<size_t>(j) * G + hh) * Ch;
                        for (int c = 0; c < Ch; ++c) acc += q[c] * (k[c] + p[c]);
                    } else {
                        for (int c = 0; c < Ch; ++c) acc += q[c] * p[c];
                    }
                    z[d * G + hh] = acc * sc;
                }
            }
            T mx = *std::max_element(z.begin(), z.end());
            T ssum = T(0);
            T* arow = alpha.data() + (static_cast<size_t>(i) * G + ht) * W;
            for (int w = 0; w < W; ++w) ssum += (arow[w] = std::exp(z[w] - mx));
            for (int w = 0; w < W; ++w) arow[w] /= ssum;
            const T* mrow =
                mask.empty() ? nullptr : mask.data() + (static_cast<size_t>(i) * G + ht) * W;
            for (int d = 0; d < D; ++d) {
                int j = nbr[static_cast<size_t>(i) * D + d];
                if (j < 0) continue;
                for (int hh = 0; hh < G; ++hh) {
                    T w = arow[d * G + hh] * (mrow ? mrow[d * G + hh] : T(1));
                    const T* val = vv + (static_cast<size_t>(j) * G + hh) * Ch;
                    for (int c = 0; c < Ch; ++c) o[c] += w * val[c];
                }
            }
        }
    }

    auto qn = Q.node(), kn = K.node(), vn = V.node(), pn = pe.node();
    const Neighborhood* nbp = &nb;
    return Tensor<T>::from_op(
        {P, Ch}, std::move(out), {Q, K, V, pe},
        [qn, kn, vn, pn, nbp, P, G, D, Ch, sc, u_idx, alpha = std::move(alpha),
         mask = std::move(mask)](TensorNode<T>& o) {
            const int* nbr = nbp->neighbors.data();
            const int W = D * G;
            std::vector<T> dz(W), da(W);
            bool gq = qn->on_grad_path, gk = kn->on_grad_path, gv = vn->on_grad_path,
                 gp = pn->on_grad_path;
            if (gq) qn->ensure_grad();
            if (gk) kn->ensure_grad();
            if (gv) vn->ensure_grad();
            if (gp) pn->ensure_grad();
            for (int i = 0; i < P; ++i) {
                const T* dy = o.grad.data() + static_cast<size_t>(i) * Ch;
                for (int ht = 0; ht < G; ++ht) {
                    const T* arow = alpha.data() + (static_cast<size_t>(i) * G + ht) * W;
                    const T* mrow =
                        mask.empty() ? nullptr : mask.data() + (static_cast<size_t>(i) * G + ht) * W;
                    T s = T(0);
                    for (int d = 0; d < D; ++d) {
                        int j = nbr[static_cast<size_t>(i) * D + d];
                        for (int hh = 0; hh < G; ++hh) {
                            T acc = T(0);
                            if (j >= 0) {
                                const T* val = vn->value.data() + (static_cast<size_t>(j) * G + hh) * Ch;
                                for (int c = 0; c < Ch; ++c) acc += dy[c] * val[c];
                            }
                            int w = d * G + hh;
                            da[w] = acc * (mrow ? mrow[w] : T(1));
                            s += arow[w] * da[w];
                        }
                    }
                    for (int w = 0; w < W; ++w) dz[w] = sc * arow[w] * (da[w] - s);
                    const T* q = qn->value.data() + (static_cast<size_t>(i) * G + ht) * Ch;
                    T* gqrow = gq ? qn->grad.data() + (static_cast<size_t>(i) * G + ht) * Ch : nullptr;
                    for (int d = 0; d < D; ++d) {
                        int j = nbr[static_cast<size_t>(i) * D + d];
                        for (int hh = 0; hh < G; ++hh) {
                            int w = d * G + hh;
                            T dzw = dz[w];
                            const T* p = pn->value.data() +
                                         (static_cast<size_t>(d) * G + u_idx[ht * G + hh]) * Ch;
                            const T* k = j >= 0
                                             ? kn->value.data() + (static_cast<size_t>(j) * G + hh) * Ch
                                             : nullptr;
                            if (gqrow)
                                for (int c = 0; c < Ch; ++c)
                                    gqrow[c] += dzw * ((k ? k[c] : T(0)) + p[c]);
                            if (gk && j >= 0) {
                                T* g = kn->grad.data() + (static_cast<size_t>(j) * G + hh) * Ch;
                                for (int c = 0; c < Ch; ++c) g[c] += dzw * q[c];
                            }
                            if (gp) {
                                T* g = pn->grad.data() +
                                       (static_cast<size_t>(d) * G + u_idx[ht * G + hh]) * Ch;
                                for (int c = 0; c < Ch; ++c) g[c] += dzw * q[c];
                            }
                            if (gv && j >= 0) {
                                T wgt = arow[w] * (mrow ? mrow[w] : T(1));
                                T* g = vn->grad.data() + (static_cast<size_t>(j) * G + hh) * Ch;
                                for (int c = 0; c < Ch; ++c) g[c] += wgt * dy[c];
                            }
                        }
                    }
                }
            }
        });
}

namespace detail {

template <class T>
Tensor<T> maybe_value_drop(const Tensor<T>& v, const AttnOptions& opt) {
    if (opt.value_drop <= 0.0) return v;
    if (!opt.rng) throw std::invalid_argument("value dropout needs an rng");
    return dropout(v, opt.value_drop, *opt.rng);
}

}  // namespace detail

// ---- full multi-head layers ----

// Local MHSA without positional encoding. f: (P, c_in) -> (P, c_out).
template <class T>
Tensor<T> plain_mhsa(const Tensor<T>& f, const AttentionParams<T>& p, const Neighborhood& nb,
                     const AttnOptions& opt = {}) {
    if (f.shape() != std::vector<int>{nb.positions(), p.c_in})
        throw std::invalid_argument("plain_mhsa: feature map must be (P,c_in), got " +
                                    shape_str(f.shape()));
    std::vector<Tensor<T>> heads;
    for (int h = 0; h < p.heads; ++h) {
        Tensor<T> V = detail::maybe_value_drop(matmul(f, p.w_val[h]), opt);
        heads.push_back(local_attention_planar(matmul(f, p.w_qry[h]), matmul(f, p.w_key[h]), V,
                                               Tensor<T>{}, nb, opt));
    }
    return add_bias(matmul(concat_cols(heads), p.w_out), p.b_out);
}

// Absolute positional encoding: queries and keys are computed from f + P,
// values from f alone.
template <class T>
Tensor<T> abs_pe_mhsa(const Tensor<T>& f, const AttentionParams<T>& p, const Neighborhood& nb,
                      const Tensor<T>& pos, const AttnOptions& opt = {}) {
    if (pos.shape() != f.shape())
        throw std::invalid_argument("abs_pe_mhsa: positional encoding must match the feature map, " +
                                    shape_str(pos.shape()) + " vs " + shape_str(f.shape()));
    Tensor<T> g = add(f, pos);
    std::vector<Tensor<T>> heads;
    for (int h = 0; h < p.heads; ++h) {
        Tensor<T> V = detail::maybe_value_drop(matmul(f, p.w_val[h]), opt);
        heads.push_back(local_attention_planar(matmul(g, p.w_qry[h]), matmul(g, p.w_key[h]), V,
                                               Tensor<T>{}, nb, opt));
    }
    return add_bias(matmul(concat_cols(heads), p.w_out), p.b_out);
}

namespace detail {

// Encoder output for one action element, sliced per head when the encoder
// is not shared, and projected by that head's key matrix.
template <class T>
Tensor<T> head_pe(const Tensor<T>& table, const AttentionParams<T>& p, int head, bool shared) {
    Tensor<T> slice = shared ? table : slice_cols(table, head * p.c_in, p.c_in);
    return matmul(slice, p.w_key[head]);
}

}  // namespace detail

// Relative positional encoding per the encoder with the identity action.
template <class T>
Tensor<T> rel_pe_mhsa(const Tensor<T>& f, const AttentionParams<T>& p, const Neighborhood& nb,
                      const EncoderNet<T>& enc, const AttnOptions& opt = {}) {
    bool shared = enc.out_dim() == p.c_in;
    if (!shared && enc.out_dim() != p.heads * p.c_in)
        throw std::invalid_argument("rel_pe_mhsa: encoder output dim does not match c_in");
    Tensor<T> table = enc.lifting_table(enc.group().identity(), nb.offsets);
    std::vector<Tensor<T>> heads;
    for (int h = 0; h < p.heads; ++h) {
        Tensor<T> V = detail::maybe_value_drop(matmul(f, p.w_val[h]), opt);
        heads.push_back(local_attention_planar(matmul(f, p.w_qry[h]), matmul(f, p.w_key[h]), V,
                                               detail::head_pe(table, p, h, shared), nb, opt));
    }
    return add_bias(matmul(concat_cols(heads), p.w_out), p.b_out);
}

// Lifting self-attention: planar (P,c_in) -> lifted (P,|H|,c_out). The
// slice at group index a is rel-PE attention with the window offsets
// pulled back through that element.
template <class T>
Tensor<T> lifting_attention(const Tensor<T>& f, const AttentionParams<T>& p, const Neighborhood& nb,
                            const EncoderNet<T>& enc, const AttnOptions& opt = {}) {
    if (enc.kind() != EncoderKind::lifting)
        throw std::invalid_argument("lifting_attention needs a lifting-layer encoder");
    const FiniteGroup& g = enc.group();
    bool shared = enc.out_dim() == p.c_in;
    if (!shared && enc.out_dim() != p.heads * p.c_in)
        throw std::invalid_argument("lifting_attention: encoder output dim does not match c_in");
    std::vector<Tensor<T>> Q, K, V;
    for (int h = 0; h < p.heads; ++h) {
        Q.push_back(matmul(f, p.w_qry[h]));
        K.push_back(matmul(f, p.w_key[h]));
        V.push_back(detail::maybe_value_drop(matmul(f, p.w_val[h]), opt));
    }
    std::vector<Tensor<T>> slices;
    for (int a = 0; a < g.order(); ++a) {
        Tensor<T> table = enc.lifting_table(g.element(a), nb.offsets);
        std::vector<Tensor<T>> heads;
        for (int h = 0; h < p.heads; ++h)
            heads.push_back(local_attention_planar(Q[h], K[h], V[h],
                                                   detail::head_pe(table, p, h, shared), nb, opt));
        slices.push_back(add_bias(matmul(concat_cols(heads), p.w_out), p.b_out));
    }
    return stack_mid(slices);
}

// Group self-attention: lifted (P,|H|,c_in) -> lifted (P,|H|,c_out).
template <class T>
Tensor<T> group_attention(const Tensor<T>& f, const AttentionParams<T>& p, const Neighborhood& nb,
                          const EncoderNet<T>& enc, const AttnOptions& opt = {}) {
    if (enc.kind() != EncoderKind::group)
        throw std::invalid_argument("group_attention needs a group-layer encoder");
    const FiniteGroup& g = enc.group();
    int G = g.order(), P = nb.positions();
    if (f.shape() != std::vector<int>{P, G, p.c_in})
        throw std::invalid_argument("group_attention: feature map must be (P,|H|,c_in), got " +
                                    shape_str(f.shape()));
    bool shared = enc.out_dim() == p.c_in;
    if (!shared && enc.out_dim() != p.heads * p.c_in)
        throw std::invalid_argument("group_attention: encoder output dim does not match c_in");
    Tensor<T> flat = reshape(f, {P * G, p.c_in});
    std::vector<Tensor<T>> Q, K, V;
    for (int h = 0; h < p.heads; ++h) {
        Q.push_back(matmul(flat, p.w_qry[h]));
        K.push_back(matmul(flat, p.w_key[h]));
        V.push_back(detail::maybe_value_drop(matmul(flat, p.w_val[h]), opt));
    }
    std::vector<Tensor<T>> slices;
    for (int a = 0; a < G; ++a) {
        GroupElement ha = g.element(a);
        std::vector<int> u_idx(static_cast<size_t>(G) * G);
        for (int ht = 0; ht < G; ++ht)
            for (int hh = 0; hh < G; ++hh)
                u_idx[ht * G + hh] =
                    enc.action_element(ha, GroupElement{ht}, GroupElement{hh}).index;
        Tensor<T> table = enc.group_table(ha, nb.offsets);
        std::vector<Tensor<T>> heads;
        for (int h = 0; h < p.heads; ++h)
            heads.push_back(local_attention_group(Q[h], K[h], V[h],
                                                  detail::head_pe(table, p, h, shared), u_idx, G,
                                                  nb, opt));
        slices.push_back(add_bias(matmul(concat_cols(heads), p.w_out), p.b_out));
    }
    return stack_mid(slices);
}

// ---- global (dense) variants, used by the certification suite ----

// Dense MHSA over an arbitrary token set, Eq-style: scores Q K^T, row
// softmax, value-weighted sum, head concat, output projection.
template <class T>
Tensor<T> global_mhsa(const Tensor<T>& x, const AttentionParams<T>& p,
                      const Tensor<T>& qk_input = {}) {
    if (x.shape().size() != 2 || x.shape()[1] != p.c_in)
        throw std::invalid_argument("global_mhsa: input must be (N,c_in), got " +
                                    shape_str(x.shape()));
    Tensor<T> g = qk_input.defined() ? qk_input : x;
    std::vector<Tensor<T>> heads;
    for (int h = 0; h < p.heads; ++h) {
        Tensor<T> scores = matmul(matmul(g, p.w_qry[h]), matmul(g, p.w_key[h]), false, true);
        heads.push_back(matmul(softmax_rows(scores), matmul(x, p.w_val[h])));
    }
    return add_bias(matmul(concat_cols(heads), p.w_out), p.b_out);
}

// Absolute-PE global MHSA: queries and keys from x + pos, values from x.
template <class T>
Tensor<T> abs_pe_global_mhsa(const Tensor<T>& x, const Tensor<T>& pos, const AttentionParams<T>& p) {
    check_same_shape(x, pos, "abs_pe_global_mhsa");
    return global_mhsa(x, p, add(x, pos));
}

}  // namespace gevit
