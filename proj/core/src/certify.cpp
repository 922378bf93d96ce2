#include "gevit/certify.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

namespace gevit {

namespace {

struct Err {
    double mx = 0.0, sum = 0.0;
    size_t n = 0;
    void add(double e) {
        e = std::abs(e);
        mx = std::max(mx, e);
        sum += e;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

template <class T>
void accum_diff(Err& err, const std::vector<T>& a, const std::vector<T>& b) {
    for (size_t i = 0; i < a.size(); ++i)
        err.add(static_cast<double>(a[i]) - static_cast<double>(b[i]));
}

template <class T>
const char* precision_name() {
    return sizeof(T) == 4 ? "f32" : "f64";
}

template <class T>
double layer_threshold() {
    return sizeof(T) == 4 ? 1e-4 : 1e-10;
}

template <class T>
std::vector<T> rand_vec(std::mt19937_64& rng, size_t n, double s) {
    std::uniform_real_distribution<double> u(-s, s);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(u(rng));
    return v;
}

// Fresh encoders have a zero-initialized output layer (useful for
// training, useless for certification); give every weight a value.
template <class T>
void randomize_params(std::vector<std::pair<std::string, Tensor<T>>> ps, std::mt19937_64& rng,
                      double s) {
    std::uniform_real_distribution<double> u(-s, s);
    for (auto& [name, t] : ps)
        for (auto& v : t.mutable_value()) v = static_cast<T>(u(rng));
}

void finish(CheckRecord& r) {
    r.pass = r.expected_violation ? r.max_err >= r.threshold : r.max_err < r.threshold;
}

// ---- individual checks ----

CheckRecord check_group_axioms(const std::string& spec) {
    CheckRecord r;
    r.name = "group_axioms_" + spec;
    r.detail = "closure, associativity, identity, inverses, matrix homomorphism";
    r.precision = "f64";
    r.threshold = 1e-9;
    FiniteGroup g = FiniteGroup::from_spec(spec);
    int G = g.order();
    bool structural_ok = true;
    for (int a = 0; a < G; ++a) {
        GroupElement ea{a};
        if (g.compose(g.identity(), ea) != ea || g.compose(ea, g.identity()) != ea)
            structural_ok = false;
        if (g.compose(g.inverse(ea), ea) != g.identity()) structural_ok = false;
        for (int b = 0; b < G; ++b) {
            GroupElement eb{b};
            int ab = g.compose(ea, eb).index;
            if (ab < 0 || ab >= G) structural_ok = false;
            const Mat2& ma = g.matrix(ea);
            const Mat2& mb = g.matrix(eb);
            const Mat2& mab = g.matrix(g.compose(ea, eb));
            Mat2 prod{ma[0] * mb[0] + ma[1] * mb[2], ma[0] * mb[1] + ma[1] * mb[3],
                      ma[2] * mb[0] + ma[3] * mb[2], ma[2] * mb[1] + ma[3] * mb[3]};
            for (int k = 0; k < 4; ++k) r.max_err = std::max(r.max_err, std::abs(prod[k] - mab[k]));
            for (int c = 0; c < G; ++c) {
                GroupElement ec{c};
                if (g.compose(g.compose(ea, eb), ec) != g.compose(ea, g.compose(eb, ec)))
                    structural_ok = false;
            }
        }
    }
    r.mean_err = r.max_err;
    if (!structural_ok) r.max_err = 1e9;
    finish(r);
    return r;
}

CheckRecord check_twist_identity(const std::string& spec) {
    CheckRecord r;
    r.name = "twist_identity_" + spec;
    r.detail = "(hb ht)(hb hh)^-1(hb ht) = hb (ht hh^-1 ht), exhaustive triples";
    r.precision = "f64";
    r.threshold = 0.5;  // max_err counts failing triples
    FiniteGroup g = FiniteGroup::from_spec(spec);
    int G = g.order();
    for (int hb = 0; hb < G; ++hb)
        for (int ht = 0; ht < G; ++ht)
            for (int hh = 0; hh < G; ++hh) {
                GroupElement b{hb}, t{ht}, h{hh};
                GroupElement lhs = g.twist(g.compose(b, t), g.compose(b, h));
                GroupElement rhs = g.compose(b, g.twist(t, h));
                if (lhs != rhs) r.max_err += 1.0;
            }
    r.mean_err = r.max_err;
    finish(r);
    return r;
}

CheckRecord check_mhsa_permutation(uint64_t seed) {
    CheckRecord r;
    r.name = "mhsa_permutation_equivariance";
    r.detail = "global plain MHSA, 6 tokens, 20 random permutations";
    r.precision = "f64";
    r.threshold = 1e-9;
    std::mt19937_64 rng(seed);
    const int N = 6, Cin = 8;
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    Tensor<double> X = Tensor<double>::constant({N, Cin}, rand_vec<double>(rng, N * Cin, 1.0));
    std::vector<double> base = global_mhsa(X, p).value();
    std::vector<int> perm(N);
    Err err;
    for (int trial = 0; trial < 20; ++trial) {
        for (int i = 0; i < N; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> xp(X.numel());
        for (int i = 0; i < N; ++i)
            std::copy_n(X.value().begin() + static_cast<size_t>(perm[i]) * Cin, Cin,
                        xp.begin() + static_cast<size_t>(i) * Cin);
        std::vector<double> out = global_mhsa(Tensor<double>::constant({N, Cin}, xp), p).value();
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < Cin; ++c)
                err.add(out[static_cast<size_t>(i) * Cin + c] -
                        base[static_cast<size_t>(perm[i]) * Cin + c]);
    }
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

CheckRecord check_abs_pe_violation(uint64_t seed) {
    CheckRecord r;
    r.name = "abs_pe_translation_violation";
    r.detail = "absolute-PE local attention, 6x6 torus, shift (1,0); negative control";
    r.precision = "f64";
    r.threshold = 1e-3;
    r.expected_violation = true;
    std::mt19937_64 rng(seed);
    const int W = 6, H = 6, P = W * H, Cin = 6;
    FiniteGroup c1 = FiniteGroup::from_spec("c1");
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    Tensor<double> f = Tensor<double>::constant({P, Cin}, rand_vec<double>(rng, P * Cin, 1.0));
    Tensor<double> pos = Tensor<double>::constant({P, Cin}, rand_vec<double>(rng, P * Cin, 1.0));
    std::vector<double> base = abs_pe_mhsa(f, p, nb, pos).value();
    Tensor<double> fs = Tensor<double>::constant(
        {P, Cin}, transform_planar(c1, c1.identity(), 1, 0, f.value(), W, H, Cin));
    std::vector<double> shifted_out = abs_pe_mhsa(fs, p, nb, pos).value();
    std::vector<double> expected = transform_planar(c1, c1.identity(), 1, 0, base, W, H, Cin);
    Err err;
    accum_diff(err, shifted_out, expected);
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

CheckRecord check_rel_pe_translation(uint64_t seed) {
    CheckRecord r;
    r.name = "rel_pe_translation_equivariance";
    r.detail = "relative-PE local attention, 8x8 torus, all 64 shifts";
    r.precision = "f64";
    r.threshold = 1e-9;
    std::mt19937_64 rng(seed);
    const int W = 8, H = 8, P = W * H, Cin = 6;
    FiniteGroup c1 = FiniteGroup::from_spec("c1");
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    EncoderNet<double> enc(c1, EncoderKind::lifting, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize_params(enc.params("pe"), rng, 0.5);
    Tensor<double> f = Tensor<double>::constant({P, Cin}, rand_vec<double>(rng, P * Cin, 1.0));
    std::vector<double> base = rel_pe_mhsa(f, p, nb, enc).value();
    Err err;
    for (int sy = 0; sy < H; ++sy)
        for (int sx = 0; sx < W; ++sx) {
            Tensor<double> fs = Tensor<double>::constant(
                {P, Cin}, transform_planar(c1, c1.identity(), sx, sy, f.value(), W, H, Cin));
            std::vector<double> out = rel_pe_mhsa(fs, p, nb, enc).value();
            std::vector<double> expected = transform_planar(c1, c1.identity(), sx, sy, base, W, H, Cin);
            accum_diff(err, out, expected);
        }
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

// Every exact grid element, each combined with a (2,1) torus shift, plus a
// pure shift under the identity.
std::vector<std::pair<GroupElement, std::pair<int, int>>> exact_motions(const FiniteGroup& g,
                                                                        int W, int H) {
    std::vector<std::pair<GroupElement, std::pair<int, int>>> out;
    out.push_back({g.identity(), {2, 1}});
    for (int k = 0; k < g.order(); ++k) {
        GroupElement e{k};
        if (!g.grid_action_exact(e, W, H)) continue;
        out.push_back({e, {0, 0}});
        if (k != 0) out.push_back({e, {2, 1}});
    }
    return out;
}

template <class T>
CheckRecord check_lifting_equivariance(const std::string& spec, uint64_t seed) {
    CheckRecord r;
    r.name = std::string("lifting_equivariance_") + spec + "_" + precision_name<T>();
    r.detail = "lifting self-attention, 8x8 torus, exact elements plus shifts";
    r.precision = precision_name<T>();
    r.threshold = layer_threshold<T>();
    std::mt19937_64 rng(seed);
    const int W = 8, H = 8, P = W * H, Cin = 6;
    FiniteGroup g = FiniteGroup::from_spec(spec);
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<T>::init(2, Cin, 4, Cin, rng);
    EncoderNet<T> enc(g, EncoderKind::lifting, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize_params(enc.params("pe"), rng, 0.5);
    Tensor<T> f = Tensor<T>::constant({P, Cin}, rand_vec<T>(rng, static_cast<size_t>(P) * Cin, 1.0));
    std::vector<T> base = lifting_attention(f, p, nb, enc).value();
    Err err;
    for (auto [hb, shift] : exact_motions(g, W, H)) {
        Tensor<T> fs = Tensor<T>::constant(
            {P, Cin}, transform_planar(g, hb, shift.first, shift.second, f.value(), W, H, Cin));
        std::vector<T> out = lifting_attention(fs, p, nb, enc).value();
        std::vector<T> expected =
            transform_lifted(g, hb, shift.first, shift.second, base, W, H, Cin);
        accum_diff(err, out, expected);
    }
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

template <class T>
CheckRecord check_group_equivariance(const std::string& name, const std::string& spec, int n,
                                     PeVariant variant, bool expect_violation, uint64_t seed) {
    CheckRecord r;
    r.name = name;
    r.detail = std::string("group self-attention, 6x6 torus, ") + spec + ", pe_variant=" +
               (variant == PeVariant::gevit ? "gevit" : "baseline");
    r.precision = precision_name<T>();
    r.threshold = expect_violation ? 1e-2 : layer_threshold<T>();
    r.expected_violation = expect_violation;
    std::mt19937_64 rng(seed);
    const int W = 6, H = 6, P = W * H, Cin = 6;
    FiniteGroup g = FiniteGroup::from_spec(spec);
    int G = g.order();
    Neighborhood nb = Neighborhood::make(W, H, n, Boundary::torus);
    auto p = AttentionParams<T>::init(2, Cin, 4, Cin, rng);
    // Certify generic weights, not the (deliberately small) training
    // init of the query/key projections: the negative controls need the
    // positional terms to carry ordinary weight in the scores.
    randomize_params(p.params("attn"), rng, 0.5);
    EncoderNet<T> enc(g, EncoderKind::group, 8, Cin, nb.radius(), variant, rng);
    randomize_params(enc.params("pe"), rng, 0.5);
    Tensor<T> f = Tensor<T>::constant(
        {P, G, Cin}, rand_vec<T>(rng, static_cast<size_t>(P) * G * Cin, 1.0));
    std::vector<T> base = group_attention(f, p, nb, enc).value();
    Err err;
    for (auto [hb, shift] : exact_motions(g, W, H)) {
        if (expect_violation && (hb == g.identity() || shift != std::pair<int, int>{0, 0}))
            continue;  // the baseline gap shows up under point-group motion
        Tensor<T> fs = Tensor<T>::constant(
            {P, G, Cin},
            transform_lifted(g, hb, shift.first, shift.second, f.value(), W, H, Cin));
        std::vector<T> out = group_attention(fs, p, nb, enc).value();
        std::vector<T> expected =
            transform_lifted(g, hb, shift.first, shift.second, base, W, H, Cin);
        accum_diff(err, out, expected);
    }
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

template <class T>
CheckRecord check_end_to_end_invariance(uint64_t seed) {
    CheckRecord r;
    r.name = std::string("end_to_end_invariance_") + precision_name<T>();
    r.detail = "c4 model logits under 90/180/270 rotation and a torus shift";
    r.precision = precision_name<T>();
    r.threshold = layer_threshold<T>();
    ModelConfig cfg;
    cfg.group = "c4";
    cfg.image_width = 8;
    cfg.image_height = 8;
    cfg.neighborhood = 3;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.head_dim = 4;
    cfg.blocks = 1;
    cfg.mlp_hidden = 16;
    Model<T> model(cfg, seed);
    std::mt19937_64 rng(seed + 1);
    for (auto& [name, t] : model.params())
        if (name.find(".pe.w2") != std::string::npos || name.find(".pe.b2") != std::string::npos)
            for (auto& v : t.mutable_value())
                v = static_cast<T>(std::uniform_real_distribution<double>(-0.4, 0.4)(rng));
    const int P = 64;
    std::vector<float> img(P);
    for (auto& v : img) v = static_cast<float>(std::uniform_real_distribution<double>(0, 1)(rng));
    auto logits = [&](const std::vector<float>& im) {
        std::vector<T> v(im.begin(), im.end());
        return model.forward(Tensor<T>::constant({P, 1}, std::move(v))).value();
    };
    std::vector<T> base = logits(img);
    Err err;
    std::vector<float> rot = img;
    for (int k = 0; k < 3; ++k) {
        rot = rotate_image_quarter(rot, 8, 8);
        accum_diff(err, logits(rot), base);
    }
    FiniteGroup c1 = FiniteGroup::from_spec("c1");
    std::vector<float> shifted = transform_planar(c1, c1.identity(), 3, 2, img, 8, 8, 1);
    accum_diff(err, logits(shifted), base);
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

CheckRecord check_dense_oracle(uint64_t seed) {
    CheckRecord r;
    r.name = "dense_oracle_equivalence";
    r.detail = "group self-attention vs literal nested-loop evaluation, 3x3 torus, c4";
    r.precision = "f64";
    r.threshold = 1e-12;
    std::mt19937_64 rng(seed);
    const int W = 3, H = 3, P = W * H, Cin = 5;
    FiniteGroup g = FiniteGroup::from_spec("c4");
    int G = g.order();
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    EncoderNet<double> enc(g, EncoderKind::group, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize_params(enc.params("pe"), rng, 0.5);
    Tensor<double> f = Tensor<double>::constant(
        {P, G, Cin}, rand_vec<double>(rng, static_cast<size_t>(P) * G * Cin, 1.0));
    std::vector<double> prod = group_attention(f, p, nb, enc).value();
    std::vector<double> oracle = dense_group_attention_oracle(g, p, enc, nb, f.value());
    Err err;
    accum_diff(err, prod, oracle);
    r.max_err = err.mx;
    r.mean_err = err.mean();
    finish(r);
    return r;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

}  // namespace

std::vector<double> dense_group_attention_oracle(const FiniteGroup& g,
                                                 const AttentionParams<double>& p,
                                                 const EncoderNet<double>& enc,
                                                 const Neighborhood& nb,
                                                 const std::vector<double>& lifted) {
    int P = nb.positions(), D = nb.window(), G = g.order();
    int Cin = p.c_in, Ch = p.c_h, Cout = p.c_out;
    auto enc_ps = enc.params("pe");
    auto find = [&](const std::string& suffix) -> const std::vector<double>& {
        for (auto& [name, t] : enc_ps)
            if (name == "pe" + suffix) return t.value();
        throw std::logic_error("oracle: missing encoder tensor " + suffix);
    };
    const auto& w1 = find(".w1");
    const auto& b1 = find(".b1");
    const auto& w2 = find(".w2");
    const auto& b2 = find(".b2");
    int in_dim = enc.in_dim();
    int hidden = static_cast<int>(b1.size());
    auto encode = [&](Vec2 offset, GroupElement u) {
        std::vector<double> x = enc.embed(offset, u);
        std::vector<double> h(hidden);
        for (int j = 0; j < hidden; ++j) {
            double acc = b1[j];
            for (int k = 0; k < in_dim; ++k) acc += x[k] * w1[k * hidden + j];
            double s = 1.0 / (1.0 + std::exp(-acc));
            h[j] = acc * s;
        }
        std::vector<double> out(Cin);
        for (int c = 0; c < Cin; ++c) {
            double acc = b2[c];
            for (int j = 0; j < hidden; ++j) acc += h[j] * w2[j * Cin + c];
            out[c] = acc;
        }
        return out;
    };
    auto project = [&](const std::vector<double>& wm, const double* x) {
        std::vector<double> out(Ch, 0.0);
        for (int k = 0; k < Cin; ++k)
            for (int c = 0; c < Ch; ++c) out[c] += x[k] * wm[k * Ch + c];
        return out;
    };
    std::vector<double> result(static_cast<size_t>(P) * G * Cout);
    std::vector<double> head_cat(static_cast<size_t>(p.heads) * Ch);
    for (int i = 0; i < P; ++i)
        for (int a = 0; a < G; ++a) {
            GroupElement ha = g.element(a);
            GroupElement ha_inv = g.inverse(ha);
            std::fill(head_cat.begin(), head_cat.end(), 0.0);
            for (int hd = 0; hd < p.heads; ++hd) {
                const auto& wq = p.w_qry[hd].value();
                const auto& wk = p.w_key[hd].value();
                const auto& wv = p.w_val[hd].value();
                double* acc = head_cat.data() + static_cast<size_t>(hd) * Ch;
                for (int ht = 0; ht < G; ++ht) {
                    std::vector<double> q =
                        project(wq, lifted.data() + (static_cast<size_t>(i) * G + ht) * Cin);
                    std::vector<double> scores(static_cast<size_t>(D) * G);
                    for (int d = 0; d < D; ++d) {
                        int j = nb.neighbors[static_cast<size_t>(i) * D + d];
                        Vec2 delta = g.act_point(ha_inv, nb.offsets[d]);
                        for (int hh = 0; hh < G; ++hh) {
                            GroupElement u =
                                enc.action_element(ha, GroupElement{ht}, GroupElement{hh});
                            std::vector<double> rho = encode(delta, u);
                            std::vector<double> key_in(Cin, 0.0);
                            for (int c = 0; c < Cin; ++c) {
                                double fv =
                                    j >= 0 ? lifted[(static_cast<size_t>(j) * G + hh) * Cin + c]
                                           : 0.0;
                                key_in[c] = fv + rho[c];
                            }
                            std::vector<double> key = project(wk, key_in.data());
                            double z = 0.0;
                            for (int c = 0; c < Ch; ++c) z += q[c] * key[c];
                            scores[static_cast<size_t>(d) * G + hh] = z;
                        }
                    }
                    double denom = 0.0;
                    for (double z : scores) denom += std::exp(z);
                    for (int d = 0; d < D; ++d) {
                        int j = nb.neighbors[static_cast<size_t>(i) * D + d];
                        if (j < 0) continue;
                        for (int hh = 0; hh < G; ++hh) {
                            double alpha = std::exp(scores[static_cast<size_t>(d) * G + hh]) / denom;
                            std::vector<double> val =
                                project(wv, lifted.data() + (static_cast<size_t>(j) * G + hh) * Cin);
                            for (int c = 0; c < Ch; ++c) acc[c] += alpha * val[c];
                        }
                    }
                }
            }
            const auto& wo = p.w_out.value();
            const auto& bo = p.b_out.value();
            for (int c = 0; c < Cout; ++c) {
                double acc = bo[c];
                for (int k = 0; k < p.heads * Ch; ++k) acc += head_cat[k] * wo[k * Cout + c];
                result[(static_cast<size_t>(i) * G + a) * Cout + c] = acc;
            }
        }
    return result;
}

CertReport run_cert_suite(const CertOptions& opt) {
    CertReport rep;
    uint64_t s = opt.seed;
    for (const char* spec : {"c1", "c4", "c8", "c12", "c16", "d4", "d8"})
        rep.checks.push_back(check_group_axioms(spec));
    for (const char* spec : {"c4", "d4", "c8", "d8"})
        rep.checks.push_back(check_twist_identity(spec));
    rep.checks.push_back(check_mhsa_permutation(s + 1));
    rep.checks.push_back(check_abs_pe_violation(s + 2));
    rep.checks.push_back(check_rel_pe_translation(s + 3));
    int idx = 0;
    for (const char* spec : {"c4", "d4", "c8", "d8"}) {
        rep.checks.push_back(check_lifting_equivariance<double>(spec, s + 10 + idx));
        rep.checks.push_back(check_lifting_equivariance<float>(spec, s + 10 + idx));
        rep.checks.push_back(check_group_equivariance<double>(
            std::string("group_equivariance_") + spec + "_f64", spec, 3, PeVariant::gevit, false,
            s + 20 + idx));
        rep.checks.push_back(check_group_equivariance<float>(
            std::string("group_equivariance_") + spec + "_f32", spec, 3, PeVariant::gevit, false,
            s + 20 + idx));
        ++idx;
    }
    for (const char* spec : {"c4", "d4"})
        rep.checks.push_back(check_group_equivariance<double>(
            std::string("group_baseline_gap_") + spec, spec, 3, PeVariant::baseline, true, s + 30));
    // The configured group/variant as requested on the command line; with
    // the baseline encoding this is an expected failure (comparison mode).
    rep.checks.push_back(check_group_equivariance<double>(
        "configured_group_equivariance", opt.group, opt.neighborhood, opt.pe_variant,
        opt.pe_variant == PeVariant::baseline, s + 40));
    rep.checks.push_back(check_end_to_end_invariance<double>(s + 50));
    rep.checks.push_back(check_end_to_end_invariance<float>(s + 50));
    rep.checks.push_back(check_dense_oracle(s + 60));
    std::sort(rep.checks.begin(), rep.checks.end(),
              [](const CheckRecord& a, const CheckRecord& b) { return a.name < b.name; });
    return rep;
}

std::string CertReport::to_text() const {
    size_t w = 4;
    for (const auto& c : checks) w = std::max(w, c.name.size());
    std::string out;
    char line[512];
    std::snprintf(line, sizeof(line), "%-*s  %-4s  %-10s  %-10s  %-10s  %-8s  %s\n",
                  static_cast<int>(w), "name", "prec", "max_err", "mean_err", "threshold", "mode",
                  "result");
    out += line;
    for (const auto& c : checks) {
        std::snprintf(line, sizeof(line), "%-*s  %-4s  %-10s  %-10s  %-10s  %-8s  %s\n",
                      static_cast<int>(w), c.name.c_str(), c.precision.c_str(),
                      fmt(c.max_err).c_str(), fmt(c.mean_err).c_str(), fmt(c.threshold).c_str(),
                      c.expected_violation ? "negctrl" : "positive", c.pass ? "PASS" : "FAIL");
        out += line;
    }
    out += all_pass() ? "overall: PASS\n" : "overall: FAIL\n";
    return out;
}

std::string CertReport::to_csv() const {
    std::string out = "name,precision,max_err,mean_err,threshold,expected_violation,pass,detail\n";
    for (const auto& c : checks) {
        out += c.name + "," + c.precision + "," + fmt(c.max_err) + "," + fmt(c.mean_err) + "," +
               fmt(c.threshold) + "," + (c.expected_violation ? "1" : "0") + "," +
               (c.pass ? "1" : "0") + ",\"" + c.detail + "\"\n";
    }
    return out;
}

std::vector<float> rotate_image_quarter(const std::vector<float>& img, int width, int height) {
    if (width != height) throw std::invalid_argument("quarter rotation needs a square image");
    static const FiniteGroup c4 = FiniteGroup::from_spec("c4");
    return transform_planar(c4, c4.element(1), 0, 0, img, width, height, 1);
}

void write_pgm(const std::string& path, int width, int height, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != width * height)
        throw std::invalid_argument("write_pgm: value count does not match dimensions");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span = hi - lo;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    for (double v : values) {
        int g = span > 0 ? static_cast<int>(std::lround((v - lo) / span * 255.0)) : 0;
        out.put(static_cast<char>(std::clamp(g, 0, 255)));
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_error_csv(const std::string& path, const ErrorMapResult& res) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "row,col,group_index,channel,error\n";
    char buf[96];
    for (int row = 0; row < res.height; ++row)
        for (int col = 0; col < res.width; ++col)
            for (int k = 0; k < res.group_order; ++k)
                for (int c = 0; c < res.channels; ++c) {
                    size_t i = ((static_cast<size_t>(row) * res.width + col) * res.group_order + k) *
                                   res.channels +
                               c;
                    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.17g\n", row, col, k, c,
                                  res.error[i]);
                    out << buf;
                }
    out << "avg_abs_err,,,," << res.avg_abs_err << "\n";
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace gevit
