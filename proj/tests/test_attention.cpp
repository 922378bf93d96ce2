#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gevit/attention.hpp"
#include "gevit/certify.hpp"

using namespace gevit;

namespace {

std::vector<double> rand_vec(std::mt19937_64& rng, size_t n, double s = 1.0) {
    std::uniform_real_distribution<double> u(-s, s);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void randomize(std::vector<std::pair<std::string, Tensor<double>>> ps, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& [name, t] : ps)
        for (auto& v : t.mutable_value()) v = u(rng);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("neighborhood geometry: torus wraps, clamp marks outside") {
    Neighborhood torus = Neighborhood::make(4, 4, 3, Boundary::torus);
    Neighborhood clamp = Neighborhood::make(4, 4, 3, Boundary::clamp);
    CHECK(torus.positions() == 16);
    CHECK(torus.window() == 9);
    // corner pixel 0: the (-1,-1) slot wraps to the opposite corner
    CHECK(torus.neighbors[0] == 15);
    CHECK(clamp.neighbors[0] == -1);
    // the centre slot is the pixel itself
    CHECK(torus.neighbors[4] == 0);
    CHECK(clamp.neighbors[4] == 0);
    CHECK_THROWS(Neighborhood::make(4, 4, 2, Boundary::torus));
}

TEST_CASE("1x1 window attention reduces to the value projection") {
    std::mt19937_64 rng(5);
    const int P = 9, Cin = 4;
    Neighborhood nb = Neighborhood::make(3, 3, 1, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 3, Cin, rng);
    auto f = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto out = plain_mhsa(f, p, nb).value();
    std::vector<Tensor<double>> heads;
    for (int h = 0; h < 2; ++h) heads.push_back(matmul(f, p.w_val[h]));
    auto expected = add_bias(matmul(concat_cols(heads), p.w_out), p.b_out).value();
    CHECK(max_abs_diff(out, expected) < 1e-12);
}

TEST_CASE("global MHSA is permutation equivariant") {
    std::mt19937_64 rng(8);
    const int N = 6, Cin = 8;
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    auto X = Tensor<double>::constant({N, Cin}, rand_vec(rng, N * Cin));
    auto base = global_mhsa(X, p).value();
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    std::vector<double> xp(X.numel());
    for (int i = 0; i < N; ++i)
        std::copy_n(X.value().begin() + perm[i] * Cin, Cin, xp.begin() + i * Cin);
    auto out = global_mhsa(Tensor<double>::constant({N, Cin}, xp), p).value();
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < Cin; ++c)
            CHECK(out[i * Cin + c] == doctest::Approx(base[perm[i] * Cin + c]).epsilon(1e-12));
}

TEST_CASE("relative PE keeps translation equivariance, absolute PE breaks it") {
    std::mt19937_64 rng(21);
    const int W = 6, H = 6, P = W * H, Cin = 6;
    FiniteGroup c1 = FiniteGroup::from_spec("c1");
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    EncoderNet<double> enc(c1, EncoderKind::lifting, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize(enc.params("pe"), rng);
    auto f = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto pos = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto shift = [&](const std::vector<double>& v) {
        return transform_planar(c1, c1.identity(), 2, 1, v, W, H, Cin);
    };
    Tensor<double> fs = Tensor<double>::constant({P, Cin}, shift(f.value()));

    auto rel_base = rel_pe_mhsa(f, p, nb, enc).value();
    auto rel_out = rel_pe_mhsa(fs, p, nb, enc).value();
    CHECK(max_abs_diff(rel_out, shift(rel_base)) < 1e-12);

    auto abs_base = abs_pe_mhsa(f, p, nb, pos).value();
    auto abs_out = abs_pe_mhsa(fs, p, nb, pos).value();
    CHECK(max_abs_diff(abs_out, shift(abs_base)) > 1e-3);
}

TEST_CASE("lifting attention is equivariant for exact C4 motions") {
    std::mt19937_64 rng(31);
    const int W = 6, H = 6, P = W * H, Cin = 5;
    FiniteGroup g = FiniteGroup::from_spec("c4");
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 4, Cin, rng);
    EncoderNet<double> enc(g, EncoderKind::lifting, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize(enc.params("pe"), rng);
    auto f = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto base = lifting_attention(f, p, nb, enc).value();
    for (int k = 0; k < 4; ++k) {
        GroupElement h{k};
        Tensor<double> fs = Tensor<double>::constant(
            {P, Cin}, transform_planar(g, h, 1, 2, f.value(), W, H, Cin));
        auto out = lifting_attention(fs, p, nb, enc).value();
        CHECK(max_abs_diff(out, transform_lifted(g, h, 1, 2, base, W, H, Cin)) < 1e-10);
    }
}

TEST_CASE("group attention matches the dense nested-loop oracle") {
    std::mt19937_64 rng(41);
    const int W = 3, H = 3, P = W * H, Cin = 4;
    FiniteGroup g = FiniteGroup::from_spec("c4");
    int G = g.order();
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 3, Cin, rng);
    EncoderNet<double> enc(g, EncoderKind::group, 8, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize(enc.params("pe"), rng);
    auto f = Tensor<double>::constant({P, G, Cin}, rand_vec(rng, static_cast<size_t>(P) * G * Cin));
    auto prod = group_attention(f, p, nb, enc).value();
    auto oracle = dense_group_attention_oracle(g, p, enc, nb, f.value());
    CHECK(max_abs_diff(prod, oracle) < 1e-12);
}

TEST_CASE("attention gradients agree with finite differences") {
    std::mt19937_64 rng(51);
    const int W = 3, H = 3, P = W * H, Cin = 3;
    FiniteGroup g = FiniteGroup::from_spec("c4");
    int G = g.order();
    Neighborhood nb = Neighborhood::make(W, H, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(1, Cin, 3, Cin, rng);
    EncoderNet<double> enc(g, EncoderKind::group, 4, Cin, nb.radius(), PeVariant::gevit, rng);
    randomize(enc.params("pe"), rng);
    auto f = Tensor<double>::param({P, G, Cin}, rand_vec(rng, static_cast<size_t>(P) * G * Cin));
    std::vector<double> w = rand_vec(rng, static_cast<size_t>(P) * G * Cin);
    auto weights =
        Tensor<double>::constant({P * G * Cin}, std::vector<double>(w.begin(), w.end()));
    auto loss_fn = [&] {
        return sum(mul(reshape(group_attention(f, p, nb, enc), {P * G * Cin}), weights));
    };
    f.zero_grad();
    backward(loss_fn());
    double worst = 0;
    const double eps = 1e-6;
    for (size_t i = 0; i < f.numel(); i += 7) {  // spot-check every 7th input
        double x0 = f.mutable_value()[i];
        f.mutable_value()[i] = x0 + eps;
        double up = loss_fn().item();
        f.mutable_value()[i] = x0 - eps;
        double dn = loss_fn().item();
        f.mutable_value()[i] = x0;
        double num = (up - dn) / (2 * eps);
        worst = std::max(worst, std::abs(num - f.grad()[i]) / std::max(1e-6, std::abs(num)));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("attention dropout is seed-reproducible and changes the output") {
    std::mt19937_64 rng(61);
    const int P = 16, Cin = 4;
    Neighborhood nb = Neighborhood::make(4, 4, 3, Boundary::torus);
    auto p = AttentionParams<double>::init(2, Cin, 3, Cin, rng);
    auto f = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto clean = plain_mhsa(f, p, nb).value();
    AttnOptions opt;
    opt.attn_drop = 0.3;
    std::mt19937_64 d1(5), d2(5);
    opt.rng = &d1;
    auto a = plain_mhsa(f, p, nb, opt).value();
    opt.rng = &d2;
    auto b = plain_mhsa(f, p, nb, opt).value();
    CHECK(a == b);
    CHECK(max_abs_diff(a, clean) > 1e-6);
    opt.rng = nullptr;
    CHECK_THROWS(plain_mhsa(f, p, nb, opt));
}

TEST_CASE("clamp boundary zero-pads outside keys but keeps them in the softmax") {
    std::mt19937_64 rng(71);
    const int W = 4, H = 4, P = W * H, Cin = 3;
    Neighborhood torus = Neighborhood::make(W, H, 3, Boundary::torus);
    Neighborhood clamp = Neighborhood::make(W, H, 3, Boundary::clamp);
    auto p = AttentionParams<double>::init(1, Cin, 3, Cin, rng);
    auto f = Tensor<double>::constant({P, Cin}, rand_vec(rng, P * Cin));
    auto out_t = plain_mhsa(f, p, torus).value();
    auto out_c = plain_mhsa(f, p, clamp).value();
    // interior pixel (1,1) has identical neighborhoods
    for (int c = 0; c < Cin; ++c)
        CHECK(out_t[(1 * W + 1) * Cin + c] == doctest::Approx(out_c[(1 * W + 1) * Cin + c]));
    // corner pixel differs
    double corner = 0;
    for (int c = 0; c < Cin; ++c) corner = std::max(corner, std::abs(out_t[c] - out_c[c]));
    CHECK(corner > 1e-9);
}
