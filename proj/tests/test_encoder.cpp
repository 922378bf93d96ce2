#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gevit/encoder.hpp"

using namespace gevit;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("encoder construction is deterministic in the rng") {
    FiniteGroup g = FiniteGroup::from_spec("c4");
    std::mt19937_64 r1(42), r2(42);
    EncoderNet<double> a(g, EncoderKind::group, 8, 6, 2.0, PeVariant::gevit, r1);
    EncoderNet<double> b(g, EncoderKind::group, 8, 6, 2.0, PeVariant::gevit, r2);
    auto pa = a.params("pe"), pb = b.params("pe");
    for (size_t k = 0; k < pa.size(); ++k) CHECK(pa[k].second.value() == pb[k].second.value());
    CHECK(a.encode(RelPos{{1, -1}, GroupElement{2}}).value() ==
          b.encode(RelPos{{1, -1}, GroupElement{2}}).value());
}

TEST_CASE("input dimensionality and argument checking") {
    FiniteGroup g = FiniteGroup::from_spec("d4");
    std::mt19937_64 rng(1);
    EncoderNet<double> lift(g, EncoderKind::lifting, 4, 3, 1.0, PeVariant::gevit, rng);
    EncoderNet<double> grp(g, EncoderKind::group, 4, 3, 1.0, PeVariant::gevit, rng);
    CHECK(lift.in_dim() == 2);
    CHECK(grp.in_dim() == 5);
    CHECK_THROWS(lift.embed({1, 0}, GroupElement{1}));  // no twist element here
    CHECK_THROWS(grp.embed({1, 0}, std::nullopt));      // twist element required
}

TEST_CASE("group-layer encoding is covariant under a common left action") {
    for (const char* spec : {"c4", "d4"}) {
        CAPTURE(spec);
        FiniteGroup g = FiniteGroup::from_spec(spec);
        std::mt19937_64 rng(7);
        EncoderNet<double> enc(g, EncoderKind::group, 8, 5, 2.0, PeVariant::gevit, rng);
        Vec2 delta{1.0, -2.0};
        int G = g.order();
        for (int hb = 0; hb < G; ++hb)
            for (int h = 0; h < G; ++h)
                for (int ht = 0; ht < G; ++ht)
                    for (int hh = 0; hh < G; ++hh) {
                        GroupElement b{hb}, e{h}, t{ht}, k{hh};
                        auto lhs = enc.group_action(g.compose(b, e), g.compose(b, t),
                                                    g.compose(b, k), g.act_point(b, delta))
                                       .value();
                        auto rhs = enc.group_action(e, t, k, delta).value();
                        CHECK(max_abs_diff(lhs, rhs) < 1e-12);
                    }
    }
}

TEST_CASE("baseline encoding breaks the covariance for some triple") {
    FiniteGroup g = FiniteGroup::from_spec("c4");
    std::mt19937_64 rng(7);
    EncoderNet<double> enc(g, EncoderKind::group, 8, 5, 2.0, PeVariant::baseline, rng);
    Vec2 delta{1.0, -2.0};
    double worst = 0;
    int G = g.order();
    for (int hb = 0; hb < G; ++hb)
        for (int ht = 0; ht < G; ++ht)
            for (int hh = 0; hh < G; ++hh) {
                GroupElement b{hb}, t{ht}, k{hh}, e{0};
                auto lhs = enc.group_action(g.compose(b, e), g.compose(b, t), g.compose(b, k),
                                            g.act_point(b, delta))
                               .value();
                auto rhs = enc.group_action(e, t, k, delta).value();
                worst = std::max(worst, max_abs_diff(lhs, rhs));
            }
    CHECK(worst > 1e-3);
}

TEST_CASE("lifting table rows match individual encodings") {
    FiniteGroup g = FiniteGroup::from_spec("c4");
    std::mt19937_64 rng(3);
    EncoderNet<double> enc(g, EncoderKind::lifting, 8, 4, 1.0, PeVariant::gevit, rng);
    std::vector<Vec2> offsets{{-1, -1}, {0, 0}, {1, 0}, {0, 1}};
    GroupElement h{1};
    auto table = enc.lifting_table(h, offsets).value();
    for (size_t d = 0; d < offsets.size(); ++d) {
        auto row = enc.lifting_action(h, offsets[d]).value();
        for (int c = 0; c < 4; ++c) CHECK(table[d * 4 + c] == doctest::Approx(row[c]).epsilon(1e-14));
    }
}

TEST_CASE("group table row selection matches group_action") {
    FiniteGroup g = FiniteGroup::from_spec("d4");
    std::mt19937_64 rng(3);
    EncoderNet<double> enc(g, EncoderKind::group, 8, 4, 1.0, PeVariant::gevit, rng);
    std::vector<Vec2> offsets{{-1, 0}, {0, 0}, {1, 1}};
    int G = g.order();
    GroupElement h{5};
    auto table = enc.group_table(h, offsets).value();
    for (size_t d = 0; d < offsets.size(); ++d)
        for (int ht = 0; ht < G; ++ht)
            for (int hh = 0; hh < G; ++hh) {
                auto direct = enc.group_action(h, GroupElement{ht}, GroupElement{hh}, offsets[d])
                                  .value();
                int u = enc.action_element(h, GroupElement{ht}, GroupElement{hh}).index;
                for (int c = 0; c < 4; ++c)
                    CHECK(table[(d * G + u) * 4 + c] == doctest::Approx(direct[c]).epsilon(1e-14));
            }
}

TEST_CASE("slice_cols extracts contiguous columns and routes gradient") {
    auto x = Tensor<double>::param({2, 4}, {0, 1, 2, 3, 4, 5, 6, 7});
    auto s = slice_cols(x, 1, 2);
    CHECK(s.shape() == std::vector<int>{2, 2});
    CHECK(s.value() == std::vector<double>{1, 2, 5, 6});
    backward(sum(s));
    CHECK(x.grad() == std::vector<double>{0, 1, 1, 0, 0, 1, 1, 0});
    CHECK_THROWS(slice_cols(x, 3, 2));
}
