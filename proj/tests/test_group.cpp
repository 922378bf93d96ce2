#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "gevit/group.hpp"

using namespace gevit;

namespace {
const char* kSpecs[] = {"c1", "c4", "c8", "c12", "c16", "d4", "d8"};
}

TEST_CASE("group axioms hold for every supported group") {
    for (const char* spec : kSpecs) {
        CAPTURE(spec);
        FiniteGroup g = FiniteGroup::from_spec(spec);
        int G = g.order();
        for (int a = 0; a < G; ++a) {
            GroupElement ea{a};
            CHECK(g.compose(g.identity(), ea) == ea);
            CHECK(g.compose(ea, g.identity()) == ea);
            CHECK(g.compose(g.inverse(ea), ea) == g.identity());
            CHECK(g.compose(ea, g.inverse(ea)) == g.identity());
            for (int b = 0; b < G; ++b) {
                GroupElement eb{b};
                int ab = g.compose(ea, eb).index;
                CHECK(ab >= 0);
                CHECK(ab < G);
                for (int c = 0; c < G; ++c) {
                    GroupElement ec{c};
                    CHECK(g.compose(g.compose(ea, eb), ec) == g.compose(ea, g.compose(eb, ec)));
                }
            }
        }
    }
}

TEST_CASE("element matrices form a homomorphism") {
    for (const char* spec : kSpecs) {
        CAPTURE(spec);
        FiniteGroup g = FiniteGroup::from_spec(spec);
        int G = g.order();
        double worst = 0.0;
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b) {
                const Mat2& ma = g.matrix(GroupElement{a});
                const Mat2& mb = g.matrix(GroupElement{b});
                const Mat2& mab = g.matrix(g.compose(GroupElement{a}, GroupElement{b}));
                Mat2 prod{ma[0] * mb[0] + ma[1] * mb[2], ma[0] * mb[1] + ma[1] * mb[3],
                          ma[2] * mb[0] + ma[3] * mb[2], ma[2] * mb[1] + ma[3] * mb[3]};
                for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(prod[k] - mab[k]));
            }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("group orders and reflection flags") {
    CHECK(FiniteGroup::from_spec("c1").order() == 1);
    CHECK(FiniteGroup::from_spec("c4").order() == 4);
    CHECK(FiniteGroup::from_spec("c12").order() == 12);
    FiniteGroup d4 = FiniteGroup::from_spec("d4");
    CHECK(d4.order() == 8);
    for (int k = 0; k < 4; ++k) {
        CHECK_FALSE(d4.is_reflection(GroupElement{k}));
        CHECK(d4.is_reflection(GroupElement{4 + k}));
    }
    CHECK_THROWS(FiniteGroup::from_spec("q8"));
    CHECK_THROWS(FiniteGroup::from_spec("c0"));
}

TEST_CASE("twist product examples") {
    FiniteGroup c4 = FiniteGroup::from_spec("c4");
    // twist(h, h) = h h^-1 h = h
    for (int k = 0; k < 4; ++k)
        CHECK(c4.twist(GroupElement{k}, GroupElement{k}) == GroupElement{k});
    // C4 is abelian: r1 r3^-1 r1 = r1 r1 r1 = r3
    CHECK(c4.twist(GroupElement{1}, GroupElement{3}) == GroupElement{3});

    FiniteGroup d4 = FiniteGroup::from_spec("d4");
    // reflections are involutions: m r1^-1 m is a rotation
    GroupElement m{4}, r1{1};
    GroupElement t = d4.twist(m, r1);
    CHECK_FALSE(d4.is_reflection(t));
    CHECK(t == d4.compose(m, d4.compose(d4.inverse(r1), m)));
}

TEST_CASE("twist is covariant under a common left factor") {
    for (const char* spec : {"c4", "d4", "c8", "d8"}) {
        CAPTURE(spec);
        FiniteGroup g = FiniteGroup::from_spec(spec);
        int G = g.order();
        for (int hb = 0; hb < G; ++hb)
            for (int ht = 0; ht < G; ++ht)
                for (int hh = 0; hh < G; ++hh) {
                    GroupElement b{hb}, t{ht}, h{hh};
                    CHECK(g.twist(g.compose(b, t), g.compose(b, h)) ==
                          g.compose(b, g.twist(t, h)));
                }
    }
}

TEST_CASE("grid action is a permutation that respects composition") {
    FiniteGroup d4 = FiniteGroup::from_spec("d4");
    const int W = 5, H = 5, P = W * H;
    for (int a = 0; a < d4.order(); ++a) {
        GroupElement ea{a};
        REQUIRE(d4.grid_action_exact(ea, W, H));
        std::set<int> image;
        for (int i = 0; i < P; ++i) image.insert(d4.act_grid(ea, i, W, H));
        CHECK(image.size() == static_cast<size_t>(P));  // bijective
        for (int b = 0; b < d4.order(); ++b) {
            GroupElement eb{b};
            for (int i = 0; i < P; ++i)
                CHECK(d4.act_grid(d4.compose(ea, eb), i, W, H) ==
                      d4.act_grid(ea, d4.act_grid(eb, i, W, H), W, H));
        }
    }
    for (int i = 0; i < P; ++i) CHECK(d4.act_grid(d4.identity(), i, W, H) == i);
}

TEST_CASE("180-degree rotation swaps opposite corners") {
    FiniteGroup c4 = FiniteGroup::from_spec("c4");
    GroupElement r2{2};
    CHECK(c4.act_grid(r2, 0, 2, 2) == 3);
    CHECK(c4.act_grid(r2, 1, 2, 2) == 2);
}

TEST_CASE("non-lattice elements are reported and rejected") {
    FiniteGroup c8 = FiniteGroup::from_spec("c8");
    GroupElement r45{1};
    CHECK_FALSE(c8.grid_action_exact(r45, 4, 4));
    CHECK_THROWS_AS(c8.act_grid(r45, 0, 4, 4), ExactActionUnavailable);
    CHECK(c8.grid_action_exact(GroupElement{2}, 4, 4));  // the 90-degree subgroup
}

TEST_CASE("regular permutation composes contravariantly") {
    for (const char* spec : {"c4", "d4"}) {
        CAPTURE(spec);
        FiniteGroup g = FiniteGroup::from_spec(spec);
        int G = g.order();
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b) {
                GroupElement ea{a}, eb{b};
                auto pa = g.regular_permutation(ea);
                auto pb = g.regular_permutation(eb);
                auto pab = g.regular_permutation(g.compose(ea, eb));
                // (ab)^-1 e_k = b^-1 (a^-1 e_k)
                for (int k = 0; k < G; ++k) CHECK(pab[k] == pb[pa[k]]);
            }
        auto pid = g.regular_permutation(g.identity());
        for (int k = 0; k < G; ++k) CHECK(pid[k] == k);
    }
}
