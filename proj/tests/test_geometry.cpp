#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "panomesh/geometry.hpp"

using namespace panomesh;

namespace {

double rel_frobenius(const Homography& a, const Homography& b) {
    // normalize both so h[8] = 1 before comparing
    Homography an = a, bn = b;
    an.normalize();
    bn.normalize();
    double num = 0, den = 0;
    for (int i = 0; i < 9; ++i) {
        num += (an.h[i] - bn.h[i]) * (an.h[i] - bn.h[i]);
        den += bn.h[i] * bn.h[i];
    }
    return std::sqrt(num / den);
}

Homography random_invertible_h(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-0.2, 0.2);
    std::uniform_real_distribution<double> t(-20, 20);
    std::uniform_real_distribution<double> p(-1e-4, 1e-4);
    Homography h;
    for (;;) {
        h.h = {1 + d(rng), d(rng), t(rng), d(rng), 1 + d(rng), t(rng), p(rng), p(rng), 1};
        if (std::abs(h.det()) > 1e-3) return h;
    }
}

std::vector<PointPair> pairs_from_h(const Homography& h, std::mt19937_64& rng, int n,
                                    double noise = 0.0) {
    std::uniform_real_distribution<double> c(0, 500);
    std::normal_distribution<double> g(0, noise > 0 ? noise : 1e-30);
    std::vector<PointPair> out;
    for (int i = 0; i < n; ++i) {
        PointPair pp;
        pp.src = {c(rng), c(rng)};
        pp.dst = apply_homography(h, pp.src);
        if (noise > 0) pp.dst += Vec2{g(rng), g(rng)};
        out.push_back(pp);
    }
    return out;
}

}  // namespace

TEST_CASE("apply_homography identity and translation") {
    CHECK(apply_homography(Homography::identity(), {10, 20}).x == doctest::Approx(10));
    CHECK(apply_homography(Homography::identity(), {10, 20}).y == doctest::Approx(20));
    const Vec2 r = apply_homography(Homography::translation(3, 4), {0, 0});
    CHECK(r.x == doctest::Approx(3));
    CHECK(r.y == doctest::Approx(4));
}

TEST_CASE("apply_homography composition equals sequential application") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Homography h1 = random_invertible_h(rng);
        const Homography h2 = random_invertible_h(rng);
        const Homography h12 = h1.compose(h2);  // h1(h2(x))
        std::uniform_real_distribution<double> c(0, 300);
        const Vec2 p{c(rng), c(rng)};
        const Vec2 seq = apply_homography(h1, apply_homography(h2, p));
        const Vec2 comp = apply_homography(h12, p);
        CHECK((seq - comp).norm() < 1e-8);
    }
}

TEST_CASE("apply_homography throws AtInfinity on zero projective depth") {
    Homography h;
    h.h = {1, 0, 0, 0, 1, 0, 0, 0, 0};  // w = 0 everywhere
    CHECK_THROWS_AS(apply_homography(h, {1, 1}), AtInfinity);
}

TEST_CASE("inverse round trip") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Homography h = random_invertible_h(rng);
        std::uniform_real_distribution<double> c(0, 300);
        const Vec2 p{c(rng), c(rng)};
        const Vec2 q = apply_homography(h.inverse(), apply_homography(h, p));
        CHECK((q - p).norm() < 1e-9);
    }
}

TEST_CASE("DLT: identity from 4 corner pairs") {
    std::vector<PointPair> pairs = {{{0, 0}, {0, 0}},
                                    {{100, 0}, {100, 0}},
                                    {{0, 100}, {0, 100}},
                                    {{100, 100}, {100, 100}}};
    const Homography h = estimate_homography_dlt(pairs);
    CHECK(rel_frobenius(h, Homography::identity()) < 1e-9);
}

TEST_CASE("DLT: pure translation from 4 shifted pairs") {
    std::vector<PointPair> pairs;
    for (const Vec2 p : {Vec2{0, 0}, Vec2{50, 10}, Vec2{10, 80}, Vec2{90, 90}}) {
        pairs.push_back({p, p + Vec2{5, -3}});
    }
    const Homography h = estimate_homography_dlt(pairs);
    CHECK(rel_frobenius(h, Homography::translation(5, -3)) < 1e-8);
}

TEST_CASE("DLT: recovers random invertible H from 8 exact pairs") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Homography h = random_invertible_h(rng);
        const auto pairs = pairs_from_h(h, rng, 8);
        const Homography fit = estimate_homography_dlt(pairs);
        CHECK(rel_frobenius(fit, h) < 1e-6);
    }
}

TEST_CASE("DLT: fewer than 4 pairs is degenerate") {
    std::vector<PointPair> pairs = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    CHECK_THROWS_AS(estimate_homography_dlt(pairs), DegenerateInput);
}

TEST_CASE("DLT: translation equivariance under common pre-offset") {
    std::mt19937_64 rng(31);
    const Homography h = random_invertible_h(rng);
    const auto pairs = pairs_from_h(h, rng, 12);
    const Vec2 off{37.5, -12.25};
    std::vector<PointPair> shifted;
    for (const auto& pp : pairs) shifted.push_back({pp.src + off, pp.dst + off});
    const Homography base = estimate_homography_dlt(pairs);
    const Homography moved = estimate_homography_dlt(shifted);
    // moved should equal Toff * base * Toff^-1
    const Homography expect =
        Homography::translation(off.x, off.y)
            .compose(base.compose(Homography::translation(-off.x, -off.y)));
    CHECK(rel_frobenius(moved, expect) < 1e-8);
}

TEST_CASE("robust_homography: clean pairs match plain DLT") {
    std::mt19937_64 rng(41);
    const Homography h = random_invertible_h(rng);
    const auto pairs = pairs_from_h(h, rng, 20);
    RobustConfig cfg;
    cfg.seed = 99;
    const RobustResult r = robust_homography(pairs, cfg);
    const Homography dlt = estimate_homography_dlt(pairs);
    CHECK(rel_frobenius(r.model, dlt) < 1e-6);
    CHECK(r.inlier_count == 20);
    for (bool b : r.inlier_mask) CHECK(b);
}

TEST_CASE("robust_homography: contaminated trials keep recall and precision") {
    int total_true = 0, recalled = 0, flagged = 0, flagged_true = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(1000 + trial);
        const Homography h = random_invertible_h(rng);
        auto pairs = pairs_from_h(h, rng, 20, 0.5);
        std::uniform_real_distribution<double> c(0, 500);
        for (int k = 0; k < 10; ++k) {
            pairs.push_back({{c(rng), c(rng)}, {c(rng), c(rng)}});
        }
        RobustConfig cfg;
        cfg.seed = 77 + trial;
        const RobustResult r = robust_homography(pairs, cfg);
        for (int i = 0; i < 20; ++i) {
            ++total_true;
            if (r.inlier_mask[i]) ++recalled;
        }
        for (int i = 0; i < 30; ++i) {
            if (r.inlier_mask[i]) {
                ++flagged;
                if (i < 20) ++flagged_true;
            }
        }
    }
    CHECK(static_cast<double>(recalled) / total_true >= 0.95);
    CHECK(static_cast<double>(flagged_true) / flagged >= 0.9);
}

TEST_CASE("robust_homography: below minimal sample size") {
    std::vector<PointPair> pairs = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    RobustConfig cfg;
    CHECK_THROWS_AS(robust_homography(pairs, cfg), DegenerateInput);
}

TEST_CASE("robust_homography: permutation invariance with fixed seed") {
    std::mt19937_64 rng(55);
    const Homography h = random_invertible_h(rng);
    auto pairs = pairs_from_h(h, rng, 25, 0.3);
    std::uniform_real_distribution<double> c(0, 500);
    for (int k = 0; k < 8; ++k) pairs.push_back({{c(rng), c(rng)}, {c(rng), c(rng)}});

    RobustConfig cfg;
    cfg.seed = 12345;
    const RobustResult base = robust_homography(pairs, cfg);

    auto shuffled = pairs;
    std::mt19937_64 perm_rng(9);
    std::shuffle(shuffled.begin(), shuffled.end(), perm_rng);
    const RobustResult alt = robust_homography(shuffled, cfg);

    CHECK(rel_frobenius(base.model, alt.model) < 1e-8);
    CHECK(base.inlier_count == alt.inlier_count);
    // same inlier *set*: compare per original pair identity
    std::vector<int> perm(pairs.size());
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            if (shuffled[i].src.x == pairs[j].src.x && shuffled[i].src.y == pairs[j].src.y &&
                shuffled[i].dst.x == pairs[j].dst.x && shuffled[i].dst.y == pairs[j].dst.y) {
                perm[i] = static_cast<int>(j);
                break;
            }
        }
    }
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        CHECK(alt.inlier_mask[i] == base.inlier_mask[perm[i]]);
    }
}

TEST_CASE("reprojection_error matches manual computation") {
    const Homography h = Homography::translation(2, 0);
    const PointPair pp{{1, 1}, {4, 1}};
    CHECK(reprojection_error(h, pp) == doctest::Approx(1.0));
}
