#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eccnet/attention.hpp"
#include "eccnet/fixtures.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace eccnet;

TEST_CASE("modulation_map matches the naive correlation") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<Index> c(1, 6), d(1, 12);
        const Index ch = c(rng);
        const Tensorf t = oracle::random_tensor(rng, ch, d(rng), d(rng));
        const Tensorf s = oracle::random_tensor(rng, ch, d(rng), d(rng));
        const Tensorf got = modulation_map(t, s);
        REQUIRE(got.channels() == 1);
        REQUIRE(got.height() == s.height());
        REQUIRE(got.width() == s.width());
        CHECK(oracle::max_abs_diff(got, oracle::modulation(t, s)) <= 1e-4);
    }
}

TEST_CASE("modulation_map: 1x1 target reduces to a channel dot product") {
    std::mt19937_64 rng(2);
    const Tensorf s = oracle::random_tensor(rng, 3, 4, 5);
    Tensorf t(3, 1, 1);
    t(0, 0, 0) = 1.0f;
    t(2, 0, 0) = -2.0f;
    const Tensorf m = modulation_map(t, s);
    for (Index y = 0; y < 4; ++y)
        for (Index x = 0; x < 5; ++x)
            CHECK(m(0, y, x) == doctest::Approx(s(0, y, x) - 2.0f * s(2, y, x)));
}

TEST_CASE("modulation_map peaks where the search map contains the target") {
    std::mt19937_64 rng(3);
    const Tensorf t = oracle::random_tensor(rng, 4, 3, 3, 0.0f, 1.0f);
    Tensorf s(4, 12, 12);
    for (Index c = 0; c < 4; ++c)
        s.plane(c).block(6, 2, 3, 3) = t.plane(c);
    const Tensorf m = modulation_map(t, s);
    Index r, col;
    m.plane(0).maxCoeff(&r, &col);
    CHECK(r == 7);
    CHECK(col == 3);
}

TEST_CASE("modulation_map rejects channel mismatch") {
    CHECK_THROWS_AS(modulation_map(Tensorf(2, 2, 2), Tensorf(3, 4, 4)), ShapeError);
}

TEST_CASE("worked fusion example: weights") {
    const FusionFixture fx;
    const FusionWeights w = fusion_weights(fx.maxima);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(w.w[i] == doctest::Approx(fx.weights[i]).epsilon(0.001 / fx.weights[i]));
    CHECK(w.sum() == doctest::Approx(1.0));
}

TEST_CASE("worked fusion example: normalised and fused probe values") {
    const FusionFixture fx;
    const FusionWeights w = fusion_weights(fx.maxima);
    double fused = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double v = normalized_value(fx.p1[i], fx.minima[i], fx.maxima[i]);
        CHECK(std::abs(v - fx.p1_normalized[i]) <= 0.0005);
        fused += w.w[i] * v;
        raw += fx.p2[i];
    }
    CHECK(std::abs(fused - fx.p1_fused) <= 0.005);
    CHECK(raw == fx.p2_raw_sum);
}

TEST_CASE("fusion_weights: all-zero maxima fall back to equal weights") {
    const auto w = fusion_weights({0.0, 0.0, 0.0});
    CHECK(w.w[0] == doctest::Approx(1.0 / 3.0));
    CHECK(w.sum() == doctest::Approx(1.0));
}

TEST_CASE("fuse: output at layer-17 dims, bounded by the weight sum") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::array<Tensorf, 3> maps{oracle::random_tensor(rng, 1, 20, 16, 0.0f, 50.0f),
                                          oracle::random_tensor(rng, 1, 10, 8, 0.0f, 30.0f),
                                          oracle::random_tensor(rng, 1, 5, 4, 0.0f, 10.0f)};
        const FusionResult r = fuse(maps, trial);
        CHECK(r.map.values.height() == 5);
        CHECK(r.map.values.width() == 4);
        CHECK(r.map.fixation_index == trial);
        CHECK(r.weights.sum() == doctest::Approx(1.0));
        CHECK(r.map.values.data().minCoeff() >= 0.0f);
        CHECK(r.map.values.data().maxCoeff() <= 1.0f + 1e-6f);
    }
}

TEST_CASE("fuse: hand-computed combination") {
    Tensorf a(1, 2, 2), b(1, 1, 1), c(1, 1, 1);
    a.data() << 0, 2, 4, 4;
    b(0, 0, 0) = 3.0f;
    c(0, 0, 0) = 1.0f;
    // b and c are constant, so they normalise to 0; a normalises to [0, .5, 1, 1] then resizes to 1x1
    const FusionResult r = fuse({a, b, c});
    CHECK(r.weights.w[0] == doctest::Approx(0.5));
    CHECK(r.map.values(0, 0, 0) == doctest::Approx(0.0));

    Tensorf top(1, 2, 2);
    top.data() << 1, 0, 0, 0;
    const FusionResult r2 = fuse({a, b, top});
    CHECK(r2.map.values(0, 0, 0) == doctest::Approx(0.5 * 0.0 + 0.125 * 1.0));
    CHECK(r2.map.values(0, 1, 1) == doctest::Approx(0.5 * 1.0));
}

TEST_CASE("unit_probabilities: count over the sum of squared counts") {
    Tensorf t(1, 1, 4);
    t.data() << 0, 0, 0, 1;
    const auto p = unit_probabilities(t, 2);
    REQUIRE(p.size() == 4);
    CHECK(p[0] == doctest::Approx(3.0 / 10.0));
    CHECK(p[3] == doctest::Approx(1.0 / 10.0));
    double s = 0.0;
    for (double v : p)
        s += v;
    CHECK(s == doctest::Approx(1.0));
    CHECK(unit_probabilities(Tensorf::Constant(1, 3, 3, 2.0f)).empty());
    CHECK_THROWS_AS(unit_probabilities(t, 1), InputError);
}

TEST_CASE("unit_probabilities sum to one for random planes") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = unit_probabilities(oracle::random_tensor(rng, 1, 17, 23));
        double s = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("channel_self_information: rare values score highest, range one") {
    Tensorf t = Tensorf::Constant(1, 8, 8, 1.0f);
    t(0, 3, 5) = 9.0f;
    const Tensorf s = channel_self_information(t);
    Index r, c;
    s.plane(0).maxCoeff(&r, &c);
    CHECK(r == 3);
    CHECK(c == 5);
    CHECK(s.data().maxCoeff() - s.data().minCoeff() == doctest::Approx(1.0));
    CHECK(channel_self_information(Tensorf::Constant(1, 4, 4, 3.0f)) == Tensorf(1, 4, 4));
}

TEST_CASE("saliency_map: layer-17 dims, finite and non-negative") {
    const Backbone net = testing::narrow_backbone(5);
    std::mt19937_64 rng(6);
    const Tensorf img = oracle::random_tensor(rng, 1, 96, 80, 0.0f, 255.0f);
    const FeatureStack st = net.extract(img, {48, 40}, PoolMode::Uniform);
    const Tensorf s = saliency_map(st);
    CHECK(s.height() == st.at(17).height());
    CHECK(s.width() == st.at(17).width());
    CHECK(s.all_finite());
    CHECK(s.data().minCoeff() >= 0.0f);
}

TEST_CASE("blend schemes") {
    using P = std::pair<double, double>;
    CHECK(BlendScheme{1}.weights(1) == P{0.0, 1.0});
    CHECK(BlendScheme{1}.weights(2) == P{0.0, 1.0});
    CHECK(BlendScheme{2}.weights(1) == P{0.5, 0.5});
    CHECK(BlendScheme{2}.weights(2) == P{0.37, 0.63});
    CHECK(BlendScheme{3}.weights(1) == P{1.0, 0.0});
    CHECK(BlendScheme{3}.weights(2) == P{0.37, 0.63});
    for (int id : {1, 2, 3})
        for (int n = 3; n < 10; ++n)
            CHECK(BlendScheme{id}.weights(n) == P{0.0, 1.0});
    CHECK_THROWS_AS(BlendScheme{4}.weights(1), InputError);
}

TEST_CASE("blend combines the maps and keeps [0, 1]") {
    std::mt19937_64 rng(7);
    const AttentionMap a{oracle::random_tensor(rng, 1, 6, 6, 0.0f, 1.0f), 1};
    const Tensorf s = oracle::random_tensor(rng, 1, 6, 6, 0.0f, 1.0f);
    const AttentionMap o = blend(a, s, BlendScheme{2}, 1);
    CHECK(o.fixation_index == 1);
    CHECK(o.values(0, 2, 3) == doctest::Approx(0.5 * s(0, 2, 3) + 0.5 * a.values(0, 2, 3)));
    CHECK(o.values.data().minCoeff() >= 0.0f);
    CHECK(o.values.data().maxCoeff() <= 1.0f);
    CHECK(blend(a, s, BlendScheme{3}, 1).values == s);
    CHECK(blend(a, s, BlendScheme{3}, 5).values == a.values);
    CHECK_THROWS_AS(blend(a, Tensorf(1, 5, 6), BlendScheme{1}, 1), ShapeError);
}
