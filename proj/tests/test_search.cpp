#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "eccnet/search.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace eccnet;

namespace {

Tensorf plus_glyph() {
    Tensorf t(1, 32, 32);
    t.plane(0).block(13, 2, 6, 28).setConstant(255.0f);
    t.plane(0).block(2, 13, 28, 6).setConstant(255.0f);
    t.plane(0).block(2, 2, 5, 5).setConstant(255.0f);
    return t;
}

/// Blank image holding one copy of the target at (top, left).
TrialSpec copy_on_blank(Index size, Index top, Index left) {
    TrialSpec trial;
    trial.target_image = plus_glyph();
    trial.search_image = Tensorf(1, size, size);
    trial.search_image.plane(0).block(top, left, 32, 32) = trial.target_image.plane(0);
    trial.target_box = {top, left, top + 31, left + 31};
    trial.item_boxes = {trial.target_box};
    return trial;
}

/// k items in k distinct attention cells of a 256 x 256 image; item 0 is the target.
TrialSpec item_grid(int k, std::uint64_t seed) {
    TrialSpec trial;
    trial.seed = seed;
    trial.search_image = Tensorf(1, 256, 256);
    trial.target_image = Tensorf::Constant(1, 4, 4, 255.0f);
    for (int i = 0; i < k; ++i) {
        const Index top = (i / 4) * 64 + 4, left = (i % 4) * 64 + 4;
        trial.item_boxes.push_back({top, left, top + 7, left + 7});
    }
    trial.target_box = trial.item_boxes[0];
    return trial;
}

bool no_revisits(const std::vector<GridPoint>& path, GridPoint map_dims) {
    std::set<std::pair<Index, Index>> seen;
    for (const auto& p : path) {
        const GridPoint c = to_cell(p, map_dims, {});
        if (!seen.insert({c.row, c.col}).second)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("affine reaction time") {
    CHECK(rt_ms(0) == doctest::Approx(376.27));
    CHECK(rt_ms(1) == doctest::Approx(628.63));
    CHECK(rt_ms(10) == doctest::Approx(2899.87));
}

TEST_CASE("attention grid dims") {
    CHECK(attention_dims(615, 615) == GridPoint{39, 39});
    CHECK(attention_dims(339, 339) == GridPoint{22, 22});
    CHECK(attention_dims(16, 17) == GridPoint{1, 2});
    CHECK(attention_dims(1, 1) == GridPoint{1, 1});
}

TEST_CASE("winner_take_all agrees with an exhaustive argmax, including ties") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<Index> dim(1, 12);
    std::uniform_int_distribution<int> level(0, 3);
    std::bernoulli_distribution masked(0.3);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Index h = dim(rng), w = dim(rng);
        Tensorf map(1, h, w);
        for (Index i = 0; i < map.size(); ++i)
            map.data()[i] = static_cast<float>(level(rng));
        Mask mask(h, w);
        for (Index i = 0; i < mask.size(); ++i)
            mask.data()[i] = masked(rng);
        if (mask.all()) {
            CHECK_THROWS_AS(winner_take_all(map, mask), InputError);
            continue;
        }
        CHECK(winner_take_all(map, mask) == oracle::argmax(map, mask));
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("winner_take_all: ties resolve to the first row, then column") {
    Tensorf map = Tensorf::Constant(1, 3, 3, 1.0f);
    Mask mask = Mask::Constant(3, 3, false);
    CHECK(winner_take_all(map, mask) == GridPoint{0, 0});
    mask(0, 0) = true;
    CHECK(winner_take_all(map, mask) == GridPoint{0, 1});
    map(0, 2, 0) = 2.0f;
    map(0, 1, 2) = 2.0f;
    CHECK(winner_take_all(map, mask) == GridPoint{1, 2});
    CHECK_THROWS_AS(winner_take_all(map, Mask::Constant(2, 3, false)), ShapeError);
}

TEST_CASE("cell and image coordinates") {
    const GridPoint dims{22, 22}, img{339, 339};
    CHECK(to_image_coords({0, 0}, dims, img) == GridPoint{8, 8});
    CHECK(to_image_coords({21, 3}, dims, img) == GridPoint{338, 56});
    CHECK_THROWS_AS(to_image_coords({22, 0}, dims, img), InputError);
    for (Index r = 0; r < 22; ++r)
        for (Index c = 0; c < 22; ++c)
            CHECK(to_cell(to_image_coords({r, c}, dims, img), dims, img) == GridPoint{r, c});
    CHECK(oracle_check({5, 5}, Box{5, 5, 9, 9}));
    CHECK_FALSE(oracle_check({4, 5}, Box{5, 5, 9, 9}));
}

TEST_CASE("searcher names") {
    for (Searcher s : {Searcher::EccNet, Searcher::Chance, Searcher::PixelMatch})
        CHECK(parse_searcher(searcher_name(s)) == s);
    CHECK_THROWS_AS(parse_searcher("random"), InputError);
}

TEST_CASE("pixel_match_map: naive correlation reduced by the cell maximum") {
    std::mt19937_64 rng(2);
    Tensorf search = oracle::random_tensor(rng, 1, 40, 35, 0.0f, 255.0f);
    Tensorf target = oracle::random_tensor(rng, 1, 5, 6, 0.0f, 255.0f);
    target(0, 1, 1) = 0.0f;
    const Tensorf full = oracle::modulation(target, search);
    const Tensorf m = pixel_match_map(search, target);
    REQUIRE(m.height() == 3);
    REQUIRE(m.width() == 3);
    for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 3; ++c) {
            float best = -INFINITY;
            for (Index y = r * 16; y < std::min<Index>(40, r * 16 + 16); ++y)
                for (Index x = c * 16; x < std::min<Index>(35, c * 16 + 16); ++x)
                    best = std::max(best, full(0, y, x));
            CHECK(m(0, r, c) == doctest::Approx(best).epsilon(1e-5));
        }
}

TEST_CASE("eccnet finds a lone target copy on a blank image at the first fixation") {
    const Backbone net = testing::narrow_backbone(7);
    for (const auto& [top, left] : {std::pair<Index, Index>{20, 190}, {180, 30}, {112, 112}}) {
        const TrialSpec trial = copy_on_blank(256, top, left);
        for (PoolMode mode : {PoolMode::Eccentric, PoolMode::Uniform}) {
            SearchOptions opt;
            opt.pool_mode = mode;
            const TrialResult r = run_trial(&net, trial, opt);
            CHECK(r.found);
            CHECK(r.n_fixations == 1);
            CHECK(r.rt_ms == doctest::Approx(rt_ms(1)));
        }
        SearchOptions pm;
        pm.searcher = Searcher::PixelMatch;
        CHECK(run_trial(nullptr, trial, pm).n_fixations == 1);
    }
}

TEST_CASE("eccnet scanpaths never revisit a cell and are deterministic") {
    const Backbone net = testing::narrow_backbone(9);
    std::mt19937_64 rng(3);
    TrialSpec trial = copy_on_blank(160, 120, 120);
    trial.search_image = oracle::random_tensor(rng, 1, 160, 160, 0.0f, 255.0f);
    SearchOptions opt;
    opt.max_fixations = 40;
    const TrialResult a = run_trial(&net, trial, opt);
    const TrialResult b = run_trial(&net, trial, opt);
    CHECK(a.scanpath == b.scanpath);
    CHECK(a.n_fixations == static_cast<int>(a.scanpath.size()));
    CHECK(a.n_fixations <= 40);
    CHECK(no_revisits(a.scanpath, attention_dims(160, 160)));
    CHECK(a.found != a.capped);
}

TEST_CASE("saliency blending and single-layer variants run and stay on the grid") {
    const Backbone net = testing::narrow_backbone(10);
    const TrialSpec trial = copy_on_blank(128, 80, 10);
    for (int scheme : {1, 2, 3}) {
        SearchOptions opt;
        opt.saliency_scheme = scheme;
        const TrialResult r = run_trial(&net, trial, opt);
        CHECK(r.n_fixations >= 1);
        CHECK(no_revisits(r.scanpath, attention_dims(128, 128)));
    }
    SearchOptions single;
    single.single_layer_topdown = true;
    CHECK(run_trial(&net, trial, single).n_fixations >= 1);

    TopDownAttention att(net, trial.search_image, trial.target_image, SearchOptions{});
    const FusionResult f = att.compute({64, 64}, 1);
    CHECK(f.map.values.height() == 8);
    CHECK(f.map.values.data().maxCoeff() <= 1.0f + 1e-6f);
    CHECK(f.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("fixation cap") {
    const TrialSpec trial = item_grid(16, 5);
    SearchOptions opt;
    opt.searcher = Searcher::Chance;
    opt.max_fixations = 1;
    int capped = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        TrialSpec t = trial;
        t.seed = s;
        const TrialResult r = run_trial(nullptr, t, opt);
        CHECK(r.n_fixations == 1);
        CHECK(r.found != r.capped);
        capped += r.capped;
    }
    CHECK(capped > 30);

    SearchOptions bad;
    bad.max_fixations = 0;
    CHECK_THROWS_AS(run_trial(nullptr, trial, bad), InputError);
    CHECK_THROWS_AS(run_trial(nullptr, trial, SearchOptions{}), InputError);
}

TEST_CASE("chance searcher: mean fixations approach (k + 1) / 2") {
    for (int k : {2, 4, 8, 16}) {
        for (ChanceMode mode : {ChanceMode::Items}) {
            SearchOptions opt;
            opt.searcher = Searcher::Chance;
            opt.chance_mode = mode;
            double total = 0.0;
            const int trials = 1000;
            for (int s = 0; s < trials; ++s) {
                const TrialResult r = run_trial(nullptr, item_grid(k, static_cast<std::uint64_t>(s) * 7919 + 1), opt);
                REQUIRE(r.found);
                total += r.n_fixations;
            }
            const double expected = (k + 1) / 2.0;
            CHECK(std::abs(total / trials - expected) <= 0.1 * expected);
        }
    }
}

TEST_CASE("chance searcher over cells visits every cell at most once") {
    SearchOptions opt;
    opt.searcher = Searcher::Chance;
    opt.chance_mode = ChanceMode::Cells;
    const TrialResult r = run_trial(nullptr, item_grid(4, 11), opt);
    CHECK(r.found);
    CHECK(no_revisits(r.scanpath, attention_dims(256, 256)));
    CHECK(r.n_fixations <= 256);
}

TEST_CASE("run_trial validates its inputs") {
    TrialSpec trial = item_grid(2, 1);
    trial.target_box = {250, 250, 270, 270};
    SearchOptions opt;
    opt.searcher = Searcher::Chance;
    CHECK_THROWS_AS(run_trial(nullptr, trial, opt), InputError);
}
