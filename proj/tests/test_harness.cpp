#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "eccnet/harness.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace eccnet;

namespace {

RunOptions chance_run(std::vector<int> experiments, int trials, int workers) {
    RunOptions o;
    o.experiments = std::move(experiments);
    o.search.searcher = Searcher::Chance;
    o.trials_per_condition = trials;
    o.workers = workers;
    return o;
}

TrialRecord record(const std::string& cond, int size, bool found, int n) {
    TrialRecord r;
    r.experiment = 5;
    r.condition = cond;
    r.set_size = size;
    r.result.found = found;
    r.result.capped = !found;
    r.result.n_fixations = n;
    r.result.rt_ms = found ? rt_ms(n) : 0.0;
    return r;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

} // namespace

TEST_CASE("fit_slope agrees with the normal equations") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < 3 + trial % 7; ++i)
            pts.emplace_back(u(rng), u(rng));
        const LineFit f = fit_slope(pts);
        const auto [slope, intercept] = oracle::normal_equations(pts);
        CHECK(f.slope == doctest::Approx(slope).epsilon(1e-9));
        CHECK(f.intercept == doctest::Approx(intercept).epsilon(1e-9));
    }
}

TEST_CASE("fit_slope: exact line, degenerate input") {
    const std::vector<std::pair<double, double>> pts{{1, 5}, {2, 7}, {4, 11}};
    const LineFit f = fit_slope(pts);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(3.0));
    const std::vector<std::pair<double, double>> same_x{{2, 1}, {2, 3}};
    CHECK_THROWS_AS(fit_slope(same_x), InputError);
}

TEST_CASE("asymmetry index") {
    CHECK(*asymmetry_index(30.0, 10.0) == doctest::Approx(0.5));
    CHECK(*asymmetry_index(10.0, 30.0) == doctest::Approx(-0.5));
    CHECK(*asymmetry_index(10.0, 10.0) == 0.0);
    CHECK_FALSE(asymmetry_index(5.0, -5.0).has_value());
    CHECK(*asymmetry_index(10.0, -2.0) == doctest::Approx(1.5));
}

TEST_CASE("summarize: capped trials are excluded from the means") {
    std::vector<TrialRecord> trials{
        record("vertical_among_20", 1, true, 1), record("vertical_among_20", 1, true, 3),
        record("vertical_among_20", 4, true, 4), record("vertical_among_20", 4, false, 500),
        record("20_among_vertical", 1, true, 1), record("20_among_vertical", 4, true, 2),
    };
    const auto s = summarize(trials);
    REQUIRE(s.size() == 1);
    REQUIRE(s[0].conditions.size() == 2);
    const ConditionSummary& hard = s[0].conditions[0];
    CHECK(hard.hard);
    CHECK(hard.per_size[0].mean_n == doctest::Approx(2.0));
    CHECK(hard.per_size[0].mean_rt == doctest::Approx(rt_ms(2)));
    CHECK(hard.per_size[1].included == 1);
    CHECK(hard.per_size[1].capped == 1);
    CHECK(hard.per_size[1].mean_rt == doctest::Approx(rt_ms(4)));
    CHECK(hard.per_size[0].se_rt == doctest::Approx(kRtSlopeMs));
    REQUIRE(hard.fit);
    CHECK(hard.fit->slope == doctest::Approx(2.0 * kRtSlopeMs / 3.0));
    const ConditionSummary& easy = s[0].conditions[1];
    CHECK(easy.fit->slope == doctest::Approx(kRtSlopeMs / 3.0));
    REQUIRE(s[0].asymmetry_index);
    CHECK(*s[0].asymmetry_index == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("run_experiments: trial ids, allocation and worker-count independence") {
    const Report one = run_experiments(nullptr, chance_run({1, 5}, 10, 1));
    const Report many = run_experiments(nullptr, chance_run({1, 5}, 10, 4));
    REQUIRE(one.trials.size() == 40);
    CHECK(one.trials[0].trial_id == "e1-line_among_curves-0000");
    CHECK(one.trials[39].trial_id == "e5-20_among_vertical-0009");
    CHECK(one.trials[3].set_size == 8);
    CHECK(one.trials[4].set_size == 16);
    CHECK(results_csv(one) == results_csv(many));
    CHECK(summary_json(one) == summary_json(many));
    CHECK(scanpaths_jsonl(one) == scanpaths_jsonl(many));
}

TEST_CASE("run_experiments: condition filter and weight requirement") {
    RunOptions o = chance_run({4}, 6, 2);
    o.condition = "d";
    const Report r = run_experiments(nullptr, o);
    REQUIRE(r.trials.size() == 6);
    CHECK(r.trials[0].condition == "T_among_L");
    CHECK_FALSE(r.experiments[0].asymmetry_index.has_value());

    RunOptions needs = o;
    needs.search.searcher = Searcher::EccNet;
    CHECK_THROWS_AS(run_experiments(nullptr, needs), InputError);
}

TEST_CASE("rt is affine in fixations for every found trial") {
    const Report r = run_experiments(nullptr, chance_run({2, 3}, 30, 2));
    for (const auto& t : r.trials) {
        REQUIRE(t.result.found);
        CHECK(std::abs(t.result.rt_ms - (252.36 * t.result.n_fixations + 376.27)) <= 1e-9);
        CHECK(t.result.n_fixations <= t.set_size);
    }
}

TEST_CASE("eccnet runs through the harness with synthetic weights") {
    const Backbone net = testing::narrow_backbone(3);
    RunOptions o;
    o.experiments = {2};
    o.trials_per_condition = 3;
    o.workers = 2;
    o.paper_saliency_schemes = true;
    const Report r = run_experiments(&net, o);
    CHECK(r.trials.size() == 6);
    for (const auto& t : r.trials)
        CHECK(t.result.n_fixations >= 1);
}

TEST_CASE("output formats") {
    const Report r = run_experiments(nullptr, chance_run({5}, 8, 1));
    const auto csv = lines(results_csv(r));
    REQUIRE(csv.size() == 17);
    CHECK(csv[0] == "trial_id,experiment,condition,set_size,seed,searcher,found,capped,n_fixations,rt_ms");
    CHECK(csv[1].rfind("e5-vertical_among_20-0000,5,vertical_among_20,1,", 0) == 0);
    CHECK(csv[1].find(",chance,1,0,1,628.6300") != std::string::npos);

    const auto summary = nlohmann::json::parse(summary_json(r));
    CHECK(summary["trial_count"] == 16);
    CHECK(summary["rt_model"]["slope_ms_per_fixation"] == 252.36);
    CHECK(summary["run"]["searcher"] == "chance");
    CHECK(summary["experiments"][0]["conditions"][0]["difficulty"] == "hard");
    CHECK(summary["experiments"][0]["conditions"][1]["set_sizes"].size() == 4);

    const auto paths = lines(scanpaths_jsonl(r));
    REQUIRE(paths.size() == 16);
    const auto first = nlohmann::json::parse(paths[0]);
    CHECK(first["n"] == first["scanpath"].size());
    CHECK(first["found"] == true);

    const std::string svg = experiment_svg(r.experiments[0]);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("data-condition=\"vertical_among_20\"") != std::string::npos);
    CHECK(svg.find("data-condition=\"20_among_vertical\"") != std::string::npos);
}

TEST_CASE("emit_outputs writes every file and reports unwritable directories") {
    const auto dir = testing::scratch_dir("emit");
    const Report r = run_experiments(nullptr, chance_run({1, 6}, 6, 1));
    emit_outputs(r, dir / "out");
    for (const char* f : {"results.csv", "summary.json", "scanpaths.jsonl", "exp1.svg", "exp6.svg"})
        CHECK(std::filesystem::exists(dir / "out" / f));
    std::ofstream(dir / "blocker") << "x";
    CHECK_THROWS(emit_outputs(r, dir / "blocker" / "out"));
}
