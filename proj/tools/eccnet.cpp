#include "eccnet/attention.hpp"
#include "eccnet/backbone.hpp"
#include "eccnet/fixtures.hpp"
#include "eccnet/harness.hpp"
#include "eccnet/image_io.hpp"
#include "eccnet/search.hpp"
#include "eccnet/stimuli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace eccnet;

namespace {

std::optional<Backbone> load_backbone(const std::string& dir_arg) {
    std::string dir = dir_arg;
    if (dir.empty()) {
        if (const char* env = std::getenv("ECCNET_WEIGHTS"))
            dir = env;
    }
    if (dir.empty())
        return std::nullopt;
    const fs::path root(dir);
    return Backbone::load(root / "manifest.json", root / "weights.bin");
}

std::vector<int> parse_experiments(const std::string& arg) {
    if (arg.empty() || arg == "all")
        return {1, 2, 3, 4, 5, 6};
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
        const std::size_t comma = arg.find(',', pos);
        out.push_back(std::stoi(arg.substr(pos, comma - pos)));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int cmd_gen(int experiment, const std::string& condition, int set_size, std::uint64_t seed, int count,
            const fs::path& out) {
    const ExperimentPlan plan = plan_for(experiment);
    std::vector<const ConditionInfo*> conditions;
    if (condition.empty()) {
        const auto both = experiment_conditions(experiment);
        conditions.assign(both.begin(), both.end());
    } else {
        conditions.push_back(&find_condition(experiment, condition));
    }
    const std::vector<int> sizes = set_size > 0 ? std::vector<int>{set_size} : plan.set_sizes;
    int written = 0;
    for (const ConditionInfo* info : conditions) {
        for (int size : sizes) {
            for (int i = 0; i < count; ++i) {
                const std::uint64_t s = trial_seed(seed, experiment, info->key, size * 1000 + i);
                const TrialSpec trial = generate_trial(experiment, info->key, size, s);
                const std::string stem =
                    "e" + std::to_string(experiment) + "_" + std::string(info->key) + "_n" + std::to_string(size) +
                    "_" + std::to_string(i);
                dump_trial(out, stem, trial);
                ++written;
            }
        }
    }
    std::cout << "wrote " << written << " trials to " << out.string() << "\n";
    return 0;
}

void dump_first_attention(const Backbone& backbone, const RunOptions& options, const fs::path& dir) {
    for (int experiment : options.experiments) {
        const ExperimentPlan plan = plan_for(experiment);
        for (const ConditionInfo* info : experiment_conditions(experiment)) {
            if (options.condition && &find_condition(experiment, *options.condition) != info)
                continue;
            const int size = plan.set_sizes.back();
            const TrialSpec trial =
                generate_trial(experiment, info->key, size, trial_seed(options.master_seed, experiment, info->key, 0));
            TopDownAttention attention(backbone, trial.search_image, trial.target_image, options.search);
            const GridPoint centre{trial.search_image.height() / 2, trial.search_image.width() / 2};
            const FusionResult fused = attention.compute(centre, 1);
            const std::string stem = "e" + std::to_string(experiment) + "_" + std::string(info->key);
            dump_trial(dir, stem + "_trial", trial);
            dump_attention(dir, stem + "_attention", attention.last_modulation_maps(), fused);
        }
    }
}

void print_report(const Report& report) {
    for (const auto& es : report.experiments) {
        std::cout << "experiment " << es.experiment << "\n";
        for (const auto& cs : es.conditions) {
            std::cout << "  " << cs.condition << (cs.hard ? " [hard]" : " [easy]") << "\n";
            for (const auto& st : cs.per_size)
                std::cout << "    set size " << st.set_size << ": mean RT " << fmt(st.mean_rt) << " ms (SE "
                          << fmt(st.se_rt) << ", n=" << st.included << ", capped " << st.capped << ")\n";
            if (cs.fit)
                std::cout << "    slope " << fmt(cs.fit->slope) << " ms/item, intercept " << fmt(cs.fit->intercept)
                          << " ms\n";
        }
        std::cout << "  asymmetry index: " << (es.asymmetry_index ? fmt(*es.asymmetry_index, 3) : "undefined")
                  << "\n";
    }
}

int cmd_rf_profile(const std::vector<int>& layers, Index image_size, double delta) {
    BackboneConfig config;
    config.delta = delta;
    for (int layer : layers) {
        const auto samples = estimate_rf_profile(config, layer, image_size);
        int worst = 0;
        std::cout << "layer " << layer << "  (eccentricity dva, rf dva, rf px, predicted px)\n";
        for (const auto& s : samples) {
            worst = std::max(worst, std::abs(s.rf_px - s.predicted_px));
            std::cout << "  " << fmt(s.eccentricity_dva, 3) << "  " << fmt(s.rf_dva, 3) << "  " << s.rf_px << "  "
                      << s.predicted_px << "\n";
        }
        std::cout << "  " << samples.size() << " units, max |measured - predicted| = " << worst << " px\n";
    }
    return 0;
}

int cmd_verify(double delta, const std::string& weights, const std::string& reference) {
    bool ok = true;
    BackboneConfig config;
    config.delta = delta;
    const auto mismatches = rf_table_mismatches(config);
    std::cout << (mismatches.empty() ? "PASS" : "FAIL") << "  receptive-field table (delta = " << delta
              << " dva): " << 80 - mismatches.size() << "/80 entries match\n";
    for (const auto& m : mismatches)
        std::cout << "      layer " << m.layer_id << " d=" << m.distance << ": expected " << m.expected << ", got "
                  << m.actual << "\n";
    ok &= mismatches.empty();

    const FusionFixture f;
    const FusionWeights w = fusion_weights(f.maxima);
    bool fusion_ok = true;
    double fused = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double n = normalized_value(f.p1[i], f.minima[i], f.maxima[i]);
        fusion_ok &= std::abs(w.w[i] - f.weights[i]) <= 0.001 && std::abs(n - f.p1_normalized[i]) <= 0.001;
        fused += w.w[i] * n;
        raw += f.p2[i];
    }
    fusion_ok &= std::abs(fused - f.p1_fused) <= 0.005 && raw == f.p2_raw_sum;
    std::cout << (fusion_ok ? "PASS" : "FAIL") << "  fusion example: weights " << fmt(w.w[0], 3) << "/"
              << fmt(w.w[1], 3) << "/" << fmt(w.w[2], 3) << ", fused P1 " << fmt(fused, 3) << ", raw P2 "
              << fmt(raw, 0) << "\n";
    ok &= fusion_ok;

    if (!reference.empty()) {
        const auto backbone = load_backbone(weights);
        if (!backbone) {
            std::cout << "FAIL  reference check: no weights given (--weights or ECCNET_WEIGHTS)\n";
            ok = false;
        } else {
            const ReferenceCheck check = check_reference(*backbone, read_reference(reference));
            std::cout << (check.ok() ? "PASS" : "FAIL") << "  reference activations: preprocess max abs "
                      << check.preprocess_max_abs << ", layer 17 max rel " << check.layer17_max_rel << "\n";
            ok &= check.ok();
        }
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"eccNET visual search asymmetry simulator"};
    app.require_subcommand(1);

    int experiment = 1, set_size = 0, count = 1;
    std::string condition;
    std::uint64_t seed = 1;
    std::string out = "out";
    auto* gen = app.add_subcommand("gen", "Render search and target images with box sidecars");
    gen->add_option("--experiment", experiment, "Experiment 1..6")->check(CLI::Range(1, 6));
    gen->add_option("--condition", condition, "Condition key or letter (default: both)");
    gen->add_option("--set-size", set_size, "Set size (default: all)");
    gen->add_option("--count", count, "Trials per condition and set size")->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "Master seed");
    gen->add_option("--out", out, "Output directory");

    std::string experiments_arg = "all", searcher = "eccnet", weights, dump_dir, scheme, chance_mode = "items";
    bool no_ecc = false, single_layer = false;
    int trials = 0, max_fix = 0, workers = 0;
    auto* run = app.add_subcommand("run", "Run search experiments and write reports");
    run->add_option("--experiment", experiments_arg, "Comma-separated experiments or 'all'");
    run->add_option("--condition", condition, "Restrict to one condition");
    run->add_option("--searcher", searcher, "eccnet, chance or pixelmatch")
        ->check(CLI::IsMember({"eccnet", "chance", "pixelmatch"}));
    run->add_flag("--no-ecc", no_ecc, "Uniform 2x2 pooling instead of eccentricity-dependent pooling");
    run->add_flag("--single-layer-topdown", single_layer, "Top-down attention from layer 17 only");
    run->add_option("--saliency-scheme", scheme, "Blend bottom-up saliency: 1, 2, 3 or 'paper' (per condition)")
        ->check(CLI::IsMember({"1", "2", "3", "paper"}));
    run->add_option("--trials-per-condition", trials, "Override trial counts (quick mode: 30)");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--weights", weights, "Directory holding manifest.json and weights.bin (or ECCNET_WEIGHTS)");
    run->add_option("--out", out, "Output directory");
    run->add_option("--max-fixations", max_fix, "Fixation cap per trial");
    run->add_option("--workers", workers, "Worker threads (default: ECCNET_WORKERS or all cores)");
    run->add_option("--chance-mode", chance_mode, "Chance searcher samples 'items' or 'cells'")
        ->check(CLI::IsMember({"items", "cells"}));
    run->add_option("--dump-attention", dump_dir, "Write first-fixation attention maps here");

    std::vector<int> rf_layers{3, 6, 10, 14, 18};
    Index image_size = 1200;
    double delta = BackboneConfig{}.delta;
    auto* rf = app.add_subcommand("rf-profile", "Probe receptive-field size versus eccentricity");
    rf->add_option("--layer", rf_layers, "Pooling layers to probe");
    rf->add_option("--image-size", image_size, "Probe image size in pixels");
    rf->add_option("--delta", delta, "Fovea radius in dva");

    std::string reference;
    auto* verify = app.add_subcommand("verify", "Check the receptive-field table and the fusion example");
    verify->add_option("--delta", delta, "Fovea radius in dva");
    verify->add_option("--weights", weights, "Weight bundle for the reference check");
    verify->add_option("--reference", reference, "reference.json from a weight export");

    std::string widths = "standard";
    auto* synth = app.add_subcommand("synth-weights", "Write a random (untrained) weight bundle for plumbing tests");
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--widths", widths, "'standard' or 'narrow'")->check(CLI::IsMember({"standard", "narrow"}));
    synth->add_option("--seed", seed, "Random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen)
            return cmd_gen(experiment, condition, set_size, seed, count, out);
        if (*rf)
            return cmd_rf_profile(rf_layers, image_size, delta);
        if (*verify)
            return cmd_verify(delta, weights, reference);
        if (*synth) {
            std::array<int, 13> w{};
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = widths == "narrow" ? std::max(4, kVgg16Convs[i].standard_width / 16)
                                          : kVgg16Convs[i].standard_width;
            Preprocessing pre;
            pre.mean = {103.939f, 116.779f, 123.68f};
            write_weight_bundle(out, random_vgg16_layers(w, seed), pre,
                                "random He-normal weights, seed " + std::to_string(seed) + " (not pretrained)");
            std::cout << "wrote " << out << "/manifest.json and weights.bin\n";
            return 0;
        }

        RunOptions options;
        options.experiments = parse_experiments(experiments_arg);
        if (!condition.empty())
            options.condition = condition;
        options.search.searcher = parse_searcher(searcher);
        options.search.pool_mode = no_ecc ? PoolMode::Uniform : PoolMode::Eccentric;
        options.search.single_layer_topdown = single_layer;
        options.search.chance_mode = chance_mode == "cells" ? ChanceMode::Cells : ChanceMode::Items;
        if (scheme == "paper")
            options.paper_saliency_schemes = true;
        else if (!scheme.empty())
            options.search.saliency_scheme = std::stoi(scheme);
        if (trials > 0)
            options.trials_per_condition = trials;
        if (max_fix > 0)
            options.search.max_fixations = max_fix;
        options.master_seed = seed;
        options.workers = workers;

        std::optional<Backbone> backbone;
        if (options.search.searcher == Searcher::EccNet) {
            backbone = load_backbone(weights);
            if (!backbone) {
                std::cerr << "error: the eccnet searcher needs --weights or ECCNET_WEIGHTS\n";
                return 2;
            }
            options.weights_digest = weights_digest(*backbone);
            if (!dump_dir.empty())
                dump_first_attention(*backbone, options, dump_dir);
        }

        const auto start = std::chrono::steady_clock::now();
        const Report report = run_experiments(backbone ? &*backbone : nullptr, options, [](std::size_t d, std::size_t t) {
            if (d == t || d % 10 == 0)
                std::cerr << "\r" << d << "/" << t << " trials" << (d == t ? "\n" : "") << std::flush;
        });
        emit_outputs(report, out);
        print_report(report);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << report.trials.size() << " trials in " << fmt(secs, 1) << " s; outputs in " << out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
