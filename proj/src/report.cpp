#include "eccnet/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eccnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json options_json(const RunOptions& o) {
    const auto& s = o.search;
    json j{{"master_seed", o.master_seed},
           {"searcher", searcher_name(s.searcher)},
           {"pool_mode", s.pool_mode == PoolMode::Eccentric ? "eccentric" : "uniform"},
           {"single_layer_topdown", s.single_layer_topdown},
           {"chance_mode", s.chance_mode == ChanceMode::Items ? "items" : "cells"},
           {"weights_digest", o.weights_digest}};
    j["experiments"] = o.experiments;
    j["condition"] = o.condition ? json(*o.condition) : json(nullptr);
    j["saliency_scheme"] = o.paper_saliency_schemes ? json("per-condition")
                           : s.saliency_scheme     ? json(*s.saliency_scheme)
                                                   : json(nullptr);
    j["trials_per_condition"] = o.trials_per_condition ? json(*o.trials_per_condition) : json("default");
    j["max_fixations"] = s.max_fixations ? json(*s.max_fixations) : json("default");
    return j;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

} // namespace

std::string results_csv(const Report& report) {
    std::ostringstream out;
    out << "trial_id,experiment,condition,set_size,seed,searcher,found,capped,n_fixations,rt_ms\n";
    const auto searcher = searcher_name(report.options.search.searcher);
    for (const auto& t : report.trials) {
        out << t.trial_id << ',' << t.experiment << ',' << t.condition << ',' << t.set_size << ',' << t.seed << ','
            << searcher << ',' << (t.result.found ? 1 : 0) << ',' << (t.result.capped ? 1 : 0) << ','
            << t.result.n_fixations << ',' << (t.result.found ? fixed(t.result.rt_ms) : "") << '\n';
    }
    return out.str();
}

std::string summary_json(const Report& report) {
    json experiments = json::array();
    for (const auto& es : report.experiments) {
        json conditions = json::array();
        for (const auto& cs : es.conditions) {
            json sizes = json::array();
            for (const auto& st : cs.per_size)
                sizes.push_back({{"set_size", st.set_size},
                                 {"included", st.included},
                                 {"capped", st.capped},
                                 {"mean_rt_ms", st.mean_rt},
                                 {"se_rt_ms", st.se_rt},
                                 {"mean_fixations", st.mean_n}});
            conditions.push_back({{"condition", cs.condition},
                                  {"difficulty", cs.hard ? "hard" : "easy"},
                                  {"slope_ms_per_item", cs.fit ? json(cs.fit->slope) : json(nullptr)},
                                  {"intercept_ms", cs.fit ? json(cs.fit->intercept) : json(nullptr)},
                                  {"set_sizes", sizes}});
        }
        experiments.push_back({{"experiment", es.experiment},
                               {"asymmetry_index", es.asymmetry_index ? json(*es.asymmetry_index) : json(nullptr)},
                               {"conditions", conditions}});
    }
    json j{{"run", options_json(report.options)},
           {"trial_count", report.trials.size()},
           {"rt_model", {{"slope_ms_per_fixation", kRtSlopeMs}, {"intercept_ms", kRtInterceptMs}}},
           {"experiments", experiments}};
    return j.dump(2) + "\n";
}

std::string scanpaths_jsonl(const Report& report) {
    std::string out;
    for (const auto& t : report.trials) {
        json path = json::array();
        for (const auto& p : t.result.scanpath)
            path.push_back({p.row, p.col});
        json j{{"trial_id", t.trial_id},
               {"experiment", t.experiment},
               {"condition", t.condition},
               {"set_size", t.set_size},
               {"seed", t.seed},
               {"scanpath", path},
               {"n", t.result.n_fixations},
               {"found", t.result.found},
               {"rt_ms", t.result.found ? json(t.result.rt_ms) : json(nullptr)},
               {"capped", t.result.capped}};
        out += j.dump() + "\n";
    }
    return out;
}

std::string experiment_svg(const ExperimentSummary& summary) {
    constexpr double W = 640, H = 420, left = 70, right = 190, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& cs : summary.conditions) {
        for (const auto& st : cs.per_size) {
            xmin = std::min(xmin, double(st.set_size));
            xmax = std::max(xmax, double(st.set_size));
            if (st.included == 0)
                continue;
            ymin = std::min(ymin, st.mean_rt - st.se_rt);
            ymax = std::max(ymax, st.mean_rt + st.se_rt);
        }
    }
    if (!(xmax > xmin)) {
        xmin -= 1;
        xmax += 1;
    }
    if (!(ymax > ymin)) {
        ymin = (ymin > 1e299 ? 0.0 : ymin) - 100;
        ymax = ymin + 200;
    }
    const double pad = 0.08 * (ymax - ymin);
    ymin = std::max(0.0, ymin - pad);
    ymax += pad;
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">Experiment " << summary.experiment;
    if (summary.asymmetry_index)
        o << " (asymmetry index " << fixed(*summary.asymmetry_index, 3) << ")";
    o << "</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = ymin + (ymax - ymin) * k / 4.0;
        o << "<text x=\"" << left - 8 << "\" y=\"" << fixed(sy(y) + 4, 1) << "\" text-anchor=\"end\">"
          << fixed(y, 0) << "</text>\n";
    }
    if (!summary.conditions.empty()) {
        for (const auto& st : summary.conditions.front().per_size)
            o << "<text x=\"" << fixed(sx(st.set_size), 1) << "\" y=\"" << top + ph + 18
              << "\" text-anchor=\"middle\">" << st.set_size << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">number of items</text>\n";
    o << "<text x=\"18\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 18 " << top + ph / 2
      << ")\" text-anchor=\"middle\">RT (ms)</text>\n";

    int legend = 0;
    for (const auto& cs : summary.conditions) {
        const char* colour = cs.hard ? "#c0392b" : "#2e6fb7";
        o << "<g class=\"series\" data-condition=\"" << cs.condition << "\" stroke=\"" << colour << "\" fill=\""
          << colour << "\">\n";
        std::string pts;
        for (const auto& st : cs.per_size) {
            if (st.included == 0)
                continue;
            const double x = sx(st.set_size), y = sy(st.mean_rt);
            pts += fixed(x, 1) + "," + fixed(y, 1) + " ";
            o << "<line x1=\"" << fixed(x, 1) << "\" y1=\"" << fixed(sy(st.mean_rt - st.se_rt), 1) << "\" x2=\""
              << fixed(x, 1) << "\" y2=\"" << fixed(sy(st.mean_rt + st.se_rt), 1) << "\"/>\n";
            o << "<circle cx=\"" << fixed(x, 1) << "\" cy=\"" << fixed(y, 1) << "\" r=\"3.5\"/>\n";
        }
        if (!pts.empty())
            o << "<polyline fill=\"none\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
        const double ly = top + 10 + 20 * legend++;
        o << "<rect x=\"" << left + pw + 16 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\"/>\n";
        o << "<text x=\"" << left + pw + 32 << "\" y=\"" << ly + 1 << "\" stroke=\"none\" fill=\"black\">"
          << cs.condition << (cs.hard ? " (hard)" : " (easy)") << "</text>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void emit_outputs(const Report& report, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    write_file(out_dir / "results.csv", results_csv(report));
    write_file(out_dir / "summary.json", summary_json(report));
    write_file(out_dir / "scanpaths.jsonl", scanpaths_jsonl(report));
    for (const auto& es : report.experiments)
        write_file(out_dir / ("exp" + std::to_string(es.experiment) + ".svg"), experiment_svg(es));
}

} // namespace eccnet
