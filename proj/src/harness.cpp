#include "eccnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace eccnet {

LineFit fit_slope(std::span<const std::pair<double, double>> points) {
    std::set<double> xs;
    for (const auto& p : points)
        xs.insert(p.first);
    if (xs.size() < 2)
        throw InputError("fit_slope: need at least two distinct set sizes");
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

std::optional<double> asymmetry_index(double hard_slope, double easy_slope) {
    const double denom = hard_slope + easy_slope;
    if (denom == 0.0)
        return std::nullopt;
    return (hard_slope - easy_slope) / denom;
}

int default_workers() {
    if (const char* env = std::getenv("ECCNET_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Job {
    std::string trial_id;
    int experiment;
    const ConditionInfo* condition;
    int set_size;
    std::uint64_t seed;
};

std::vector<Job> plan_jobs(const RunOptions& options) {
    std::vector<Job> jobs;
    for (int experiment : options.experiments) {
        const ExperimentPlan plan = plan_for(experiment);
        for (const ConditionInfo* info : experiment_conditions(experiment)) {
            if (options.condition && &find_condition(experiment, *options.condition) != info)
                continue;
            const int total = options.trials_per_condition.value_or(plan.trials_per_condition);
            const auto counts = allocate_trials(total, plan.set_sizes);
            int index = 0;
            for (std::size_t s = 0; s < counts.size(); ++s) {
                for (int k = 0; k < counts[s]; ++k, ++index) {
                    char id[96];
                    std::snprintf(id, sizeof id, "e%d-%s-%04d", experiment, std::string(info->key).c_str(), index);
                    jobs.push_back({id, experiment, info, plan.set_sizes[s],
                                    trial_seed(options.master_seed, experiment, info->key, index)});
                }
            }
        }
    }
    return jobs;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace

Report run_experiments(const Backbone* backbone, const RunOptions& options, const ProgressFn& progress) {
    if (options.search.searcher == Searcher::EccNet && !backbone)
        throw InputError("the eccnet searcher needs loaded weights");
    const std::vector<Job> jobs = plan_jobs(options);
    std::vector<TrialRecord> records(jobs.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::size_t done = 0;
    std::string error;
    std::mutex mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size() && !failed; i = next++) {
            const Job& job = jobs[i];
            try {
                const TrialSpec spec = generate_trial(job.experiment, job.condition->key, job.set_size, job.seed);
                SearchOptions search = options.search;
                if (options.paper_saliency_schemes)
                    search.saliency_scheme = job.condition->bottom_up_scheme;
                records[i] = {job.trial_id, job.experiment, std::string(job.condition->key), job.set_size, job.seed,
                              run_trial(backbone, spec, search)};
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex);
                if (!failed.exchange(true))
                    error = "trial " + job.trial_id + ": " + e.what();
                return;
            }
            std::lock_guard lock(mutex);
            ++done;
            if (progress)
                progress(done, jobs.size());
        }
    };

    const int n_workers = std::max(1, std::min<int>(options.workers > 0 ? options.workers : default_workers(),
                                                    static_cast<int>(std::max<std::size_t>(1, jobs.size()))));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_workers; ++i)
            pool.emplace_back(worker);
    }
    if (failed)
        throw std::runtime_error(error);

    Report report;
    report.options = options;
    report.trials = std::move(records);
    report.experiments = summarize(report.trials);
    return report;
}

std::vector<ExperimentSummary> summarize(const std::vector<TrialRecord>& trials) {
    std::map<int, std::map<std::string, std::map<int, std::vector<const TrialRecord*>>>> grouped;
    for (const auto& t : trials)
        grouped[t.experiment][t.condition][t.set_size].push_back(&t);

    std::vector<ExperimentSummary> out;
    for (const auto& [experiment, conditions] : grouped) {
        ExperimentSummary es;
        es.experiment = experiment;
        for (const ConditionInfo* info : experiment_conditions(experiment)) {
            const auto it = conditions.find(std::string(info->key));
            if (it == conditions.end())
                continue;
            ConditionSummary cs;
            cs.experiment = experiment;
            cs.condition = std::string(info->key);
            cs.hard = info->hard;
            std::vector<std::pair<double, double>> points;
            for (const auto& [size, records] : it->second) {
                SetSizeStats st;
                st.set_size = size;
                std::vector<double> rts, ns;
                for (const TrialRecord* r : records) {
                    if (r->result.found) {
                        rts.push_back(r->result.rt_ms);
                        ns.push_back(r->result.n_fixations);
                    } else {
                        ++st.capped;
                    }
                }
                st.included = static_cast<int>(rts.size());
                st.mean_rt = mean(rts);
                st.mean_n = mean(ns);
                if (rts.size() > 1) {
                    double ss = 0.0;
                    for (double v : rts)
                        ss += (v - st.mean_rt) * (v - st.mean_rt);
                    st.se_rt = std::sqrt(ss / static_cast<double>(rts.size() - 1)) /
                               std::sqrt(static_cast<double>(rts.size()));
                }
                if (st.included > 0)
                    points.emplace_back(size, st.mean_rt);
                cs.per_size.push_back(st);
            }
            if (points.size() >= 2)
                cs.fit = fit_slope(points);
            es.conditions.push_back(std::move(cs));
        }
        if (es.conditions.size() == 2 && es.conditions[0].fit && es.conditions[1].fit)
            es.asymmetry_index = asymmetry_index(es.conditions[0].fit->slope, es.conditions[1].fit->slope);
        out.push_back(std::move(es));
    }
    return out;
}

} // namespace eccnet
