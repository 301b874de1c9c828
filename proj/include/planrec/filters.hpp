#pragma once

// Domain-independent pruning of candidate explanation sets.

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"

namespace planrec {

struct FilterConfig {
    bool enable_plans_leq_avg = true;
    bool enable_frontier_leq_avg = true;
    bool enable_distinct_plans = true;
    std::size_t distinct_plans_max = 4;  // keep when count < distinct_plans_max
    bool count_raw_plans = false;        // third filter counts plans instead of distinct goals
    bool apply_each_step = true;         // false: filter once after the last observation
    bool retain_best_when_empty = true;  // false: strict mode, may return nothing
    bool per_exogenous_stratum = true;   // averages taken among candidates with equal exogenous counts

    bool operator==(const FilterConfig&) const = default;

    void validate() const {
        if (distinct_plans_max < 1) throw ConfigError("distinct_plans_max must be at least 1");
    }
};

struct FilterVerdict {
    bool plans_ok = true;
    bool frontier_ok = true;
    bool distinct_ok = true;

    bool passes() const { return plans_ok && frontier_ok && distinct_ok; }
};

/// Evaluates each enabled filter for every candidate against the averages of its
/// comparison group: the whole set, or the candidates with as many exogenous marks.
inline std::vector<FilterVerdict> filter_verdicts(const std::vector<Explanation>& candidates,
                                                  const FilterConfig& cfg) {
    struct Sums {
        std::size_t count = 0;
        std::size_t plans = 0;
        std::size_t frontier = 0;
    };
    std::vector<ExplanationStats> stats;
    stats.reserve(candidates.size());
    std::map<std::size_t, Sums> groups;
    auto group_of = [&](const ExplanationStats& s) { return cfg.per_exogenous_stratum ? s.num_exogenous : 0; };
    for (const auto& c : candidates) {
        stats.push_back(explanation_stats(c));
        Sums& g = groups[group_of(stats.back())];
        ++g.count;
        g.plans += stats.back().num_plans;
        g.frontier += stats.back().num_frontier_nodes;
    }
    const std::size_t n = candidates.size();
    std::vector<FilterVerdict> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = stats[i];
        const Sums& g = groups[group_of(s)];
        // x <= sum / count, kept in integers.
        if (cfg.enable_plans_leq_avg) out[i].plans_ok = s.num_plans * g.count <= g.plans;
        if (cfg.enable_frontier_leq_avg) out[i].frontier_ok = s.num_frontier_nodes * g.count <= g.frontier;
        if (cfg.enable_distinct_plans) {
            std::size_t count = cfg.count_raw_plans ? s.num_plans : s.num_distinct_goals;
            out[i].distinct_ok = count < cfg.distinct_plans_max;
        }
    }
    return out;
}

/// Keeps the candidates passing every enabled filter, in input order. If none
/// passes and retention is on, the most preferred candidate is kept alone.
inline std::vector<Explanation> apply_filters(const std::vector<Explanation>& candidates, const FilterConfig& cfg) {
    if (candidates.empty()) return {};
    auto verdicts = filter_verdicts(candidates, cfg);
    std::vector<Explanation> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (verdicts[i].passes()) kept.push_back(candidates[i]);
    if (kept.empty() && cfg.retain_best_when_empty)
        kept.push_back(*std::min_element(candidates.begin(), candidates.end(), preferred));
    return kept;
}

struct FilterReport {
    std::size_t plans_leq_avg = 0;
    std::size_t frontier_leq_avg = 0;
    std::size_t distinct_plans = 0;
    std::size_t total_removed = 0;

    bool operator==(const FilterReport&) const = default;
};

/// How many candidates each filter would remove on its own (plus the combined count).
inline FilterReport filter_report(const std::vector<Explanation>& candidates, const FilterConfig& cfg) {
    FilterReport r;
    for (const auto& v : filter_verdicts(candidates, cfg)) {
        r.plans_leq_avg += !v.plans_ok;
        r.frontier_leq_avg += !v.frontier_ok;
        r.distinct_plans += !v.distinct_ok;
        r.total_removed += !v.passes();
    }
    return r;
}

}  // namespace planrec
