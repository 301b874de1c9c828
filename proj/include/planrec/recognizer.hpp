#pragma once

// Incremental explanation maintenance. Each observation either extends an
// existing plan at an enabled leaf, starts a new plan for some goal, or is
// set aside as exogenous. With filters off this is the unpruned baseline.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"
#include "planrec/filters.hpp"
#include "planrec/library.hpp"

namespace planrec {

enum class Mode { cradle, phatt };

inline const char* to_string(Mode m) { return m == Mode::cradle ? "CRADLE" : "PHATT"; }

struct RecognizerParams {
    std::size_t max_depth = 10;
    std::size_t max_exogenous = 2;
    bool filters_enabled = true;
    FilterConfig filter;
    std::size_t max_explanations = 10000;

    bool operator==(const RecognizerParams&) const = default;

    static RecognizerParams for_mode(Mode mode) {
        RecognizerParams p;
        p.filters_enabled = mode == Mode::cradle;
        return p;
    }

    void validate() const {
        if (max_depth == 0) throw ConfigError("max_depth must be positive");
        if (max_explanations == 0) throw ConfigError("max_explanations must be positive");
        filter.validate();
    }
};

struct RecognizerState {
    std::shared_ptr<const PlanLibrary> library;
    RecognizerParams params;
    ObservationSequence obs_so_far;
    std::vector<Explanation> candidates;

    bool operator==(const RecognizerState& o) const {
        return library == o.library && params == o.params && obs_so_far == o.obs_so_far &&
               candidates == o.candidates;
    }
};

namespace detail {

/// All subtrees rooted at `symbol` (placed at `depth`) that put observation `obs_index`
/// of terminal `t` on an enabled leaf, expanding only along that path.
inline std::vector<PlanTree> attach_fragments(const PlanLibrary& lib, SymbolId symbol, std::size_t depth,
                                              std::size_t max_depth, SymbolId t, std::size_t obs_index) {
    std::vector<PlanTree> out;
    if (lib.is_terminal(symbol)) {
        if (symbol != t) return out;
        PlanTree leaf{std::vector<PlanNode>{PlanNode{symbol, {}, std::nullopt, NodeStatus::observed, obs_index, kNoParent, 0}}};
        out.push_back(std::move(leaf));
        return out;
    }
    if (depth >= max_depth) return out;
    for (RuleId r : lib.rules_for(symbol)) {
        const Rule& rule = lib.rule(r);
        for (std::size_t pos = 0; pos < rule.children.size(); ++pos) {
            if (!lib.predecessors(r, pos).empty()) continue;
            for (const PlanTree& sub : attach_fragments(lib, rule.children[pos], depth + 1, max_depth, t, obs_index)) {
                PlanTree frag{std::vector<PlanNode>{PlanNode{symbol, {}, std::nullopt, NodeStatus::frontier, std::nullopt, kNoParent, 0}}};
                frag.expand(lib, 0, r);
                frag.graft(frag.node(0).children[pos], sub);
                out.push_back(std::move(frag));
            }
        }
    }
    return out;
}

inline void sort_by_preference(std::vector<Explanation>& xs) {
    std::vector<std::pair<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t>> order;
    order.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto s = explanation_stats(xs[i]);
        order.push_back({{s.num_exogenous, s.num_plans, s.num_frontier_nodes}, i});
    }
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return xs[a.second].key < xs[b.second].key;
    });
    std::vector<Explanation> sorted;
    sorted.reserve(xs.size());
    for (const auto& o : order) sorted.push_back(std::move(xs[o.second]));
    xs = std::move(sorted);
}

}  // namespace detail

/// Every distinct one-step extension of `exp` by observation `obs_index` (terminal `t`), unfiltered.
inline std::vector<Explanation> extend(const Explanation& exp, const PlanLibrary& lib, const RecognizerParams& params,
                                       SymbolId t, std::size_t obs_index) {
    std::vector<Explanation> out;
    auto emit = [&](Explanation e) {
        normalize(e, lib);
        out.push_back(std::move(e));
    };

    // (a) continue an existing plan at an enabled leaf
    for (std::size_t pi = 0; pi < exp.plans.size(); ++pi) {
        const PlanTree& plan = exp.plans[pi];
        for (NodeId id = 0; id < plan.size(); ++id) {
            const PlanNode& n = plan.node(id);
            if (!n.is_leaf() || n.status != NodeStatus::frontier) continue;
            if (lib.is_terminal(n.label)) {
                if (n.label != t) continue;
                Explanation e = exp;
                e.plans[pi].observe(lib, id, obs_index);
                emit(std::move(e));
            } else {
                for (const PlanTree& frag :
                     detail::attach_fragments(lib, n.label, plan.depth(id), params.max_depth, t, obs_index)) {
                    Explanation e = exp;
                    e.plans[pi].graft(id, frag);
                    emit(std::move(e));
                }
            }
        }
    }
    // (b) start a new plan
    for (SymbolId g : lib.goals()) {
        for (PlanTree& frag : detail::attach_fragments(lib, g, 0, params.max_depth, t, obs_index)) {
            Explanation e = exp;
            e.plans.push_back(std::move(frag));
            emit(std::move(e));
        }
    }
    // (c) set the observation aside
    if (exp.exogenous.size() < params.max_exogenous) {
        Explanation e = exp;
        e.exogenous.push_back(obs_index);
        emit(std::move(e));
    }
    return out;
}

inline RecognizerState init(std::shared_ptr<const PlanLibrary> lib, const RecognizerParams& params) {
    if (!lib) throw ConfigError("no plan library");
    params.validate();
    RecognizerState s;
    s.library = std::move(lib);
    s.params = params;
    Explanation empty;
    normalize(empty, *s.library);
    s.candidates.push_back(std::move(empty));
    return s;
}

inline RecognizerState init(const PlanLibrary& lib, const RecognizerParams& params) {
    return init(std::make_shared<const PlanLibrary>(lib), params);
}

/// Advances the state by one observation. On failure the input state is untouched.
inline RecognizerState observe(const RecognizerState& state, SymbolId t, std::size_t source) {
    const PlanLibrary& lib = *state.library;
    if (t >= lib.symbol_count() || !lib.is_terminal(t))
        throw ConfigError("observation is not a terminal of the library");
    const std::size_t index = state.obs_so_far.size();

    std::vector<Explanation> next;
    std::unordered_set<std::string> seen;
    for (const Explanation& c : state.candidates) {
        for (Explanation& e : extend(c, lib, state.params, t, index))
            if (seen.insert(e.key).second) next.push_back(std::move(e));
    }
    if (next.empty())
        throw RecognitionError(index, "unexplainable observation " + std::to_string(index) + " ('" + lib.name(t) + "')");

    if (state.params.filters_enabled && state.params.filter.apply_each_step) {
        next = apply_filters(next, state.params.filter);
        if (next.empty())
            throw RecognitionError(index, "no explanation of observation " + std::to_string(index) +
                                              " ('" + lib.name(t) + "') passes the filters");
    }
    detail::sort_by_preference(next);
    if (next.size() > state.params.max_explanations) next.resize(state.params.max_explanations);

    RecognizerState out;
    out.library = state.library;
    out.params = state.params;
    out.obs_so_far = state.obs_so_far;
    out.obs_so_far.items.push_back({t, source});
    out.candidates = std::move(next);
    return out;
}

inline RecognizerState observe(const RecognizerState& state, SymbolId t) {
    return observe(state, t, state.obs_so_far.size());
}

inline RecognizerState observe(const RecognizerState& state, std::string_view terminal_name) {
    return observe(state, state.library->terminal_id(terminal_name));
}

/// Final candidate list of a state, with the batch-only filter pass applied if configured.
inline std::vector<Explanation> finish(const RecognizerState& state) {
    std::vector<Explanation> out = state.candidates;
    if (state.params.filters_enabled && !state.params.filter.apply_each_step && !state.obs_so_far.empty()) {
        out = apply_filters(out, state.params.filter);
        detail::sort_by_preference(out);
    }
    return out;
}

inline RecognizerState fold(const PlanLibrary& lib, const ObservationSequence& obs, const RecognizerParams& params) {
    RecognizerState s = init(lib, params);
    for (const Observation& o : obs.items) s = observe(s, o.action, o.source);
    return s;
}

/// Batch form of observe(): explanations of the whole sequence, in preference order.
inline std::vector<Explanation> recognize(const PlanLibrary& lib, const ObservationSequence& obs,
                                          const RecognizerParams& params) {
    return finish(fold(lib, obs, params));
}

/// Next terminals over all candidates, with the number of candidates predicting each.
inline std::map<SymbolId, std::size_t> predict_next(const RecognizerState& state) {
    std::map<SymbolId, std::size_t> out;
    for (const Explanation& c : state.candidates) {
        std::set<SymbolId> here;
        for (const PlanTree& p : c.plans) {
            auto f = frontier(p, *state.library, state.params.max_depth);
            here.insert(f.begin(), f.end());
        }
        for (SymbolId t : here) ++out[t];
    }
    return out;
}

/// predict_next() sorted by support (descending), then by name.
inline std::vector<std::pair<std::string, std::size_t>> ranked_predictions(const RecognizerState& state) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& [t, n] : predict_next(state)) out.emplace_back(state.library->name(t), n);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

}  // namespace planrec
