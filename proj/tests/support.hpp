#pragma once

// Helpers shared by the test binaries: fixtures, random libraries and the
// soundness check every emitted explanation goes through.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "planrec/explanation.hpp"
#include "planrec/library.hpp"
#include "planrec/preprocess.hpp"
#include "planrec/recognizer.hpp"

namespace planrec::test {

inline std::string data_path(const std::string& name) { return std::string(PLANREC_DATA_DIR) + "/" + name; }

inline PlanLibrary example_library() { return load_library(read_file(data_path("example_library.json"))); }

inline LandmarkMapping example_mapping(const PlanLibrary& lib) {
    return parse_mapping(read_file(data_path("example_mapping.json")), lib);
}

inline RuleId rule_of(const PlanLibrary& lib, const std::string& head, std::size_t k) {
    return lib.rules_for(lib.id_of(head))[k];
}

// Goal expanded with `rule`, then leaves 1..n observed as given (nullopt = unobserved).
inline PlanTree make_plan(const PlanLibrary& lib, const std::string& goal, std::size_t rule,
                          std::vector<std::optional<std::size_t>> obs) {
    PlanTree p(lib, lib.id_of(goal));
    p.expand(lib, 0, rule_of(lib, goal, rule));
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (obs[i]) p.observe(lib, static_cast<NodeId>(i + 1), *obs[i]);
    p.refresh(lib);
    return p;
}

// The three-plan explanation of [home, login, addName, login, addCredit].
inline Explanation three_plan_explanation(const PlanLibrary& lib) {
    Explanation e;
    e.plans.push_back(make_plan(lib, "AddAccount", 0, {1, 2, 4}));
    e.plans.push_back(make_plan(lib, "AddAccount", 0, {3}));
    e.plans.push_back(make_plan(lib, "Buy", 1, {0}));
    normalize(e, lib);
    return e;
}

inline ObservationSequence worked_example_obs(const PlanLibrary& lib) {
    return ObservationSequence::from_names(lib, {"home", "login", "addName", "login", "addCredit"});
}

inline std::set<std::string> keys(const std::vector<Explanation>& xs) {
    std::set<std::string> out;
    for (const auto& e : xs) out.insert(e.key);
    return out;
}

/// Violations across a whole set, prefixed by the explanation's position.
inline std::vector<std::string> unsound(const std::vector<Explanation>& xs, const ObservationSequence& obs,
                                        const PlanLibrary& lib) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (const auto& v : describe_violations(xs[i], obs, lib)) out.push_back("#" + std::to_string(i) + ": " + v);
    return out;
}

struct RandomLibraryOptions {
    std::size_t max_symbols = 12;
    bool allow_recursion = false;
};

/// A valid library with at most `max_symbols` symbols. Non-terminal k only uses
/// non-terminals after it unless recursion is allowed, in which case the last
/// rule of the first non-terminal may refer back to itself.
inline PlanLibrary random_library(std::mt19937_64& rng, RandomLibraryOptions opt = {}) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::size_t n_nt = pick(1, std::min<std::size_t>(4, opt.max_symbols - 2));
    std::size_t n_t = pick(2, std::min<std::size_t>(6, opt.max_symbols - n_nt));
    LibraryDraft d;
    for (std::size_t i = 0; i < n_t; ++i) d.terminals.push_back("t" + std::to_string(i));
    for (std::size_t i = 0; i < n_nt; ++i) d.non_terminals.push_back("N" + std::to_string(i));
    std::size_t n_goals = pick(1, std::min<std::size_t>(2, n_nt));
    for (std::size_t i = 0; i < n_goals; ++i) d.goals.push_back(d.non_terminals[i]);

    for (std::size_t k = 0; k < n_nt; ++k) {
        std::size_t n_rules = pick(1, 2);
        for (std::size_t r = 0; r < n_rules; ++r) {
            RuleDraft rule;
            rule.head = d.non_terminals[k];
            std::size_t n_children = pick(1, 3);
            bool has_terminal = false;
            for (std::size_t c = 0; c < n_children; ++c) {
                std::size_t later = n_nt - k - 1;
                if (later > 0 && pick(0, 3) == 0) {
                    rule.children.push_back(d.non_terminals[k + 1 + pick(0, later - 1)]);
                } else {
                    rule.children.push_back(d.terminals[pick(0, n_t - 1)]);
                    has_terminal = true;
                }
            }
            if (opt.allow_recursion && k == 0 && r + 1 == n_rules && r > 0 && has_terminal)
                rule.children.push_back(d.non_terminals[0]);
            // Orderings consistent with a random permutation of the positions.
            std::vector<std::size_t> perm(rule.children.size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t a = 0; a < perm.size(); ++a)
                for (std::size_t b = a + 1; b < perm.size(); ++b)
                    if (pick(0, 2) == 0) rule.ordering.push_back({OrderRef{perm[a]}, OrderRef{perm[b]}});
            d.rules.push_back(std::move(rule));
        }
    }
    auto res = build_library(d);
    if (!res.ok()) throw LibraryError(res.report);
    return std::move(*res.library);
}

inline ObservationSequence random_sequence(const PlanLibrary& lib, std::mt19937_64& rng, std::size_t max_len) {
    ObservationSequence seq;
    std::size_t len = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
    auto terms = lib.terminals();
    for (std::size_t i = 0; i < len; ++i)
        seq.items.push_back({terms[std::uniform_int_distribution<std::size_t>(0, terms.size() - 1)(rng)], i});
    return seq;
}

/// Mostly terminals that occur directly in goal rules, so sequences tend to be
/// explainable; one in four is fully random.
inline ObservationSequence plausible_sequence(const PlanLibrary& lib, std::mt19937_64& rng, std::size_t max_len) {
    std::vector<SymbolId> pool;
    for (SymbolId g : lib.goals())
        for (RuleId r : lib.rules_for(g))
            for (SymbolId c : lib.rule(r).children)
                if (lib.is_terminal(c)) pool.push_back(c);
    if (pool.empty() || std::uniform_int_distribution<int>(0, 3)(rng) == 0) return random_sequence(lib, rng, max_len);
    ObservationSequence seq;
    std::size_t len = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
    for (std::size_t i = 0; i < len; ++i)
        seq.items.push_back({pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)], i});
    return seq;
}

}  // namespace planrec::test
