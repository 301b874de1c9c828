#pragma once

// Exhaustive explanation enumerator. Shares no search code with the
// incremental recognizer: it assigns observations to plans and leaves
// wholesale, builds every tree shape that could hold them, and keeps the
// results the describes() predicate accepts. Only usable on tiny inputs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"
#include "planrec/library.hpp"
#include "planrec/recognizer.hpp"

namespace planrec {

inline constexpr std::size_t kOracleMaxObservations = 7;
inline constexpr std::size_t kOracleNodeBudget = 1'000'000;

namespace detail {

class TreeEnumerator {
public:
    TreeEnumerator(const PlanLibrary& lib, const ObservationSequence& obs, std::size_t max_depth, std::size_t budget)
        : lib_(lib), obs_(obs), max_depth_(max_depth), budget_(budget) {}

    /// Trees rooted at `symbol` whose observed leaves are exactly `mask`. Non-terminals
    /// with nothing beneath them stay unexpanded.
    const std::vector<PlanTree>& covering(SymbolId symbol, std::size_t depth, std::uint32_t mask) {
        auto key = std::make_tuple(symbol, depth, mask);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        std::vector<PlanTree> out;
        if (mask == 0) {
            out.push_back(leaf(symbol, std::nullopt));
        } else if (lib_.is_terminal(symbol)) {
            if ((mask & (mask - 1)) == 0) {
                std::size_t i = static_cast<std::size_t>(__builtin_ctz(mask));
                if (obs_[i].action == symbol) out.push_back(leaf(symbol, i));
            }
        } else if (depth < max_depth_) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < obs_.size(); ++i)
                if (mask & (1u << i)) members.push_back(i);
            for (RuleId r : lib_.rules_for(symbol)) expand_rule(symbol, r, depth, members, out);
        }
        return memo_.emplace(key, std::move(out)).first->second;
    }

private:
    PlanTree leaf(SymbolId symbol, std::optional<std::size_t> o) {
        charge(1);
        return PlanTree{std::vector<PlanNode>{PlanNode{symbol, {}, std::nullopt, NodeStatus::frontier, o, kNoParent, 0}}};
    }

    void charge(std::size_t nodes) {
        spent_ += nodes;
        if (spent_ > budget_) throw GuardExceeded("brute-force enumeration exceeded its node budget");
    }

    // Every map from `members` to child positions of rule `r`.
    void expand_rule(SymbolId symbol, RuleId r, std::size_t depth, const std::vector<std::size_t>& members,
                     std::vector<PlanTree>& out) {
        const Rule& rule = lib_.rule(r);
        const std::size_t k = rule.children.size();
        std::vector<std::size_t> slot(members.size(), 0);
        while (true) {
            std::vector<std::uint32_t> masks(k, 0);
            for (std::size_t m = 0; m < members.size(); ++m) masks[slot[m]] |= 1u << members[m];
            std::vector<const std::vector<PlanTree>*> options(k);
            bool viable = true;
            for (std::size_t c = 0; c < k && viable; ++c) {
                options[c] = &covering(rule.children[c], depth + 1, masks[c]);
                viable = !options[c]->empty();
            }
            if (viable) {
                std::vector<std::size_t> pick(k, 0);
                while (true) {
                    PlanTree t = leaf(symbol, std::nullopt);
                    t.expand(lib_, 0, r);
                    std::size_t added = 0;
                    for (std::size_t c = 0; c < k; ++c) {
                        const PlanTree& sub = (*options[c])[pick[c]];
                        t.graft(t.node(0).children[c], sub);
                        added += sub.size();
                    }
                    charge(added);
                    out.push_back(std::move(t));
                    std::size_t c = 0;
                    while (c < k && ++pick[c] == options[c]->size()) pick[c++] = 0;
                    if (c == k) break;
                }
            }
            std::size_t m = 0;
            while (m < members.size() && ++slot[m] == k) slot[m++] = 0;
            if (m == members.size()) break;
        }
    }

    const PlanLibrary& lib_;
    const ObservationSequence& obs_;
    std::size_t max_depth_;
    std::size_t budget_;
    std::size_t spent_ = 0;
    std::map<std::tuple<SymbolId, std::size_t, std::uint32_t>, std::vector<PlanTree>> memo_;
};

// Calls `fn(blocks)` for every partition of `items` into non-empty unordered blocks.
template <typename Fn>
void for_each_partition(const std::vector<std::size_t>& items, Fn&& fn) {
    const std::size_t n = items.size();
    if (n == 0) {
        fn(std::vector<std::uint32_t>{});
        return;
    }
    std::vector<std::size_t> label(n, 0);  // restricted growth string
    while (true) {
        std::size_t blocks = *std::max_element(label.begin(), label.end()) + 1;
        std::vector<std::uint32_t> masks(blocks, 0);
        for (std::size_t i = 0; i < n; ++i) masks[label[i]] |= 1u << items[i];
        fn(masks);
        // next restricted growth string
        std::size_t i = n - 1;
        while (i > 0) {
            std::size_t prefix_max = *std::max_element(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(i));
            if (label[i] <= prefix_max) {
                ++label[i];
                std::fill(label.begin() + static_cast<std::ptrdiff_t>(i) + 1, label.end(), 0);
                break;
            }
            --i;
        }
        if (i == 0) break;
    }
}

}  // namespace detail

/// Every explanation of `obs` within the depth and exogenous bounds of `params`;
/// filters and the explanation cap are ignored. Sorted in preference order.
inline std::vector<Explanation> brute_force_recognize(const PlanLibrary& lib, const ObservationSequence& obs,
                                                      const RecognizerParams& params,
                                                      std::size_t node_budget = kOracleNodeBudget) {
    if (obs.size() > kOracleMaxObservations)
        throw GuardExceeded("brute-force enumeration is limited to " + std::to_string(kOracleMaxObservations) +
                            " observations");
    const std::size_t n = obs.size();
    detail::TreeEnumerator trees(lib, obs, params.max_depth, node_budget);
    std::vector<Explanation> out;
    std::unordered_set<std::string> seen;

    for (std::uint32_t exo = 0; exo < (1u << n); ++exo) {
        if (static_cast<std::size_t>(__builtin_popcount(exo)) > params.max_exogenous) continue;
        std::vector<std::size_t> rest;
        std::vector<std::size_t> exo_list;
        for (std::size_t i = 0; i < n; ++i) (exo & (1u << i) ? exo_list : rest).push_back(i);

        detail::for_each_partition(rest, [&](const std::vector<std::uint32_t>& blocks) {
            std::vector<std::vector<const PlanTree*>> choices(blocks.size());
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                for (SymbolId g : lib.goals())
                    for (const PlanTree& t : trees.covering(g, 0, blocks[b])) choices[b].push_back(&t);
                if (choices[b].empty()) return;
            }
            std::vector<std::size_t> pick(blocks.size(), 0);
            while (true) {
                Explanation e;
                for (std::size_t b = 0; b < blocks.size(); ++b) e.plans.push_back(*choices[b][pick[b]]);
                e.exogenous = exo_list;
                normalize(e, lib);
                if (describes(e, obs, lib) && seen.insert(e.key).second) out.push_back(std::move(e));
                std::size_t b = 0;
                while (b < blocks.size() && ++pick[b] == choices[b].size()) pick[b++] = 0;
                if (b == blocks.size()) break;
            }
        });
    }
    detail::sort_by_preference(out);
    return out;
}

}  // namespace planrec
