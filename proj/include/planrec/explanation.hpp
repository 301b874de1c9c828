#pragma once

// Plan trees, explanations and the structural predicates over them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "planrec/errors.hpp"
#include "planrec/library.hpp"

namespace planrec {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

/// `expanded` marks inner nodes; the other three are leaf states.
enum class NodeStatus { expanded, observed, frontier, pending };

inline const char* to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::expanded: return "expanded";
        case NodeStatus::observed: return "observed";
        case NodeStatus::frontier: return "frontier";
        case NodeStatus::pending: return "pending";
    }
    return "?";
}

inline std::optional<NodeStatus> status_from_string(std::string_view s) {
    if (s == "expanded") return NodeStatus::expanded;
    if (s == "observed") return NodeStatus::observed;
    if (s == "frontier") return NodeStatus::frontier;
    if (s == "pending") return NodeStatus::pending;
    return std::nullopt;
}

struct PlanNode {
    SymbolId label = 0;
    std::vector<NodeId> children;
    std::optional<RuleId> rule;
    NodeStatus status = NodeStatus::frontier;
    std::optional<std::size_t> obs;
    NodeId parent = kNoParent;
    std::size_t position = 0;  // index among the parent's children

    bool is_leaf() const { return children.empty(); }
    bool operator==(const PlanNode&) const = default;
};

/// A goal decomposed by rules. Node ids are indices into `nodes()`; the root is node 0.
/// Non-terminal nodes are expanded only once some observation lies beneath them.
class PlanTree {
public:
    PlanTree() = default;

    PlanTree(const PlanLibrary& lib, SymbolId goal) {
        nodes_.push_back(PlanNode{goal, {}, std::nullopt, NodeStatus::frontier, std::nullopt, kNoParent, 0});
        refresh(lib);
    }

    /// Takes a node table as-is; nothing is checked (see describes()).
    explicit PlanTree(std::vector<PlanNode> nodes) : nodes_(std::move(nodes)) {}

    static constexpr NodeId root() { return 0; }
    SymbolId goal() const { return nodes_.at(0).label; }
    std::span<const PlanNode> nodes() const { return nodes_; }
    const PlanNode& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }

    std::size_t depth(NodeId id) const {
        std::size_t d = 0;
        for (NodeId v = id; nodes_.at(v).parent != kNoParent; v = nodes_[v].parent) ++d;
        return d;
    }

    /// Expands an unexpanded non-terminal leaf with `rule`; children start as leaves.
    /// Call refresh() once all edits are done.
    void expand(const PlanLibrary& lib, NodeId id, RuleId rule) {
        const Rule& r = lib.rule(rule);
        if (nodes_.at(id).rule || !nodes_[id].is_leaf() || r.head != nodes_[id].label)
            throw Error("cannot expand node " + std::to_string(id) + " with rule " + std::to_string(rule));
        nodes_[id].rule = rule;
        for (std::size_t pos = 0; pos < r.children.size(); ++pos) {
            NodeId child = static_cast<NodeId>(nodes_.size());
            nodes_.push_back(PlanNode{r.children[pos], {}, std::nullopt, NodeStatus::pending, std::nullopt, id, pos});
            nodes_[id].children.push_back(child);
        }
    }

    void observe(const PlanLibrary& lib, NodeId id, std::size_t obs_index) {
        PlanNode& n = nodes_.at(id);
        if (!lib.is_terminal(n.label) || n.obs)
            throw Error("node " + std::to_string(id) + " cannot take an observation");
        n.obs = obs_index;
    }

    /// Recomputes leaf statuses from ordering constraints and completion.
    void refresh(const PlanLibrary& lib) {
        std::vector<bool> complete(nodes_.size(), false);
        // Children always have larger ids than their parent.
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            const PlanNode& n = nodes_[i];
            if (n.is_leaf()) {
                complete[i] = n.obs.has_value();
            } else {
                complete[i] = std::all_of(n.children.begin(), n.children.end(),
                                          [&](NodeId c) { return complete[c]; });
            }
        }
        std::vector<bool> enabled(nodes_.size(), true);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            PlanNode& n = nodes_[i];
            if (n.parent != kNoParent) {
                const PlanNode& p = nodes_[n.parent];
                bool ok = enabled[n.parent];
                for (std::size_t pred : lib.predecessors(*p.rule, n.position))
                    ok = ok && complete[p.children[pred]];
                enabled[i] = ok;
            }
            if (!n.is_leaf())
                n.status = NodeStatus::expanded;
            else if (n.obs)
                n.status = NodeStatus::observed;
            else
                n.status = enabled[i] ? NodeStatus::frontier : NodeStatus::pending;
        }
    }

    /// Renumbers nodes in preorder so equal structures get equal tables.
    void renumber() {
        std::vector<PlanNode> out;
        out.reserve(nodes_.size());
        auto visit = [&](auto&& self, NodeId old, NodeId parent, std::size_t pos) -> void {
            NodeId id = static_cast<NodeId>(out.size());
            PlanNode n = nodes_[old];
            n.parent = parent;
            n.position = pos;
            n.children.clear();
            out.push_back(n);
            for (std::size_t k = 0; k < nodes_[old].children.size(); ++k) {
                NodeId child_id = static_cast<NodeId>(out.size());
                self(self, nodes_[old].children[k], id, k);
                out[id].children.push_back(child_id);
            }
        };
        visit(visit, 0, kNoParent, 0);
        nodes_ = std::move(out);
    }

    /// Copies `fragment` (rooted at its node 0) over the leaf `at`, which must carry the same label.
    void graft(NodeId at, const PlanTree& fragment) {
        const PlanNode& froot = fragment.nodes_.at(0);
        if (nodes_.at(at).label != froot.label || !nodes_[at].is_leaf() || nodes_[at].rule)
            throw Error("graft target does not match fragment");
        std::vector<NodeId> remap(fragment.nodes_.size());
        remap[0] = at;
        for (std::size_t i = 1; i < fragment.nodes_.size(); ++i) {
            remap[i] = static_cast<NodeId>(nodes_.size());
            nodes_.push_back(fragment.nodes_[i]);
        }
        PlanNode& target = nodes_[at];
        target.rule = froot.rule;
        target.obs = froot.obs;
        target.children.clear();
        for (NodeId c : froot.children) target.children.push_back(remap[c]);
        for (std::size_t i = 1; i < fragment.nodes_.size(); ++i) {
            PlanNode& n = nodes_[remap[i]];
            n.parent = remap[fragment.nodes_[i].parent];
            for (NodeId& c : n.children) c = remap[c];
        }
    }

    std::vector<NodeId> leaves() const {
        std::vector<NodeId> out;
        for (NodeId i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].is_leaf()) out.push_back(i);
        return out;
    }

    /// Canonical text form; independent of node numbering.
    std::string key(const PlanLibrary& lib) const {
        std::string out;
        auto visit = [&](auto&& self, NodeId id) -> void {
            const PlanNode& n = nodes_[id];
            out += lib.name(n.label);
            if (n.obs) out += "@" + std::to_string(*n.obs);
            if (n.rule) {
                out += "/" + std::to_string(*n.rule) + "(";
                for (std::size_t k = 0; k < n.children.size(); ++k) {
                    if (k) out += ",";
                    self(self, n.children[k]);
                }
                out += ")";
            }
        };
        if (!nodes_.empty()) visit(visit, 0);
        return out;
    }

    bool operator==(const PlanTree&) const = default;

private:
    std::vector<PlanNode> nodes_;
};

struct CoverRef {
    std::size_t plan = 0;
    NodeId node = 0;

    bool operator==(const CoverRef&) const = default;
};

struct Explanation {
    std::vector<PlanTree> plans;
    std::vector<std::size_t> exogenous;    // observation indices left out, ascending
    std::map<std::size_t, CoverRef> covered;  // observation index -> leaf
    std::string key;                       // canonical form, set by normalize()

    bool operator==(const Explanation& other) const { return key == other.key; }
};

/// Puts an explanation in canonical form: preorder node ids, refreshed statuses,
/// plans sorted by their key, rebuilt coverage map and cached key.
inline void normalize(Explanation& exp, const PlanLibrary& lib) {
    std::vector<std::pair<std::string, PlanTree>> keyed;
    keyed.reserve(exp.plans.size());
    for (PlanTree& p : exp.plans) {
        p.renumber();
        p.refresh(lib);
        keyed.emplace_back(p.key(lib), std::move(p));
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    exp.plans.clear();
    exp.covered.clear();
    exp.key.clear();
    for (auto& [k, p] : keyed) {
        for (NodeId id = 0; id < p.size(); ++id)
            if (p.node(id).obs) exp.covered[*p.node(id).obs] = CoverRef{exp.plans.size(), id};
        if (!exp.key.empty()) exp.key += ";";
        exp.key += k;
        exp.plans.push_back(std::move(p));
    }
    std::sort(exp.exogenous.begin(), exp.exogenous.end());
    exp.key += "|x";
    for (std::size_t x : exp.exogenous) exp.key += ":" + std::to_string(x);
}

struct Observation {
    SymbolId action = 0;
    std::size_t source = 0;  // index of the raw entry this came from

    bool operator==(const Observation&) const = default;
};

struct ObservationSequence {
    std::vector<Observation> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    const Observation& operator[](std::size_t i) const { return items[i]; }
    bool operator==(const ObservationSequence&) const = default;

    static ObservationSequence from_names(const PlanLibrary& lib, const std::vector<std::string>& names) {
        ObservationSequence seq;
        for (std::size_t i = 0; i < names.size(); ++i) seq.items.push_back({lib.terminal_id(names[i]), i});
        return seq;
    }
};

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

/// Every leaf is an observed terminal.
inline bool is_complete(const PlanTree& plan) {
    if (plan.size() == 0) return false;
    for (const PlanNode& n : plan.nodes())
        if (n.is_leaf() && !n.obs) return false;
    return true;
}

/// Terminals that may be observed next for this plan. Unexpanded non-terminal
/// frontier leaves contribute the terminals they can begin with.
inline std::set<SymbolId> frontier(const PlanTree& plan, const PlanLibrary& lib, std::size_t max_depth) {
    std::set<SymbolId> out;
    for (NodeId id = 0; id < plan.size(); ++id) {
        const PlanNode& n = plan.node(id);
        if (!n.is_leaf() || n.status != NodeStatus::frontier) continue;
        if (lib.is_terminal(n.label)) {
            out.insert(n.label);
        } else {
            std::size_t d = plan.depth(id);
            if (d >= max_depth) continue;
            auto firsts = lib.first_terminals(n.label, max_depth - d);
            out.insert(firsts.begin(), firsts.end());
        }
    }
    return out;
}

/// Lists every way `exp` fails to describe `obs`; empty means it does.
/// Recomputes everything from the node tables and ignores the cached key.
inline std::vector<std::string> describe_violations(const Explanation& exp, const ObservationSequence& obs,
                                                    const PlanLibrary& lib) {
    std::vector<std::string> v;
    const std::size_t n_obs = obs.size();
    std::vector<int> uses(n_obs, 0);
    std::map<std::size_t, CoverRef> seen_cover;

    for (std::size_t pi = 0; pi < exp.plans.size(); ++pi) {
        const PlanTree& plan = exp.plans[pi];
        const std::string where = "plan " + std::to_string(pi);
        const auto nodes = plan.nodes();
        if (nodes.empty()) {
            v.push_back(where + ": empty node table");
            continue;
        }
        if (nodes[0].parent != kNoParent) v.push_back(where + ": root has a parent");
        if (nodes[0].label >= lib.symbol_count() || !lib.is_goal(nodes[0].label)) {
            v.push_back(where + ": root is not a goal");
            continue;
        }

        // Reachability: every node exactly once from the root.
        std::vector<int> visits(nodes.size(), 0);
        std::vector<NodeId> order;
        std::vector<NodeId> stack{0};
        bool shape_ok = true;
        while (!stack.empty()) {
            NodeId id = stack.back();
            stack.pop_back();
            if (id >= nodes.size()) {
                v.push_back(where + ": dangling child id");
                shape_ok = false;
                continue;
            }
            if (++visits[id] > 1) {
                v.push_back(where + ": node " + std::to_string(id) + " reached twice");
                shape_ok = false;
                continue;
            }
            order.push_back(id);
            for (std::size_t k = 0; k < nodes[id].children.size(); ++k) {
                NodeId c = nodes[id].children[k];
                if (c < nodes.size() && (nodes[c].parent != id || nodes[c].position != k)) {
                    v.push_back(where + ": parent link of node " + std::to_string(c) + " is wrong");
                    shape_ok = false;
                }
                stack.push_back(c);
            }
        }
        if (std::count(visits.begin(), visits.end(), 0) > 0) {
            v.push_back(where + ": unreachable nodes");
            shape_ok = false;
        }
        if (!shape_ok) continue;

        for (NodeId id : order) {
            const PlanNode& n = nodes[id];
            const std::string at = where + " node " + std::to_string(id);
            if (n.label >= lib.symbol_count()) {
                v.push_back(at + ": unknown label");
                shape_ok = false;
                continue;
            }
            const bool terminal = lib.is_terminal(n.label);
            if (n.rule) {
                if (terminal || *n.rule >= lib.rules().size()) {
                    v.push_back(at + ": bad rule reference");
                    shape_ok = false;
                    continue;
                }
                const Rule& r = lib.rule(*n.rule);
                if (r.head != n.label) v.push_back(at + ": rule head differs from label");
                if (r.children.size() != n.children.size()) {
                    v.push_back(at + ": children do not match rule");
                    shape_ok = false;
                    continue;
                }
                for (std::size_t k = 0; k < r.children.size(); ++k)
                    if (nodes[n.children[k]].label != r.children[k]) {
                        v.push_back(at + ": child " + std::to_string(k) + " does not match rule");
                        shape_ok = false;
                    }
            } else if (!n.children.empty()) {
                v.push_back(at + ": children without a rule");
                shape_ok = false;
            }
            if (n.obs) {
                if (!terminal || !n.children.empty()) {
                    v.push_back(at + ": observation on a non-terminal");
                } else if (*n.obs >= n_obs) {
                    v.push_back(at + ": observation index out of range");
                } else {
                    if (obs[*n.obs].action != n.label) v.push_back(at + ": label differs from observation");
                    ++uses[*n.obs];
                    seen_cover[*n.obs] = CoverRef{pi, id};
                }
            }
        }
        if (!shape_ok) continue;

        // Completion and observation span per subtree, bottom-up over the traversal order.
        std::vector<bool> complete(nodes.size(), false);
        std::vector<std::optional<std::size_t>> lo(nodes.size()), hi(nodes.size());
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const PlanNode& n = nodes[*it];
            if (n.children.empty()) {
                complete[*it] = n.obs.has_value();
                lo[*it] = hi[*it] = n.obs;
                continue;
            }
            bool all = true;
            for (NodeId c : n.children) {
                all = all && complete[c];
                if (lo[c] && (!lo[*it] || *lo[c] < *lo[*it])) lo[*it] = lo[c];
                if (hi[c] && (!hi[*it] || *hi[c] > *hi[*it])) hi[*it] = hi[c];
            }
            complete[*it] = all;
        }

        std::vector<bool> enabled(nodes.size(), false);
        for (NodeId id : order) {
            const PlanNode& n = nodes[id];
            if (id == 0) enabled[id] = true;
            if (!n.rule) continue;
            const Rule& r = lib.rule(*n.rule);
            for (std::size_t j = 0; j < n.children.size(); ++j) {
                NodeId cj = n.children[j];
                bool ok = enabled[id];
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    if (i == j) continue;
                    // Closed precedence: i before j directly or through a chain.
                    std::vector<bool> reach(n.children.size(), false);
                    std::vector<std::size_t> work{i};
                    while (!work.empty()) {
                        std::size_t a = work.back();
                        work.pop_back();
                        for (const auto& p : r.ordering)
                            if (p.before == a && !reach[p.after]) {
                                reach[p.after] = true;
                                work.push_back(p.after);
                            }
                    }
                    if (!reach[j]) continue;
                    NodeId ci = n.children[i];
                    ok = ok && complete[ci];
                    if (lo[cj]) {
                        if (!complete[ci])
                            v.push_back(where + ": child " + std::to_string(j) + " of node " + std::to_string(id) +
                                        " started before its predecessor " + std::to_string(i) + " finished");
                        else if (*hi[ci] >= *lo[cj])
                            v.push_back(where + ": ordering " + std::to_string(i) + "<" + std::to_string(j) +
                                        " of node " + std::to_string(id) + " violated by observation order");
                    }
                }
                enabled[cj] = ok;
            }
        }

        for (NodeId id : order) {
            const PlanNode& n = nodes[id];
            NodeStatus expect = !n.children.empty() ? NodeStatus::expanded
                                : n.obs         ? NodeStatus::observed
                                : enabled[id]   ? NodeStatus::frontier
                                                : NodeStatus::pending;
            if (n.status != expect)
                v.push_back(where + " node " + std::to_string(id) + ": status " + to_string(n.status) +
                            " should be " + to_string(expect));
        }
    }

    std::set<std::size_t> exo;
    for (std::size_t x : exp.exogenous) {
        if (x >= n_obs) {
            v.push_back("exogenous index " + std::to_string(x) + " out of range");
            continue;
        }
        if (!exo.insert(x).second) v.push_back("exogenous index " + std::to_string(x) + " repeated");
    }
    for (std::size_t i = 0; i < n_obs; ++i) {
        if (uses[i] > 1) v.push_back("observation " + std::to_string(i) + " covered by more than one leaf");
        if (uses[i] > 0 && exo.count(i)) v.push_back("observation " + std::to_string(i) + " both covered and exogenous");
        if (uses[i] == 0 && !exo.count(i)) v.push_back("observation " + std::to_string(i) + " not described");
    }
    if (seen_cover != exp.covered) v.push_back("coverage map disagrees with plan leaves");
    return v;
}

/// Whether the plans jointly and exclusively describe every non-exogenous observation.
inline bool describes(const Explanation& exp, const ObservationSequence& obs, const PlanLibrary& lib) {
    return describe_violations(exp, obs, lib).empty();
}

struct ExplanationStats {
    std::size_t num_plans = 0;
    std::size_t num_frontier_nodes = 0;
    std::size_t num_distinct_goals = 0;
    std::size_t num_exogenous = 0;
    bool has_full_plan = false;
    bool no_open = true;

    bool operator==(const ExplanationStats&) const = default;
};

inline ExplanationStats explanation_stats(const Explanation& exp) {
    ExplanationStats s;
    s.num_plans = exp.plans.size();
    s.num_exogenous = exp.exogenous.size();
    std::set<SymbolId> goals;
    for (const PlanTree& p : exp.plans) {
        goals.insert(p.goal());
        for (const PlanNode& n : p.nodes())
            if (n.is_leaf() && n.status == NodeStatus::frontier) ++s.num_frontier_nodes;
        bool done = is_complete(p);
        s.has_full_plan = s.has_full_plan || done;
        s.no_open = s.no_open && done;
    }
    s.num_distinct_goals = goals.size();
    s.no_open = s.no_open && s.num_frontier_nodes == 0;
    return s;
}

/// Preference order: fewer exogenous marks, then fewer plans, then fewer open
/// frontier leaves, then canonical key.
inline bool preferred(const Explanation& a, const Explanation& b) {
    auto sa = explanation_stats(a);
    auto sb = explanation_stats(b);
    return std::tie(sa.num_exogenous, sa.num_plans, sa.num_frontier_nodes, a.key) <
           std::tie(sb.num_exogenous, sb.num_plans, sb.num_frontier_nodes, b.key);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const PlanTree& plan, const PlanLibrary& lib) {
    using nlohmann::json;
    json jp;
    jp["goal"] = lib.name(plan.goal());
    jp["root"] = PlanTree::root();
    jp["nodes"] = json::array();
    for (NodeId id = 0; id < plan.size(); ++id) {
        const PlanNode& n = plan.node(id);
        json jn;
        jn["id"] = id;
        jn["label"] = lib.name(n.label);
        jn["status"] = to_string(n.status);
        if (n.rule) jn["rule"] = *n.rule;
        if (!n.children.empty()) jn["children"] = n.children;
        if (n.obs) jn["obs"] = *n.obs;
        jp["nodes"].push_back(jn);
    }
    return jp;
}

inline nlohmann::json explanation_to_json(const Explanation& exp, const PlanLibrary& lib) {
    using nlohmann::json;
    json j;
    j["plans"] = json::array();
    for (const PlanTree& p : exp.plans) j["plans"].push_back(plan_to_json(p, lib));
    j["exogenous"] = exp.exogenous;
    j["covered"] = json::array();
    for (const auto& [o, ref] : exp.covered) j["covered"].push_back({{"obs", o}, {"plan", ref.plan}, {"node", ref.node}});
    auto s = explanation_stats(exp);
    j["stats"] = {{"num_plans", s.num_plans},
                  {"num_frontier_nodes", s.num_frontier_nodes},
                  {"num_distinct_goals", s.num_distinct_goals},
                  {"num_exogenous", s.num_exogenous},
                  {"has_full_plan", s.has_full_plan},
                  {"no_open", s.no_open}};
    return j;
}

/// Reads an explanation back. Structure is taken verbatim (statuses included) so
/// that describes() can judge it; only names and field types are checked here.
inline Explanation explanation_from_json(const nlohmann::json& j, const PlanLibrary& lib) {
    Explanation exp;
    try {
        for (const auto& jp : j.at("plans")) {
            const auto& jnodes = jp.at("nodes");
            std::vector<PlanNode> nodes(jnodes.size());
            for (const auto& jn : jnodes) {
                NodeId id = jn.at("id").get<NodeId>();
                if (id >= nodes.size()) throw IoError("node id out of range");
                PlanNode& n = nodes[id];
                n.label = lib.id_of(jn.at("label").get<std::string>());
                auto st = status_from_string(jn.at("status").get<std::string>());
                if (!st) throw IoError("unknown node status");
                n.status = *st;
                if (jn.contains("rule")) n.rule = jn.at("rule").get<RuleId>();
                if (jn.contains("children")) n.children = jn.at("children").get<std::vector<NodeId>>();
                if (jn.contains("obs")) n.obs = jn.at("obs").get<std::size_t>();
            }
            for (NodeId id = 0; id < nodes.size(); ++id)
                for (std::size_t k = 0; k < nodes[id].children.size(); ++k) {
                    NodeId c = nodes[id].children[k];
                    if (c >= nodes.size()) throw IoError("child id out of range");
                    nodes[c].parent = id;
                    nodes[c].position = k;
                }
            exp.plans.emplace_back(std::move(nodes));
        }
        exp.exogenous = j.at("exogenous").get<std::vector<std::size_t>>();
        for (const auto& jc : j.at("covered"))
            exp.covered[jc.at("obs").get<std::size_t>()] =
                CoverRef{jc.at("plan").get<std::size_t>(), jc.at("node").get<NodeId>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed explanation document: ") + e.what());
    }
    std::string key;
    for (const PlanTree& p : exp.plans) {
        if (!key.empty()) key += ";";
        key += p.key(lib);
    }
    key += "|x";
    for (std::size_t x : exp.exogenous) key += ":" + std::to_string(x);
    exp.key = key;
    return exp;
}

/// Indented text rendering of one explanation.
inline std::string render_text(const Explanation& exp, const PlanLibrary& lib, std::size_t max_depth) {
    std::ostringstream out;
    for (const PlanTree& p : exp.plans) {
        auto visit = [&](auto&& self, NodeId id, int indent) -> void {
            const PlanNode& n = p.node(id);
            out << std::string(static_cast<std::size_t>(indent) * 2, ' ') << lib.name(n.label);
            if (n.rule) out << "  [rule " << *n.rule << "]";
            if (n.obs) out << "  @" << *n.obs;
            if (n.status == NodeStatus::frontier) out << "  (frontier)";
            if (n.status == NodeStatus::pending) out << "  (pending)";
            out << '\n';
            for (NodeId c : n.children) self(self, c, indent + 1);
        };
        visit(visit, 0, 2);
        auto next = frontier(p, lib, max_depth);
        if (!next.empty()) {
            out << "      next:";
            for (SymbolId t : next) out << ' ' << lib.name(t);
            out << '\n';
        }
    }
    if (!exp.exogenous.empty()) {
        out << "    exogenous:";
        for (std::size_t x : exp.exogenous) out << " @" << x;
        out << '\n';
    }
    return out.str();
}

/// Graphviz rendering; frontier leaves are green and pending leaves blue.
inline std::string render_dot(const std::vector<Explanation>& exps, const PlanLibrary& lib,
                              const ObservationSequence& obs) {
    std::ostringstream out;
    out << "digraph explanations {\n  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t e = 0; e < exps.size(); ++e) {
        out << "  subgraph cluster_e" << e << " {\n    label=\"explanation " << e + 1 << "\";\n";
        for (std::size_t pi = 0; pi < exps[e].plans.size(); ++pi) {
            const PlanTree& p = exps[e].plans[pi];
            auto name = [&](NodeId id) { return "e" + std::to_string(e) + "p" + std::to_string(pi) + "n" + std::to_string(id); };
            for (NodeId id = 0; id < p.size(); ++id) {
                const PlanNode& n = p.node(id);
                out << "    " << name(id) << " [label=\"" << lib.name(n.label);
                if (n.obs) out << " (" << *n.obs << ")";
                out << "\"";
                if (!lib.is_terminal(n.label)) out << ", shape=ellipse";
                if (n.status == NodeStatus::frontier) out << ", style=filled, fillcolor=green";
                if (n.status == NodeStatus::pending) out << ", style=filled, fillcolor=blue, fontcolor=white";
                out << "];\n";
                for (NodeId c : n.children) out << "    " << name(id) << " -> " << name(c) << ";\n";
            }
        }
        for (std::size_t x : exps[e].exogenous) {
            out << "    e" << e << "x" << x << " [label=\"" << (x < obs.size() ? lib.name(obs[x].action) : "?")
                << " (" << x << ")\", shape=plaintext, fontcolor=gray];\n";
        }
        out << "  }\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace planrec
