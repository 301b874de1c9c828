#pragma once

// Plan library: terminals, non-terminals, goals and partially ordered
// decomposition rules. Built once, validated in full, then immutable.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "planrec/errors.hpp"

namespace planrec {

using SymbolId = std::uint32_t;
using RuleId = std::uint32_t;

enum class SymbolKind { terminal, non_terminal };

struct ActionSymbol {
    std::string name;
    SymbolKind kind = SymbolKind::terminal;

    bool operator==(const ActionSymbol&) const = default;
};

/// Child `before` must be finished before child `after` starts (positions are 0-based).
struct OrderingPair {
    std::size_t before = 0;
    std::size_t after = 0;

    auto operator<=>(const OrderingPair&) const = default;
};

struct Rule {
    SymbolId head = 0;
    std::vector<SymbolId> children;
    std::vector<OrderingPair> ordering;
};

struct Issue {
    std::string code;
    std::string message;
    std::string location;
};

struct ValidationReport {
    std::vector<Issue> errors;
    std::vector<Issue> warnings;

    bool ok() const { return errors.empty(); }

    bool has_error(std::string_view code) const {
        return std::any_of(errors.begin(), errors.end(),
                           [&](const Issue& i) { return i.code == code; });
    }

    void error(std::string code, std::string message, std::string location = {}) {
        errors.push_back({std::move(code), std::move(message), std::move(location)});
    }

    void warning(std::string code, std::string message, std::string location = {}) {
        warnings.push_back({std::move(code), std::move(message), std::move(location)});
    }

    std::string render() const {
        std::ostringstream out;
        auto emit = [&](const char* severity, const Issue& i) {
            out << severity << " [" << i.code << "]";
            if (!i.location.empty()) out << " at " << i.location;
            out << ": " << i.message << '\n';
        };
        for (const auto& i : errors) emit("error", i);
        for (const auto& i : warnings) emit("warning", i);
        return out.str();
    }
};

/// An ordering endpoint as written by a library author: a child position or a child name.
using OrderRef = std::variant<std::size_t, std::string>;

struct RuleDraft {
    std::string head;
    std::vector<std::string> children;
    std::vector<std::pair<OrderRef, OrderRef>> ordering;
};

/// Name-level description of a library, before validation.
struct LibraryDraft {
    std::vector<std::string> terminals;
    std::vector<std::string> non_terminals;  // optional; heads and goals are implied
    std::vector<std::string> goals;
    std::vector<RuleDraft> rules;
};

class PlanLibrary;

struct ParseResult;

inline ParseResult build_library(const LibraryDraft& draft);

inline std::set<SymbolId> detect_recursion(const PlanLibrary& lib);

class PlanLibrary {
public:
    std::size_t symbol_count() const { return symbols_.size(); }
    const ActionSymbol& symbol(SymbolId id) const { return symbols_.at(id); }
    const std::string& name(SymbolId id) const { return symbols_.at(id).name; }
    bool is_terminal(SymbolId id) const { return symbols_.at(id).kind == SymbolKind::terminal; }
    bool is_goal(SymbolId id) const { return std::binary_search(goal_set_.begin(), goal_set_.end(), id); }

    std::optional<SymbolId> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    SymbolId id_of(std::string_view name) const {
        auto id = find(name);
        if (!id) throw ConfigError("unknown action symbol '" + std::string(name) + "'");
        return *id;
    }

    SymbolId terminal_id(std::string_view name) const {
        SymbolId id = id_of(name);
        if (!is_terminal(id)) throw ConfigError("'" + std::string(name) + "' is not a terminal");
        return id;
    }

    std::span<const SymbolId> terminals() const { return terminals_; }
    std::span<const SymbolId> non_terminals() const { return non_terminals_; }
    std::span<const SymbolId> goals() const { return goals_; }
    std::span<const Rule> rules() const { return rules_; }
    const Rule& rule(RuleId id) const { return rules_.at(id); }
    std::span<const RuleId> rules_for(SymbolId head) const { return rules_by_head_.at(head); }

    /// Positions that must be finished before `position` may start (transitively closed).
    std::span<const std::size_t> predecessors(RuleId rule, std::size_t position) const {
        return predecessors_.at(rule).at(position);
    }

    bool precedes(RuleId rule, std::size_t before, std::size_t after) const {
        auto preds = predecessors(rule, after);
        return std::find(preds.begin(), preds.end(), before) != preds.end();
    }

    /// Minimum number of rule expansions needed to derive a complete tree; nullopt if underivable.
    std::optional<std::size_t> min_derivation_depth(SymbolId id) const { return min_depth_.at(id); }

    /// Terminals that can be the first observed action of `id` using at most `budget` expansions.
    std::set<SymbolId> first_terminals(SymbolId id, std::size_t budget) const {
        std::map<std::pair<SymbolId, std::size_t>, std::set<SymbolId>> memo;
        return first_terminals_impl(id, budget, memo);
    }

private:
    friend ParseResult build_library(const LibraryDraft& draft);

    std::set<SymbolId> first_terminals_impl(
        SymbolId id, std::size_t budget,
        std::map<std::pair<SymbolId, std::size_t>, std::set<SymbolId>>& memo) const {
        if (is_terminal(id)) return {id};
        if (budget == 0) return {};
        auto key = std::make_pair(id, budget);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        memo[key] = {};  // recursion guard; budget strictly decreases anyway
        std::set<SymbolId> out;
        for (RuleId r : rules_for(id)) {
            const Rule& rule = rules_[r];
            for (std::size_t pos = 0; pos < rule.children.size(); ++pos) {
                if (!predecessors(r, pos).empty()) continue;
                auto sub = first_terminals_impl(rule.children[pos], budget - 1, memo);
                out.insert(sub.begin(), sub.end());
            }
        }
        memo[key] = out;
        return out;
    }

    std::vector<ActionSymbol> symbols_;
    std::unordered_map<std::string, SymbolId> index_;
    std::vector<SymbolId> terminals_;
    std::vector<SymbolId> non_terminals_;
    std::vector<SymbolId> goals_;
    std::vector<SymbolId> goal_set_;
    std::vector<Rule> rules_;
    std::vector<std::vector<RuleId>> rules_by_head_;
    std::vector<std::vector<std::vector<std::size_t>>> predecessors_;
    std::vector<std::optional<std::size_t>> min_depth_;
};

struct ParseResult {
    std::optional<PlanLibrary> library;
    ValidationReport report;

    bool ok() const { return library.has_value(); }
};

namespace detail {

// Returns true if the precedence graph over `n` positions has a cycle.
inline bool has_cycle(std::size_t n, const std::vector<OrderingPair>& pairs) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& p : pairs) adj[p.before].push_back(p.after);
    std::vector<int> color(n, 0);
    auto visit = [&](auto&& self, std::size_t v) -> bool {
        color[v] = 1;
        for (std::size_t w : adj[v]) {
            if (color[w] == 1) return true;
            if (color[w] == 0 && self(self, w)) return true;
        }
        color[v] = 2;
        return false;
    };
    for (std::size_t v = 0; v < n; ++v)
        if (color[v] == 0 && visit(visit, v)) return true;
    return false;
}

inline std::vector<std::vector<std::size_t>> closed_predecessors(
    std::size_t n, const std::vector<OrderingPair>& pairs) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const auto& p : pairs) reach[p.before][p.after] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    std::vector<std::vector<std::size_t>> preds(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][j]) preds[j].push_back(i);
    return preds;
}

}  // namespace detail

inline ParseResult build_library(const LibraryDraft& draft) {
    ParseResult result;
    ValidationReport& report = result.report;
    PlanLibrary lib;

    auto add_symbol = [&](const std::string& name, SymbolKind kind) {
        SymbolId id = static_cast<SymbolId>(lib.symbols_.size());
        lib.symbols_.push_back({name, kind});
        lib.index_.emplace(name, id);
        (kind == SymbolKind::terminal ? lib.terminals_ : lib.non_terminals_).push_back(id);
        return id;
    };

    for (std::size_t i = 0; i < draft.terminals.size(); ++i) {
        const auto& name = draft.terminals[i];
        std::string loc = "terminals[" + std::to_string(i) + "]";
        if (name.empty()) {
            report.error("empty-name", "symbol name is empty", loc);
        } else if (lib.index_.count(name)) {
            report.error("duplicate-symbol", "terminal '" + name + "' declared twice", loc);
        } else {
            add_symbol(name, SymbolKind::terminal);
        }
    }

    // Non-terminals: explicit list, then goals, then rule heads.
    auto declare_nt = [&](const std::string& name, const std::string& loc, bool explicit_decl) {
        if (name.empty()) {
            report.error("empty-name", "symbol name is empty", loc);
            return;
        }
        auto it = lib.index_.find(name);
        if (it == lib.index_.end()) {
            add_symbol(name, SymbolKind::non_terminal);
        } else if (lib.is_terminal(it->second)) {
            report.error("duplicate-symbol",
                         "'" + name + "' is declared both as terminal and non-terminal", loc);
        } else if (explicit_decl) {
            report.error("duplicate-symbol", "non-terminal '" + name + "' declared twice", loc);
        }
    };
    for (std::size_t i = 0; i < draft.non_terminals.size(); ++i)
        declare_nt(draft.non_terminals[i], "non_terminals[" + std::to_string(i) + "]", true);

    std::set<std::string> seen_goals;
    for (std::size_t i = 0; i < draft.goals.size(); ++i) {
        const auto& name = draft.goals[i];
        std::string loc = "goals[" + std::to_string(i) + "]";
        if (!seen_goals.insert(name).second) {
            report.error("duplicate-symbol", "goal '" + name + "' listed twice", loc);
            continue;
        }
        auto it = lib.index_.find(name);
        if (it != lib.index_.end() && lib.is_terminal(it->second)) {
            report.error("goal-not-nonterminal", "goal '" + name + "' is a terminal", loc);
            continue;
        }
        declare_nt(name, loc, false);
        if (auto id = lib.find(name)) lib.goals_.push_back(*id);
    }
    for (std::size_t i = 0; i < draft.rules.size(); ++i) {
        const auto& head = draft.rules[i].head;
        std::string loc = "rules[" + std::to_string(i) + "].head";
        auto it = lib.index_.find(head);
        if (it != lib.index_.end() && lib.is_terminal(it->second)) {
            report.error("terminal-head", "rule head '" + head + "' is a terminal", loc);
            continue;
        }
        declare_nt(head, loc, false);
    }

    lib.rules_by_head_.assign(lib.symbols_.size(), {});
    for (std::size_t i = 0; i < draft.rules.size(); ++i) {
        const RuleDraft& rd = draft.rules[i];
        std::string loc = "rules[" + std::to_string(i) + "]";
        bool good = true;
        auto head = lib.find(rd.head);
        if (!head || lib.is_terminal(*head)) good = false;
        if (rd.children.empty()) {
            report.error("empty-rule", "rule for '" + rd.head + "' has no children", loc);
            good = false;
        }
        Rule rule;
        rule.head = head.value_or(0);
        for (std::size_t c = 0; c < rd.children.size(); ++c) {
            auto id = lib.find(rd.children[c]);
            if (!id) {
                report.error("undeclared-symbol",
                             "child '" + rd.children[c] + "' is not a declared symbol",
                             loc + ".children[" + std::to_string(c) + "]");
                good = false;
            } else {
                rule.children.push_back(*id);
            }
        }
        const std::size_t n = rd.children.size();
        auto resolve = [&](const OrderRef& ref, const std::string& where) -> std::optional<std::size_t> {
            if (const auto* pos = std::get_if<std::size_t>(&ref)) {
                if (*pos >= n) {
                    report.error("ordering-out-of-range",
                                 "ordering position " + std::to_string(*pos) +
                                     " is out of range for a rule with " + std::to_string(n) +
                                     " children",
                                 where);
                    return std::nullopt;
                }
                return *pos;
            }
            const auto& name = std::get<std::string>(ref);
            std::optional<std::size_t> found;
            std::size_t hits = 0;
            for (std::size_t c = 0; c < n; ++c)
                if (rd.children[c] == name) {
                    found = c;
                    ++hits;
                }
            if (hits == 0) {
                report.error("ordering-out-of-range",
                             "ordering names '" + name + "' which is not a child of this rule", where);
                return std::nullopt;
            }
            if (hits > 1) {
                report.error("ambiguous-ordering",
                             "ordering names '" + name +
                                 "' which occurs more than once; use child positions",
                             where);
                return std::nullopt;
            }
            return found;
        };
        bool ordering_ok = true;
        for (std::size_t k = 0; k < rd.ordering.size(); ++k) {
            std::string where = loc + ".ordering[" + std::to_string(k) + "]";
            auto a = resolve(rd.ordering[k].first, where);
            auto b = resolve(rd.ordering[k].second, where);
            if (!a || !b) {
                ordering_ok = false;
                continue;
            }
            if (*a == *b) {
                report.error("ordering-cycle",
                             "ordering cycle: position " + std::to_string(*a) + " precedes itself",
                             where);
                ordering_ok = false;
                continue;
            }
            rule.ordering.push_back({*a, *b});
        }
        if (ordering_ok && detail::has_cycle(n, rule.ordering)) {
            report.error("ordering-cycle", "ordering cycle: constraints are unsatisfiable", loc);
            ordering_ok = false;
        }
        if (!good || !ordering_ok) continue;
        std::sort(rule.ordering.begin(), rule.ordering.end());
        rule.ordering.erase(std::unique(rule.ordering.begin(), rule.ordering.end()),
                            rule.ordering.end());
        RuleId rid = static_cast<RuleId>(lib.rules_.size());
        lib.predecessors_.push_back(detail::closed_predecessors(n, rule.ordering));
        lib.rules_by_head_[rule.head].push_back(rid);
        lib.rules_.push_back(std::move(rule));
    }

    for (SymbolId nt : lib.non_terminals_) {
        if (lib.rules_by_head_[nt].empty()) {
            bool had_rule = std::any_of(draft.rules.begin(), draft.rules.end(),
                                        [&](const RuleDraft& r) { return r.head == lib.name(nt); });
            if (!had_rule)
                report.error("no-rules", "non-terminal has no rules: '" + lib.name(nt) + "'",
                             lib.name(nt));
        }
    }

    // Derivability by fixed point.
    lib.min_depth_.assign(lib.symbols_.size(), std::nullopt);
    for (SymbolId t : lib.terminals_) lib.min_depth_[t] = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const Rule& r : lib.rules_) {
            std::size_t worst = 0;
            bool all = true;
            for (SymbolId c : r.children) {
                if (!lib.min_depth_[c]) {
                    all = false;
                    break;
                }
                worst = std::max(worst, *lib.min_depth_[c]);
            }
            if (all && (!lib.min_depth_[r.head] || worst + 1 < *lib.min_depth_[r.head])) {
                lib.min_depth_[r.head] = worst + 1;
                changed = true;
            }
        }
    }
    for (SymbolId nt : lib.non_terminals_)
        if (!lib.min_depth_[nt] && !lib.rules_by_head_[nt].empty())
            report.warning("underivable", "'" + lib.name(nt) + "' has no finite derivation",
                           lib.name(nt));

    if (lib.goals_.empty()) report.warning("no-goals", "library declares no goals");

    lib.goal_set_ = lib.goals_;
    std::sort(lib.goal_set_.begin(), lib.goal_set_.end());

    if (report.ok()) {
        for (SymbolId nt : detect_recursion(lib))
            report.warning("recursive", "'" + lib.name(nt) + "' can derive itself; depth bound applies",
                           lib.name(nt));
        result.library = std::move(lib);
    }
    return result;
}

/// Non-terminals from which some derivation reaches the same non-terminal again.
inline std::set<SymbolId> detect_recursion(const PlanLibrary& lib) {
    std::set<SymbolId> out;
    for (SymbolId start : lib.non_terminals()) {
        std::vector<bool> seen(lib.symbol_count(), false);
        std::vector<SymbolId> stack;
        auto push_children = [&](SymbolId v) {
            for (RuleId r : lib.rules_for(v))
                for (SymbolId c : lib.rule(r).children)
                    if (!lib.is_terminal(c) && !seen[c]) {
                        seen[c] = true;
                        stack.push_back(c);
                    }
        };
        push_children(start);
        while (!stack.empty()) {
            SymbolId v = stack.back();
            stack.pop_back();
            if (v == start) {
                out.insert(start);
                break;
            }
            push_children(v);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

inline ParseResult parse_library(std::string_view text) {
    using nlohmann::json;
    ParseResult bad;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        bad.report.error("malformed-document", e.what());
        return bad;
    }
    if (!doc.is_object()) {
        bad.report.error("malformed-document", "top level must be an object");
        return bad;
    }

    LibraryDraft draft;
    auto strings = [&](const char* key, std::vector<std::string>& into, bool required) {
        if (!doc.contains(key)) {
            if (required) bad.report.error("malformed-document", std::string("missing key '") + key + "'");
            return;
        }
        const json& arr = doc.at(key);
        if (!arr.is_array()) {
            bad.report.error("malformed-document", std::string("'") + key + "' must be a list", key);
            return;
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_string())
                bad.report.error("malformed-document", "expected a string",
                                 std::string(key) + "[" + std::to_string(i) + "]");
            else
                into.push_back(arr[i].get<std::string>());
        }
    };
    strings("terminals", draft.terminals, true);
    strings("non_terminals", draft.non_terminals, false);
    strings("goals", draft.goals, true);

    if (!doc.contains("rules") || !doc.at("rules").is_array()) {
        bad.report.error("malformed-document", "missing list 'rules'");
    } else {
        const json& rules = doc.at("rules");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            std::string loc = "rules[" + std::to_string(i) + "]";
            const json& r = rules[i];
            if (!r.is_object() || !r.contains("head") || !r.at("head").is_string() ||
                !r.contains("children") || !r.at("children").is_array()) {
                bad.report.error("malformed-document", "rule needs string 'head' and list 'children'", loc);
                continue;
            }
            RuleDraft rd;
            rd.head = r.at("head").get<std::string>();
            for (const json& c : r.at("children")) {
                if (!c.is_string()) {
                    bad.report.error("malformed-document", "children must be strings", loc);
                    continue;
                }
                rd.children.push_back(c.get<std::string>());
            }
            if (r.contains("ordering")) {
                const json& ord = r.at("ordering");
                if (!ord.is_array()) {
                    bad.report.error("malformed-document", "'ordering' must be a list", loc);
                } else {
                    for (std::size_t k = 0; k < ord.size(); ++k) {
                        const json& p = ord[k];
                        std::string where = loc + ".ordering[" + std::to_string(k) + "]";
                        if (!p.is_array() || p.size() != 2) {
                            bad.report.error("malformed-document", "ordering entries are two-element lists", where);
                            continue;
                        }
                        auto ref = [&](const json& e) -> std::optional<OrderRef> {
                            if (e.is_number_unsigned()) return OrderRef{e.get<std::size_t>()};
                            if (e.is_string()) return OrderRef{e.get<std::string>()};
                            if (e.is_number_integer()) {
                                bad.report.error("ordering-out-of-range", "negative ordering position", where);
                                return std::nullopt;
                            }
                            bad.report.error("malformed-document", "ordering endpoints are positions or child names", where);
                            return std::nullopt;
                        };
                        auto a = ref(p[0]);
                        auto b = ref(p[1]);
                        if (a && b) rd.ordering.emplace_back(*a, *b);
                    }
                }
            }
            draft.rules.push_back(std::move(rd));
        }
    }

    ParseResult built = build_library(draft);
    // Structural problems come first; everything else the builder found is appended.
    for (auto& e : built.report.errors) bad.report.errors.push_back(std::move(e));
    for (auto& w : built.report.warnings) bad.report.warnings.push_back(std::move(w));
    if (bad.report.ok()) {
        built.report = std::move(bad.report);
        return built;
    }
    return bad;
}

inline nlohmann::json library_to_json(const PlanLibrary& lib) {
    using nlohmann::json;
    json doc;
    doc["terminals"] = json::array();
    for (SymbolId t : lib.terminals()) doc["terminals"].push_back(lib.name(t));
    doc["goals"] = json::array();
    for (SymbolId g : lib.goals()) doc["goals"].push_back(lib.name(g));
    doc["rules"] = json::array();
    for (const Rule& r : lib.rules()) {
        json jr;
        jr["head"] = lib.name(r.head);
        jr["children"] = json::array();
        for (SymbolId c : r.children) jr["children"].push_back(lib.name(c));
        jr["ordering"] = json::array();
        for (const auto& p : r.ordering) jr["ordering"].push_back({p.before, p.after});
        doc["rules"].push_back(jr);
    }
    return doc;
}

inline std::string serialize_library(const PlanLibrary& lib) { return library_to_json(lib).dump(2); }

/// Name-level equality, ignoring rule order and symbol numbering.
inline bool equivalent(const PlanLibrary& a, const PlanLibrary& b) {
    auto names = [](const PlanLibrary& lib, std::span<const SymbolId> ids) {
        std::set<std::string> out;
        for (SymbolId id : ids) out.insert(lib.name(id));
        return out;
    };
    auto rules = [](const PlanLibrary& lib) {
        std::multiset<std::string> out;
        for (const Rule& r : lib.rules()) {
            std::string s = lib.name(r.head) + "->";
            for (SymbolId c : r.children) s += lib.name(c) + ",";
            s += "|";
            for (const auto& p : r.ordering)
                s += std::to_string(p.before) + "<" + std::to_string(p.after) + ",";
            out.insert(s);
        }
        return out;
    };
    return names(a, a.terminals()) == names(b, b.terminals()) &&
           names(a, a.non_terminals()) == names(b, b.non_terminals()) &&
           names(a, a.goals()) == names(b, b.goals()) && rules(a) == rules(b);
}

/// Parse and throw on any validation error.
class LibraryError : public Error {
public:
    explicit LibraryError(ValidationReport report)
        : Error("invalid plan library:\n" + report.render()), report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

inline PlanLibrary load_library(std::string_view text) {
    ParseResult r = parse_library(text);
    if (!r.ok()) throw LibraryError(std::move(r.report));
    return std::move(*r.library);
}

}  // namespace planrec
