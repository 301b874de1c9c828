#pragma once

// Synthetic session logs with ground-truth provenance for every entry.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"
#include "planrec/library.hpp"
#include "planrec/preprocess.hpp"

namespace planrec {

using Rng = std::mt19937_64;

struct NoiseModel {
    double repeat_prob = 0.0;     // chance of one more immediate duplicate, applied repeatedly
    double exogenous_rate = 0.0;  // mean number of filler entries per session (Poisson)
    std::vector<std::string> filler_labels;
    bool interleave = true;
    bool hard_mode = false;  // fillers drawn from mapped labels instead of filler_labels
    std::uint64_t seed = 0;

    void validate() const {
        if (!(repeat_prob >= 0.0 && repeat_prob < 1.0)) throw ConfigError("repeat_prob must be in [0, 1)");
        if (!(exogenous_rate >= 0.0)) throw ConfigError("exogenous_rate must be non-negative");
        if (exogenous_rate > 0.0 && !hard_mode && filler_labels.empty())
            throw ConfigError("exogenous_rate > 0 needs filler_labels");
    }
};

struct GoalSpec {
    SymbolId goal = 0;
    std::optional<RuleId> root_rule;  // force the first decomposition
};

/// A fully expanded plan and the order in which its terminal leaves are carried out.
struct SampledPlan {
    PlanTree tree;
    std::vector<NodeId> order;

    std::vector<SymbolId> terminals() const {
        std::vector<SymbolId> out;
        for (NodeId id : order) out.push_back(tree.node(id).label);
        return out;
    }
};

namespace detail {

// Bit i set in result[j] when leaf i must come before leaf j.
inline std::vector<std::uint64_t> leaf_precedence(const PlanTree& tree, const PlanLibrary& lib,
                                                  const std::vector<NodeId>& leaves) {
    const std::size_t n = leaves.size();
    std::vector<std::vector<NodeId>> paths(n);  // root..leaf
    for (std::size_t i = 0; i < n; ++i) {
        for (NodeId v = leaves[i]; v != kNoParent; v = tree.node(v).parent) paths[i].push_back(v);
        std::reverse(paths[i].begin(), paths[i].end());
    }
    std::vector<std::uint64_t> preds(n, 0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            std::size_t k = 0;
            while (k < paths[a].size() && k < paths[b].size() && paths[a][k] == paths[b][k]) ++k;
            NodeId lca = paths[a][k - 1];
            std::size_t pa = tree.node(paths[a][k]).position;
            std::size_t pb = tree.node(paths[b][k]).position;
            if (lib.precedes(*tree.node(lca).rule, pa, pb)) preds[b] |= std::uint64_t{1} << a;
        }
    return preds;
}

inline double uniform01(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline void expand_randomly(PlanTree& tree, const PlanLibrary& lib, NodeId id, std::size_t budget, Rng& rng,
                            std::optional<RuleId> forced) {
    SymbolId label = tree.node(id).label;
    if (lib.is_terminal(label)) return;
    std::vector<RuleId> viable;
    for (RuleId r : lib.rules_for(label)) {
        if (forced && r != *forced) continue;
        bool ok = budget > 0;
        for (SymbolId c : lib.rule(r).children) {
            auto d = lib.min_derivation_depth(c);
            ok = ok && d && *d + 1 <= budget;
        }
        if (ok) viable.push_back(r);
    }
    if (viable.empty())
        throw ConfigError("'" + lib.name(label) + "' cannot be derived within the depth bound");
    RuleId r = viable[uniform_index(rng, viable.size())];
    tree.expand(lib, id, r);
    std::vector<NodeId> kids = tree.node(id).children;
    for (NodeId c : kids) expand_randomly(tree, lib, c, budget - 1, rng, std::nullopt);
}

}  // namespace detail

/// Samples a complete plan for `goal` with uniform rule choices and a uniformly
/// random order of its terminals among all orders the rule orderings allow.
inline SampledPlan sample_plan(const PlanLibrary& lib, SymbolId goal, std::size_t depth_bound, Rng& rng,
                               std::optional<RuleId> root_rule = std::nullopt) {
    if (!lib.is_goal(goal)) throw ConfigError("'" + lib.name(goal) + "' is not a goal");
    if (root_rule && lib.rule(*root_rule).head != goal)
        throw ConfigError("forced rule does not decompose '" + lib.name(goal) + "'");
    SampledPlan out;
    out.tree = PlanTree(lib, goal);
    detail::expand_randomly(out.tree, lib, 0, depth_bound, rng, root_rule);
    out.tree.refresh(lib);

    std::vector<NodeId> leaves = out.tree.leaves();
    if (leaves.size() > 64) throw ConfigError("sampled plan has more than 64 actions");
    auto preds = detail::leaf_precedence(out.tree, lib, leaves);
    const std::size_t n = leaves.size();
    const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;

    // Number of linear extensions completing each reachable downset.
    std::unordered_map<std::uint64_t, long double> memo;
    auto count = [&](auto&& self, std::uint64_t placed) -> long double {
        if (placed == full) return 1.0L;
        if (auto it = memo.find(placed); it != memo.end()) return it->second;
        long double total = 0;
        for (std::size_t x = 0; x < n; ++x) {
            std::uint64_t bit = std::uint64_t{1} << x;
            if (!(placed & bit) && (preds[x] & ~placed) == 0) total += self(self, placed | bit);
        }
        memo[placed] = total;
        return total;
    };
    std::uint64_t placed = 0;
    while (placed != full) {
        long double target = static_cast<long double>(detail::uniform01(rng)) * count(count, placed);
        std::size_t chosen = n;
        for (std::size_t x = 0; x < n; ++x) {
            std::uint64_t bit = std::uint64_t{1} << x;
            if ((placed & bit) || (preds[x] & ~placed) != 0) continue;
            chosen = x;
            long double c = count(count, placed | bit);
            if (target < c) break;
            target -= c;
        }
        placed |= std::uint64_t{1} << chosen;
        out.order.push_back(leaves[chosen]);
    }
    return out;
}

struct Provenance {
    enum class Kind { plan, repeat, exogenous };
    Kind kind = Kind::exogenous;
    std::size_t goal_index = 0;  // plan entries only
    NodeId leaf = 0;             // plan entries only

    bool operator==(const Provenance&) const = default;
};

inline const char* to_string(Provenance::Kind k) {
    switch (k) {
        case Provenance::Kind::plan: return "plan";
        case Provenance::Kind::repeat: return "repeat";
        case Provenance::Kind::exogenous: return "exogenous";
    }
    return "?";
}

struct GroundTruth {
    std::string session_id;
    std::string session_type;
    std::vector<SymbolId> goals;
    std::vector<PlanTree> plans;         // one complete plan per goal
    std::vector<Provenance> entries;     // parallel to the session log
};

struct GeneratedSession {
    SessionLog log;
    GroundTruth truth;
};

/// One plan per goal, merged (order-preserving random interleave, or back to back),
/// then repeats and fillers added and terminals turned into page labels.
inline GeneratedSession generate_session(const PlanLibrary& lib, const std::vector<GoalSpec>& goals,
                                         const NoiseModel& noise, const std::map<SymbolId, std::string>& inverse_mapping,
                                         std::size_t depth_bound = 10, const std::string& session_id = "session") {
    noise.validate();
    for (SymbolId t : lib.terminals())
        if (!inverse_mapping.count(t)) throw ConfigError("no page label for terminal '" + lib.name(t) + "'");
    Rng rng(noise.seed);

    GeneratedSession out;
    out.truth.session_id = session_id;
    std::vector<SampledPlan> plans;
    for (const GoalSpec& g : goals) {
        plans.push_back(sample_plan(lib, g.goal, depth_bound, rng, g.root_rule));
        out.truth.goals.push_back(g.goal);
    }

    struct Step {
        std::size_t plan;
        NodeId leaf;
    };
    auto label_of = [&](const Step& s) { return plans[s.plan].tree.node(s.leaf).label; };
    // Equal terminals from different plans must not end up adjacent: preprocessing
    // would merge them into one observation.
    auto adjacent_equal = [&](const std::vector<Step>& steps) {
        for (std::size_t i = 1; i < steps.size(); ++i)
            if (label_of(steps[i]) == label_of(steps[i - 1])) return true;
        return false;
    };
    std::vector<Step> merged;
    for (int attempt = 0; attempt < 200; ++attempt) {
        merged.clear();
        if (noise.interleave) {
            std::vector<std::size_t> next(plans.size(), 0);
            std::size_t remaining = 0;
            for (const auto& p : plans) remaining += p.order.size();
            while (remaining > 0) {
                std::size_t pick = detail::uniform_index(rng, remaining);
                std::size_t k = 0;
                while (pick >= plans[k].order.size() - next[k]) {
                    pick -= plans[k].order.size() - next[k];
                    ++k;
                }
                merged.push_back({k, plans[k].order[next[k]++]});
                --remaining;
            }
        } else {
            for (std::size_t k = 0; k < plans.size(); ++k)
                for (NodeId leaf : plans[k].order) merged.push_back({k, leaf});
        }
        if (!adjacent_equal(merged) || !noise.interleave) break;
    }

    std::vector<std::pair<std::string, Provenance>> stream;
    for (const Step& s : merged) {
        const std::string& label = inverse_mapping.at(label_of(s));
        stream.push_back({label, Provenance{Provenance::Kind::plan, s.plan, s.leaf}});
        for (int extra = 0; extra < 50 && detail::uniform01(rng) < noise.repeat_prob; ++extra)
            stream.push_back({label, Provenance{Provenance::Kind::repeat, 0, 0}});
    }

    std::vector<std::string> mapped_labels;
    for (const auto& [t, label] : inverse_mapping) mapped_labels.push_back(label);
    const auto& filler_pool = noise.hard_mode ? mapped_labels : noise.filler_labels;
    if (noise.exogenous_rate > 0.0 && !filler_pool.empty()) {
        std::size_t fillers = std::poisson_distribution<std::size_t>(noise.exogenous_rate)(rng);
        for (std::size_t f = 0; f < fillers; ++f) {
            std::size_t at = detail::uniform_index(rng, stream.size() + 1);
            const std::string& label = filler_pool[detail::uniform_index(rng, filler_pool.size())];
            stream.insert(stream.begin() + static_cast<std::ptrdiff_t>(at),
                          {label, Provenance{Provenance::Kind::exogenous, 0, 0}});
        }
    }

    std::vector<SessionEntry> entries;
    std::int64_t clock = 1'600'000'000'000;
    const std::string user = "user-" + std::to_string(noise.seed % 100000);
    for (const auto& [label, prov] : stream) {
        clock += static_cast<std::int64_t>(200 + detail::uniform_index(rng, 4801));
        entries.push_back({clock, user, label});
        out.truth.entries.push_back(prov);
    }
    out.log = SessionLog(std::move(entries));
    for (auto& p : plans) out.truth.plans.push_back(std::move(p.tree));
    return out;
}

/// The explanation the generator intended, over the preprocessed session: each run of
/// equal observations is credited to the plan leaf inside it, if any, and otherwise
/// marked exogenous.
inline std::pair<ObservationSequence, Explanation> ground_truth_explanation(const GroundTruth& truth,
                                                                            const SessionLog& log,
                                                                            const LandmarkMapping& mapping,
                                                                            const PlanLibrary& lib) {
    ObservationSequence mapped = map_entries(log, mapping);
    ObservationSequence obs;
    Explanation exp;
    exp.plans = truth.plans;
    for (std::size_t i = 0; i < mapped.size();) {
        std::size_t j = i;
        std::optional<Provenance> credit;
        while (j < mapped.size() && mapped[j].action == mapped[i].action) {
            const Provenance& p = truth.entries.at(mapped[j].source);
            if (p.kind == Provenance::Kind::plan && !credit) credit = p;
            ++j;
        }
        std::size_t index = obs.size();
        obs.items.push_back(mapped[i]);
        if (credit)
            exp.plans.at(credit->goal_index).observe(lib, credit->leaf, index);
        else
            exp.exogenous.push_back(index);
        i = j;
    }
    normalize(exp, lib);
    return {obs, exp};
}

// ---------------------------------------------------------------------------
// Corpus configuration and files
// ---------------------------------------------------------------------------

struct SessionTypeConfig {
    std::string name;
    std::vector<std::pair<std::string, std::optional<std::size_t>>> goals;  // goal name, local rule index
    std::optional<NoiseModel> noise;
};

struct CorpusConfig {
    std::string library_path;
    std::string mapping_path;
    std::uint64_t seed = 1;
    std::size_t sessions_per_type = 50;
    std::size_t depth_bound = 10;
    NoiseModel noise;
    std::vector<SessionTypeConfig> types;
};

inline NoiseModel parse_noise(const nlohmann::json& j, NoiseModel base = {}) {
    if (j.contains("repeat_prob")) base.repeat_prob = j.at("repeat_prob").get<double>();
    if (j.contains("exogenous_rate")) base.exogenous_rate = j.at("exogenous_rate").get<double>();
    if (j.contains("filler_labels")) base.filler_labels = j.at("filler_labels").get<std::vector<std::string>>();
    if (j.contains("interleave")) base.interleave = j.at("interleave").get<bool>();
    if (j.contains("hard_mode")) base.hard_mode = j.at("hard_mode").get<bool>();
    return base;
}

/// Relative library/mapping paths are resolved against `base_dir`.
inline CorpusConfig parse_corpus_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    CorpusConfig cfg;
    try {
        auto j = nlohmann::json::parse(text.begin(), text.end());
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
        };
        if (j.contains("library")) cfg.library_path = resolve(j.at("library").get<std::string>());
        if (j.contains("mapping")) cfg.mapping_path = resolve(j.at("mapping").get<std::string>());
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("sessions_per_type")) cfg.sessions_per_type = j.at("sessions_per_type").get<std::size_t>();
        if (j.contains("depth_bound")) cfg.depth_bound = j.at("depth_bound").get<std::size_t>();
        if (j.contains("noise")) cfg.noise = parse_noise(j.at("noise"));
        for (const auto& jt : j.at("types")) {
            SessionTypeConfig t;
            t.name = jt.at("name").get<std::string>();
            for (const auto& jg : jt.at("goals")) {
                if (jg.is_string()) {
                    t.goals.emplace_back(jg.get<std::string>(), std::nullopt);
                } else {
                    std::optional<std::size_t> rule;
                    if (jg.contains("rule")) rule = jg.at("rule").get<std::size_t>();
                    t.goals.emplace_back(jg.at("goal").get<std::string>(), rule);
                }
            }
            if (jt.contains("noise")) t.noise = parse_noise(jt.at("noise"), cfg.noise);
            cfg.types.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed corpus config: ") + e.what());
    }
    if (cfg.types.empty()) throw ConfigError("corpus config lists no session types");
    return cfg;
}

inline std::vector<GoalSpec> resolve_goals(const SessionTypeConfig& t, const PlanLibrary& lib) {
    std::vector<GoalSpec> out;
    for (const auto& [name, rule] : t.goals) {
        auto id = lib.find(name);
        if (!id || !lib.is_goal(*id)) throw ConfigError("session type '" + t.name + "': '" + name + "' is not a goal");
        GoalSpec g{*id, std::nullopt};
        if (rule) {
            auto rules = lib.rules_for(*id);
            if (*rule >= rules.size())
                throw ConfigError("session type '" + t.name + "': '" + name + "' has no rule " + std::to_string(*rule));
            g.root_rule = rules[*rule];
        }
        out.push_back(g);
    }
    return out;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a * 1000003ULL + b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Every session of the corpus, types in config order. Each session has its own seed.
inline std::vector<GeneratedSession> generate_corpus(const PlanLibrary& lib, const LandmarkMapping& mapping,
                                                     const CorpusConfig& cfg) {
    auto inverse = mapping.inverse();
    std::vector<GeneratedSession> out;
    for (std::size_t ti = 0; ti < cfg.types.size(); ++ti) {
        const auto& type = cfg.types[ti];
        auto goals = resolve_goals(type, lib);
        for (std::size_t si = 0; si < cfg.sessions_per_type; ++si) {
            NoiseModel noise = type.noise.value_or(cfg.noise);
            noise.seed = derive_seed(cfg.seed, ti, si);
            char id[32];
            std::snprintf(id, sizeof id, "%03zu", si);
            auto s = generate_session(lib, goals, noise, inverse, cfg.depth_bound, type.name + "_" + id);
            s.truth.session_type = type.name;
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline nlohmann::json truth_to_json(const GroundTruth& t, const PlanLibrary& lib) {
    using nlohmann::json;
    json j;
    j["session_id"] = t.session_id;
    j["type"] = t.session_type;
    j["goals"] = json::array();
    for (SymbolId g : t.goals) j["goals"].push_back(lib.name(g));
    j["plans"] = json::array();
    for (const auto& p : t.plans) j["plans"].push_back(plan_to_json(p, lib));
    j["entries"] = json::array();
    for (const auto& e : t.entries) {
        json je{{"kind", to_string(e.kind)}};
        if (e.kind == Provenance::Kind::plan) {
            je["goal_index"] = e.goal_index;
            je["leaf"] = e.leaf;
        }
        j["entries"].push_back(je);
    }
    return j;
}

inline GroundTruth truth_from_json(const nlohmann::json& j, const PlanLibrary& lib) {
    GroundTruth t;
    try {
        t.session_id = j.at("session_id").get<std::string>();
        t.session_type = j.at("type").get<std::string>();
        for (const auto& g : j.at("goals")) t.goals.push_back(lib.id_of(g.get<std::string>()));
        nlohmann::json wrapper{{"plans", j.at("plans")}, {"exogenous", nlohmann::json::array()},
                               {"covered", nlohmann::json::array()}};
        t.plans = explanation_from_json(wrapper, lib).plans;
        for (const auto& je : j.at("entries")) {
            Provenance p;
            std::string kind = je.at("kind").get<std::string>();
            if (kind == "plan") {
                p.kind = Provenance::Kind::plan;
                p.goal_index = je.at("goal_index").get<std::size_t>();
                p.leaf = je.at("leaf").get<NodeId>();
            } else if (kind == "repeat") {
                p.kind = Provenance::Kind::repeat;
            } else if (kind == "exogenous") {
                p.kind = Provenance::Kind::exogenous;
            } else {
                throw IoError("unknown provenance kind '" + kind + "'");
            }
            t.entries.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed ground-truth document: ") + e.what());
    }
    return t;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

/// Writes sessions, ground-truth sidecars, a manifest and copies of the library and mapping.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<GeneratedSession>& sessions,
                         const PlanLibrary& lib, const LandmarkMapping& mapping) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    nlohmann::json manifest;
    manifest["library"] = "library.json";
    manifest["mapping"] = "mapping.json";
    manifest["sessions"] = nlohmann::json::array();
    write_text_file(dir / "library.json", serialize_library(lib) + "\n");
    write_text_file(dir / "mapping.json", write_mapping(mapping, lib) + "\n");
    for (const auto& s : sessions) {
        std::string base = s.truth.session_id;
        write_text_file(dir / (base + ".csv"), write_session_csv(s.log));
        write_text_file(dir / (base + ".truth.json"), truth_to_json(s.truth, lib).dump(2) + "\n");
        manifest["sessions"].push_back(
            {{"id", base}, {"type", s.truth.session_type}, {"session", base + ".csv"}, {"truth", base + ".truth.json"}});
    }
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace planrec
