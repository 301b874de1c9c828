#pragma once

// Explanation-set classification, per-session measurement and corpus tables.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "planrec/explanation.hpp"
#include "planrec/preprocess.hpp"
#include "planrec/recognizer.hpp"

namespace planrec {

struct Classification {
    std::size_t total = 0;
    std::size_t full_plan = 0;  // at least one completed plan
    std::size_t no_open = 0;    // every plan completed (vacuously true for no plans)

    bool operator==(const Classification&) const = default;
};

inline Classification classify(const std::vector<Explanation>& explanations) {
    Classification c;
    c.total = explanations.size();
    for (const auto& e : explanations) {
        auto s = explanation_stats(e);
        c.full_plan += s.has_full_plan;
        c.no_open += s.no_open;
    }
    return c;
}

struct SessionReport {
    std::string session_id;
    std::string session_type;
    std::size_t raw_entry_count = 0;
    std::size_t observation_count = 0;
    std::size_t explanation_count = 0;
    std::size_t full_plan_count = 0;
    std::size_t no_open_count = 0;
    std::size_t exogenous_min = 0;
    double recognize_wall_time = 0.0;  // seconds, recognition only
    Mode mode = Mode::cradle;
    bool failed = false;               // an observation could not be explained

    double compression() const {
        return raw_entry_count == 0 ? 0.0
                                    : 1.0 - static_cast<double>(observation_count) / static_cast<double>(raw_entry_count);
    }
};

/// Outcome of running one session through preprocessing and recognition.
struct SessionRun {
    ObservationSequence observations;
    RecognizerState state;  // last state reached
    std::vector<Explanation> explanations;
    SessionReport report;
    std::optional<std::size_t> failed_at;  // observation index that could not be explained
    std::string failure;
};

inline SessionRun run_session(std::shared_ptr<const PlanLibrary> lib, const LandmarkMapping& mapping,
                              const SessionLog& log, const RecognizerParams& params, Mode mode,
                              const std::string& session_id = {}, const std::string& session_type = {}) {
    SessionRun run;
    run.observations = preprocess(log, mapping);
    RecognizerParams p = params;
    p.filters_enabled = mode == Mode::cradle;

    auto start = std::chrono::steady_clock::now();
    run.state = init(lib, p);
    for (const Observation& o : run.observations.items) {
        try {
            run.state = observe(run.state, o.action, o.source);
        } catch (const RecognitionError& e) {
            run.failed_at = e.obs_index();
            run.failure = e.what();
            break;
        }
    }
    run.explanations = finish(run.state);
    auto stop = std::chrono::steady_clock::now();

    SessionReport& r = run.report;
    r.session_id = session_id;
    r.session_type = session_type;
    r.raw_entry_count = log.size();
    r.observation_count = run.observations.size();
    auto c = classify(run.explanations);
    r.explanation_count = c.total;
    r.full_plan_count = c.full_plan;
    r.no_open_count = c.no_open;
    r.exogenous_min = 0;
    if (!run.explanations.empty()) {
        r.exogenous_min = explanation_stats(run.explanations.front()).num_exogenous;
        for (const auto& e : run.explanations) r.exogenous_min = std::min(r.exogenous_min, e.exogenous.size());
    }
    r.recognize_wall_time = std::chrono::duration<double>(stop - start).count();
    r.mode = mode;
    r.failed = run.failed_at.has_value();
    return run;
}

struct FieldSummary {
    double mean = 0.0;
    double stdev = 0.0;  // population standard deviation
};

inline FieldSummary summarize(const std::vector<double>& xs) {
    FieldSummary s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(xs.size()));
    return s;
}

struct ModeSummary {
    std::size_t sessions = 0;
    std::size_t failures = 0;
    FieldSummary explanations;
    FieldSummary full_plan;
    FieldSummary no_open;
    FieldSummary exogenous_min;
    FieldSummary time;
};

struct TypeSummary {
    std::string type;
    std::size_t sessions = 0;
    FieldSummary raw_entries;
    FieldSummary observations;
    FieldSummary compression;
    std::map<Mode, ModeSummary> modes;
};

struct CorpusReport {
    std::vector<TypeSummary> types;  // in order of first appearance
    FieldSummary raw_entries;
    FieldSummary observations;
    FieldSummary compression;  // mean of per-session 1 - observations/raw entries
};

/// Groups reports by session type (and mode) and summarizes every field.
/// Raw and observation counts are taken once per session id (reports without an id each count).
inline CorpusReport corpus_report(const std::vector<SessionReport>& reports) {
    if (reports.empty()) throw ConfigError("corpus report needs at least one session");
    CorpusReport out;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SessionReport*>> by_type;
    for (const auto& r : reports) {
        if (!by_type.count(r.session_type)) order.push_back(r.session_type);
        by_type[r.session_type].push_back(&r);
    }
    std::vector<double> all_raw, all_obs, all_comp;
    for (const auto& type : order) {
        TypeSummary ts;
        ts.type = type;
        std::set<std::string> seen_ids;
        std::map<Mode, std::vector<const SessionReport*>> by_mode;
        std::vector<double> raw, obs, comp;
        for (const SessionReport* r : by_type[type]) {
            by_mode[r->mode].push_back(r);
            if (!r->session_id.empty() && !seen_ids.insert(r->session_id).second) continue;
            raw.push_back(static_cast<double>(r->raw_entry_count));
            obs.push_back(static_cast<double>(r->observation_count));
            comp.push_back(r->compression());
        }
        ts.sessions = raw.size();
        ts.raw_entries = summarize(raw);
        ts.observations = summarize(obs);
        ts.compression = summarize(comp);
        all_raw.insert(all_raw.end(), raw.begin(), raw.end());
        all_obs.insert(all_obs.end(), obs.begin(), obs.end());
        all_comp.insert(all_comp.end(), comp.begin(), comp.end());
        for (const auto& [mode, rs] : by_mode) {
            ModeSummary ms;
            ms.sessions = rs.size();
            std::vector<double> ex, fp, no, exo, tm;
            for (const SessionReport* r : rs) {
                ms.failures += r->failed;
                ex.push_back(static_cast<double>(r->explanation_count));
                fp.push_back(static_cast<double>(r->full_plan_count));
                no.push_back(static_cast<double>(r->no_open_count));
                exo.push_back(static_cast<double>(r->exogenous_min));
                tm.push_back(r->recognize_wall_time);
            }
            ms.explanations = summarize(ex);
            ms.full_plan = summarize(fp);
            ms.no_open = summarize(no);
            ms.exogenous_min = summarize(exo);
            ms.time = summarize(tm);
            ts.modes[mode] = ms;
        }
        out.types.push_back(std::move(ts));
    }
    out.raw_entries = summarize(all_raw);
    out.observations = summarize(all_obs);
    out.compression = summarize(all_comp);
    return out;
}

/// Row labels of the runtime / explanation-set-size table, top to bottom.
inline const std::vector<std::string>& table_row_labels() {
    static const std::vector<std::string> rows{
        "Session Entries",      "Observations",        "CRADLE Explanations",
        "PHATT Explanations",   "CRADLE Time (seconds)", "PHATT Time (seconds)"};
    return rows;
}

namespace detail {

inline std::vector<std::vector<std::string>> table_cells(const CorpusReport& rep, int time_precision) {
    auto fmt = [](double v, int prec) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(prec) << v;
        return s.str();
    };
    auto mode_field = [&](const TypeSummary& t, Mode m, auto member, int prec) -> std::string {
        auto it = t.modes.find(m);
        if (it == t.modes.end()) return "-";
        return fmt((it->second.*member).mean, prec);
    };
    std::vector<std::vector<std::string>> rows;
    const auto& labels = table_row_labels();
    for (std::size_t r = 0; r < labels.size(); ++r) {
        std::vector<std::string> row{labels[r]};
        for (const auto& t : rep.types) {
            switch (r) {
                case 0: row.push_back(fmt(t.raw_entries.mean, 2)); break;
                case 1: row.push_back(fmt(t.observations.mean, 2)); break;
                case 2: row.push_back(mode_field(t, Mode::cradle, &ModeSummary::explanations, 2)); break;
                case 3: row.push_back(mode_field(t, Mode::phatt, &ModeSummary::explanations, 2)); break;
                case 4: row.push_back(mode_field(t, Mode::cradle, &ModeSummary::time, time_precision)); break;
                case 5: row.push_back(mode_field(t, Mode::phatt, &ModeSummary::time, time_precision)); break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Aligned plain-text table: one column per session type, means per row.
inline std::string render_table(const CorpusReport& rep) {
    auto rows = detail::table_cells(rep, 4);
    std::vector<std::string> header{""};
    for (const auto& t : rep.types) header.push_back(t.type);
    rows.insert(rows.begin(), header);
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c == 0)
                out << std::left << std::setw(static_cast<int>(width[c])) << rows[r][c];
            else
                out << " | " << std::right << std::setw(static_cast<int>(width[c])) << rows[r][c];
        }
        out << '\n';
    }
    out << std::fixed << std::setprecision(1) << "Mean compression (1 - observations/entries): "
        << rep.compression.mean * 100.0 << "%\n";
    return out.str();
}

inline std::string render_csv(const CorpusReport& rep) {
    std::ostringstream out;
    out << "row";
    for (const auto& t : rep.types) out << ',' << t.type;
    out << '\n';
    for (const auto& row : detail::table_cells(rep, 6)) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const FieldSummary& f) { return {{"mean", f.mean}, {"stdev", f.stdev}}; }

inline nlohmann::json to_json(const CorpusReport& rep) {
    using nlohmann::json;
    json j;
    j["compression"] = to_json(rep.compression);
    j["raw_entries"] = to_json(rep.raw_entries);
    j["observations"] = to_json(rep.observations);
    j["types"] = json::array();
    for (const auto& t : rep.types) {
        json jt{{"type", t.type},
                {"sessions", t.sessions},
                {"raw_entries", to_json(t.raw_entries)},
                {"observations", to_json(t.observations)},
                {"compression", to_json(t.compression)}};
        for (const auto& [mode, m] : t.modes) {
            jt[mode == Mode::cradle ? "cradle" : "phatt"] = {{"sessions", m.sessions},
                                                             {"failures", m.failures},
                                                             {"explanations", to_json(m.explanations)},
                                                             {"full_plan", to_json(m.full_plan)},
                                                             {"no_open", to_json(m.no_open)},
                                                             {"exogenous_min", to_json(m.exogenous_min)},
                                                             {"time_seconds", to_json(m.time)}};
        }
        j["types"].push_back(jt);
    }
    return j;
}

inline nlohmann::json to_json(const SessionReport& r) {
    return {{"session_id", r.session_id},
            {"session_type", r.session_type},
            {"raw_entry_count", r.raw_entry_count},
            {"observation_count", r.observation_count},
            {"explanation_count", r.explanation_count},
            {"full_plan_count", r.full_plan_count},
            {"no_open_count", r.no_open_count},
            {"exogenous_min", r.exogenous_min},
            {"recognize_wall_time", r.recognize_wall_time},
            {"mode", to_string(r.mode)},
            {"failed", r.failed}};
}

}  // namespace planrec
