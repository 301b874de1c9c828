#pragma once

// Raw click-stream sessions to observation sequences: keep only entries whose
// page label maps to a terminal, then collapse immediate repetitions.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"
#include "planrec/library.hpp"
#include "planrec/oracle.hpp"
#include "planrec/recognizer.hpp"

namespace planrec {

struct SessionEntry {
    std::int64_t timestamp = 0;  // ms since epoch
    std::string user;
    std::string page_label;

    bool operator==(const SessionEntry&) const = default;
};

class SessionLog {
public:
    SessionLog() = default;

    /// Sorts by timestamp, keeping file order among equal timestamps.
    explicit SessionLog(std::vector<SessionEntry> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].timestamp < 0) throw IoError("entry " + std::to_string(i) + ": negative timestamp");
            if (entries_[i].page_label.empty()) throw IoError("entry " + std::to_string(i) + ": empty page label");
        }
        std::stable_sort(entries_.begin(), entries_.end(),
                         [](const SessionEntry& a, const SessionEntry& b) { return a.timestamp < b.timestamp; });
    }

    const std::vector<SessionEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    SessionLog without(std::size_t index) const {
        SessionLog copy = *this;
        copy.entries_.erase(copy.entries_.begin() + static_cast<std::ptrdiff_t>(index));
        return copy;
    }

    bool operator==(const SessionLog&) const = default;

private:
    std::vector<SessionEntry> entries_;
};

inline SessionLog parse_session_csv(std::string_view text) {
    std::vector<SessionEntry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header) {
            if (line != "timestamp,user,page_label")
                throw IoError("line 1: expected header 'timestamp,user,page_label'");
            header = true;
            continue;
        }
        auto c1 = line.find(',');
        auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw IoError("line " + std::to_string(line_no) + ": expected three fields");
        SessionEntry e;
        std::string_view ts(line.data(), c1);
        auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), e.timestamp);
        if (ec != std::errc{} || ptr != ts.data() + ts.size())
            throw IoError("line " + std::to_string(line_no) + ": bad timestamp '" + std::string(ts) + "'");
        e.user = line.substr(c1 + 1, c2 - c1 - 1);
        e.page_label = line.substr(c2 + 1);
        entries.push_back(std::move(e));
    }
    if (!header) throw IoError("session file is empty (missing header)");
    return SessionLog(std::move(entries));
}

inline SessionLog parse_session_json(std::string_view text) {
    std::vector<SessionEntry> entries;
    try {
        auto doc = nlohmann::json::parse(text.begin(), text.end());
        for (const auto& j : doc) {
            SessionEntry e;
            e.timestamp = j.at("timestamp").get<std::int64_t>();
            e.user = j.at("user").get<std::string>();
            e.page_label = j.at("page_label").get<std::string>();
            entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed session document: ") + e.what());
    }
    return SessionLog(std::move(entries));
}

inline std::string write_session_csv(const SessionLog& log) {
    std::string out = "timestamp,user,page_label\n";
    for (const auto& e : log.entries())
        out += std::to_string(e.timestamp) + "," + e.user + "," + e.page_label + "\n";
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read '" + path + "'");
    return ss.str();
}

/// CSV unless the file starts with '[' (a JSON array of entry objects).
inline SessionLog load_session(const std::string& path) {
    std::string text = read_file(path);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') return parse_session_json(text);
    return parse_session_csv(text);
}

/// Page label -> terminal.
class LandmarkMapping {
public:
    LandmarkMapping() = default;

    LandmarkMapping(const PlanLibrary& lib, const std::map<std::string, std::string>& pairs) {
        std::string problems;
        for (const auto& [label, terminal] : pairs) {
            auto id = lib.find(terminal);
            if (label.empty())
                problems += "empty page label\n";
            else if (!id)
                problems += "label '" + label + "' maps to unknown action '" + terminal + "'\n";
            else if (!lib.is_terminal(*id))
                problems += "label '" + label + "' maps to non-terminal '" + terminal + "'\n";
            else
                pairs_[label] = *id;
        }
        if (!problems.empty()) throw ConfigError("invalid landmark mapping:\n" + problems);
    }

    std::optional<SymbolId> lookup(const std::string& label) const {
        auto it = pairs_.find(label);
        if (it == pairs_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::string, SymbolId>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    /// One page label per terminal (the alphabetically first) for generating sessions.
    std::map<SymbolId, std::string> inverse() const {
        std::map<SymbolId, std::string> out;
        for (const auto& [label, t] : pairs_) out.emplace(t, label);
        return out;
    }

private:
    std::map<std::string, SymbolId> pairs_;
};

inline LandmarkMapping parse_mapping(std::string_view text, const PlanLibrary& lib) {
    std::map<std::string, std::string> pairs;
    try {
        auto doc = nlohmann::json::parse(text.begin(), text.end());
        if (!doc.is_object()) throw ConfigError("landmark mapping must be an object of label -> terminal");
        for (const auto& [k, v] : doc.items()) pairs[k] = v.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed landmark mapping: ") + e.what());
    }
    return LandmarkMapping(lib, pairs);
}

inline std::string write_mapping(const LandmarkMapping& m, const PlanLibrary& lib) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [label, t] : m.pairs()) doc[label] = lib.name(t);
    return doc.dump(2);
}

/// Mapped entries in log order; `source` is the entry's index in the log.
inline ObservationSequence map_entries(const SessionLog& log, const LandmarkMapping& m) {
    ObservationSequence seq;
    const auto& entries = log.entries();
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (auto t = m.lookup(entries[i].page_label)) seq.items.push_back({*t, i});
    return seq;
}

/// Drops every observation whose terminal equals its immediate predecessor's.
inline ObservationSequence dedup_consecutive(const ObservationSequence& obs) {
    ObservationSequence out;
    for (const Observation& o : obs.items)
        if (out.empty() || out.items.back().action != o.action) out.items.push_back(o);
    return out;
}

inline ObservationSequence preprocess(const SessionLog& log, const LandmarkMapping& m) {
    return dedup_consecutive(map_entries(log, m));
}

/// Whether raw entry `entry_index` is a landmark: the preprocessed session admits an
/// explanation containing a complete plan, and without the entry it admits none.
/// Uses the brute-force enumerator, so only for short sessions.
inline bool is_landmark(std::size_t entry_index, const SessionLog& log, const LandmarkMapping& m,
                        const PlanLibrary& lib, const RecognizerParams& params = RecognizerParams{}) {
    if (entry_index >= log.size()) throw ConfigError("entry index out of range");
    if (!m.lookup(log.entries()[entry_index].page_label)) return false;
    auto has_complete_plan = [&](const SessionLog& l) {
        for (const Explanation& e : brute_force_recognize(lib, preprocess(l, m), params))
            if (explanation_stats(e).has_full_plan) return true;
        return false;
    };
    return has_complete_plan(log) && !has_complete_plan(log.without(entry_index));
}

}  // namespace planrec
