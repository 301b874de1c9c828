#pragma once

// Subcommand implementations behind the planrec CLI. Each returns an exit
// code and writes to the given streams, so tests can drive them in-process.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "planrec/errors.hpp"
#include "planrec/explanation.hpp"
#include "planrec/library.hpp"
#include "planrec/metrics.hpp"
#include "planrec/preprocess.hpp"
#include "planrec/recognizer.hpp"
#include "planrec/simulator.hpp"

namespace planrec {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRecognition = 3, kExitIo = 4 };

enum class OutputFormat { text, json, dot };

struct RunConfig {
    std::string library_path;
    std::string mapping_path;
    Mode mode = Mode::cradle;
    RecognizerParams params;
    OutputFormat format = OutputFormat::text;
};

inline Mode parse_mode(const std::string& s) {
    if (s == "cradle" || s == "CRADLE") return Mode::cradle;
    if (s == "phatt" || s == "PHATT") return Mode::phatt;
    throw ConfigError("unknown mode '" + s + "' (expected cradle or phatt)");
}

inline OutputFormat parse_format(const std::string& s) {
    if (s == "text") return OutputFormat::text;
    if (s == "json") return OutputFormat::json;
    if (s == "dot") return OutputFormat::dot;
    throw ConfigError("unknown format '" + s + "' (expected text, json or dot)");
}

/// Overlays a JSON run-configuration file onto `cfg`. Keys: library, mapping, mode,
/// format, max_depth, max_exogenous, max_explanations, filters{...}.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::string text = read_file(path);
    try {
        auto j = nlohmann::json::parse(text);
        std::filesystem::path base = std::filesystem::path(path).parent_path();
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return (fp.is_absolute() || base.empty() ? fp : base / fp).string();
        };
        if (j.contains("library")) cfg.library_path = resolve(j.at("library").get<std::string>());
        if (j.contains("mapping")) cfg.mapping_path = resolve(j.at("mapping").get<std::string>());
        if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
        if (j.contains("format")) cfg.format = parse_format(j.at("format").get<std::string>());
        if (j.contains("max_depth")) cfg.params.max_depth = j.at("max_depth").get<std::size_t>();
        if (j.contains("max_exogenous")) cfg.params.max_exogenous = j.at("max_exogenous").get<std::size_t>();
        if (j.contains("max_explanations")) cfg.params.max_explanations = j.at("max_explanations").get<std::size_t>();
        if (j.contains("filters")) {
            const auto& f = j.at("filters");
            FilterConfig& fc = cfg.params.filter;
            fc.enable_plans_leq_avg = f.value("plans_leq_avg", fc.enable_plans_leq_avg);
            fc.enable_frontier_leq_avg = f.value("frontier_leq_avg", fc.enable_frontier_leq_avg);
            fc.enable_distinct_plans = f.value("distinct_plans", fc.enable_distinct_plans);
            fc.distinct_plans_max = f.value("distinct_plans_max", fc.distinct_plans_max);
            fc.count_raw_plans = f.value("count_raw_plans", fc.count_raw_plans);
            fc.apply_each_step = f.value("apply_each_step", fc.apply_each_step);
            fc.retain_best_when_empty = f.value("retain_best_when_empty", fc.retain_best_when_empty);
            fc.per_exogenous_stratum = f.value("per_exogenous_stratum", fc.per_exogenous_stratum);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed run configuration '" + path + "': " + e.what());
    }
}

inline PlanLibrary load_library_file(const std::string& path) {
    if (path.empty()) throw ConfigError("no plan library given (--library)");
    return load_library(read_file(path));
}

inline LandmarkMapping load_mapping_file(const std::string& path, const PlanLibrary& lib) {
    if (path.empty()) throw ConfigError("no landmark mapping given (--mapping)");
    return parse_mapping(read_file(path), lib);
}

/// Runs `body`, turning exceptions into the documented exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const LibraryError& e) {
        err << e.report().render();
        return kExitValidation;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const RecognitionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitRecognition;
    } catch (const GuardExceeded& e) {
        err << "error: " << e.what() << '\n';
        return kExitRecognition;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

inline int cmd_validate(const std::string& library_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ParseResult r = parse_library(read_file(library_path));
        if (!r.ok()) {
            err << r.report.render();
            return int{kExitValidation};
        }
        err << r.report.render();  // warnings only
        const PlanLibrary& lib = *r.library;
        out << library_path << ": ok (" << lib.terminals().size() << " terminals, " << lib.non_terminals().size()
            << " non-terminals, " << lib.goals().size() << " goals, " << lib.rules().size() << " rules)\n";
        auto rec = detect_recursion(lib);
        if (!rec.empty()) {
            out << "recursive:";
            for (SymbolId s : rec) out << ' ' << lib.name(s);
            out << '\n';
        }
        return int{kExitOk};
    });
}

namespace detail {

struct LoadedRun {
    std::shared_ptr<const PlanLibrary> library;
    LandmarkMapping mapping;
    SessionLog log;
};

inline LoadedRun load_run(const RunConfig& cfg, const std::string& session_path) {
    LoadedRun r;
    r.library = std::make_shared<const PlanLibrary>(load_library_file(cfg.library_path));
    r.mapping = load_mapping_file(cfg.mapping_path, *r.library);
    r.log = load_session(session_path);
    cfg.params.validate();
    return r;
}

inline nlohmann::json observations_json(const ObservationSequence& obs, const PlanLibrary& lib) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < obs.size(); ++i)
        arr.push_back({{"index", i}, {"action", lib.name(obs[i].action)}, {"source", obs[i].source}});
    return arr;
}

}  // namespace detail

inline int cmd_recognize(const RunConfig& cfg, const std::string& session_path, std::ostream& out,
                         std::ostream& err) {
    return guarded(err, [&] {
        auto loaded = detail::load_run(cfg, session_path);
        const PlanLibrary& lib = *loaded.library;
        SessionRun run = run_session(loaded.library, loaded.mapping, loaded.log, cfg.params, cfg.mode,
                                     std::filesystem::path(session_path).stem().string());
        if (run.failed_at)
            err << "warning: " << run.failure << "; showing the explanations of the first " << *run.failed_at
                << " observations\n";

        const SessionReport& rep = run.report;
        switch (cfg.format) {
            case OutputFormat::json: {
                nlohmann::json j;
                j["mode"] = to_string(cfg.mode);
                j["observations"] = detail::observations_json(run.observations, lib);
                j["explanations"] = nlohmann::json::array();
                for (const auto& e : run.explanations) j["explanations"].push_back(explanation_to_json(e, lib));
                j["report"] = to_json(rep);
                if (run.failed_at) j["error"] = {{"obs_index", *run.failed_at}, {"message", run.failure}};
                out << j.dump(2) << '\n';
                break;
            }
            case OutputFormat::dot:
                out << render_dot(run.explanations, lib, run.state.obs_so_far);
                break;
            case OutputFormat::text: {
                out << "mode: " << to_string(cfg.mode) << "\nobservations (" << run.observations.size() << " from "
                    << rep.raw_entry_count << " entries):";
                for (const auto& o : run.observations.items) out << ' ' << lib.name(o.action);
                out << "\nexplanations: " << rep.explanation_count << "  full plan: " << rep.full_plan_count
                    << "  no open: " << rep.no_open_count << '\n';
                for (std::size_t i = 0; i < run.explanations.size(); ++i) {
                    const auto& e = run.explanations[i];
                    auto s = explanation_stats(e);
                    out << "\nexplanation " << i + 1 << ": plans=" << s.num_plans << " frontier=" << s.num_frontier_nodes
                        << " goals=" << s.num_distinct_goals << " exogenous=" << s.num_exogenous
                        << (s.has_full_plan ? " full-plan" : "") << (s.no_open ? " no-open" : "") << '\n';
                    out << render_text(e, lib, cfg.params.max_depth);
                }
                break;
            }
        }
        return run.failed_at ? int{kExitRecognition} : int{kExitOk};
    });
}

inline int cmd_predict(const RunConfig& cfg, const std::string& session_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (cfg.format == OutputFormat::dot) throw ConfigError("predict supports text and json output only");
        auto loaded = detail::load_run(cfg, session_path);
        SessionRun run = run_session(loaded.library, loaded.mapping, loaded.log, cfg.params, cfg.mode);
        if (run.failed_at) err << "warning: " << run.failure << "; predicting from the last explainable prefix\n";
        auto ranked = ranked_predictions(run.state);
        if (cfg.format == OutputFormat::json) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& [name, n] : ranked) j.push_back({{"action", name}, {"support", n}});
            out << nlohmann::json{{"candidates", run.state.candidates.size()}, {"predictions", j}}.dump(2) << '\n';
        } else {
            for (const auto& [name, n] : ranked) out << name << '\t' << n << '\n';
        }
        return run.failed_at ? int{kExitRecognition} : int{kExitOk};
    });
}

struct SimulateOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string library_path;  // overrides the config when set
    std::string mapping_path;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.out_dir.empty()) throw ConfigError("no output directory given (--out)");
        CorpusConfig cfg =
            parse_corpus_config(read_file(opt.config_path), std::filesystem::path(opt.config_path).parent_path());
        if (opt.seed) cfg.seed = *opt.seed;
        if (!opt.library_path.empty()) cfg.library_path = opt.library_path;
        if (!opt.mapping_path.empty()) cfg.mapping_path = opt.mapping_path;
        PlanLibrary lib = load_library_file(cfg.library_path);
        LandmarkMapping mapping = load_mapping_file(cfg.mapping_path, lib);
        auto sessions = generate_corpus(lib, mapping, cfg);
        write_corpus(opt.out_dir, sessions, lib, mapping);
        out << "wrote " << sessions.size() << " sessions to " << opt.out_dir << '\n';
        return int{kExitOk};
    });
}

struct BenchOptions {
    std::string corpus_dir;
    std::size_t workers = 1;
    std::string csv_path;  // optional CSV export of the table
};

struct BenchResult {
    std::vector<SessionReport> reports;  // CRADLE and PHATT report per session, in manifest order
    CorpusReport corpus;
    std::size_t subset_violations = 0;   // sessions whose CRADLE output is not within the PHATT output
};

/// Runs every session of a corpus directory in both modes.
inline BenchResult run_bench(const std::string& corpus_dir, const RunConfig& cfg, std::size_t workers) {
    namespace fs = std::filesystem;
    fs::path dir(corpus_dir);
    auto manifest_text = read_file((dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed corpus manifest: ") + e.what());
    }
    std::string lib_path = cfg.library_path.empty() ? (dir / manifest.value("library", "library.json")).string()
                                                    : cfg.library_path;
    std::string map_path = cfg.mapping_path.empty() ? (dir / manifest.value("mapping", "mapping.json")).string()
                                                    : cfg.mapping_path;
    auto lib = std::make_shared<const PlanLibrary>(load_library_file(lib_path));
    LandmarkMapping mapping = load_mapping_file(map_path, *lib);
    cfg.params.validate();

    struct Item {
        std::string id, type, path;
    };
    std::vector<Item> items;
    for (const auto& s : manifest.value("sessions", nlohmann::json::array()))
        items.push_back({s.at("id").get<std::string>(), s.value("type", std::string("session")),
                         (dir / s.at("session").get<std::string>()).string()});
    if (items.empty()) throw ConfigError("corpus '" + corpus_dir + "' has no sessions");

    std::vector<SessionReport> cradle(items.size()), phatt(items.size());
    std::vector<char> subset_ok(items.size(), 1);
    std::vector<std::string> errors(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                SessionLog log = load_session(items[i].path);
                auto c = run_session(lib, mapping, log, cfg.params, Mode::cradle, items[i].id, items[i].type);
                auto p = run_session(lib, mapping, log, cfg.params, Mode::phatt, items[i].id, items[i].type);
                cradle[i] = c.report;
                phatt[i] = p.report;
                // Only comparable when both runs covered the same observations.
                if (!c.failed_at && !p.failed_at) {
                    std::set<std::string> keys;
                    for (const auto& e : p.explanations) keys.insert(e.key);
                    for (const auto& e : c.explanations) subset_ok[i] = subset_ok[i] && keys.count(e.key);
                }
            } catch (const std::exception& e) {
                errors[i] = items[i].path + ": " + e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::max<std::size_t>(workers, 1); ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (!e.empty()) throw IoError(e);

    BenchResult out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.reports.push_back(cradle[i]);
        out.reports.push_back(phatt[i]);
        out.subset_violations += !subset_ok[i];
    }
    out.corpus = corpus_report(out.reports);
    return out;
}

inline int cmd_bench(const BenchOptions& opt, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        BenchResult res = run_bench(opt.corpus_dir, cfg, opt.workers);
        if (!opt.csv_path.empty()) write_text_file(opt.csv_path, render_csv(res.corpus));
        if (cfg.format == OutputFormat::json) {
            nlohmann::json j = to_json(res.corpus);
            j["subset_violations"] = res.subset_violations;
            j["sessions"] = nlohmann::json::array();
            for (const auto& r : res.reports) j["sessions"].push_back(to_json(r));
            out << j.dump(2) << '\n';
        } else {
            out << render_table(res.corpus);
            out << "CRADLE-within-PHATT violations: " << res.subset_violations << '\n';
        }
        return int{kExitOk};
    });
}

}  // namespace planrec
