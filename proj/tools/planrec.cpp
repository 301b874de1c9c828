// planrec: plan-library validation, session recognition, next-action
// prediction, synthetic corpus generation and benchmarking.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "planrec/commands.hpp"

int main(int argc, char** argv) {
    using namespace planrec;

    CLI::App app{"Hierarchical plan recognition over click-stream sessions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string library, mapping, config_path, mode = "cradle", format = "text", csv;
    std::optional<std::size_t> max_exogenous, max_depth, max_explanations;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;

    app.add_option("--library", library, "Plan library (JSON)")->envname("PLANREC_LIBRARY");
    app.add_option("--mapping", mapping, "Page label to terminal mapping (JSON)")->envname("PLANREC_MAPPING");
    app.add_option("--config", config_path, "Run configuration file (JSON)")->envname("PLANREC_CONFIG");
    app.add_option("--mode", mode, "cradle (filtered) or phatt (unfiltered)")
        ->envname("PLANREC_MODE")
        ->check(CLI::IsMember({"cradle", "phatt"}));
    app.add_option("--max-exogenous", max_exogenous, "Observations that may be left unexplained")
        ->envname("PLANREC_MAX_EXOGENOUS");
    app.add_option("--max-depth", max_depth, "Rule expansions allowed on a root-to-leaf path")
        ->envname("PLANREC_MAX_DEPTH");
    app.add_option("--max-explanations", max_explanations, "Hard cap on the candidate set")
        ->envname("PLANREC_MAX_EXPLANATIONS");
    app.add_option("--format", format, "text, json or dot")
        ->envname("PLANREC_FORMAT")
        ->check(CLI::IsMember({"text", "json", "dot"}));
    app.add_option("--seed", seed, "Random seed")->envname("PLANREC_SEED");
    app.add_option("--workers", workers, "Parallel sessions in bench")->envname("PLANREC_WORKERS");

    std::string library_arg, session_path, corpus_config, out_dir, corpus_dir;

    auto* validate = app.add_subcommand("validate", "Check a plan library");
    validate->add_option("library", library_arg, "Plan library (defaults to --library)");

    auto* recognize = app.add_subcommand("recognize", "Explain a session");
    recognize->add_option("session", session_path, "Session log (CSV or JSON)")->required();

    auto* predict = app.add_subcommand("predict", "Rank the next expected actions of a session");
    predict->add_option("session", session_path, "Session log (CSV or JSON)")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus");
    simulate->add_option("config", corpus_config, "Corpus configuration (JSON)")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* bench = app.add_subcommand("bench", "Run a corpus in both modes and tabulate");
    bench->add_option("corpus", corpus_dir, "Corpus directory written by simulate")->required();
    bench->add_option("--csv", csv, "Also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    auto run_config = [&](RunConfig& cfg) -> int {
        return guarded(std::cerr, [&] {
            if (!config_path.empty()) apply_config_file(cfg, config_path);
            if (!library.empty()) cfg.library_path = library;
            if (!mapping.empty()) cfg.mapping_path = mapping;
            if (app.count("--mode") || std::getenv("PLANREC_MODE") || config_path.empty()) cfg.mode = parse_mode(mode);
            if (app.count("--format") || std::getenv("PLANREC_FORMAT") || config_path.empty())
                cfg.format = parse_format(format);
            if (max_exogenous) cfg.params.max_exogenous = *max_exogenous;
            if (max_depth) cfg.params.max_depth = *max_depth;
            if (max_explanations) cfg.params.max_explanations = *max_explanations;
            cfg.params.filters_enabled = cfg.mode == Mode::cradle;
            return int{kExitOk};
        });
    };

    if (*validate) {
        std::string path = library_arg.empty() ? library : library_arg;
        if (path.empty()) {
            std::cerr << "error: no plan library given\n";
            return kExitValidation;
        }
        return cmd_validate(path, std::cout, std::cerr);
    }
    if (*simulate) {
        SimulateOptions opt{corpus_config, out_dir, seed, library, mapping};
        return cmd_simulate(opt, std::cout, std::cerr);
    }

    RunConfig cfg;
    if (int rc = run_config(cfg); rc != kExitOk) return rc;
    if (*recognize) return cmd_recognize(cfg, session_path, std::cout, std::cerr);
    if (*predict) return cmd_predict(cfg, session_path, std::cout, std::cerr);
    if (*bench) return cmd_bench(BenchOptions{corpus_dir, workers, csv}, cfg, std::cout, std::cerr);
    return kExitValidation;
}
