#include <catch_amalgamated.hpp>

#include "planrec/library.hpp"
#include "support.hpp"

using namespace planrec;
using planrec::test::example_library;

namespace {

bool has_warning(const ValidationReport& r, std::string_view code) {
    for (const auto& w : r.warnings)
        if (w.code == code) return true;
    return false;
}

// Reachability closure over "appears as a child of", independent of the library's DFS.
std::set<SymbolId> recursive_by_closure(const PlanLibrary& lib) {
    std::size_t n = lib.symbol_count();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const Rule& r : lib.rules())
        for (SymbolId c : r.children) reach[r.head][c] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::set<SymbolId> out;
    for (SymbolId i = 0; i < n; ++i)
        if (reach[i][i]) out.insert(i);
    return out;
}

LibraryDraft tiny() {
    LibraryDraft d;
    d.terminals = {"a", "b"};
    d.goals = {"G"};
    d.rules = {{"G", {"a", "b"}, {}}};
    return d;
}

}  // namespace

TEST_CASE("example library parses with the expected shape") {
    PlanLibrary lib = example_library();
    CHECK(lib.terminals().size() == 10);
    CHECK(lib.non_terminals().size() == 2);
    CHECK(lib.goals().size() == 2);
    CHECK(lib.rules().size() == 4);
    CHECK(lib.is_goal(lib.id_of("Buy")));
    CHECK(lib.is_terminal(lib.id_of("login")));

    RuleId aa0 = lib.rules_for(lib.id_of("AddAccount"))[0];
    CHECK(lib.precedes(aa0, 0, 1));
    CHECK(lib.precedes(aa0, 0, 2));  // through the transitive closure
    CHECK_FALSE(lib.precedes(aa0, 2, 0));
    CHECK(lib.predecessors(aa0, 2).size() == 2);
    CHECK(lib.min_derivation_depth(lib.id_of("Buy")) == 1u);
    CHECK(lib.first_terminals(lib.id_of("Buy"), 10) == std::set<SymbolId>{lib.id_of("home")});
    CHECK(detect_recursion(lib).empty());
}

TEST_CASE("validation errors carry their codes") {
    SECTION("non-terminal without rules") {
        auto d = tiny();
        d.non_terminals = {"Lonely"};
        auto r = build_library(d);
        CHECK_FALSE(r.ok());
        CHECK(r.report.has_error("no-rules"));
        CHECK_THAT(r.report.render(), Catch::Matchers::ContainsSubstring("non-terminal has no rules: 'Lonely'"));
    }
    SECTION("ordering cycle") {
        auto d = tiny();
        d.rules[0].ordering = {{OrderRef{std::size_t{0}}, OrderRef{std::size_t{1}}},
                               {OrderRef{std::size_t{1}}, OrderRef{std::size_t{0}}}};
        auto r = build_library(d);
        CHECK(r.report.has_error("ordering-cycle"));
        CHECK_THAT(r.report.render(), Catch::Matchers::ContainsSubstring("ordering cycle"));
    }
    SECTION("ordering position out of range") {
        auto d = tiny();
        d.rules[0].ordering = {{OrderRef{std::size_t{0}}, OrderRef{std::size_t{5}}}};
        CHECK(build_library(d).report.has_error("ordering-out-of-range"));
    }
    SECTION("ambiguous named endpoint") {
        auto d = tiny();
        d.rules[0].children = {"a", "a", "b"};
        d.rules[0].ordering = {{OrderRef{std::string("a")}, OrderRef{std::string("b")}}};
        CHECK(build_library(d).report.has_error("ambiguous-ordering"));
    }
    SECTION("undeclared child") {
        auto d = tiny();
        d.rules[0].children = {"a", "zzz"};
        CHECK(build_library(d).report.has_error("undeclared-symbol"));
    }
    SECTION("terminal as rule head") {
        auto d = tiny();
        d.rules.push_back({"a", {"b"}, {}});
        CHECK(build_library(d).report.has_error("terminal-head"));
    }
    SECTION("goal that is a terminal") {
        auto d = tiny();
        d.goals.push_back("a");
        CHECK(build_library(d).report.has_error("goal-not-nonterminal"));
    }
    SECTION("empty rule") {
        auto d = tiny();
        d.rules.push_back({"G", {}, {}});
        CHECK(build_library(d).report.has_error("empty-rule"));
    }
    SECTION("duplicate symbol") {
        auto d = tiny();
        d.terminals.push_back("a");
        CHECK(build_library(d).report.has_error("duplicate-symbol"));
    }
    SECTION("malformed document") {
        CHECK(parse_library("{not json").report.has_error("malformed-document"));
        CHECK_THROWS_AS(load_library("[]"), LibraryError);
    }
}

TEST_CASE("recursion is a warning, not an error") {
    auto d = tiny();
    d.rules.push_back({"G", {"a", "G"}, {}});
    auto r = build_library(d);
    REQUIRE(r.ok());
    CHECK(has_warning(r.report, "recursive"));
    CHECK(detect_recursion(*r.library) == std::set<SymbolId>{r.library->id_of("G")});
}

TEST_CASE("underivable non-terminal is flagged") {
    auto d = tiny();
    d.non_terminals = {"Loop"};
    d.rules.push_back({"Loop", {"Loop"}, {}});
    auto r = build_library(d);
    REQUIRE(r.ok());
    CHECK(has_warning(r.report, "underivable"));
    CHECK_FALSE(r.library->min_derivation_depth(r.library->id_of("Loop")).has_value());
}

TEST_CASE("recursion detection agrees with a transitive-closure oracle") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        // Random graphs with arbitrary back-references, up to 15 symbols.
        std::size_t n_nt = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
        std::size_t n_t = std::uniform_int_distribution<std::size_t>(1, 15 - n_nt)(rng);
        LibraryDraft d;
        for (std::size_t k = 0; k < n_t; ++k) d.terminals.push_back("t" + std::to_string(k));
        for (std::size_t k = 0; k < n_nt; ++k) d.non_terminals.push_back("N" + std::to_string(k));
        d.goals = {"N0"};
        for (std::size_t k = 0; k < n_nt; ++k) {
            d.rules.push_back({d.non_terminals[k], {d.terminals[0]}, {}});
            std::size_t extra = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
            for (std::size_t e = 0; e < extra; ++e) {
                RuleDraft r{d.non_terminals[k], {}, {}};
                std::size_t len = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
                for (std::size_t c = 0; c < len; ++c) {
                    if (std::uniform_int_distribution<int>(0, 1)(rng))
                        r.children.push_back(d.non_terminals[std::uniform_int_distribution<std::size_t>(0, n_nt - 1)(rng)]);
                    else
                        r.children.push_back(d.terminals[std::uniform_int_distribution<std::size_t>(0, n_t - 1)(rng)]);
                }
                d.rules.push_back(std::move(r));
            }
        }
        auto built = build_library(d);
        REQUIRE(built.ok());
        CHECK(detect_recursion(*built.library) == recursive_by_closure(*built.library));
        CHECK(has_warning(built.report, "recursive") == !recursive_by_closure(*built.library).empty());
    }
}

TEST_CASE("serialize then parse gives an equivalent library") {
    PlanLibrary lib = example_library();
    PlanLibrary again = load_library(serialize_library(lib));
    CHECK(equivalent(lib, again));
    CHECK(serialize_library(again) == serialize_library(lib));

    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        PlanLibrary r = planrec::test::random_library(rng, {12, i % 3 == 0});
        CHECK(equivalent(r, load_library(serialize_library(r))));
    }
}

TEST_CASE("equivalence notices a changed ordering") {
    auto d = tiny();
    PlanLibrary a = *build_library(d).library;
    d.rules[0].ordering = {{OrderRef{std::size_t{0}}, OrderRef{std::size_t{1}}}};
    PlanLibrary b = *build_library(d).library;
    CHECK_FALSE(equivalent(a, b));
}
