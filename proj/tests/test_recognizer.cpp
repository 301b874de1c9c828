#include <catch_amalgamated.hpp>

#include "planrec/oracle.hpp"
#include "planrec/recognizer.hpp"
#include "support.hpp"

using namespace planrec;
using namespace planrec::test;

namespace {

RecognizerParams phatt(std::size_t max_exogenous = 2) {
    auto p = RecognizerParams::for_mode(Mode::phatt);
    p.max_exogenous = max_exogenous;
    return p;
}

// Support counts computed from an explanation list rather than a recognizer state.
std::map<SymbolId, std::size_t> frontier_union(const std::vector<Explanation>& xs, const PlanLibrary& lib,
                                               std::size_t max_depth) {
    std::map<SymbolId, std::size_t> out;
    for (const auto& e : xs) {
        std::set<SymbolId> here;
        for (const auto& p : e.plans)
            for (SymbolId t : frontier(p, lib, max_depth)) here.insert(t);
        for (SymbolId t : here) ++out[t];
    }
    return out;
}

}  // namespace

TEST_CASE("init") {
    PlanLibrary lib = example_library();
    auto s = init(lib, RecognizerParams{});
    REQUIRE(s.candidates.size() == 1);
    CHECK(s.candidates[0].plans.empty());
    CHECK(s.obs_so_far.empty());

    auto shared = std::make_shared<const PlanLibrary>(lib);
    CHECK(init(shared, RecognizerParams{}) == init(shared, RecognizerParams{}));

    RecognizerParams bad;
    bad.max_depth = 0;
    CHECK_THROWS_AS(init(lib, bad), ConfigError);
    bad = RecognizerParams{};
    bad.max_explanations = 0;
    CHECK_THROWS_AS(init(lib, bad), ConfigError);
}

TEST_CASE("first observation starts a plan") {
    PlanLibrary lib = example_library();
    auto s = observe(init(lib, phatt(0)), "login");
    auto obs = ObservationSequence::from_names(lib, {"login"});
    CHECK(keys(s.candidates) == keys(brute_force_recognize(lib, obs, phatt(0))));

    bool found = false;
    for (const auto& e : s.candidates) {
        if (e.plans.size() != 1) continue;
        const PlanTree& p = e.plans[0];
        if (p.goal() == lib.id_of("AddAccount") && p.node(0).rule == rule_of(lib, "AddAccount", 0) &&
            frontier(p, lib, 10) == std::set<SymbolId>{lib.id_of("addName")})
            found = true;
    }
    CHECK(found);
    CHECK(unsound(s.candidates, s.obs_so_far, lib).empty());
}

TEST_CASE("unexplainable observation leaves the state alone") {
    PlanLibrary lib = example_library();
    auto s = observe(init(lib, phatt(0)), "home");
    auto before = s;
    try {
        observe(s, "addCredit");
        FAIL("expected a recognition error");
    } catch (const RecognitionError& e) {
        CHECK(e.obs_index() == 1);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("unexplainable observation"));
    }
    CHECK(s == before);
    CHECK_THROWS_AS(observe(s, "nope"), ConfigError);
    CHECK_THROWS_AS(observe(s, "Buy"), ConfigError);
}

TEST_CASE("worked example") {
    PlanLibrary lib = example_library();
    auto obs = worked_example_obs(lib);
    auto xs = recognize(lib, obs, phatt(0));
    REQUIRE(xs.size() == 2);
    CHECK(keys(xs).count(three_plan_explanation(lib).key));
    CHECK(unsound(xs, obs, lib).empty());

    // Buy waits on transfer under its transfer rule.
    auto three = three_plan_explanation(lib);
    std::set<SymbolId> next;
    for (const auto& p : three.plans)
        for (SymbolId t : frontier(p, lib, 10)) next.insert(t);
    CHECK(next.count(lib.id_of("transfer")));

    auto cradle = recognize(lib, obs, RecognizerParams{});
    CHECK(unsound(cradle, obs, lib).empty());
}

TEST_CASE("empty sequence") {
    PlanLibrary lib = example_library();
    auto xs = recognize(lib, ObservationSequence{}, RecognizerParams{});
    REQUIRE(xs.size() == 1);
    CHECK(xs[0].plans.empty());
    CHECK(xs[0].exogenous.empty());
}

TEST_CASE("prediction") {
    PlanLibrary lib = example_library();
    auto s = fold(lib, ObservationSequence::from_names(lib, {"home"}), phatt());
    auto pred = predict_next(s);
    CHECK(pred[lib.id_of("transfer")] >= 1);
    CHECK(pred[lib.id_of("payment")] >= 1);
    auto brute = brute_force_recognize(lib, s.obs_so_far, phatt());
    CHECK(pred == frontier_union(brute, lib, 10));

    auto closed = fold(lib, ObservationSequence::from_names(lib, {"home", "payment", "success"}), phatt(0));
    for (const auto& e : closed.candidates) CHECK(explanation_stats(e).no_open);
    CHECK(predict_next(closed).empty());

    auto ranked = ranked_predictions(s);
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].second >= ranked[i].second);
}

TEST_CASE("random sequences: subset and batch/streaming agreement and determinism") {
    std::mt19937_64 rng(31337);
    std::size_t capped = 0;
    for (int i = 0; i < 120; ++i) {
        PlanLibrary lib = random_library(rng, {12, i % 4 == 0});
        auto obs = plausible_sequence(lib, rng, 5);
        RecognizerParams base;
        base.max_depth = 4;
        base.max_exogenous = static_cast<std::size_t>(i % 3);
        base.max_explanations = 200'000;
        base.filter.apply_each_step = i % 2 == 0;

        RecognizerParams ph = base;
        ph.filters_enabled = false;
        std::vector<Explanation> p_out, c_out;
        try {
            p_out = recognize(lib, obs, ph);
        } catch (const RecognitionError&) {
        }
        try {
            c_out = recognize(lib, obs, base);
        } catch (const RecognitionError&) {
        }
        INFO("case " << i);
        if (p_out.size() == base.max_explanations) {
            ++capped;  // truncated, so not the full set
            continue;
        }
        auto pk = keys(p_out);
        for (const auto& e : c_out) CHECK(pk.count(e.key));
        CHECK(unsound(p_out, obs, lib).empty());
        CHECK(unsound(c_out, obs, lib).empty());

        if (p_out.empty()) continue;
        auto shared = std::make_shared<const PlanLibrary>(lib);
        RecognizerState s = init(shared, ph);
        for (const auto& o : obs.items) s = observe(s, o.action, o.source);
        CHECK(finish(s) == p_out);
        CHECK(recognize(lib, obs, ph) == p_out);
        CHECK(p_out.size() == pk.size());
        for (std::size_t k = 1; k < p_out.size(); ++k) CHECK(preferred(p_out[k - 1], p_out[k]));
    }
    CHECK(capped <= 5);
}

TEST_CASE("hard cap keeps the most preferred candidates") {
    PlanLibrary lib = example_library();
    auto obs = ObservationSequence::from_names(lib, {"home", "login"});
    auto p = phatt();
    auto full = recognize(lib, obs, p);
    REQUIRE(full.size() > 3);
    p.max_explanations = 3;
    auto capped = recognize(lib, obs, p);
    CHECK(capped.size() == 3);
    CHECK(unsound(capped, obs, lib).empty());
    // The empty-exogenous candidates come first in both.
    CHECK(capped[0] == full[0]);
}
