#include <catch_amalgamated.hpp>

#include "planrec/preprocess.hpp"
#include "support.hpp"

using namespace planrec;
using namespace planrec::test;

namespace {

std::vector<std::string> names(const PlanLibrary& lib, const ObservationSequence& s) {
    std::vector<std::string> out;
    for (const auto& o : s.items) out.push_back(lib.name(o.action));
    return out;
}

SessionLog log_of(std::vector<std::string> labels) {
    std::vector<SessionEntry> es;
    for (std::size_t i = 0; i < labels.size(); ++i)
        es.push_back({static_cast<std::int64_t>(1000 + i), "u", labels[i]});
    return SessionLog(es);
}

}  // namespace

TEST_CASE("session csv") {
    PlanLibrary lib = example_library();
    auto log = load_session(data_path("example_session.csv"));
    CHECK(log.size() == 8);
    auto m = example_mapping(lib);
    CHECK(names(lib, preprocess(log, m)) ==
          std::vector<std::string>{"home", "login", "addName", "login", "addCredit"});
    CHECK(parse_session_csv(write_session_csv(log)) == log);

    CHECK(load_session(data_path("empty_session.csv")).size() == 0);
    CHECK_THROWS_AS(parse_session_csv(""), IoError);
    CHECK_THROWS_AS(parse_session_csv("time,who,what\n1,u,/home\n"), IoError);
    CHECK_THROWS_AS(parse_session_csv("timestamp,user,page_label\nabc,u,/home\n"), IoError);
    CHECK_THROWS_AS(parse_session_csv("timestamp,user,page_label\n-5,u,/home\n"), IoError);
    CHECK_THROWS_AS(parse_session_csv("timestamp,user,page_label\n5,u,\n"), IoError);
    CHECK_THROWS_AS(load_session(data_path("missing.csv")), IoError);

    // Labels may contain commas; everything after the second one is the label.
    auto odd = parse_session_csv("timestamp,user,page_label\r\n7,u,/search?q=a,b\r\n");
    CHECK(odd.entries()[0].page_label == "/search?q=a,b");
}

TEST_CASE("session json") {
    auto log = parse_session_json(R"([{"timestamp": 5, "user": "u", "page_label": "/b"},
                                      {"timestamp": 3, "user": "u", "page_label": "/a"}])");
    REQUIRE(log.size() == 2);
    CHECK(log.entries()[0].page_label == "/a");
    CHECK_THROWS_AS(parse_session_json(R"([{"timestamp": 5}])"), IoError);
}

TEST_CASE("equal timestamps keep file order") {
    auto log = parse_session_csv("timestamp,user,page_label\n9,u,/z\n4,u,/b\n4,u,/a\n4,u,/c\n");
    std::vector<std::string> got;
    for (const auto& e : log.entries()) got.push_back(e.page_label);
    CHECK(got == std::vector<std::string>{"/b", "/a", "/c", "/z"});
}

TEST_CASE("mapping") {
    PlanLibrary lib = example_library();
    auto m = example_mapping(lib);
    CHECK(m.size() == 20);
    CHECK(m.lookup("/m/login") == lib.id_of("login"));
    CHECK_FALSE(m.lookup("/about"));
    CHECK(parse_mapping(write_mapping(m, lib), lib).pairs() == m.pairs());
    CHECK_THROWS_AS(parse_mapping(R"({"/x": "nope"})", lib), ConfigError);
    CHECK_THROWS_AS(parse_mapping(R"({"/x": "Buy"})", lib), ConfigError);
    CHECK_THROWS_AS(parse_mapping(R"(["/x"])", lib), ConfigError);
    CHECK(map_entries(log_of({"/home", "/login"}), LandmarkMapping{}).empty());
}

TEST_CASE("sift and dedup examples") {
    PlanLibrary lib = example_library();
    auto m = example_mapping(lib);
    auto mapped = map_entries(log_of({"/about", "/home", "/help", "/checkout/payment", "/news"}), m);
    CHECK(names(lib, mapped) == std::vector<std::string>{"home", "payment"});
    CHECK(mapped[0].source == 1);
    CHECK(mapped[1].source == 3);

    auto seq = [&](std::vector<std::string> n) { return ObservationSequence::from_names(lib, n); };
    CHECK(names(lib, dedup_consecutive(seq({"home", "home", "payment"}))) ==
          std::vector<std::string>{"home", "payment"});
    CHECK(names(lib, dedup_consecutive(seq({"login", "addName", "login"}))) ==
          std::vector<std::string>{"login", "addName", "login"});
}

TEST_CASE("dedup laws on random sequences") {
    PlanLibrary lib = example_library();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        // A small alphabet makes runs common.
        ObservationSequence s;
        std::size_t len = std::uniform_int_distribution<std::size_t>(0, 30)(rng);
        for (std::size_t k = 0; k < len; ++k)
            s.items.push_back({lib.terminals()[std::uniform_int_distribution<std::size_t>(0, 2)(rng)], k});
        auto once = dedup_consecutive(s);
        CHECK(dedup_consecutive(once) == once);
        CHECK(once.size() <= s.size());
        for (std::size_t k = 1; k < once.size(); ++k) CHECK(once[k].action != once[k - 1].action);
        // Kept items are the first of their runs.
        for (const auto& o : once.items) {
            std::size_t src = o.source;
            CHECK((src == 0 || s[src - 1].action != o.action));
        }
    }
}

TEST_CASE("map_entries laws on random logs") {
    PlanLibrary lib = example_library();
    auto m = example_mapping(lib);
    std::vector<std::string> labels;
    for (const auto& [l, t] : m.pairs()) labels.push_back(l);
    for (std::string f : {"/a", "/b", "/c", "/d", "/e", "/f"}) labels.push_back(f);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        std::vector<SessionEntry> es;
        std::size_t len = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
        for (std::size_t k = 0; k < len; ++k)
            es.push_back({std::uniform_int_distribution<std::int64_t>(0, 20)(rng), "u",
                          labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)]});
        SessionLog log(es);
        for (std::size_t k = 1; k < log.size(); ++k)
            CHECK(log.entries()[k - 1].timestamp <= log.entries()[k].timestamp);

        auto mapped = map_entries(log, m);
        // Order-preserving: sources strictly increase, and each maps its own label.
        for (std::size_t k = 0; k < mapped.size(); ++k) {
            if (k > 0) CHECK(mapped[k - 1].source < mapped[k].source);
            CHECK(m.lookup(log.entries()[mapped[k].source].page_label) == mapped[k].action);
        }
        std::size_t expected = 0;
        for (const auto& e : log.entries()) expected += m.lookup(e.page_label).has_value();
        CHECK(mapped.size() == expected);
        CHECK(preprocess(log, m).size() <= mapped.size());
        CHECK(preprocess(log, m) == preprocess(SessionLog(es), m));
    }
}

TEST_CASE("landmarks") {
    PlanLibrary lib = example_library();
    auto m = example_mapping(lib);
    auto log = log_of({"/account/login", "/about", "/account/profile/name", "/account/profile/name",
                       "/account/cards/add"});
    RecognizerParams p;
    p.max_exogenous = 0;
    CHECK(is_landmark(4, log, m, lib, p));     // addCredit completes the only plan
    CHECK(is_landmark(0, log, m, lib, p));
    CHECK_FALSE(is_landmark(1, log, m, lib, p));  // unmapped
    CHECK_FALSE(is_landmark(3, log, m, lib, p));  // one of two consecutive duplicates
    CHECK_FALSE(is_landmark(2, log, m, lib, p));
    CHECK_THROWS_AS(is_landmark(9, log, m, lib, p), ConfigError);
}
