#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "kbrl/ki/parser.hpp"
#include "rule_gen.hpp"

using namespace kbrl;
using namespace kbrl::ki;
namespace fs = std::filesystem;
using kbrl::testing::RuleGen;

namespace {

const char* kFoundCity = R"(ki found_city { doc = "build a city where the settler stands" }
on {
  match Settlers as $s { id == $sid, x == $x, y == $y }
}
when { issue.Destination == [$x, $y] }
do {
  handler microciv "unit ${sid}; press b"
}
)";

KiError expect_error(std::string_view text) {
    try {
        parse_ki(text, "rule.ki");
    } catch (const KiError& e) {
        return e;
    }
    FAIL("expected a KiError");
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("settler rule parses into one clause, one comparison and one action") {
    KnowledgeItem k = parse_ki(kFoundCity);
    CHECK(k.name == "found_city");
    CHECK(k.expert_tag.empty());
    REQUIRE(k.meta.size() == 1);
    CHECK(k.meta[0].second == Value("build a city where the settler stands"));
    REQUIRE(k.on.size() == 1);
    CHECK(k.on[0].entity_type == "Settlers");
    CHECK(k.on[0].var == "s");
    REQUIRE(k.on[0].constraints.size() == 3);
    CHECK(k.on[0].constraints[1].binds);
    CHECK(k.when.kind == Expr::Kind::Compare);
    CHECK(k.when.lhs.kind == Operand::Kind::IssueAttr);
    CHECK(k.when.lhs.name == "Destination");
    CHECK(k.when.rhs.kind == Operand::Kind::List);
    REQUIRE(k.actions.size() == 1);
    const Statement& s = k.actions[0];
    CHECK(s.kind == Statement::Kind::Handler);
    CHECK(s.target == "microciv");
    REQUIRE(s.parts.size() == 3);
    CHECK(s.parts[1].is_ref);
    CHECK(s.parts[1].text == "sid");
    CHECK(k.id() == "/found_city");
}

TEST_CASE("empty when block is the constant true") {
    KnowledgeItem k = parse_ki("ki a { } on { match Tile as $t } when { } do { issue.set seen = $t.x }");
    CHECK(k.when.kind == Expr::Kind::True);
    CHECK(k.when == Expr{});
    CHECK(parse_ki("ki a { } on { match Tile as $t } when { true } do { issue.unset q }").when == Expr{});
}

TEST_CASE("errors carry kind, block and line") {
    SUBCASE("unbound variable in do") {
        KiError e = expect_error("ki a { }\non { match Tile as $t }\nwhen { }\ndo {\n  graph.set $z.x = 1\n}");
        CHECK(e.kind() == KiErrorKind::UnboundVariable);
        CHECK(e.block() == "do");
        CHECK(e.line() == 5);
        CHECK(e.source() == "rule.ki");
    }
    SUBCASE("unbound template reference") {
        KiError e = expect_error("ki a { } on { match Tile as $t } when { } do { handler h \"go ${z}\" }");
        CHECK(e.kind() == KiErrorKind::UnboundVariable);
    }
    SUBCASE("unbound variable in when") {
        KiError e = expect_error("ki a { }\non { match Tile as $t }\nwhen { $q.x > 1 }\ndo { issue.unset a }");
        CHECK(e.kind() == KiErrorKind::UnboundVariable);
        CHECK(e.block() == "when");
        CHECK(e.line() == 3);
    }
    SUBCASE("non-equality cannot bind") {
        KiError e = expect_error("ki a { } on { match Tile as $t { x < $w } } when { } do { issue.unset a }");
        CHECK(e.kind() == KiErrorKind::UnboundVariable);
        CHECK(e.block() == "on");
    }
    SUBCASE("empty do") {
        KiError e = expect_error("ki a { }\non { match Tile as $t }\nwhen { }\ndo { }");
        CHECK(e.kind() == KiErrorKind::EmptyDo);
        CHECK(e.block() == "do");
        CHECK(e.line() == 4);
    }
    SUBCASE("missing on clause") {
        KiError e = expect_error("ki a { } on { } when { } do { issue.unset a }");
        CHECK(e.kind() == KiErrorKind::MissingOn);
    }
    SUBCASE("syntax in when") {
        KiError e = expect_error("ki a { }\non { match Tile as $t }\nwhen { $t.x == }\ndo { issue.unset a }");
        CHECK(e.kind() == KiErrorKind::Syntax);
        CHECK(e.block() == "when");
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("when block") != std::string::npos);
    }
    SUBCASE("trailing input") {
        CHECK_THROWS_AS(parse_ki("ki a { } on { match Tile as $t } when { } do { issue.unset a } ki"), KiError);
    }
}

TEST_CASE("packs tag rules and reject duplicate names") {
    const std::string r1 = "ki a { } on { match Tile as $t } when { } do { issue.unset a }\n";
    const std::string r2 = "ki b { } on { match Tile as $t } when { } do { issue.unset b }\n";
    const std::string r3 = "ki c { } on { match Tile as $t } when { } do { issue.unset c }\n";
    auto pack = parse_pack({{"one.ki", r1 + r2}, {"two.ki", r3}}, "suomi");
    REQUIRE(pack.size() == 3);
    for (const auto& k : pack) CHECK(k.expert_tag == "suomi");
    CHECK(pack[2].id() == "suomi/c");

    try {
        parse_pack({{"one.ki", r1}, {"two.ki", r1}}, "suomi");
        FAIL("expected a duplicate-name error");
    } catch (const KiError& e) {
        CHECK(e.kind() == KiErrorKind::DuplicateName);
        CHECK(e.source() == "two.ki");
    }

    auto common = parse_pack({{"one.ki", r1}}, "");
    auto expert = parse_pack({{"one.ki", r1}}, "suomi");
    CHECK(common[0].name == expert[0].name);
    CHECK(common[0].id() != expert[0].id());
    CHECK(expert_tag_for("packs/common") == "");
    CHECK(expert_tag_for("packs/expander/") == "expander");
}

TEST_CASE("shipped packs survive parse, print, parse") {
    std::size_t rules = 0;
    for (const auto& dir : fs::directory_iterator(fs::path(KBRL_DATA_DIR) / "packs")) {
        for (const auto& k : load_pack(dir.path())) {
            KnowledgeItem again = parse_ki(print_ki(k));
            again.expert_tag = k.expert_tag;
            CHECK(again == k);
            ++rules;
        }
    }
    CHECK(rules >= 20);
    CHECK_THROWS_AS(load_pack(fs::path(KBRL_DATA_DIR) / "no-such-pack"), ConfigError);
}

TEST_CASE("1000 generated rules survive parse, print, parse") {
    RuleGen gen(20240611);
    int ok = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::string text = gen.rule();
        KnowledgeItem k;
        try {
            k = parse_ki(text);
        } catch (const KiError& e) {
            FAIL_CHECK(e.what() << "\n" << text);
            continue;
        }
        const std::string printed = print_ki(k);
        KnowledgeItem again = parse_ki(printed);
        if (again == k && print_ki(again) == printed) {
            ++ok;
        } else {
            FAIL_CHECK("round trip differs\n" << text << "\n---\n" << printed);
        }
    }
    CHECK(ok == 1000);
}

TEST_CASE("mutated rules fail only with structured errors") {
    RuleGen gen(99);
    std::mt19937_64 rng(5);
    const std::string alphabet = "{}[]()$.,=<>!\"\\#/ \nabcxyz019_-";
    int rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string text = gen.rule();
        for (int m = 0, n = 1 + int(rng() % 4); m < n; ++m) {
            std::size_t at = rng() % text.size();
            switch (rng() % 3) {
                case 0: text.erase(at, 1 + rng() % 3); break;
                case 1: text.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
                default: text[at] = alphabet[rng() % alphabet.size()]; break;
            }
            if (text.empty()) text = "k";
        }
        try {
            KnowledgeItem k = parse_ki(text);
            CHECK(parse_ki(print_ki(k)) == k);
        } catch (const KiError& e) {
            ++rejected;
            CHECK(e.line() <= static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n') + 1));
        }
    }
    CHECK(rejected > 1000);
}
