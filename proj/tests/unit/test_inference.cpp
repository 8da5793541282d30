#include <doctest.h>

#include <random>
#include <set>

#include "kbrl/inference/engine.hpp"
#include "kbrl/ki/parser.hpp"
#include "match_oracle.hpp"

using namespace kbrl;
using namespace kbrl::inference;
using graph::SemanticGraph;
using graph::SemanticNode;
using namespace kbrl::testing;

namespace {

// ---------------------------------------------------------------------------
// Toy environment: a counter that wins at a target.

class RecordingHandler : public ActionHandler {
public:
    void validate(const std::string& command) const override {
        if (command.find("bad") != std::string::npos) throw ExecutionError("rejected: " + command);
    }
    void dispatch(const std::string& command) override { sent.push_back(command); }
    std::vector<std::string> sent;
};

const char* kCounterTtl = R"(@prefix kb: <k#> .
@prefix : <c#> .
:Counter a kb:Entity .
:Token a kb:Entity .
:value a kb:Attribute ; kb:domain :Counter ; kb:range kb:integer .
:tid a kb:Attribute ; kb:domain :Token ; kb:range kb:integer .
)";

class CounterEnv : public AgentEnvironment {
public:
    CounterEnv(int target, int tokens) : target_(target), tokens_(tokens) {}

    void sync(SemanticGraph& g) override {
        g.upsert_node({"counter", "Counter", {{"value", Value(value_)}}});
        for (int i = 0; i < tokens_; ++i) g.upsert_node({"tok" + std::to_string(i), "Token", {{"tid", Value(i)}}});
    }
    HandlerMap handlers() override { return {{"env", &handler_}}; }
    void flush() override {
        for (const auto& c : handler_.sent) {
            if (c == "add") ++value_;
            if (c == "double") value_ *= 2;
            if (c.rfind("poke", 0) == 0) ++pokes;
        }
        handler_.sent.clear();
    }
    void end_turn() override { ++turn_; }
    int turn() const override { return turn_; }
    std::optional<OutcomeKind> outcome() const override {
        if (value_ >= target_) return OutcomeKind::Won;
        return std::nullopt;
    }
    std::vector<double> features() const override { return {double(turn_), double(value_)}; }

    int pokes = 0;

private:
    RecordingHandler handler_;
    int target_;
    int tokens_;
    int value_ = 0;
    int turn_ = 0;
};

std::shared_ptr<const graph::Ontology> counter_ontology() {
    static auto o = std::make_shared<const graph::Ontology>(graph::load_ontology(kCounterTtl));
    return o;
}

}  // namespace

TEST_CASE("conflict sets match a brute-force matcher on 200 random instances") {
    InstanceGen gen(424242);
    std::size_t total = 0, nonempty = 0;
    for (int inst = 0; inst < 200; ++inst) {
        SemanticGraph g = gen.graph();
        Issue issue = gen.issue();
        std::vector<ki::KnowledgeItem> kb;
        for (int r = 0, n = 1 + inst % 10; r < n; ++r) kb.push_back(ki::parse_ki(gen.rule(r)));

        std::set<std::pair<std::string, Binding>> expect;
        Ref ref{g, issue};
        for (const auto& k : kb) ref.walk(k, 0, {}, expect);

        ConflictSet cs = match_rules(kb, g, issue);
        std::set<std::pair<std::string, Binding>> got;
        for (const auto& c : cs.candidates) {
            got.insert({c.ki_id, c.binding});
            CHECK(holds(*c.ki, c.binding, g, issue));
        }
        CHECK(got.size() == cs.size());
        CHECK(got == expect);
        total += expect.size();
        nonempty += !expect.empty();
    }
    CHECK(nonempty > 50);
    CHECK(total > 500);
}

TEST_CASE("conflict set order is by rule id then binding hash") {
    SemanticGraph g(toy_ontology());
    for (int i = 0; i < 5; ++i) g.upsert_node({"a" + std::to_string(i), "A", {{"n", Value(i)}}});
    std::vector<ki::KnowledgeItem> kb = {
        ki::parse_ki("ki z { } on { match A as $a } when { } do { issue.unset q }"),
        ki::parse_ki("ki y { } on { match A as $a { n > 2 } } when { } do { issue.unset q }"),
    };
    ConflictSet cs = match_rules(kb, g, Issue{});
    REQUIRE(cs.size() == 7);
    CHECK(cs.actions() == std::vector<std::string>{"/y", "/z"});
    for (std::size_t i = 1; i < cs.size(); ++i) {
        const auto& a = cs.candidates[i - 1];
        const auto& b = cs.candidates[i];
        CHECK((a.ki_id < b.ki_id || (a.ki_id == b.ki_id && a.hash <= b.hash)));
        CHECK(b.hash == fnv1a(canonical(b.binding)));
    }
}

TEST_CASE("incompatible comparison in when is an evaluation error") {
    SemanticGraph g(toy_ontology());
    g.upsert_node({"a", "A", {{"s", Value("red")}}});
    Issue issue;
    issue.attributes["n"] = Value(3);
    auto kb = std::vector<ki::KnowledgeItem>{
        ki::parse_ki("ki r { } on { match A as $a } when { $a.s < issue.n } do { issue.unset q }")};
    CHECK_THROWS_AS(match_rules(kb, g, issue), EvaluationError);
    auto truthy = std::vector<ki::KnowledgeItem>{
        ki::parse_ki("ki r { } on { match A as $a } when { $a.s } do { issue.unset q }")};
    CHECK_THROWS_AS(match_rules(truthy, g, issue), EvaluationError);
}

TEST_CASE("settler rule fires when the issue destination is its tile") {
    auto onto = std::make_shared<const graph::Ontology>(graph::load_ontology(R"(@prefix kb: <k#> .
@prefix : <c#> .
:Settlers a kb:Entity .
:id a kb:Attribute ; kb:domain :Settlers ; kb:range kb:integer .
:x a kb:Attribute ; kb:domain :Settlers ; kb:range kb:integer .
:y a kb:Attribute ; kb:domain :Settlers ; kb:range kb:integer .
)"));
    SemanticGraph g(onto);
    g.upsert_node({"s12", "Settlers", {{"id", Value(12)}, {"x", Value(3)}, {"y", Value(5)}}});
    g.upsert_node({"s13", "Settlers", {{"id", Value(13)}, {"x", Value(4)}, {"y", Value(5)}}});
    std::vector<ki::KnowledgeItem> kb = {ki::parse_ki(R"(ki found_city { }
on { match Settlers as $s { id == $sid, x == $x, y == $y } }
when { issue.Destination == [$x, $y] }
do { handler microciv "unit ${sid}; press b" })")};
    Issue issue;
    issue.attributes["Destination"] = Value(Value::List{Value(3), Value(5)});
    ConflictSet cs = match_rules(kb, g, issue);
    REQUIRE(cs.size() == 1);
    CHECK(cs.candidates[0].binding.at("s") == Value("s12"));

    RecordingHandler h;
    ExecutionEffect fx = execute(*cs.candidates[0].ki, cs.candidates[0].binding, g, issue, {{"microciv", &h}});
    CHECK(h.sent == std::vector<std::string>{"unit 12; press b"});
    REQUIRE(fx.commands.size() == 1);
    CHECK(fx.commands[0].first == "microciv");

    issue.attributes.erase("Destination");
    CHECK(match_rules(kb, g, issue).empty());
}

TEST_CASE("render_template resolves node attributes, scalars and the issue") {
    SemanticGraph g(toy_ontology());
    g.upsert_node({"u", "A", {{"n", Value(12)}, {"f", Value(2.5)}}});
    g.upsert_node({"t", "B", {{"n", Value(3)}, {"s", Value("hills")}}});
    Issue issue;
    issue.attributes["Phase"] = Value("early");
    auto k = ki::parse_ki(R"(ki go { }
on { match A as $u { n == $id } match B as $t }
when { }
do { handler h "unit ${u.n}; goto ${t.n} ${t.s} f=${u.f} ${id} ${issue.Phase} ${u}" })");
    Binding b = {{"u", Value("u")}, {"t", Value("t")}, {"id", Value(12)}};
    CHECK(render_template(k.actions[0], b, g, issue) == "unit 12; goto 3 hills f=2.5 12 early u");
    issue.attributes.clear();
    CHECK_THROWS_AS(render_template(k.actions[0], b, g, issue), ExecutionError);
}

TEST_CASE("execute is all or nothing") {
    SemanticGraph g(toy_ontology());
    g.upsert_node({"a", "A", {{"n", Value(1)}}});
    Issue issue;
    issue.attributes["keep"] = Value(true);
    const Issue before = issue;
    const std::string graph_before = g.to_jsonl();
    RecordingHandler h;
    HandlerMap handlers = {{"env", &h}};

    auto failing = ki::parse_ki(R"(ki f { }
on { match A as $a }
when { }
do {
  issue.set x = 1
  issue.set y = $a.n
  graph.set $a.n = 7
  handler env "first"
  handler env "bad ${a.n}"
})");
    CHECK_THROWS_AS(execute(failing, {{"a", Value("a")}}, g, issue, handlers), ExecutionError);
    CHECK(issue == before);
    CHECK(g.to_jsonl() == graph_before);
    CHECK(h.sent.empty());

    auto no_handler = ki::parse_ki("ki f { } on { match A as $a } when { } do { issue.set x = 1 handler nowhere \"x\" }");
    CHECK_THROWS_AS(execute(no_handler, {{"a", Value("a")}}, g, issue, handlers), ExecutionError);
    CHECK(issue == before);

    auto bad_schema = ki::parse_ki("ki f { } on { match A as $a } when { } do { issue.set x = 1 graph.set $a.n = \"s\" }");
    CHECK_THROWS_AS(execute(bad_schema, {{"a", Value("a")}}, g, issue, handlers), Error);
    CHECK(issue == before);

    auto ok = ki::parse_ki(R"(ki f { }
on { match A as $a }
when { }
do {
  issue.set x = 1
  issue.unset keep
  graph.set $a.n = $a.n
  graph.set $a.f = 0.5
  handler env "go ${a.n}"
})");
    ExecutionEffect fx = execute(ok, {{"a", Value("a")}}, g, issue, handlers);
    CHECK(issue.find("x")->as_int() == 1);
    CHECK_FALSE(issue.find("keep"));
    CHECK(g.node("a")->find("f")->as_float() == 0.5);
    CHECK(h.sent == std::vector<std::string>{"go 1"});
    CHECK(fx.issue_changes.size() == 2);
    CHECK(fx.graph_changes.size() == 2);
}

TEST_CASE("only issue.set touches the issue") {
    SemanticGraph g(toy_ontology());
    g.upsert_node({"a", "A", {}});
    Issue issue;
    const std::string before = g.to_jsonl();
    auto k = ki::parse_ki("ki f { } on { match A as $a } when { } do { issue.set k = \"v\" }");
    execute(k, {{"a", Value("a")}}, g, issue, {});
    CHECK(issue.find("k")->as_string() == "v");
    CHECK(g.to_jsonl() == before);
}

TEST_CASE("engine: singletons bypass the resolver, refraction, truncation") {
    const auto onto = counter_ontology();

    SUBCASE("a single rule never creates a decision") {
        std::vector<ki::KnowledgeItem> kb = {
            ki::parse_ki("ki add { } on { match Counter as $c } when { } do { handler env \"add\" }")};
        CounterEnv env(5, 0);
        UniformResolver res;
        EpisodeRecord rec = run_episode(kb, onto, env, res, {});
        CHECK(rec.outcome == OutcomeKind::Won);
        CHECK(rec.decisions.empty());
        // One firing per turn: the counter node changes but the binding is refracted.
        CHECK(rec.final_turn == 4);
        CHECK(rec.history.size() == 5);
        CHECK(rec.turn_clusters.size() == 5);
        CHECK(rec.conflicts_seen == 5);
        CHECK(rec.multi_conflicts == 0);
    }

    SUBCASE("two bindings of one rule are one action") {
        std::vector<ki::KnowledgeItem> kb = {
            ki::parse_ki("ki poke { } on { match Token as $t } when { } do { handler env \"poke ${t.tid}\" }")};
        CounterEnv env(1000, 3);
        FirstResolver res;
        EpisodeLimits limits;
        limits.max_turns = 4;
        EpisodeRecord rec = run_episode(kb, onto, env, res, limits);
        CHECK(rec.outcome == OutcomeKind::Truncated);
        CHECK(rec.final_turn == 4);
        CHECK(rec.decisions.empty());
        CHECK(env.pokes == 12);
    }

    SUBCASE("firing cap") {
        std::vector<ki::KnowledgeItem> kb = {
            ki::parse_ki("ki poke { } on { match Token as $t } when { } do { handler env \"poke\" }")};
        CounterEnv env(1000, 10);
        FirstResolver res;
        EpisodeLimits limits;
        limits.max_turns = 2;
        limits.max_firings_per_turn = 4;
        run_episode(kb, onto, env, res, limits);
        CHECK(env.pokes == 8);
    }

    SUBCASE("conflicts are recorded with the resolver's choice") {
        std::vector<ki::KnowledgeItem> kb = {
            ki::parse_ki("ki add { } on { match Counter as $c } when { } do { handler env \"add\" }"),
            ki::parse_ki("ki double { } on { match Counter as $c { value >= 1 } } when { } do { handler env \"double\" }"),
        };
        auto run = [&](std::uint64_t seed) {
            CounterEnv env(40, 0);
            UniformResolver res;
            EpisodeLimits limits;
            limits.seed = seed;
            return run_episode(kb, onto, env, res, limits, [](const std::vector<double>& f) { return int(f[1]) % 3; });
        };
        EpisodeRecord a = run(7), b = run(7);
        CHECK(a == b);
        CHECK(a.outcome == OutcomeKind::Won);
        REQUIRE_FALSE(a.decisions.empty());
        for (const auto& d : a.decisions) {
            CHECK(d.candidates == std::vector<std::string>{"/add", "/double"});
            CHECK((d.chosen == "/add" || d.chosen == "/double"));
            CHECK(d.cluster == a.turn_clusters.at(static_cast<std::size_t>(d.turn)));
        }
        CHECK(a.multi_conflicts == a.decisions.size());

        EpisodeRecord c = episode_from_jsonl(to_jsonl(a));
        CHECK(c == a);
        CHECK_THROWS_AS(episode_from_jsonl("{\"kind\":\"decision\",\"turn\":0,\"cluster\":0,\"candidates\":[],\"chosen\":\"x\"}\n"),
                        SchemaError);
        CHECK_THROWS_AS(episode_from_jsonl("{nope\n"), SyntaxError);
    }

    SUBCASE("empty knowledge base advances turns") {
        std::vector<ki::KnowledgeItem> kb;
        CounterEnv env(1, 0);
        UniformResolver res;
        EpisodeLimits limits;
        limits.max_turns = 6;
        EpisodeRecord rec = run_episode(kb, onto, env, res, limits);
        CHECK(rec.outcome == OutcomeKind::Truncated);
        CHECK(rec.final_turn == 6);
        CHECK(rec.history.empty());
    }

    SUBCASE("the issue starts with StartPlaying") {
        std::vector<ki::KnowledgeItem> kb = {
            ki::parse_ki("ki start { } on { match Counter as $c } when { issue.StartPlaying == true } do { issue.set StartPlaying = false handler env \"add\" }")};
        CounterEnv env(100, 0);
        UniformResolver res;
        Engine engine(kb, onto, res, {});
        engine.play_turn(env);
        env.end_turn();
        engine.play_turn(env);
        CHECK(engine.issue().find("StartPlaying")->as_bool() == false);
        CHECK(engine.issue().history.size() == 1);
    }
}
