#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "kbrl/error.hpp"
#include "kbrl/microciv/env.hpp"

using namespace kbrl;
using namespace kbrl::microciv;

namespace {

const std::vector<std::string> kItems = {"settler", "worker", "warrior", "library", "granary", "walls", "research"};

std::vector<Command> random_commands(const GameState& s, int seat, std::mt19937_64& rng) {
    std::vector<Command> out;
    std::vector<std::pair<int, int>> land, targets;
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            if (s.tile(x, y).land()) land.push_back({x, y});
        }
    }
    for (const auto& u : s.units) {
        if (u.owner != seat) targets.push_back({u.x, u.y});
    }
    for (const auto& c : s.cities) {
        if (c.owner != seat) targets.push_back({c.x, c.y});
    }
    for (const auto& u : s.units) {
        if (u.owner != seat || rng() % 10 >= 4) continue;
        Command c;
        c.id = u.id;
        auto [x, y] = land[rng() % land.size()];
        if (u.kind == UnitKind::Settler && rng() % 2) {
            c.verb = Command::Verb::FoundCity;
        } else if (u.kind == UnitKind::Warrior && !targets.empty() && rng() % 2) {
            c.verb = Command::Verb::Attack;
            std::tie(c.x, c.y) = targets[rng() % targets.size()];
        } else if (rng() % 5 == 0) {
            c.verb = Command::Verb::Move;
            c.order = OrderKind::Hold;
        } else {
            c.verb = Command::Verb::Move;
            c.order = OrderKind::Goto;
            c.x = x;
            c.y = y;
        }
        out.push_back(c);
    }
    for (const auto& city : s.cities) {
        if (city.owner != seat || rng() % 10 >= 3) continue;
        Command c;
        c.verb = Command::Verb::Build;
        c.id = city.id;
        c.item = kItems[rng() % kItems.size()];
        out.push_back(c);
    }
    if (rng() % 10 == 0) {
        Command c;
        c.verb = Command::Verb::ResearchFocus;
        c.focus = static_cast<Focus>(rng() % 3);
        out.push_back(c);
    }
    return out;
}

// Plays random commands for both seats, calling `check` after every turn.
template <class F>
void random_game(Game& g, std::uint64_t seed, int turns, F check) {
    std::mt19937_64 rng(seed);
    for (int t = 0; t < turns && !outcome(g.state(), 0) && !outcome(g.state(), 1); ++t) {
        const int first = int(rng() % 2);
        for (int seat : {first, 1 - first}) {
            for (const auto& c : random_commands(g.state(), seat, rng)) g.command(seat, c);
        }
        g.end_turn();
        check(g.state());
    }
}

int land_count(const GameState& s) {
    int n = 0;
    for (const auto& t : s.tiles) n += t.land();
    return n;
}

std::string str(const Value& v) { return v.as_string(); }
std::int64_t num(const Value& v) { return v.as_int(); }

// Checks the graph against the state as one seat may see it.
void check_mirror(const GameState& s, int seat, const graph::SemanticGraph& g) {
    const auto& explored = s.players[static_cast<std::size_t>(seat)].explored;
    const auto visible = visible_tiles(s, seat);
    std::size_t tiles = 0;
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const auto* n = g.node("tile/" + std::to_string(x) + "/" + std::to_string(y));
            const bool ex = explored[static_cast<std::size_t>(s.index(x, y))];
            CHECK(bool(n) == ex);
            if (!n) continue;
            ++tiles;
            const Tile& t = s.tile(x, y);
            CHECK(str(*n->find("terrain")) == to_string(t.terrain));
            CHECK(n->find("improved")->as_bool() == t.improved);
            CHECK(str(*n->find("owner")) == (t.owner < 0 ? "none" : t.owner == seat ? "me" : "enemy"));
        }
    }
    CHECK(g.nodes_of_type("Tile").size() == tiles);

    std::set<std::string> want_units;
    for (const auto& u : s.units) {
        if (u.owner != seat && !visible[static_cast<std::size_t>(s.index(u.x, u.y))]) continue;
        const std::string id = "unit/" + std::to_string(u.id);
        want_units.insert(id);
        const auto* n = g.node(id);
        REQUIRE(n);
        CHECK(num(*n->find("uid")) == u.id);
        CHECK(num(*n->find("x")) == u.x);
        CHECK(num(*n->find("y")) == u.y);
        CHECK(num(*n->find("hp")) == u.hp);
        CHECK(str(*n->find("kind")) == to_string(u.kind));
        CHECK(g.targets("locatedOn", id) ==
              std::vector<std::string>{"tile/" + std::to_string(u.x) + "/" + std::to_string(u.y)});
    }
    std::set<std::string> got_units;
    for (const auto* n : g.nodes_of_type("Unit")) got_units.insert(n->id);
    CHECK(got_units == want_units);

    std::set<std::string> own_cities;
    for (const auto& c : s.cities) {
        if (c.owner != seat) continue;
        const std::string id = "city/" + std::to_string(c.id);
        own_cities.insert(id);
        const auto* n = g.node(id);
        REQUIRE(n);
        CHECK(num(*n->find("pop")) == c.pop);
        CHECK(num(*n->find("food")) == c.food);
        CHECK(num(*n->find("shields")) == c.shields);
        CHECK(str(*n->find("build")) == c.build);
        CHECK(n->find("library")->as_bool() == c.library);
    }
    for (const auto* n : g.nodes_of_type("City")) {
        if (str(*n->find("owner")) == "me") CHECK(own_cities.count(n->id) == 1);
    }
    for (const auto& c : s.cities) {
        if (c.owner == seat) continue;
        const std::size_t i = static_cast<std::size_t>(s.index(c.x, c.y));
        if (visible[i]) CHECK(g.node("city/" + std::to_string(c.id)));
        if (!explored[i]) CHECK_FALSE(g.node("city/" + std::to_string(c.id)));
    }

    const auto* me = g.node("player/me");
    REQUIRE(me);
    CHECK(num(*me->find("tech")) == s.players[static_cast<std::size_t>(seat)].tech);
    CHECK(num(*me->find("cities")) == std::int64_t(own_cities.size()));
    CHECK(num(*g.node("game")->find("turn")) == s.turn);
}

// Graph lines minus enemy cities out of sight, which keep what was last seen.
std::string without_remembered(const GameState& s, int seat, const graph::SemanticGraph& g) {
    const auto visible = visible_tiles(s, seat);
    std::vector<std::string> hidden;
    for (const auto& c : s.cities) {
        if (c.owner != seat && !visible[static_cast<std::size_t>(s.index(c.x, c.y))]) {
            hidden.push_back("\"city/" + std::to_string(c.id) + "\"");
        }
    }
    std::istringstream in(g.to_jsonl());
    std::string out;
    for (std::string line; std::getline(in, line);) {
        bool skip = false;
        for (const auto& h : hidden) skip = skip || line.find("\"id\":" + h) != std::string::npos;
        if (!skip) out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("fixtures reset deterministically") {
    CHECK(builtin_fixtures().size() >= 3);
    CHECK(reset("twin-continents", 7) == reset("twin-continents", 7));
    CHECK(state_hash(reset("twin-continents", 7)) == state_hash(reset("twin-continents", 7)));
    for (const auto& f : builtin_fixtures()) {
        GameState s = reset(f, 3);
        CHECK(s.turn == 0);
        for (const auto& p : s.players) CHECK(p.tech == 0);
        for (const auto& u : s.units) CHECK(s.tile(u.x, u.y).land());
        int settlers = 0;
        for (const auto& u : s.units) settlers += u.kind == UnitKind::Settler;
        CHECK(settlers == 2);
    }
    CHECK_THROWS_AS(reset("atlantis", 1), ConfigError);
}

TEST_CASE("fixture files") {
    const char* ok = "name tiny\nsize 4 4\nstart 0 0 0\nstart 1 3 3\n....\n.^^.\n.~~.\n....\n";
    MapFixture f = parse_fixture(ok);
    CHECK(f.name == "tiny");
    CHECK(f.terrain[5] == Terrain::Hills);
    CHECK(f.terrain[9] == Terrain::Water);
    CHECK_THROWS_AS(parse_fixture("size 4 4\nstart 0 0 0\n....\n"), ConfigError);
    CHECK_THROWS_AS(parse_fixture("size 4 4\nstart 0 0 0\nstart 1 3 3\n....\n....\n....\n...x\n"), ConfigError);
    CHECK_THROWS_AS(parse_fixture("bogus header\n"), SyntaxError);
}

TEST_CASE("commands parse and print") {
    Command c = parse_command("unit 12; press b");
    CHECK(c.verb == Command::Verb::FoundCity);
    CHECK(c.id == 12);
    for (const char* text : {"unit 3; goto 4 5", "unit 3; attack 1 2", "unit 9; hold", "city 4; build library",
                             "research science", "end turn"}) {
        CHECK(format_command(parse_command(text)) == text);
    }
    for (const char* bad : {"dance 3", "unit x; press b", "unit 3 press b", "city 4; build castle", "research magic",
                            "unit 3; goto 4"}) {
        CHECK_THROWS_AS(parse_command(bad), ExecutionError);
    }
}

TEST_CASE("ending a turn with no commands accrues yields") {
    GameState s = reset("continent", 1);
    const Unit settler = s.units[0];
    REQUIRE(settler.kind == UnitKind::Settler);
    REQUIRE(apply_command(s, 0, parse_command("unit " + std::to_string(settler.id) + "; press b")).ok);
    CHECK_FALSE(s.unit(settler.id));
    REQUIRE(s.cities.size() == 1);
    const City before = s.cities[0];
    CHECK(before.x == settler.x);
    CHECK(before.y == settler.y);
    const CityOutput out = city_output(s, before);
    const int turn = s.turn;
    apply(s, {{0, Command{}}});
    CHECK(s.turn == turn + 1);
    CHECK(s.cities[0].food == before.food + out.food);
    CHECK(s.cities[0].shields == before.shields + out.shields);
    CHECK(s.players[0].science == out.science);
}

TEST_CASE("two queued commands take effect in order") {
    GameState s = reset("continent", 1);
    const int settler = s.units[0].id;
    const int city_id = s.next_id;
    const std::string found = "unit " + std::to_string(settler) + "; press b";
    const std::string build = "city " + std::to_string(city_id) + "; build warrior";

    GameState a = s;
    CHECK(apply(a, {{0, parse_command(found)}, {0, parse_command(build)}, {0, Command{}}}) == 0);
    REQUIRE(a.city(city_id));
    CHECK(a.city(city_id)->build == "warrior");
    CHECK(a.turn == 1);

    // Reversed, the build order names a city that does not exist yet.
    GameState b = s;
    CHECK(apply(b, {{0, parse_command(build)}, {0, parse_command(found)}, {0, Command{}}}) == 1);
    REQUIRE(b.city(city_id));
    CHECK(b.city(city_id)->build == "none");
}

TEST_CASE("illegal commands leave the state unchanged") {
    GameState s = reset("continent", 2);
    const GameState before = s;
    const int enemy_unit = s.units.back().id;
    CHECK_FALSE(apply_command(s, 0, parse_command("unit " + std::to_string(enemy_unit) + "; hold")).ok);
    CHECK_FALSE(apply_command(s, 0, parse_command("unit 999; press b")).ok);
    CHECK_FALSE(apply_command(s, 0, parse_command("city 1; build walls")).ok);
    const int warrior = s.units[1].id;
    CHECK_FALSE(apply_command(s, 0, parse_command("unit " + std::to_string(warrior) + "; press b")).ok);
    CHECK(s == before);
}

TEST_CASE("identical command traces give identical states and replays verify") {
    auto run = [](std::uint64_t seed) {
        Game g("continent", 5);
        random_game(g, seed, 120, [](const GameState&) {});
        return g;
    };
    Game a = run(9), b = run(9);
    CHECK(a.state() == b.state());
    CHECK(a.replay_text() == b.replay_text());
    CHECK(verify_replay(a.replay_text()) == a.state().turn);

    std::string tampered = a.replay_text();
    auto pos = tampered.find("\"hash\":", tampered.find("\"kind\":\"turn\""));
    REQUIRE(pos != std::string::npos);
    tampered.insert(pos + 7, "1");
    CHECK_THROWS_AS(verify_replay(tampered), Error);
}

TEST_CASE("invariants hold over random games") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const std::string fixture = builtin_fixtures()[seed % builtin_fixtures().size()];
        Game g(fixture, seed);
        const int land = land_count(g.state());
        std::array<int, 2> tech{0, 0};
        random_game(g, seed * 31, 150, [&](const GameState& s) {
            CHECK(land_count(s) == land);
            std::set<std::pair<int, int>> spots;
            for (const auto& c : s.cities) CHECK(spots.insert({c.x, c.y}).second);
            for (const auto& u : s.units) CHECK(s.tile(u.x, u.y).land());
            for (int seat = 0; seat < 2; ++seat) {
                CHECK(s.players[static_cast<std::size_t>(seat)].tech >= tech[static_cast<std::size_t>(seat)]);
                tech[static_cast<std::size_t>(seat)] = s.players[static_cast<std::size_t>(seat)].tech;
            }
        });
    }
}

TEST_CASE("cities appear only by founding") {
    Game g("twin-continents", 4);
    std::mt19937_64 rng(4);
    int founded = 0;
    for (int t = 0; t < 150 && !outcome(g.state(), 0) && !outcome(g.state(), 1); ++t) {
        for (int seat = 0; seat < 2; ++seat) {
            for (const auto& c : random_commands(g.state(), seat, rng)) {
                const std::size_t n = g.state().cities.size();
                const bool ok = g.command(seat, c).ok;
                const bool founds = ok && c.verb == Command::Verb::FoundCity;
                founded += founds;
                CHECK(g.state().cities.size() == n + (founds ? 1 : 0));
            }
        }
        std::set<int> ids;
        for (const auto& c : g.state().cities) ids.insert(c.id);
        g.end_turn();
        for (const auto& c : g.state().cities) CHECK(ids.count(c.id) == 1);
    }
    CHECK(founded > 0);
}

TEST_CASE("outcomes") {
    GameState s = reset("continent", 1);
    CHECK_FALSE(outcome(s, 0));
    CHECK_FALSE(outcome(s, 1));
    s.players[0].tech = kTechMax;
    CHECK(outcome(s, 0) == OutcomeKind::Won);
    CHECK(outcome(s, 1) == OutcomeKind::LostRace);
    s.players[0].tech = 3;
    s.units.erase(std::remove_if(s.units.begin(), s.units.end(), [](const Unit& u) { return u.owner == 1; }),
                  s.units.end());
    CHECK(outcome(s, 1) == OutcomeKind::Destroyed);
    CHECK_FALSE(outcome(s, 0));

    // Exactly one kind per terminal seat, and the two seats agree.
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Game g("islands", seed);
        random_game(g, seed, 400, [](const GameState&) {});
        const auto o0 = outcome(g.state(), 0), o1 = outcome(g.state(), 1);
        if (o0 == OutcomeKind::Won) CHECK(o1 == OutcomeKind::LostRace);
        if (o1 == OutcomeKind::Won) CHECK(o0 == OutcomeKind::LostRace);
        CHECK_FALSE((o0 == OutcomeKind::Won && o1 == OutcomeKind::Won));
    }
}

TEST_CASE("connector mirrors the seat's view") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Game game("continent", seed);
        const int seat = int(seed % 2);
        Connector incremental(seat);
        graph::SemanticGraph live(ontology());
        int checks = 0;
        random_game(game, seed * 7, 200, [&](const GameState& s) {
            incremental.sync(s, live);
            if (s.turn % 10 != 3) return;
            check_mirror(s, seat, live);
            Connector fresh(seat);
            graph::SemanticGraph full(ontology());
            fresh.sync(s, full);
            CHECK(without_remembered(s, seat, full) == without_remembered(s, seat, live));
            ++checks;
        });
        CHECK(checks > 0);
    }
}

TEST_CASE("connector counts and fog at the start") {
    GameState s = reset("continent", 1);
    graph::SemanticGraph g(ontology());
    Connector(0).sync(s, g);
    CHECK(g.nodes_of_type("Unit").size() == 2);
    CHECK(g.nodes_of_type("City").empty());
    std::size_t explored = 0;
    for (auto e : s.players[0].explored) explored += e;
    CHECK(explored < s.tiles.size());
    CHECK(g.nodes_of_type("Tile").size() == explored);

    REQUIRE(apply_command(s, 0, parse_command("unit 1; press b")).ok);
    Connector c(0);
    graph::SemanticGraph h(ontology());
    c.sync(s, h);
    CHECK(h.nodes_of_type("Unit").size() == 1);
    CHECK(h.nodes_of_type("City").size() == 1);
    const int warrior = s.units[0].id;
    REQUIRE(apply_command(s, 0, parse_command("unit " + std::to_string(warrior) + "; goto " +
                                              std::to_string(s.units[0].x + 1) + " " + std::to_string(s.units[0].y)))
                .ok);
    advance_turn(s);
    c.sync(s, h);
    const auto* n = h.node("unit/" + std::to_string(warrior));
    REQUIRE(n);
    CHECK(n->find("x")->as_int() == s.unit(warrior)->x);
    CHECK(n->find("uid")->as_int() == warrior);
}

TEST_CASE("handler queues parsed commands in process") {
    Game game("continent", 1);
    SeatEnv env(game, 0);
    auto handlers = env.handlers();
    REQUIRE(handlers.count("microciv"));
    auto* h = handlers.at("microciv");
    CHECK_THROWS_AS(h->validate("fly away"), ExecutionError);
    CHECK_THROWS_AS(h->dispatch("fly away"), ExecutionError);
    CHECK(env.dispatched().empty());
    h->dispatch("unit 1; press b");
    CHECK(game.state().cities.empty());
    env.flush();
    CHECK(game.state().cities.size() == 1);
    CHECK(env.dispatched() == std::vector<std::string>{"unit 1; press b"});
}

TEST_CASE("file transport appends lines and consumes them once") {
    const auto path = std::filesystem::temp_directory_path() / "kbrl_test_commands.txt";
    Game game("continent", 1);
    SeatEnv env(game, 0, nullptr, Transport::File, path);
    auto* h = env.handlers().at("microciv");
    h->dispatch("unit 1; press b");
    h->dispatch("research science");
    {
        std::ifstream in(path);
        std::string a, b;
        std::getline(in, a);
        std::getline(in, b);
        CHECK(a == "unit 1; press b");
        CHECK(b == "research science");
    }
    env.flush();
    CHECK(game.state().cities.size() == 1);
    CHECK(game.state().players[0].focus == Focus::Science);
    CHECK(std::filesystem::file_size(path) == 0);
    env.flush();
    CHECK(game.rejected() == 0);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(SeatEnv(game, 0, nullptr, Transport::File), ConfigError);
}

TEST_CASE("scripted opponent plays legal deterministic games") {
    auto run = [] {
        Game game("continent", 3);
        ScriptedOpponent a, b;
        for (int t = 0; t < 200 && !outcome(game.state(), 0); ++t) {
            a.play_turn(game, 0);
            b.play_turn(game, 1);
            game.end_turn();
        }
        return game;
    };
    Game g1 = run(), g2 = run();
    CHECK(g1.state() == g2.state());
    CHECK(g1.rejected() == 0);
    int cities = 0;
    for (const auto& c : g1.state().cities) cities += c.owner == 0;
    CHECK(cities >= 2);
    CHECK(verify_replay(g1.replay_text()) == g1.state().turn);
}

TEST_CASE("feature vector matches its names") {
    GameState s = reset("continent", 1);
    CHECK(build_feature_vector(s, 0).size() == feature_names().size());
    CHECK(feature_weights().size() == feature_names().size());
}
