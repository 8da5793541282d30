#include "kbrl/microciv/env.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "kbrl/error.hpp"

namespace kbrl::microciv {

extern const char* const kOntologyText;

const std::string& ontology_text() {
    static const std::string text = kOntologyText;
    return text;
}

std::shared_ptr<const graph::Ontology> ontology() {
    static const std::shared_ptr<const graph::Ontology> onto =
        std::make_shared<const graph::Ontology>(graph::load_ontology(ontology_text()));
    return onto;
}

// ---------------------------------------------------------------------------
// Features

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "score",          "population",      "tech",         "science_rate",     "production_rate",
        "food_surplus",   "science_stock",   "gold",         "explored_tiles",   "owned_tiles",
        "enemy_owned_known", "cities",       "military",     "enemy_military_visible", "enemy_tech",
        "focus_science",  "focus_growth",    "focus_production"};
    return names;
}

const std::vector<double>& feature_weights() {
    static const std::vector<double> w = {3.0, 3.0, 3.0, 1.5, 1.5, 1.5, 1.5, 1.5, 1.0,
                                          1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5};
    return w;
}

std::vector<double> build_feature_vector(const GameState& s, int seat) {
    const Player& me = s.players[static_cast<std::size_t>(seat)];
    const Player& them = s.players[static_cast<std::size_t>(1 - seat)];
    int pop = 0, cities = 0, science = 0, shields = 0, food = 0;
    for (const auto& c : s.cities) {
        if (c.owner != seat) continue;
        ++cities;
        pop += c.pop;
        CityOutput out = city_output(s, c);
        science += out.science;
        shields += out.shields;
        food += out.food;
    }
    int explored = 0, owned = 0, enemy_owned = 0;
    for (std::size_t i = 0; i < s.tiles.size(); ++i) {
        if (!me.explored[i]) continue;
        ++explored;
        if (s.tiles[i].owner == seat) ++owned;
        if (s.tiles[i].owner == 1 - seat) ++enemy_owned;
    }
    const auto visible = visible_tiles(s, seat);
    int military = 0, enemy_military = 0;
    for (const auto& u : s.units) {
        if (u.kind != UnitKind::Warrior) continue;
        if (u.owner == seat) {
            ++military;
        } else if (visible[static_cast<std::size_t>(s.index(u.x, u.y))]) {
            ++enemy_military;
        }
    }
    return {double(score(s, seat)),
            double(pop),
            double(me.tech),
            double(science),
            double(shields),
            double(food),
            double(me.science),
            double(me.gold),
            double(explored),
            double(owned),
            double(enemy_owned),
            double(cities),
            double(military),
            double(enemy_military),
            double(them.tech),
            me.focus == Focus::Science ? 1.0 : 0.0,
            me.focus == Focus::Growth ? 1.0 : 0.0,
            me.focus == Focus::Production ? 1.0 : 0.0};
}

// ---------------------------------------------------------------------------
// Game and replay

namespace {

std::string replay_header(const GameState& s) {
    nlohmann::json header = {{"kind", "header"}, {"fixture", s.fixture}, {"seed", s.seed}, {"hash", state_hash(s)}};
    return header.dump();
}

}  // namespace

Game::Game(std::string fixture, std::uint64_t seed) : Game(load_fixture(fixture), seed) {
    state_.fixture = fixture;
    replay_[0] = replay_header(state_);
}

Game::Game(const MapFixture& fixture, std::uint64_t seed) : state_(reset(fixture, seed)) {
    replay_.push_back(replay_header(state_));
}

ApplyResult Game::command(int seat, const Command& c) {
    ApplyResult r = apply_command(state_, seat, c);
    pending_.emplace_back(seat, format_command(c));
    if (r.ok) {
        ++version_;
    } else {
        ++rejected_;
        spdlog::debug("seat {} turn {}: rejected '{}': {}", seat, state_.turn, format_command(c), r.reason);
    }
    return r;
}

void Game::end_turn() {
    const int turn = state_.turn;
    advance_turn(state_);
    ++version_;
    nlohmann::json commands = nlohmann::json::array();
    for (const auto& [seat, text] : pending_) commands.push_back({seat, text});
    nlohmann::json rec = {{"kind", "turn"}, {"turn", turn}, {"commands", commands}, {"hash", state_hash(state_)}};
    replay_.push_back(rec.dump());
    pending_.clear();
}

std::string Game::replay_text() const {
    std::string out;
    for (const auto& line : replay_) {
        out += line;
        out += '\n';
    }
    return out;
}

int verify_replay(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<GameState> state;
    int verified = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw SyntaxError(std::string("bad replay record: ") + ex.what(), line_no, 1);
        }
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "header") {
            state = reset(j.at("fixture").get<std::string>(), j.at("seed").get<std::uint64_t>());
            if (state_hash(*state) != j.at("hash").get<std::uint64_t>()) throw Error("replay header hash mismatch");
            continue;
        }
        if (!state) throw SchemaError("replay has no header");
        const int turn = j.at("turn").get<int>();
        if (turn != state->turn) throw Error("replay turn " + std::to_string(turn) + " out of order");
        for (const auto& entry : j.at("commands")) {
            apply_command(*state, entry.at(0).get<int>(), parse_command(entry.at(1).get<std::string>()));
        }
        advance_turn(*state);
        if (state_hash(*state) != j.at("hash").get<std::uint64_t>()) {
            throw Error("replay diverges after turn " + std::to_string(turn));
        }
        ++verified;
    }
    return verified;
}

// ---------------------------------------------------------------------------
// Connector

namespace {

std::int64_t code(std::string_view s) {
    std::int64_t h = 0;
    for (unsigned char c : s) h = h * 131 + c;
    return h;
}

std::string owner_name(int owner, int seat) {
    if (owner < 0) return "none";
    return owner == seat ? "me" : "enemy";
}

std::string tile_id(int x, int y) { return "tile/" + std::to_string(x) + "/" + std::to_string(y); }

}  // namespace

void Connector::put(graph::SemanticGraph& graph, const std::string& id, std::vector<std::int64_t> sig,
                    const std::function<graph::SemanticNode()>& make, std::vector<std::string>& seen) {
    seen.push_back(id);
    auto it = cache_.find(id);
    if (it != cache_.end() && it->second == sig && graph.node(id)) return;
    graph.upsert_node(make());
    cache_[id] = std::move(sig);
}

void Connector::sync(const GameState& s, graph::SemanticGraph& graph) {
    using graph::SemanticNode;
    const int seat = seat_;
    const SeatView view = compute_view(s, seat);
    const Player& me = s.players[static_cast<std::size_t>(seat)];
    const Player& them = s.players[static_cast<std::size_t>(1 - seat)];
    std::vector<std::string> seen;

    put(graph, "game", {s.turn}, [&] {
        return SemanticNode{"game", "Game",
                            {{"turn", Value(s.turn)}, {"tech_max", Value(kTechMax)}, {"era", Value(s.turn / kEraTurns)}}};
    }, seen);

    int pop = 0, cities = 0, rate = 0, settlers = 0, workers = 0, warriors = 0, visible_warriors = 0;
    for (const auto& c : s.cities) {
        if (c.owner != seat) continue;
        ++cities;
        pop += c.pop;
        rate += city_output(s, c).science;
    }
    for (const auto& u : s.units) {
        if (u.owner == seat) {
            settlers += u.kind == UnitKind::Settler;
            workers += u.kind == UnitKind::Worker;
            warriors += u.kind == UnitKind::Warrior;
        }
    }
    for (int id : view.visible_enemy_units) {
        if (const Unit* u = s.unit(id); u && u->kind == UnitKind::Warrior) ++visible_warriors;
    }
    const int known = static_cast<int>(view.known_enemy_cities.size());
    const int my_score = score(s, seat);
    put(graph, "player/me",
        {me.tech, me.science, rate, me.gold, int(me.focus), cities, settlers, workers, warriors, my_score, pop,
         view.sites, known, visible_warriors},
        [&] {
            return SemanticNode{"player/me", "Player",
                                {{"side", Value("me")},
                                 {"tech", Value(me.tech)},
                                 {"science", Value(me.science)},
                                 {"science_rate", Value(rate)},
                                 {"gold", Value(me.gold)},
                                 {"focus", Value(std::string(to_string(me.focus)))},
                                 {"cities", Value(cities)},
                                 {"settlers", Value(settlers)},
                                 {"workers", Value(workers)},
                                 {"warriors", Value(warriors)},
                                 {"score", Value(my_score)},
                                 {"pop", Value(pop)},
                                 {"sites", Value(view.sites)},
                                 {"known_cities", Value(known)},
                                 {"visible_warriors", Value(visible_warriors)}}};
        },
        seen);
    put(graph, "player/enemy", {them.tech, known, visible_warriors}, [&] {
        return SemanticNode{"player/enemy", "Player",
                            {{"side", Value("enemy")},
                             {"tech", Value(them.tech)},
                             {"cities", Value(known)},
                             {"visible_warriors", Value(visible_warriors)}}};
    }, seen);

    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(s.index(x, y));
            const TileView& tv = view.tiles[i];
            if (!tv.explored) continue;
            const Tile& t = s.tiles[i];
            put(graph, tile_id(x, y),
                {int(t.terrain), t.resource, t.improved, t.owner, tv.can_found, tv.site_score, tv.site_rank,
                 tv.frontier_rank, tv.improve_rank, tv.claimed},
                [&] {
                    return SemanticNode{tile_id(x, y), "Tile",
                                        {{"x", Value(x)},
                                         {"y", Value(y)},
                                         {"terrain", Value(std::string(to_string(t.terrain)))},
                                         {"resource", Value(t.resource)},
                                         {"improved", Value(t.improved)},
                                         {"owner", Value(owner_name(t.owner, seat))},
                                         {"can_found", Value(tv.can_found)},
                                         {"site_score", Value(tv.site_score)},
                                         {"site_rank", Value(tv.site_rank)},
                                         {"frontier_rank", Value(tv.frontier_rank)},
                                         {"improve_rank", Value(tv.improve_rank)},
                                         {"claimed", Value(tv.claimed)}}};
                },
                seen);
        }
    }

    std::vector<std::pair<std::string, std::string>> located;
    auto put_unit = [&](const Unit& u) {
        const std::string id = "unit/" + std::to_string(u.id);
        const City* c = s.city_at(u.x, u.y);
        const bool in_city = c && c->owner == u.owner;
        const int home = u.owner == seat ? home_distance(s, seat, u.x, u.y) : -1;
        put(graph, id,
            {u.owner, int(u.kind), u.x, u.y, u.hp, int(u.order), u.tx, u.ty, in_city, home},
            [&] {
                return SemanticNode{id, "Unit",
                                    {{"uid", Value(u.id)},
                                     {"kind", Value(std::string(to_string(u.kind)))},
                                     {"owner", Value(owner_name(u.owner, seat))},
                                     {"x", Value(u.x)},
                                     {"y", Value(u.y)},
                                     {"hp", Value(u.hp)},
                                     {"order", Value(std::string(to_string(u.order)))},
                                     {"tx", Value(u.tx)},
                                     {"ty", Value(u.ty)},
                                     {"in_city", Value(in_city)},
                                     {"home_dist", Value(home)}}};
            },
            seen);
        located.emplace_back(id, tile_id(u.x, u.y));
    };
    for (const auto& u : s.units) {
        if (u.owner == seat) put_unit(u);
    }
    for (int id : view.visible_enemy_units) put_unit(*s.unit(id));

    // Enemy cities ranked for raids: weakest defense first, then nearest.
    std::vector<std::pair<std::pair<int, int>, int>> raid;
    for (int id : view.known_enemy_cities) {
        const City* c = s.city(id);
        int d = home_distance(s, seat, c->x, c->y);
        raid.push_back({{city_defense(s, *c), d < 0 ? 99 : d}, id});
    }
    std::sort(raid.begin(), raid.end());
    std::unordered_map<int, int> raid_rank;
    for (std::size_t r = 0; r < raid.size(); ++r) raid_rank[raid[r].second] = static_cast<int>(r) + 1;

    std::vector<std::pair<std::string, std::string>> built;
    for (const auto& c : s.cities) {
        const bool own = c.owner == seat;
        if (!own && !view.tiles[static_cast<std::size_t>(s.index(c.x, c.y))].explored) continue;
        const std::string id = "city/" + std::to_string(c.id);
        built.emplace_back(id, tile_id(c.x, c.y));
        const auto* last = graph.node(id);
        if (!own && !view.tiles[static_cast<std::size_t>(s.index(c.x, c.y))].visible && last &&
            last->find("owner")->as_string() == "enemy") {
            seen.push_back(id);
            continue;
        }
        CityOutput out = city_output(s, c);
        const int def = city_defense(s, c);
        const int dcount = defenders(s, c);
        const int threat = own ? city_threat(s, view, c) : 0;
        const int rr = own ? 0 : raid_rank[c.id];
        put(graph, id,
            {c.owner, c.pop, code(c.build), own ? c.food : 0, own ? out.food : 0, own ? c.shields : 0,
             own ? out.science : 0, c.library, c.granary, c.walls, dcount, def, threat, rr},
            [&] {
                return SemanticNode{id, "City",
                                    {{"cid", Value(c.id)},
                                     {"owner", Value(owner_name(c.owner, seat))},
                                     {"x", Value(c.x)},
                                     {"y", Value(c.y)},
                                     {"pop", Value(c.pop)},
                                     {"build", Value(own ? c.build : std::string("unknown"))},
                                     {"food", Value(own ? c.food : 0)},
                                     {"food_surplus", Value(own ? out.food : 0)},
                                     {"shields", Value(own ? c.shields : 0)},
                                     {"science", Value(own ? out.science : 0)},
                                     {"library", Value(c.library)},
                                     {"granary", Value(c.granary)},
                                     {"walls", Value(c.walls)},
                                     {"defenders", Value(dcount)},
                                     {"defense", Value(def)},
                                     {"threat", Value(threat)},
                                     {"raid_rank", Value(rr)}}};
            },
            seen);
    }

    // Drop units and cities that are gone or out of sight.
    std::sort(seen.begin(), seen.end());
    std::vector<std::string> stale;
    for (const char* type : {"Unit", "City"}) {
        for (const auto* n : graph.nodes_of_type(type)) {
            if (!std::binary_search(seen.begin(), seen.end(), n->id)) stale.push_back(n->id);
        }
    }
    for (const auto& id : stale) {
        graph.remove_node(id);
        cache_.erase(id);
    }

    auto link = [&](const char* verb, const std::vector<std::pair<std::string, std::string>>& pairs) {
        for (const auto& [from, to] : pairs) {
            if (!graph.node(from) || !graph.node(to)) continue;
            auto current = graph.targets(verb, from);
            if (current.size() == 1 && current[0] == to) continue;
            for (const auto& old : current) graph.remove_edge({verb, from, old});
            graph.add_edge({verb, from, to});
        }
    };
    link("locatedOn", located);
    link("builtOn", built);
}

// ---------------------------------------------------------------------------
// Seat environment

class SeatEnv::Handler : public inference::ActionHandler {
public:
    explicit Handler(SeatEnv& env) : env_(env) {}

    void validate(const std::string& command) const override { parse_command(command); }

    void dispatch(const std::string& command) override {
        if (env_.transport_ == Transport::File) {
            env_.dispatched_.push_back(command);
            std::ofstream out(env_.command_file_, std::ios::app);
            if (!out) throw ExecutionError("cannot append to " + env_.command_file_.string());
            out << command << '\n';
        } else {
            env_.queue_.push_back(parse_command(command));
            env_.dispatched_.push_back(command);
        }
    }

private:
    SeatEnv& env_;
};

SeatEnv::SeatEnv(Game& game, int seat, SeatController* opponent, Transport transport, std::filesystem::path command_file)
    : game_(game), seat_(seat), opponent_(opponent), transport_(transport), command_file_(std::move(command_file)),
      connector_(seat), handler_(std::make_unique<Handler>(*this)) {
    if (transport_ == Transport::File) {
        if (command_file_.empty()) throw ConfigError("file transport needs a command file");
        std::ofstream truncate(command_file_, std::ios::trunc);
        if (!truncate) throw ConfigError("cannot create " + command_file_.string());
    }
}

SeatEnv::~SeatEnv() = default;

void SeatEnv::sync(graph::SemanticGraph& graph) {
    if (synced_ == game_.version() && graph.node("game")) return;
    connector_.sync(game_.state(), graph);
    synced_ = game_.version();
}

inference::HandlerMap SeatEnv::handlers() { return {{"microciv", handler_.get()}}; }

void SeatEnv::flush() {
    if (transport_ == Transport::File) {
        std::vector<std::string> lines;
        {
            std::ifstream in(command_file_);
            for (std::string line; std::getline(in, line);) {
                if (!line.empty()) lines.push_back(line);
            }
        }
        std::ofstream(command_file_, std::ios::trunc);
        for (const auto& line : lines) {
            try {
                queue_.push_back(parse_command(line));
            } catch (const ExecutionError& ex) {
                spdlog::warn("{}", ex.what());
            }
        }
    }
    if (queue_.empty()) return;
    for (const auto& c : queue_) game_.command(seat_, c);
    queue_.clear();
}

void SeatEnv::end_turn() {
    flush();
    if (opponent_ && !game_.state().players.empty()) opponent_->play_turn(game_, 1 - seat_);
    game_.end_turn();
}

// ---------------------------------------------------------------------------
// Knowledge-base controller

KbController::KbController(const std::vector<ki::KnowledgeItem>& kb, const inference::ConflictResolver& resolver,
                           inference::EpisodeLimits limits, inference::StateFn state_fn)
    : kb_(kb), resolver_(resolver), limits_(limits), state_fn_(std::move(state_fn)) {}

void KbController::play_turn(Game& game, int seat) {
    if (!env_ || game_ != &game || env_->seat() != seat) {
        game_ = &game;
        env_ = std::make_unique<SeatEnv>(game, seat);
        engine_ = std::make_unique<inference::Engine>(kb_, ontology(), resolver_, limits_, state_fn_);
    }
    engine_->play_turn(*env_);
    env_->flush();
}

}  // namespace kbrl::microciv
