#include "kbrl/microciv/game.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kbrl/error.hpp"

namespace kbrl::microciv {

std::string_view to_string(Terrain t) {
    switch (t) {
        case Terrain::Grass: return "grass";
        case Terrain::Hills: return "hills";
        case Terrain::Water: return "water";
    }
    return "water";
}

std::string_view to_string(UnitKind k) {
    switch (k) {
        case UnitKind::Settler: return "settler";
        case UnitKind::Worker: return "worker";
        case UnitKind::Warrior: return "warrior";
    }
    return "warrior";
}

std::string_view to_string(OrderKind o) {
    switch (o) {
        case OrderKind::None: return "none";
        case OrderKind::Goto: return "goto";
        case OrderKind::Hold: return "hold";
        case OrderKind::Attack: return "attack";
    }
    return "none";
}

std::string_view to_string(Focus f) {
    switch (f) {
        case Focus::Science: return "science";
        case Focus::Growth: return "growth";
        case Focus::Production: return "production";
    }
    return "science";
}

std::optional<Focus> focus_from_string(std::string_view s) {
    if (s == "science") return Focus::Science;
    if (s == "growth") return Focus::Growth;
    if (s == "production") return Focus::Production;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Fixtures

namespace {

const char* kContinent =
    "name continent\n"
    "size 16 12\n"
    "start 0 3 5\n"
    "start 1 12 6\n"
    "~~~~~~~~~~~~~~~~\n"
    "~~....^^.....~~~\n"
    "~.....^.......~~\n"
    "~..^.....^.....~\n"
    "~.............^~\n"
    "~....~~..^.....~\n"
    "~....~~........~\n"
    "~..^.....~~....~\n"
    "~.......^~~..^.~\n"
    "~~.....^.......~\n"
    "~~~..........~~~\n"
    "~~~~~~~~~~~~~~~~\n";

const char* kTwinContinents =
    "name twin-continents\n"
    "size 16 12\n"
    "start 0 3 5\n"
    "start 1 12 6\n"
    "~~~~~~~~~~~~~~~~\n"
    "~.....~~~~.....~\n"
    "~..^..~~~~..^..~\n"
    "~.....~~~~.....~\n"
    "~.^....~~....^.~\n"
    "~..............~\n"
    "~......~~......~\n"
    "~..^...~~~..^..~\n"
    "~.....~~~~.....~\n"
    "~.....~~~~.....~\n"
    "~~...~~~~~~...~~\n"
    "~~~~~~~~~~~~~~~~\n";

const char* kIslands =
    "name islands\n"
    "size 16 12\n"
    "start 0 3 5\n"
    "start 1 12 6\n"
    "~~~~~~~~~~~~~~~~\n"
    "~~~~~~~~~~~~~~~~\n"
    "~.....~~~~.....~\n"
    "~..^..~~~~..^..~\n"
    "~.....~~~~.....~\n"
    "~.^...~~~~...^.~\n"
    "~.....~~~~.....~\n"
    "~.....~~~~.....~\n"
    "~..^..~~~~..^..~\n"
    "~~...~~~~~~...~~\n"
    "~~~~~~~~~~~~~~~~\n"
    "~~~~~~~~~~~~~~~~\n";

int parse_int(std::string_view s, std::string_view source, std::size_t line) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw SyntaxError(std::string(source) + ": expected an integer, got '" + std::string(s) + "'", line, 1);
    }
    return v;
}

}  // namespace

std::vector<std::string> builtin_fixtures() { return {"continent", "twin-continents", "islands"}; }

MapFixture parse_fixture(std::string_view text, std::string_view source) {
    MapFixture f;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool have_size = false;
    std::array<bool, 2> have_start{false, false};
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '.' || line[0] == '^' || line[0] == '~') {
            rows.push_back(line);
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::vector<std::string> args;
        for (std::string a; ls >> a;) args.push_back(a);
        if (key == "name" && args.size() == 1) {
            f.name = args[0];
        } else if (key == "size" && args.size() == 2) {
            f.width = parse_int(args[0], source, line_no);
            f.height = parse_int(args[1], source, line_no);
            have_size = true;
        } else if (key == "start" && args.size() == 3) {
            int seat = parse_int(args[0], source, line_no);
            if (seat < 0 || seat > 1) throw SyntaxError(std::string(source) + ": seat must be 0 or 1", line_no, 1);
            f.starts[static_cast<std::size_t>(seat)] = {parse_int(args[1], source, line_no), parse_int(args[2], source, line_no)};
            have_start[static_cast<std::size_t>(seat)] = true;
        } else {
            throw SyntaxError(std::string(source) + ": unrecognised header line '" + line + "'", line_no, 1);
        }
    }
    if (!have_size) throw ConfigError(std::string(source) + ": missing size line");
    if (!have_start[0] || !have_start[1]) throw ConfigError(std::string(source) + ": both start lines are required");
    if (f.width < 4 || f.height < 4) throw ConfigError(std::string(source) + ": map is too small");
    if (rows.size() != static_cast<std::size_t>(f.height)) {
        throw ConfigError(std::string(source) + ": expected " + std::to_string(f.height) + " rows, found " +
                          std::to_string(rows.size()));
    }
    for (const auto& r : rows) {
        if (r.size() != static_cast<std::size_t>(f.width)) {
            throw ConfigError(std::string(source) + ": row '" + r + "' is not " + std::to_string(f.width) + " wide");
        }
        for (char c : r) {
            if (c == '.') {
                f.terrain.push_back(Terrain::Grass);
            } else if (c == '^') {
                f.terrain.push_back(Terrain::Hills);
            } else if (c == '~') {
                f.terrain.push_back(Terrain::Water);
            } else {
                throw ConfigError(std::string(source) + ": unknown terrain '" + std::string(1, c) + "'");
            }
        }
    }
    for (const auto& s : f.starts) {
        if (s.x < 0 || s.y < 0 || s.x >= f.width || s.y >= f.height ||
            f.terrain[static_cast<std::size_t>(s.y * f.width + s.x)] == Terrain::Water) {
            throw ConfigError(std::string(source) + ": start position is not on land");
        }
    }
    if (f.name.empty()) f.name = std::string(source);
    return f;
}

MapFixture load_fixture(std::string_view name_or_path) {
    if (name_or_path == "continent") return parse_fixture(kContinent, "continent");
    if (name_or_path == "twin-continents") return parse_fixture(kTwinContinents, "twin-continents");
    if (name_or_path == "islands") return parse_fixture(kIslands, "islands");
    std::filesystem::path p{std::string(name_or_path)};
    std::ifstream in(p);
    if (!in) throw ConfigError("unknown fixture '" + std::string(name_or_path) + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_fixture(buf.str(), p.string());
}

// ---------------------------------------------------------------------------
// Commands

Command parse_command(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    s = s.substr(b);

    auto fail = [&](const std::string& why) -> ExecutionError {
        return ExecutionError("cannot parse command '" + std::string(text) + "': " + why);
    };
    auto number = [&](const std::string& tok) {
        int v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) throw fail("bad number '" + tok + "'");
        return v;
    };

    Command c;
    if (s == "end turn") {
        c.verb = Command::Verb::EndTurn;
        return c;
    }
    std::istringstream in(s);
    std::string head;
    in >> head;
    if (head == "research") {
        std::string f, extra;
        in >> f;
        if (in >> extra) throw fail("trailing text");
        auto focus = focus_from_string(f);
        if (!focus) throw fail("unknown focus '" + f + "'");
        c.verb = Command::Verb::ResearchFocus;
        c.focus = *focus;
        return c;
    }
    if (head != "unit" && head != "city") throw fail("unknown verb '" + head + "'");
    std::string id_tok;
    in >> id_tok;
    if (id_tok.empty() || id_tok.back() != ';') throw fail("expected '<id>;'");
    id_tok.pop_back();
    c.id = number(id_tok);
    std::vector<std::string> rest;
    for (std::string t; in >> t;) rest.push_back(t);
    if (head == "city") {
        if (rest.size() != 2 || rest[0] != "build") throw fail("expected 'build <item>'");
        if (!is_item(rest[1])) throw fail("unknown item '" + rest[1] + "'");
        c.verb = Command::Verb::Build;
        c.item = rest[1];
        return c;
    }
    if (rest.size() == 2 && rest[0] == "press" && rest[1] == "b") {
        c.verb = Command::Verb::FoundCity;
        return c;
    }
    if (rest.size() == 1 && rest[0] == "hold") {
        c.verb = Command::Verb::Move;
        c.order = OrderKind::Hold;
        return c;
    }
    if (rest.size() == 3 && (rest[0] == "goto" || rest[0] == "attack")) {
        c.verb = rest[0] == "goto" ? Command::Verb::Move : Command::Verb::Attack;
        c.order = rest[0] == "goto" ? OrderKind::Goto : OrderKind::Attack;
        c.x = number(rest[1]);
        c.y = number(rest[2]);
        return c;
    }
    throw fail("unknown unit order");
}

std::string format_command(const Command& c) {
    switch (c.verb) {
        case Command::Verb::EndTurn: return "end turn";
        case Command::Verb::ResearchFocus: return "research " + std::string(to_string(c.focus));
        case Command::Verb::Build: return "city " + std::to_string(c.id) + "; build " + c.item;
        case Command::Verb::FoundCity: return "unit " + std::to_string(c.id) + "; press b";
        case Command::Verb::Attack:
            return "unit " + std::to_string(c.id) + "; attack " + std::to_string(c.x) + " " + std::to_string(c.y);
        case Command::Verb::Move:
            if (c.order == OrderKind::Hold) return "unit " + std::to_string(c.id) + "; hold";
            return "unit " + std::to_string(c.id) + "; goto " + std::to_string(c.x) + " " + std::to_string(c.y);
    }
    return "end turn";
}

int item_cost(std::string_view item) {
    if (item == "settler") return 30;
    if (item == "worker") return 20;
    if (item == "warrior") return 15;
    if (item == "library") return 40;
    if (item == "granary") return 30;
    if (item == "walls") return 30;
    if (item == "research") return 20;
    throw ExecutionError("unknown item '" + std::string(item) + "'");
}

bool is_item(std::string_view item) {
    return item == "settler" || item == "worker" || item == "warrior" || item == "library" || item == "granary" ||
           item == "walls" || item == "research";
}

int tech_cost(int level) { return 120 + 90 * level * level; }

// ---------------------------------------------------------------------------
// State access

Unit* GameState::unit(int id) {
    auto it = std::lower_bound(units.begin(), units.end(), id, [](const Unit& u, int v) { return u.id < v; });
    return it != units.end() && it->id == id ? &*it : nullptr;
}

const Unit* GameState::unit(int id) const { return const_cast<GameState*>(this)->unit(id); }

City* GameState::city(int id) {
    auto it = std::lower_bound(cities.begin(), cities.end(), id, [](const City& c, int v) { return c.id < v; });
    return it != cities.end() && it->id == id ? &*it : nullptr;
}

const City* GameState::city(int id) const { return const_cast<GameState*>(this)->city(id); }

const City* GameState::city_at(int x, int y) const {
    for (const auto& c : cities) {
        if (c.x == x && c.y == y) return &c;
    }
    return nullptr;
}

int chebyshev(int x0, int y0, int x1, int y1) { return std::max(std::abs(x0 - x1), std::abs(y0 - y1)); }

namespace {

constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

int warrior_hp(int tech) { return 8 + 2 * tech; }

Unit make_unit(GameState& s, int owner, UnitKind kind, int x, int y) {
    Unit u;
    u.id = s.next_id++;
    u.owner = owner;
    u.kind = kind;
    u.x = x;
    u.y = y;
    u.max_hp = kind == UnitKind::Warrior ? warrior_hp(s.players[static_cast<std::size_t>(owner)].tech) : 1;
    u.hp = u.max_hp;
    return u;
}

void refresh_territory(GameState& s) {
    for (auto& t : s.tiles) t.owner = -1;
    for (const auto& c : s.cities) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                int x = c.x + dx, y = c.y + dy;
                if (!s.in_bounds(x, y)) continue;
                Tile& t = s.tile(x, y);
                if (t.owner < 0) t.owner = c.owner;
            }
        }
    }
}

void refresh_vision(GameState& s) {
    for (int seat = 0; seat < 2; ++seat) {
        auto vis = visible_tiles(s, seat);
        auto& ex = s.players[static_cast<std::size_t>(seat)].explored;
        for (std::size_t i = 0; i < vis.size(); ++i) ex[i] |= vis[i];
    }
}

bool enemy_at(const GameState& s, int seat, int x, int y) {
    for (const auto& u : s.units) {
        if (u.owner != seat && u.x == x && u.y == y) return true;
    }
    const City* c = s.city_at(x, y);
    return c && c->owner != seat;
}

int defense_bonus(const GameState& s, int x, int y) {
    int bonus = 0;
    if (s.tile(x, y).terrain == Terrain::Hills) bonus += 2;
    if (const City* c = s.city_at(x, y)) bonus += 1 + (c->walls ? 4 : 0);
    return bonus;
}

void remove_unit(GameState& s, int id) {
    s.units.erase(std::remove_if(s.units.begin(), s.units.end(), [id](const Unit& u) { return u.id == id; }), s.units.end());
}

// Attack from `attacker` onto (x, y). Returns true when the attacker survives.
bool resolve_combat(GameState& s, int attacker_id, int x, int y) {
    Unit* att = s.unit(attacker_id);
    const int seat = att->owner;
    const Unit* best = nullptr;
    int best_strength = -1;
    for (const auto& u : s.units) {
        if (u.owner == seat || u.x != x || u.y != y || u.kind != UnitKind::Warrior) continue;
        int strength = u.hp + defense_bonus(s, x, y);
        if (strength > best_strength) {
            best_strength = strength;
            best = &u;
        }
    }
    const City* city = s.city_at(x, y);
    int defense = 0;
    if (best) {
        defense = best_strength;
    } else if (city && city->owner != seat) {
        defense = city->pop + (city->walls ? 4 : 0);
    }

    if (att->hp > defense) {
        att->hp = std::max(1, att->hp - std::max(1, defense / 2));
        if (best) {
            remove_unit(s, best->id);
            att = s.unit(attacker_id);
        }
        bool defended = false;
        for (const auto& u : s.units) {
            if (u.owner != seat && u.x == x && u.y == y && u.kind == UnitKind::Warrior) defended = true;
        }
        if (defended) return true;
        s.units.erase(std::remove_if(s.units.begin(), s.units.end(),
                                     [&](const Unit& u) { return u.owner != seat && u.x == x && u.y == y; }),
                      s.units.end());
        att = s.unit(attacker_id);
        if (City* c = const_cast<City*>(s.city_at(x, y)); c && c->owner != seat) {
            c->pop -= 1;
            if (c->pop <= 0) {
                int cid = c->id;
                s.cities.erase(std::remove_if(s.cities.begin(), s.cities.end(), [cid](const City& k) { return k.id == cid; }),
                               s.cities.end());
            } else {
                c->owner = seat;
                c->build = "none";
                c->shields = 0;
                c->food = 0;
            }
            refresh_territory(s);
        }
        att->x = x;
        att->y = y;
        att->order = OrderKind::None;
        att->tx = att->ty = -1;
        return true;
    }
    if (best) {
        Unit* d = s.unit(best->id);
        d->hp = std::max(1, d->hp - std::max(1, att->hp / 2));
    }
    remove_unit(s, attacker_id);
    return false;
}

void move_units(GameState& s) {
    std::vector<int> ids;
    for (const auto& u : s.units) ids.push_back(u.id);
    for (int id : ids) {
        Unit* u = s.unit(id);
        if (!u) continue;
        if (u->order == OrderKind::Goto) {
            if (u->x == u->tx && u->y == u->ty) {
                u->order = OrderKind::None;
                continue;
            }
            auto step = next_step(s, u->owner, u->x, u->y, u->tx, u->ty);
            if (!step) {
                u->order = OrderKind::None;
                continue;
            }
            if (enemy_at(s, u->owner, step->first, step->second)) continue;
            u->x = step->first;
            u->y = step->second;
            u->work = 0;
            if (u->x == u->tx && u->y == u->ty) u->order = OrderKind::None;
        } else if (u->order == OrderKind::Attack) {
            const int tx = u->tx, ty = u->ty;
            if (chebyshev(u->x, u->y, tx, ty) <= 1) {
                if (enemy_at(s, u->owner, tx, ty)) {
                    resolve_combat(s, id, tx, ty);
                } else {
                    if (u->x != tx || u->y != ty) {
                        if (s.tile(tx, ty).land()) {
                            u->x = tx;
                            u->y = ty;
                        }
                    }
                    u->order = OrderKind::None;
                }
                continue;
            }
            auto step = next_step(s, u->owner, u->x, u->y, tx, ty);
            if (!step) {
                u->order = OrderKind::None;
                continue;
            }
            if (enemy_at(s, u->owner, step->first, step->second)) {
                resolve_combat(s, id, step->first, step->second);
                continue;
            }
            u->x = step->first;
            u->y = step->second;
        }
    }
}

void work_tiles(GameState& s) {
    for (auto& u : s.units) {
        if (u.kind != UnitKind::Worker || u.order == OrderKind::Goto) continue;
        Tile& t = s.tile(u.x, u.y);
        if (!t.land() || t.improved || t.owner != u.owner) {
            u.work = 0;
            continue;
        }
        if (++u.work >= kWorkerTurns) {
            t.improved = true;
            u.work = 0;
        }
    }
}

void heal_units(GameState& s) {
    for (auto& u : s.units) {
        if (u.hp >= u.max_hp) continue;
        const City* c = s.city_at(u.x, u.y);
        u.hp = std::min(u.max_hp, u.hp + ((c && c->owner == u.owner) ? 2 : 1));
    }
}

void grow_cities(GameState& s) {
    std::vector<int> ids;
    for (const auto& c : s.cities) ids.push_back(c.id);
    for (int id : ids) {
        City* c = s.city(id);
        if (!c) continue;
        CityOutput out = city_output(s, *c);
        Player& p = s.players[static_cast<std::size_t>(c->owner)];
        c->food += out.food;
        const int threshold = 8 + 4 * c->pop;
        if (c->food >= threshold) {
            if (c->pop < kMaxPop) {
                c->pop += 1;
                c->food = c->granary ? threshold / 2 : 0;
            } else {
                c->food = threshold;
            }
        } else if (c->food < 0) {
            if (c->pop > 1) c->pop -= 1;
            c->food = 0;
        }
        c->shields += out.shields;
        p.science += out.science;
        p.gold += out.gold;
        if (c->build == "none") {
            c->shields = std::min(c->shields, 40);
            continue;
        }
        const int cost = item_cost(c->build);
        if (c->shields < cost) continue;
        const std::string item = c->build;
        if (item == "settler") {
            if (c->pop < 2) {
                c->shields = cost;
                continue;
            }
            c->pop -= 1;
            s.units.push_back(make_unit(s, c->owner, UnitKind::Settler, c->x, c->y));
        } else if (item == "worker") {
            s.units.push_back(make_unit(s, c->owner, UnitKind::Worker, c->x, c->y));
        } else if (item == "warrior") {
            s.units.push_back(make_unit(s, c->owner, UnitKind::Warrior, c->x, c->y));
        } else if (item == "library") {
            c->library = true;
        } else if (item == "granary") {
            c->granary = true;
        } else if (item == "walls") {
            c->walls = true;
        } else if (item == "research") {
            p.science += 10 + 2 * c->pop;
        }
        c->shields -= cost;
        c->build = "none";
    }
}

void research(GameState& s) {
    for (auto& p : s.players) {
        while (p.tech < kTechMax && p.science >= tech_cost(p.tech)) {
            p.science -= tech_cost(p.tech);
            p.tech += 1;
        }
        if (p.tech >= kTechMax) p.science = 0;
    }
}

bool assets_left(const GameState& s, int seat) {
    for (const auto& u : s.units) {
        if (u.owner == seat) return true;
    }
    for (const auto& c : s.cities) {
        if (c.owner == seat) return true;
    }
    return false;
}

}  // namespace

bool has_assets(const GameState& s, int seat) { return assets_left(s, seat); }

Yield tile_yield(const Tile& t) {
    Yield y;
    switch (t.terrain) {
        case Terrain::Grass:
            y.food = 2;
            y.shields = 1;
            if (t.improved) y.food += 1;
            break;
        case Terrain::Hills:
            y.food = 1;
            y.shields = 2;
            if (t.improved) y.shields += 1;
            break;
        case Terrain::Water:
            y.food = 1;
            break;
    }
    if (t.resource) {
        y.food += 1;
        y.shields += 1;
    }
    return y;
}

CityOutput city_output(const GameState& s, const City& c) {
    CityOutput out;
    const Player& p = s.players[static_cast<std::size_t>(c.owner)];
    Yield center = tile_yield(s.tile(c.x, c.y));
    int food = center.food + 1;
    int shields = center.shields + 1;
    out.worked.push_back(s.index(c.x, c.y));

    struct Option {
        int value;
        int idx;
        Yield y;
    };
    std::vector<Option> options;
    for (int d = 0; d < 8; ++d) {
        int x = c.x + kDx[d], y = c.y + kDy[d];
        if (!s.in_bounds(x, y)) continue;
        const Tile& t = s.tile(x, y);
        if (t.owner != c.owner || enemy_at(s, c.owner, x, y)) continue;
        Yield yl = tile_yield(t);
        int value = 0;
        switch (p.focus) {
            case Focus::Growth: value = 3 * yl.food + yl.shields; break;
            case Focus::Production: value = yl.food + 3 * yl.shields; break;
            case Focus::Science: value = 2 * yl.food + 2 * yl.shields; break;
        }
        options.push_back({value, s.index(x, y), yl});
    }
    std::stable_sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.idx < b.idx;
    });
    for (int i = 0; i < c.pop && i < static_cast<int>(options.size()); ++i) {
        food += options[static_cast<std::size_t>(i)].y.food;
        shields += options[static_cast<std::size_t>(i)].y.shields;
        out.worked.push_back(options[static_cast<std::size_t>(i)].idx);
    }
    if (p.focus == Focus::Growth) food += 1;
    if (p.focus == Focus::Production) shields += 1;
    out.food = food - 2 * c.pop;
    out.shields = shields;
    out.science = 1 + c.pop / 2 + (c.library ? 2 + c.pop / 2 : 0) + (p.focus == Focus::Science ? 2 : 0);
    out.gold = 1 + c.pop / 4;
    return out;
}

int score(const GameState& s, int seat) {
    int cities = 0, pop = 0, buildings = 0;
    for (const auto& c : s.cities) {
        if (c.owner != seat) continue;
        ++cities;
        pop += c.pop;
        buildings += c.buildings();
    }
    return 2 * cities + pop + 5 * s.players[static_cast<std::size_t>(seat)].tech + buildings;
}

std::vector<std::uint8_t> visible_tiles(const GameState& s, int seat) {
    std::vector<std::uint8_t> vis(s.tiles.size(), 0);
    auto mark = [&](int cx, int cy, int r) {
        for (int y = cy - r; y <= cy + r; ++y) {
            for (int x = cx - r; x <= cx + r; ++x) {
                if (s.in_bounds(x, y)) vis[static_cast<std::size_t>(s.index(x, y))] = 1;
            }
        }
    };
    for (const auto& u : s.units) {
        if (u.owner == seat) mark(u.x, u.y, kUnitVision);
    }
    for (const auto& c : s.cities) {
        if (c.owner == seat) mark(c.x, c.y, kCityVision);
    }
    return vis;
}

namespace {

// Breadth-first search from (x, y); fills parent indices. Enemy-occupied
// tiles are impassable except the target itself.
std::vector<int> bfs(const GameState& s, int seat, int x, int y, int tx, int ty) {
    std::vector<int> parent(s.tiles.size(), -2);
    const int start = s.index(x, y);
    const int goal = s.index(tx, ty);
    parent[static_cast<std::size_t>(start)] = -1;
    std::deque<int> q{start};
    while (!q.empty()) {
        int cur = q.front();
        q.pop_front();
        if (cur == goal) break;
        int cx = cur % s.width, cy = cur / s.width;
        for (int d = 0; d < 8; ++d) {
            int nx = cx + kDx[d], ny = cy + kDy[d];
            if (!s.in_bounds(nx, ny)) continue;
            int ni = s.index(nx, ny);
            if (parent[static_cast<std::size_t>(ni)] != -2) continue;
            if (!s.tile(nx, ny).land()) continue;
            if (ni != goal && enemy_at(s, seat, nx, ny)) continue;
            parent[static_cast<std::size_t>(ni)] = cur;
            q.push_back(ni);
        }
    }
    return parent;
}

}  // namespace

std::optional<std::pair<int, int>> next_step(const GameState& s, int seat, int x, int y, int tx, int ty) {
    if (!s.in_bounds(tx, ty) || !s.tile(tx, ty).land()) return std::nullopt;
    if (x == tx && y == ty) return std::nullopt;
    auto parent = bfs(s, seat, x, y, tx, ty);
    int cur = s.index(tx, ty);
    if (parent[static_cast<std::size_t>(cur)] == -2) return std::nullopt;
    const int start = s.index(x, y);
    while (parent[static_cast<std::size_t>(cur)] != start) cur = parent[static_cast<std::size_t>(cur)];
    return std::make_pair(cur % s.width, cur / s.width);
}

int path_length(const GameState& s, int seat, int x, int y, int tx, int ty) {
    if (!s.in_bounds(tx, ty) || !s.tile(tx, ty).land()) return -1;
    if (x == tx && y == ty) return 0;
    auto parent = bfs(s, seat, x, y, tx, ty);
    int cur = s.index(tx, ty);
    if (parent[static_cast<std::size_t>(cur)] == -2) return -1;
    int n = 0;
    const int start = s.index(x, y);
    while (cur != start) {
        cur = parent[static_cast<std::size_t>(cur)];
        ++n;
    }
    return n;
}

GameState reset(const MapFixture& f, std::uint64_t seed) {
    GameState s;
    s.fixture = f.name;
    s.seed = seed;
    s.width = f.width;
    s.height = f.height;
    s.tiles.resize(f.terrain.size());
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < f.terrain.size(); ++i) {
        s.tiles[i].terrain = f.terrain[i];
        std::uint64_t r = rng();
        if (s.tiles[i].land() && r % 100 < 12) s.tiles[i].resource = true;
    }
    for (int seat = 0; seat < 2; ++seat) {
        auto& p = s.players[static_cast<std::size_t>(seat)];
        p.explored.assign(s.tiles.size(), 0);
        const auto& st = f.starts[static_cast<std::size_t>(seat)];
        s.units.push_back(make_unit(s, seat, UnitKind::Settler, st.x, st.y));
        s.units.push_back(make_unit(s, seat, UnitKind::Warrior, st.x, st.y));
    }
    refresh_vision(s);
    return s;
}

GameState reset(std::string_view fixture, std::uint64_t seed) { return reset(load_fixture(fixture), seed); }

ApplyResult apply_command(GameState& s, int seat, const Command& c) {
    auto reject = [](std::string why) { return ApplyResult{false, std::move(why)}; };
    switch (c.verb) {
        case Command::Verb::EndTurn: return {};
        case Command::Verb::ResearchFocus: s.players[static_cast<std::size_t>(seat)].focus = c.focus; return {};
        case Command::Verb::Build: {
            City* city = s.city(c.id);
            if (!city || city->owner != seat) return reject("no such city");
            if (!is_item(c.item)) return reject("unknown item");
            if ((c.item == "library" && city->library) || (c.item == "granary" && city->granary) ||
                (c.item == "walls" && city->walls)) {
                return reject("building already present");
            }
            city->build = c.item;
            return {};
        }
        case Command::Verb::FoundCity: {
            Unit* u = s.unit(c.id);
            if (!u || u->owner != seat) return reject("no such unit");
            if (u->kind != UnitKind::Settler) return reject("only settlers found cities");
            const Tile& t = s.tile(u->x, u->y);
            if (!t.land()) return reject("cannot found on water");
            if (t.owner >= 0 && t.owner != seat) return reject("tile belongs to another player");
            for (const auto& other : s.cities) {
                if (chebyshev(other.x, other.y, u->x, u->y) < kMinCityDistance) return reject("too close to a city");
            }
            City city;
            city.id = s.next_id++;
            city.owner = seat;
            city.x = u->x;
            city.y = u->y;
            remove_unit(s, c.id);
            s.cities.push_back(city);
            refresh_territory(s);
            refresh_vision(s);
            return {};
        }
        case Command::Verb::Move:
        case Command::Verb::Attack: {
            Unit* u = s.unit(c.id);
            if (!u || u->owner != seat) return reject("no such unit");
            if (c.order == OrderKind::Hold) {
                u->order = OrderKind::Hold;
                u->tx = u->x;
                u->ty = u->y;
                return {};
            }
            if (!s.in_bounds(c.x, c.y) || !s.tile(c.x, c.y).land()) return reject("target is not a land tile");
            if (c.verb == Command::Verb::Attack && u->kind != UnitKind::Warrior) return reject("only warriors attack");
            u->order = c.verb == Command::Verb::Attack ? OrderKind::Attack : OrderKind::Goto;
            u->tx = c.x;
            u->ty = c.y;
            if (c.verb == Command::Verb::Move && u->x == c.x && u->y == c.y) u->order = OrderKind::Hold;
            return {};
        }
    }
    return reject("unknown command");
}

void advance_turn(GameState& s) {
    move_units(s);
    work_tiles(s);
    heal_units(s);
    refresh_territory(s);
    grow_cities(s);
    research(s);
    std::sort(s.units.begin(), s.units.end(), [](const Unit& a, const Unit& b) { return a.id < b.id; });
    refresh_vision(s);
    for (int seat = 0; seat < 2; ++seat) s.players[static_cast<std::size_t>(seat)].alive = assets_left(s, seat);
    s.turn += 1;
}

int apply(GameState& s, const std::vector<std::pair<int, Command>>& commands) {
    int rejected = 0;
    bool end = false;
    for (const auto& [seat, c] : commands) {
        if (c.verb == Command::Verb::EndTurn) {
            end = true;
            continue;
        }
        if (!apply_command(s, seat, c).ok) ++rejected;
    }
    if (end) advance_turn(s);
    return rejected;
}

std::optional<OutcomeKind> outcome(const GameState& s, int seat) {
    if (!assets_left(s, seat)) return OutcomeKind::Destroyed;
    const int other = 1 - seat;
    if (s.players[static_cast<std::size_t>(other)].tech >= kTechMax) return OutcomeKind::LostRace;
    if (s.players[static_cast<std::size_t>(seat)].tech >= kTechMax) return OutcomeKind::Won;
    return std::nullopt;
}

std::uint64_t state_hash(const GameState& s) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::int64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    auto mix_str = [&](const std::string& str) {
        mix(static_cast<std::int64_t>(str.size()));
        for (unsigned char ch : str) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    mix(s.turn);
    mix(s.width);
    mix(s.height);
    mix(s.next_id);
    for (const auto& t : s.tiles) mix(int(t.terrain) | (int(t.resource) << 4) | (int(t.improved) << 5) | ((t.owner + 1) << 8));
    for (const auto& u : s.units) {
        for (int v : {u.id, u.owner, int(u.kind), u.x, u.y, u.hp, u.max_hp, int(u.order), u.tx, u.ty, u.work}) mix(v);
    }
    for (const auto& c : s.cities) {
        for (int v : {c.id, c.owner, c.x, c.y, c.pop, c.food, c.shields, int(c.library), int(c.granary), int(c.walls)}) mix(v);
        mix_str(c.build);
    }
    for (const auto& p : s.players) {
        for (int v : {p.science, p.gold, p.tech, int(p.focus), int(p.alive)}) mix(v);
        for (auto e : p.explored) mix(e);
    }
    return h;
}

std::string describe(const GameState& s) {
    std::ostringstream out;
    out << "turn " << s.turn << "\n";
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const City* c = s.city_at(x, y);
            char ch = s.tile(x, y).terrain == Terrain::Water ? '~' : (s.tile(x, y).terrain == Terrain::Hills ? '^' : '.');
            if (c) {
                ch = c->owner == 0 ? 'A' : 'B';
            } else {
                for (const auto& u : s.units) {
                    if (u.x == x && u.y == y) ch = u.owner == 0 ? 'a' : 'b';
                }
            }
            out << ch;
        }
        out << "\n";
    }
    for (int seat = 0; seat < 2; ++seat) {
        const auto& p = s.players[static_cast<std::size_t>(seat)];
        out << "seat " << seat << ": tech " << p.tech << " science " << p.science << " score " << score(s, seat) << "\n";
    }
    return out.str();
}

}  // namespace kbrl::microciv
