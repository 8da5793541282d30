#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kbrl/inference/engine.hpp"

namespace kbrl::microciv {

using inference::OutcomeKind;

inline constexpr int kTechMax = 8;
inline constexpr int kEraTurns = 20;
inline constexpr int kMaxPop = 8;
inline constexpr int kMinCityDistance = 3;
inline constexpr int kUnitVision = 2;
inline constexpr int kCityVision = 2;
inline constexpr int kWorkerTurns = 3;

enum class Terrain : std::uint8_t { Grass, Hills, Water };
enum class UnitKind : std::uint8_t { Settler, Worker, Warrior };
enum class OrderKind : std::uint8_t { None, Goto, Hold, Attack };
enum class Focus : std::uint8_t { Science, Growth, Production };

std::string_view to_string(Terrain t);
std::string_view to_string(UnitKind k);
std::string_view to_string(OrderKind o);
std::string_view to_string(Focus f);
std::optional<Focus> focus_from_string(std::string_view s);

struct Tile {
    Terrain terrain = Terrain::Grass;
    bool resource = false;
    bool improved = false;
    int owner = -1;  // seat whose city claims the tile

    bool land() const { return terrain != Terrain::Water; }
    friend bool operator==(const Tile&, const Tile&) = default;
};

struct Unit {
    int id = 0;
    int owner = 0;
    UnitKind kind = UnitKind::Warrior;
    int x = 0;
    int y = 0;
    int hp = 1;
    int max_hp = 1;
    OrderKind order = OrderKind::None;
    int tx = -1;
    int ty = -1;
    int work = 0;  // worker progress on the current tile

    friend bool operator==(const Unit&, const Unit&) = default;
};

struct City {
    int id = 0;
    int owner = 0;
    int x = 0;
    int y = 0;
    int pop = 1;
    int food = 0;
    int shields = 0;
    std::string build = "none";
    bool library = false;
    bool granary = false;
    bool walls = false;

    int buildings() const { return int(library) + int(granary) + int(walls); }
    friend bool operator==(const City&, const City&) = default;
};

struct Player {
    int science = 0;   // stock toward the next tech
    int gold = 0;
    int tech = 0;
    Focus focus = Focus::Growth;
    bool alive = true;
    std::vector<std::uint8_t> explored;  // per tile

    friend bool operator==(const Player&, const Player&) = default;
};

struct StartPos {
    int x = 0;
    int y = 0;
};

struct MapFixture {
    std::string name;
    int width = 0;
    int height = 0;
    std::array<StartPos, 2> starts{};
    std::vector<Terrain> terrain;
};

// Built-in fixture names: "continent" (default), "twin-continents", "islands".
std::vector<std::string> builtin_fixtures();
// A built-in name or a path to a fixture file.
MapFixture load_fixture(std::string_view name_or_path);
MapFixture parse_fixture(std::string_view text, std::string_view source = "<fixture>");

struct Command {
    enum class Verb { Move, FoundCity, Build, ResearchFocus, Attack, EndTurn };
    Verb verb = Verb::EndTurn;
    int id = -1;  // unit or city id
    int x = -1;
    int y = -1;
    OrderKind order = OrderKind::None;  // Move: Goto or Hold
    std::string item;                   // Build
    Focus focus = Focus::Science;       // ResearchFocus

    friend bool operator==(const Command&, const Command&) = default;
};

// Parses one command line; throws ExecutionError on bad syntax.
Command parse_command(std::string_view text);
std::string format_command(const Command& c);

// Production costs; "research" converts shields into science on completion.
int item_cost(std::string_view item);
bool is_item(std::string_view item);
int tech_cost(int level);

struct GameState {
    std::string fixture;
    std::uint64_t seed = 0;
    int turn = 0;
    int width = 0;
    int height = 0;
    std::vector<Tile> tiles;
    std::vector<Unit> units;    // sorted by id
    std::vector<City> cities;   // sorted by id
    std::array<Player, 2> players{};
    int next_id = 1;

    int index(int x, int y) const { return y * width + x; }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    const Tile& tile(int x, int y) const { return tiles[static_cast<std::size_t>(index(x, y))]; }
    Tile& tile(int x, int y) { return tiles[static_cast<std::size_t>(index(x, y))]; }

    Unit* unit(int id);
    const Unit* unit(int id) const;
    City* city(int id);
    const City* city(int id) const;
    const City* city_at(int x, int y) const;

    friend bool operator==(const GameState&, const GameState&) = default;
};

int chebyshev(int x0, int y0, int x1, int y1);

GameState reset(const MapFixture& fixture, std::uint64_t seed);
GameState reset(std::string_view fixture, std::uint64_t seed);

// Result of applying one command for a seat. Illegal commands leave the
// state unchanged and carry a reason.
struct ApplyResult {
    bool ok = true;
    std::string reason;
};

ApplyResult apply_command(GameState& state, int seat, const Command& command);

// End-of-turn processing for both seats: movement and combat, work, cities,
// research, vision; increments the turn.
void advance_turn(GameState& state);

// Both seats' commands (seat 0 first) followed by advance_turn when one of
// them is EndTurn. Returns the number of rejected commands.
int apply(GameState& state, const std::vector<std::pair<int, Command>>& commands);

// True while the seat still owns a unit or a city.
bool has_assets(const GameState& state, int seat);
std::optional<OutcomeKind> outcome(const GameState& state, int seat);

// Yields of a tile for its owner.
struct Yield {
    int food = 0;
    int shields = 0;
};
Yield tile_yield(const Tile& tile);

struct CityOutput {
    int food = 0;      // net after upkeep
    int shields = 0;
    int science = 0;
    int gold = 0;
    std::vector<int> worked;  // tile indices, center first
};
CityOutput city_output(const GameState& state, const City& city);

int score(const GameState& state, int seat);

// Tiles currently seen by the seat.
std::vector<std::uint8_t> visible_tiles(const GameState& state, int seat);

// One step from (x, y) toward (tx, ty) over land, breadth-first with a fixed
// neighbour order; nullopt when unreachable or already there.
std::optional<std::pair<int, int>> next_step(const GameState& state, int seat, int x, int y, int tx, int ty);

// Land distance in steps, or -1.
int path_length(const GameState& state, int seat, int x, int y, int tx, int ty);

std::uint64_t state_hash(const GameState& state);
std::string describe(const GameState& state);

}  // namespace kbrl::microciv
