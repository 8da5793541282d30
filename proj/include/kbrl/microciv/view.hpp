#pragma once

#include <vector>

#include "kbrl/microciv/game.hpp"

namespace kbrl::microciv {

// Derived per-tile facts from one seat's point of view. Ranks are 1-based;
// 0 means "not a candidate".
struct TileView {
    bool explored = false;
    bool visible = false;
    bool can_found = false;
    bool claimed = false;  // target of an own unit order
    int site_score = 0;
    int site_rank = 0;
    int frontier_rank = 0;
    int improve_rank = 0;
};

struct SeatView {
    int seat = 0;
    std::vector<TileView> tiles;
    std::vector<int> known_enemy_cities;   // ids, tile explored
    std::vector<int> visible_enemy_units;  // ids
    int sites = 0;                         // tiles with site_rank > 0
};

SeatView compute_view(const GameState& state, int seat);

// Strength a city shows against an attack: best defender (hp plus terrain
// and city bonuses) or, undefended, pop plus walls.
int city_defense(const GameState& state, const City& city);
int defenders(const GameState& state, const City& city);
// Enemy warriors seen within 3 tiles of the city.
int city_threat(const GameState& state, const SeatView& view, const City& city);
// Chebyshev distance to the nearest own city, or -1.
int home_distance(const GameState& state, int seat, int x, int y);

}  // namespace kbrl::microciv
