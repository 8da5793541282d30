#include "kbrl/microciv/view.hpp"

#include <algorithm>
#include <climits>

namespace kbrl::microciv {

int defenders(const GameState& s, const City& c) {
    int n = 0;
    for (const auto& u : s.units) {
        if (u.owner == c.owner && u.kind == UnitKind::Warrior && u.x == c.x && u.y == c.y) ++n;
    }
    return n;
}

int city_defense(const GameState& s, const City& c) {
    int bonus = 1 + (c.walls ? 4 : 0) + (s.tile(c.x, c.y).terrain == Terrain::Hills ? 2 : 0);
    int best = -1;
    for (const auto& u : s.units) {
        if (u.owner == c.owner && u.kind == UnitKind::Warrior && u.x == c.x && u.y == c.y) best = std::max(best, u.hp + bonus);
    }
    return best >= 0 ? best : c.pop + (c.walls ? 4 : 0);
}

int city_threat(const GameState& s, const SeatView& view, const City& c) {
    int n = 0;
    for (int id : view.visible_enemy_units) {
        const Unit* u = s.unit(id);
        if (u && u->kind == UnitKind::Warrior && chebyshev(u->x, u->y, c.x, c.y) <= 3) ++n;
    }
    return n;
}

int home_distance(const GameState& s, int seat, int x, int y) {
    int best = -1;
    for (const auto& c : s.cities) {
        if (c.owner != seat) continue;
        int d = chebyshev(c.x, c.y, x, y);
        if (best < 0 || d < best) best = d;
    }
    return best;
}

SeatView compute_view(const GameState& s, int seat) {
    SeatView v;
    v.seat = seat;
    const auto& explored = s.players[static_cast<std::size_t>(seat)].explored;
    const auto visible = visible_tiles(s, seat);
    const std::size_t n = s.tiles.size();
    v.tiles.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        v.tiles[i].explored = explored[i] != 0;
        v.tiles[i].visible = visible[i] != 0;
    }

    std::vector<std::uint8_t> enemy_unit(n, 0), own_worker(n, 0);
    for (const auto& u : s.units) {
        std::size_t i = static_cast<std::size_t>(s.index(u.x, u.y));
        if (u.owner == seat) {
            if (u.order == OrderKind::Goto || u.order == OrderKind::Attack) {
                if (s.in_bounds(u.tx, u.ty)) v.tiles[static_cast<std::size_t>(s.index(u.tx, u.ty))].claimed = true;
            }
            if (u.kind == UnitKind::Worker) own_worker[i] = 1;
        } else if (visible[i]) {
            enemy_unit[i] = 1;
            v.visible_enemy_units.push_back(u.id);
        }
    }
    std::vector<const City*> known_cities;
    for (const auto& c : s.cities) {
        bool known = c.owner == seat || explored[static_cast<std::size_t>(s.index(c.x, c.y))];
        if (!known) continue;
        known_cities.push_back(&c);
        if (c.owner != seat) v.known_enemy_cities.push_back(c.id);
    }

    // Anchor points for distance penalties: own cities, else own units.
    std::vector<std::pair<int, int>> anchors;
    for (const auto& c : s.cities) {
        if (c.owner == seat) anchors.emplace_back(c.x, c.y);
    }
    if (anchors.empty()) {
        for (const auto& u : s.units) {
            if (u.owner == seat) anchors.emplace_back(u.x, u.y);
        }
    }
    auto anchor_distance = [&](int x, int y) {
        int best = INT_MAX;
        for (const auto& [ax, ay] : anchors) best = std::min(best, chebyshev(ax, ay, x, y));
        return best == INT_MAX ? 0 : best;
    };

    struct Ranked {
        int key;
        int idx;
    };
    std::vector<Ranked> sites, frontier, improve;
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(s.index(x, y));
            TileView& tv = v.tiles[i];
            if (!tv.explored) continue;
            const Tile& t = s.tiles[i];
            if (!t.land()) continue;

            bool near_city = false;
            for (const City* c : known_cities) {
                if (chebyshev(c->x, c->y, x, y) < kMinCityDistance) {
                    near_city = true;
                    break;
                }
            }
            tv.can_found = !near_city && t.owner < 0 && !enemy_unit[i];
            if (tv.can_found) {
                int score = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (!s.in_bounds(nx, ny)) continue;
                        std::size_t ni = static_cast<std::size_t>(s.index(nx, ny));
                        if (!explored[ni]) {
                            score += 3;
                            continue;
                        }
                        Tile plain = s.tiles[ni];
                        plain.improved = false;
                        Yield yl = tile_yield(plain);
                        score += 2 * yl.food + yl.shields;
                    }
                }
                tv.site_score = score;
                if (!tv.claimed) sites.push_back({score - 3 * anchor_distance(x, y), static_cast<int>(i)});
            }

            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (s.in_bounds(nx, ny) && !explored[static_cast<std::size_t>(s.index(nx, ny))]) {
                        edge = true;
                        break;
                    }
                }
            }
            if (edge && !tv.claimed && !enemy_unit[i]) frontier.push_back({-anchor_distance(x, y), static_cast<int>(i)});

            if (t.owner == seat && !t.improved && !tv.claimed && !own_worker[i] && !s.city_at(x, y)) {
                int gain = t.terrain == Terrain::Grass ? 2 : 1;
                improve.push_back({gain, static_cast<int>(i)});
            }
        }
    }
    auto rank = [](std::vector<Ranked>& xs) {
        std::stable_sort(xs.begin(), xs.end(), [](const Ranked& a, const Ranked& b) {
            if (a.key != b.key) return a.key > b.key;
            return a.idx < b.idx;
        });
    };
    rank(sites);
    rank(frontier);
    rank(improve);
    for (std::size_t r = 0; r < sites.size(); ++r) v.tiles[static_cast<std::size_t>(sites[r].idx)].site_rank = int(r) + 1;
    for (std::size_t r = 0; r < frontier.size(); ++r) {
        v.tiles[static_cast<std::size_t>(frontier[r].idx)].frontier_rank = int(r) + 1;
    }
    for (std::size_t r = 0; r < improve.size(); ++r) {
        v.tiles[static_cast<std::size_t>(improve[r].idx)].improve_rank = int(r) + 1;
    }
    v.sites = static_cast<int>(sites.size());
    return v;
}

}  // namespace kbrl::microciv
