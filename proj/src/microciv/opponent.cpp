#include <algorithm>

#include "kbrl/microciv/env.hpp"

namespace kbrl::microciv {

namespace {

const TileView* best_ranked(const SeatView& v, const GameState& s, int TileView::*rank, int& bx, int& by) {
    const TileView* best = nullptr;
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const TileView& tv = v.tiles[static_cast<std::size_t>(s.index(x, y))];
            if (tv.*rank > 0 && (!best || tv.*rank < best->*rank)) {
                best = &tv;
                bx = x;
                by = y;
            }
        }
    }
    return best;
}

Command order(int uid, OrderKind kind, int x, int y) {
    Command c;
    c.verb = kind == OrderKind::Attack ? Command::Verb::Attack : Command::Verb::Move;
    c.id = uid;
    c.order = kind;
    c.x = x;
    c.y = y;
    return c;
}

}  // namespace

void ScriptedOpponent::play_turn(Game& game, int seat) {
    const GameState& s = game.state();
    if (!has_assets(s, seat)) return;
    SeatView view = compute_view(s, seat);

    int cities = 0, settlers = 0;
    for (const auto& c : s.cities) cities += c.owner == seat;
    for (const auto& u : s.units) settlers += u.owner == seat && u.kind == UnitKind::Settler;

    Command focus;
    focus.verb = Command::Verb::ResearchFocus;
    focus.focus = cities < 3 ? Focus::Growth : Focus::Science;
    if (s.players[static_cast<std::size_t>(seat)].focus != focus.focus) game.command(seat, focus);

    // Unit orders first; ids are copied because founding removes units.
    std::vector<int> ids;
    for (const auto& u : s.units) {
        if (u.owner == seat) ids.push_back(u.id);
    }
    for (int id : ids) {
        const Unit* u = game.state().unit(id);
        if (!u) continue;
        const GameState& st = game.state();
        if (u->kind == UnitKind::Settler) {
            const TileView& here = view.tiles[static_cast<std::size_t>(st.index(u->x, u->y))];
            if (here.can_found) {
                Command c;
                c.verb = Command::Verb::FoundCity;
                c.id = id;
                if (game.command(seat, c).ok) {
                    view = compute_view(game.state(), seat);
                    continue;
                }
                // Blocked by a city out of sight.
                view.tiles[static_cast<std::size_t>(st.index(u->x, u->y))].site_rank = 0;
            }
            bool target_ok = u->order == OrderKind::Goto && st.in_bounds(u->tx, u->ty) &&
                             !(u->tx == u->x && u->ty == u->y) && !here.can_found;
            if (!target_ok) {
                int x = 0, y = 0;
                if (best_ranked(view, st, &TileView::site_rank, x, y)) {
                    game.command(seat, order(id, OrderKind::Goto, x, y));
                    view.tiles[static_cast<std::size_t>(st.index(x, y))].site_rank = 0;
                } else if (best_ranked(view, st, &TileView::frontier_rank, x, y)) {
                    game.command(seat, order(id, OrderKind::Goto, x, y));
                    view.tiles[static_cast<std::size_t>(st.index(x, y))].frontier_rank = 0;
                }
            }
        } else if (u->kind == UnitKind::Worker) {
            if (u->order == OrderKind::Goto || u->work > 0) continue;
            const Tile& t = st.tile(u->x, u->y);
            if (t.owner == seat && !t.improved && !st.city_at(u->x, u->y)) continue;
            int x = 0, y = 0;
            if (best_ranked(view, st, &TileView::improve_rank, x, y)) {
                game.command(seat, order(id, OrderKind::Goto, x, y));
                view.tiles[static_cast<std::size_t>(st.index(x, y))].improve_rank = 0;
            }
        } else {
            if (u->order == OrderKind::Goto || u->order == OrderKind::Attack) continue;
            const City* home = st.city_at(u->x, u->y);
            if (home && home->owner == seat && defenders(st, *home) <= 1) continue;
            // Ungarrisoned own city first.
            const City* bare = nullptr;
            for (const auto& c : st.cities) {
                if (c.owner == seat && defenders(st, c) == 0 &&
                    (!bare || chebyshev(u->x, u->y, c.x, c.y) < chebyshev(u->x, u->y, bare->x, bare->y))) {
                    bare = &c;
                }
            }
            if (bare) {
                game.command(seat, order(id, OrderKind::Goto, bare->x, bare->y));
                continue;
            }
            const City* prey = nullptr;
            for (int cid : view.known_enemy_cities) {
                const City* c = st.city(cid);
                if (c && city_defense(st, *c) < u->hp && (!prey || city_defense(st, *c) < city_defense(st, *prey))) {
                    prey = c;
                }
            }
            if (prey) {
                game.command(seat, order(id, OrderKind::Attack, prey->x, prey->y));
                continue;
            }
            int x = 0, y = 0;
            if (best_ranked(view, st, &TileView::frontier_rank, x, y)) {
                game.command(seat, order(id, OrderKind::Goto, x, y));
                view.tiles[static_cast<std::size_t>(st.index(x, y))].frontier_rank = 0;
            }
        }
    }

    // City production.
    const GameState& st = game.state();
    int workers = 0;
    for (const auto& u : st.units) workers += u.owner == seat && u.kind == UnitKind::Worker;
    cities = 0;
    for (const auto& c : st.cities) cities += c.owner == seat;
    for (const auto& c : st.cities) {
        if (c.owner != seat) continue;
        if (c.build != "none" && c.build != "research") continue;
        std::string item = "research";
        if (defenders(st, c) == 0) {
            item = "warrior";
        } else if (cities + settlers < 4 && c.pop >= 2) {
            item = "settler";
            ++settlers;
        } else if (workers < cities) {
            item = "worker";
            ++workers;
        } else if (!c.library) {
            item = "library";
        } else if (!c.granary) {
            item = "granary";
        } else if (!c.walls && city_threat(st, view, c) > 0) {
            item = "walls";
        }
        if (item == c.build) continue;
        Command b;
        b.verb = Command::Verb::Build;
        b.id = c.id;
        b.item = item;
        game.command(seat, b);
    }
}

}  // namespace kbrl::microciv
