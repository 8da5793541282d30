#include "kbrl/harness/harness.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "kbrl/error.hpp"
#include "kbrl/ki/parser.hpp"
#include "kbrl/microciv/env.hpp"

namespace kbrl::harness {

namespace mc = kbrl::microciv;
using inference::OutcomeKind;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

std::vector<ki::KnowledgeItem> load_kb(const std::vector<fs::path>& dirs) {
    if (dirs.empty()) throw ConfigError("no knowledge base directories given");
    std::vector<ki::KnowledgeItem> kb;
    for (const auto& dir : dirs) {
        if (!fs::is_directory(dir)) throw ConfigError("not a rule pack directory: " + dir.string());
        auto pack = ki::load_pack(dir);
        kb.insert(kb.end(), std::make_move_iterator(pack.begin()), std::make_move_iterator(pack.end()));
    }
    return kb;
}

AgentSpec parse_agent_spec(const std::string& text) {
    AgentSpec spec;
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("agent spec '" + text + "' must look like NAME=KBDIR[,KBDIR...][@ARTIFACTS]");
    spec.name = text.substr(0, eq);
    std::string rest = text.substr(eq + 1);
    if (auto at = rest.find('@'); at != std::string::npos) {
        spec.artifacts = rest.substr(at + 1);
        rest = rest.substr(0, at);
        if (spec.artifacts->empty()) throw ConfigError("agent spec '" + text + "' has an empty artifact path");
    }
    std::stringstream in(rest);
    for (std::string dir; std::getline(in, dir, ',');) {
        if (!dir.empty()) spec.kb_dirs.emplace_back(dir);
    }
    if (spec.kb_dirs.empty()) throw ConfigError("agent spec '" + text + "' names no rule pack");
    return spec;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string fmt_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Agents

Agent::Agent(const AgentSpec& spec) : name_(spec.name), kb_(load_kb(spec.kb_dirs)) {
    if (spec.artifacts) {
        model_ = rl::cluster_model_from_json(read_json_file(*spec.artifacts / "cluster_model.json"));
        table_ = rl::table_from_json(read_json_file(*spec.artifacts / "sa_table.json"));
    }
    init();
}

Agent::Agent(std::string name, std::vector<ki::KnowledgeItem> kb, std::optional<rl::ClusterModel> model,
             std::optional<rl::StateActionTable> table)
    : name_(std::move(name)), kb_(std::move(kb)), model_(std::move(model)), table_(std::move(table)) {
    init();
}

void Agent::init() {
    if (model_ && table_) {
        resolver_ = std::make_unique<rl::PolicyResolver>(*table_, 0.0);
    } else {
        model_.reset();
        resolver_ = std::make_unique<inference::UniformResolver>();
    }
}

inference::StateFn Agent::state_fn() const {
    if (!model_) return {};
    const rl::ClusterModel* m = &*model_;
    return [m](const std::vector<double>& f) { return m->assign(f); };
}

// ---------------------------------------------------------------------------
// Dataset

Dataset collect(const CollectConfig& cfg) {
    if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
    if (cfg.max_turns < 1) throw ConfigError("max-turns must be at least 1");
    const auto kb = load_kb(cfg.kb_dirs);
    inference::UniformResolver uniform;
    Dataset d;
    d.feature_names = mc::feature_names();
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        mc::Game game(cfg.fixture, mix_seed(cfg.seed, static_cast<std::uint64_t>(ep), 1));
        mc::ScriptedOpponent opponent;
        const int seat = ep % 2;
        mc::SeatEnv env(game, seat, &opponent);
        inference::EpisodeLimits limits;
        limits.max_turns = cfg.max_turns;
        limits.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(ep), 2);
        auto grab = [&](const std::vector<double>& f) {
            d.episode.push_back(ep);
            d.turn.push_back(env.turn());
            d.rows.push_back(f);
            return 0;
        };
        try {
            auto rec = inference::run_episode(kb, mc::ontology(), env, uniform, limits, grab);
            spdlog::info("collect episode {}: {} after {} turns", ep, inference::to_string(rec.outcome), rec.final_turn);
        } catch (const Error& ex) {
            throw Error("collect episode " + std::to_string(ep) + ": " + ex.what());
        }
    }
    return d;
}

void write_dataset(const Dataset& d, const fs::path& path) {
    std::ostringstream out;
    out << "# kbrl.dataset 1\n";
    out << "episode,turn";
    for (const auto& n : d.feature_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        out << d.episode[i] << ',' << d.turn[i];
        for (double v : d.rows[i]) out << ',' << fmt_double(v);
        out << '\n';
    }
    write_text(path, out.str());
}

Dataset read_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "# kbrl.dataset 1") throw SchemaError(path.string() + ": not a version 1 kbrl dataset");
    Dataset d;
    std::getline(in, line);
    {
        std::stringstream header(line);
        std::string col;
        std::getline(header, col, ',');
        if (col != "episode") throw SchemaError(path.string() + ": bad header");
        std::getline(header, col, ',');
        while (std::getline(header, col, ',')) d.feature_names.push_back(col);
    }
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (values.size() != d.feature_names.size() + 2) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        }
        d.episode.push_back(static_cast<int>(values[0]));
        d.turn.push_back(static_cast<int>(values[1]));
        d.rows.emplace_back(values.begin() + 2, values.end());
    }
    return d;
}

rl::ClusterModel cluster_dataset(const Dataset& d, int k, std::uint64_t seed, int max_iter) {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (d.rows.empty()) throw ConfigError("dataset is empty");
    if (d.feature_names != mc::feature_names()) throw SchemaError("dataset features do not match the MicroCiv feature vector");
    return rl::fit_clusters(d.rows, mc::feature_weights(), d.feature_names, k, max_iter, seed);
}

// ---------------------------------------------------------------------------
// Training

void check(const TrainConfig& cfg) {
    if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
    if (!(cfg.epsilon_start > 0.0 && cfg.epsilon_start <= 1.0) || !(cfg.epsilon_end > 0.0 && cfg.epsilon_end <= 1.0)) {
        throw ConfigError("epsilon must lie in (0, 1]");
    }
    if (cfg.k < 1) throw ConfigError("k must be at least 1");
    if (cfg.wave < 1) throw ConfigError("wave must be at least 1");
    if (cfg.max_turns < 1) throw ConfigError("max-turns must be at least 1");
    if (cfg.checkpoint_every < 1) throw ConfigError("checkpoint interval must be at least 1");
    if (cfg.stop_after < 0) throw ConfigError("stop-after must not be negative");
    if (cfg.kb_dirs.empty()) throw ConfigError("no knowledge base directories given");
}

std::string curve_csv(const std::vector<CurveRow>& curve) {
    std::ostringstream out;
    out << "# kbrl.curve 1\n";
    out << "episode,seat,outcome,turns,return,epsilon,decisions,samples\n";
    for (const auto& r : curve) {
        out << r.episode << ',' << r.seat << ',' << r.outcome << ',' << r.turns << ',' << fmt_double(r.ret, 3) << ','
            << fmt_double(r.epsilon, 6) << ',' << r.decisions << ',' << r.samples << '\n';
    }
    return out.str();
}

namespace {

std::vector<CurveRow> read_curve(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "# kbrl.curve 1") throw SchemaError(path.string() + ": not a version 1 training curve");
    std::getline(in, line);
    std::vector<CurveRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream s(line);
        std::vector<std::string> cells;
        for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
        if (cells.size() != 8) throw SchemaError(path.string() + ": wrong column count");
        CurveRow r;
        r.episode = std::stoi(cells[0]);
        r.seat = std::stoi(cells[1]);
        r.outcome = cells[2];
        r.turns = std::stoi(cells[3]);
        r.ret = std::stod(cells[4]);
        r.epsilon = std::stod(cells[5]);
        r.decisions = std::stoi(cells[6]);
        r.samples = std::stoul(cells[7]);
        rows.push_back(r);
    }
    return rows;
}

nlohmann::json config_json(const TrainConfig& cfg) {
    std::vector<std::string> dirs;
    for (const auto& d : cfg.kb_dirs) dirs.push_back(d.string());
    return {{"episodes", cfg.episodes}, {"epsilon_start", cfg.epsilon_start}, {"epsilon_end", cfg.epsilon_end},
            {"k", cfg.k},               {"seed", cfg.seed},                   {"kb", dirs},
            {"fixture", cfg.fixture},   {"wave", cfg.wave},                   {"max_turns", cfg.max_turns},
            {"collect_episodes", cfg.collect_episodes}};
}

void save_checkpoint(const TrainConfig& cfg, const TrainResult& r) {
    write_json_file(cfg.out / "cluster_model.json", rl::to_json(r.model));
    write_json_file(cfg.out / "sa_table.json", rl::to_json(r.table));
    write_text(cfg.out / "curve.csv", curve_csv(r.curve));
    nlohmann::json cp = {{"schema", "kbrl.checkpoint"},
                         {"version", 1},
                         {"episodes_done", r.curve.size()},
                         {"config", config_json(cfg)}};
    write_json_file(cfg.out / "checkpoint.json", cp);
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
    check(cfg);
    const auto kb = load_kb(cfg.kb_dirs);
    TrainResult r;
    int start = 0;
    const fs::path cp_path = cfg.out / "checkpoint.json";
    if (cfg.resume && fs::exists(cp_path)) {
        nlohmann::json cp = read_json_file(cp_path);
        if (cp.value("schema", "") != "kbrl.checkpoint" || cp.value("version", 0) != 1) {
            throw SchemaError(cp_path.string() + ": not a version 1 checkpoint");
        }
        nlohmann::json saved = cp.at("config");
        nlohmann::json now = config_json(cfg);
        saved.erase("episodes");
        now.erase("episodes");
        if (saved != now) throw ConfigError("checkpoint in " + cfg.out.string() + " was made with different settings");
        start = cp.at("episodes_done").get<int>();
        r.model = rl::cluster_model_from_json(read_json_file(cfg.out / "cluster_model.json"));
        r.table = rl::table_from_json(read_json_file(cfg.out / "sa_table.json"));
        r.curve = read_curve(cfg.out / "curve.csv");
        if (static_cast<int>(r.curve.size()) != start) throw SchemaError("curve.csv does not match the checkpoint");
        spdlog::info("resuming at episode {}", start);
    } else if (fs::exists(cfg.out / "cluster_model.json")) {
        r.model = rl::cluster_model_from_json(read_json_file(cfg.out / "cluster_model.json"));
        if (r.model.feature_names != mc::feature_names()) throw SchemaError("cluster model features do not match");
        r.model.cluster_turns.clear();
        spdlog::info("using existing cluster model with k = {}", r.model.k());
    } else {
        CollectConfig cc;
        cc.episodes = cfg.collect_episodes;
        cc.seed = mix_seed(cfg.seed, 0xC011EC7);
        cc.fixture = cfg.fixture;
        cc.max_turns = cfg.max_turns;
        cc.kb_dirs = cfg.kb_dirs;
        Dataset d = collect(cc);
        write_dataset(d, cfg.out / "dataset.csv");
        r.model = cluster_dataset(d, cfg.k, mix_seed(cfg.seed, 0xC1u));
        spdlog::info("clustered {} rows into k = {}", d.rows.size(), r.model.k());
    }

    const rl::ClusterModel* model = &r.model;
    const inference::StateFn state_fn = [model](const std::vector<double>& f) { return model->assign(f); };

    const int last = cfg.stop_after > 0 ? std::min(cfg.episodes, start + cfg.stop_after) : cfg.episodes;
    int ep = start;
    while (ep < last) {
        const int wave_end = std::min(last, ep + cfg.wave);
        // Every episode of a wave reads the same frozen table.
        std::vector<std::pair<inference::EpisodeRecord, CurveRow>> wave;
        const rl::StateActionTable frozen = r.table;
        for (int e = ep; e < wave_end; ++e) {
            const double eps = rl::annealed_epsilon(cfg.epsilon_start, cfg.epsilon_end, e, cfg.episodes);
            rl::PolicyResolver resolver(frozen, eps);
            mc::Game game(cfg.fixture, mix_seed(cfg.seed, static_cast<std::uint64_t>(e), 1));
            mc::ScriptedOpponent opponent;
            const int seat = e % 2;
            mc::SeatEnv env(game, seat, &opponent);
            inference::EpisodeLimits limits;
            limits.max_turns = cfg.max_turns;
            limits.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(e), 2);
            inference::EpisodeRecord rec;
            try {
                rec = inference::run_episode(kb, mc::ontology(), env, resolver, limits, state_fn);
            } catch (const Error& ex) {
                throw Error("training episode " + std::to_string(e) + ": " + ex.what());
            }
            CurveRow row;
            row.episode = e;
            row.seat = seat;
            row.outcome = std::string(inference::to_string(rec.outcome));
            row.turns = rec.final_turn;
            row.epsilon = eps;
            row.decisions = static_cast<int>(rec.decisions.size());
            wave.emplace_back(std::move(rec), row);
        }
        for (auto& [rec, row] : wave) {
            if (rec.outcome != OutcomeKind::Truncated) {
                rl::update_cluster_turns(r.model, rec.turn_clusters);
                std::vector<int> visited;
                for (int c : rec.turn_clusters) {
                    if (c >= 0) visited.push_back(c);
                }
                rl::Returns ret = rl::episode_returns(rec.outcome, rec.final_turn, r.model, visited);
                row.ret = ret.episode;
                rl::update_values(r.table, rec, ret);
            }
            row.samples = r.table.sample_count();
            spdlog::info("episode {}: {} N={} G={} decisions={}", row.episode, row.outcome, row.turns, row.ret, row.decisions);
            r.curve.push_back(row);
            if (static_cast<int>(r.curve.size()) % cfg.checkpoint_every == 0) save_checkpoint(cfg, r);
        }
        ep = wave_end;
    }
    save_checkpoint(cfg, r);
    return r;
}

// ---------------------------------------------------------------------------
// Tournament

GameResult play_game(const Agent& a, const Agent& b, const std::string& fixture, int seat_a, std::uint64_t seed,
                     int max_turns) {
    GameResult g;
    g.fixture = fixture;
    g.seat_a = seat_a;
    mc::Game game(fixture, seed);
    inference::EpisodeLimits limits_a, limits_b;
    limits_a.max_turns = limits_b.max_turns = max_turns;
    limits_a.seed = mix_seed(seed, 1);
    limits_b.seed = mix_seed(seed, 2);

    // Per-turn resources are read from the feature vector each agent sees.
    const auto& names = mc::feature_names();
    const auto idx = [&](const char* n) {
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
    };
    const std::size_t sci = idx("science_rate"), prod = idx("production_rate");
    auto counting = [&](inference::StateFn inner, long& total) -> inference::StateFn {
        return [inner, &total, sci, prod](const std::vector<double>& f) {
            total += static_cast<long>(f[sci] + f[prod]);
            return inner ? inner(f) : -1;
        };
    };
    mc::KbController opponent(b.kb(), b.resolver(), limits_b, counting(b.state_fn(), g.resources_b));
    mc::SeatEnv env(game, seat_a, &opponent);
    auto rec = inference::run_episode(a.kb(), mc::ontology(), env, a.resolver(), limits_a,
                                      counting(a.state_fn(), g.resources_a));
    const auto& s = game.state();
    const auto oa = mc::outcome(s, seat_a);
    const auto ob = mc::outcome(s, 1 - seat_a);
    if (oa == OutcomeKind::Won) {
        g.winner = 0;
    } else if (ob == OutcomeKind::Won || oa == OutcomeKind::Destroyed) {
        g.winner = 1;
    }
    g.turns = rec.final_turn;
    g.score_a = mc::score(s, seat_a);
    g.score_b = mc::score(s, 1 - seat_a);
    return g;
}

TournamentResult tournament(const std::vector<const Agent*>& agents, const TournamentConfig& cfg) {
    if (agents.size() < 2 && cfg.pairs.empty()) throw ConfigError("a tournament needs at least two agents");
    if (cfg.games_per_pair < 1) throw ConfigError("games per pair must be at least 1");
    if (cfg.fixtures.empty()) throw ConfigError("no fixtures given");
    TournamentResult r;
    for (const auto* a : agents) r.agents.push_back(a->name());
    r.summary.resize(agents.size());
    std::vector<std::pair<int, int>> pairs = cfg.pairs;
    if (pairs.empty()) {
        for (int i = 0; i < static_cast<int>(agents.size()); ++i) {
            for (int j = i + 1; j < static_cast<int>(agents.size()); ++j) pairs.emplace_back(i, j);
        }
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        if (i < 0 || j < 0 || i >= int(agents.size()) || j >= int(agents.size())) throw ConfigError("bad agent pair");
        for (std::size_t f = 0; f < cfg.fixtures.size(); ++f) {
            for (int n = 0; n < cfg.games_per_pair; ++n) {
                const std::uint64_t seed = mix_seed(cfg.seed, p * 1000003u + f, static_cast<std::uint64_t>(n));
                GameResult g = play_game(*agents[static_cast<std::size_t>(i)], *agents[static_cast<std::size_t>(j)],
                                         cfg.fixtures[f], n % 2, seed, cfg.max_turns);
                g.a = i;
                g.b = j;
                const int side = g.winner;  // 0: a won, 1: b won
                if (side >= 0) g.winner = side == 0 ? i : j;
                auto& ps = r.pairs[{i, j}];
                ++ps.games;
                auto& sa = r.summary[static_cast<std::size_t>(i)];
                auto& sb = r.summary[static_cast<std::size_t>(j)];
                ++sa.games;
                ++sb.games;
                sa.score += g.score_a;
                sb.score += g.score_b;
                sa.resources += g.resources_a;
                sb.resources += g.resources_b;
                if (side < 0) {
                    ++ps.draws;
                    ++sa.draws;
                    ++sb.draws;
                } else {
                    auto& winner = side == 0 ? sa : sb;
                    auto& loser = side == 0 ? sb : sa;
                    ++(side == 0 ? ps.wins_a : ps.wins_b);
                    ++winner.wins;
                    ++loser.losses;
                    winner.win_turns += g.turns;
                }
                spdlog::info("{} vs {} on {} game {}: winner {}", r.agents[std::size_t(i)], r.agents[std::size_t(j)],
                             cfg.fixtures[f], n, g.winner < 0 ? std::string("draw") : r.agents[std::size_t(g.winner)]);
                r.games.push_back(std::move(g));
            }
        }
    }
    return r;
}

std::string tournament_csv(const TournamentResult& r) {
    std::ostringstream out;
    out << "# kbrl.tournament 1\n";
    out << "agent_a,agent_b,fixture,seat_a,winner,turns,score_a,score_b,resources_a,resources_b\n";
    for (const auto& g : r.games) {
        out << r.agents[std::size_t(g.a)] << ',' << r.agents[std::size_t(g.b)] << ',' << g.fixture << ',' << g.seat_a << ','
            << (g.winner < 0 ? std::string("draw") : r.agents[std::size_t(g.winner)]) << ',' << g.turns << ','
            << g.score_a << ',' << g.score_b << ',' << g.resources_a << ',' << g.resources_b << '\n';
    }
    return out.str();
}

std::string agents_csv(const TournamentResult& r) {
    std::ostringstream out;
    out << "# kbrl.tournament_agents 1\n";
    out << "agent,games,wins,losses,draws,mean_win_turn,mean_score,resources\n";
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const auto& s = r.summary[i];
        out << r.agents[i] << ',' << s.games << ',' << s.wins << ',' << s.losses << ',' << s.draws << ','
            << fmt_double(s.mean_win_turn(), 2) << ',' << fmt_double(s.mean_score(), 2) << ',' << s.resources << '\n';
    }
    return out.str();
}

void print_tournament(const TournamentResult& r, std::ostream& out) {
    std::size_t w = 6;
    for (const auto& n : r.agents) w = std::max(w, n.size() + 2);
    out << std::left << std::setw(int(w)) << "" << ' ';
    for (const auto& n : r.agents) out << std::setw(int(w)) << n;
    out << '\n';
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        out << std::setw(int(w)) << r.agents[i] << ' ';
        for (std::size_t j = 0; j < r.agents.size(); ++j) {
            std::string cell = "-";
            if (auto it = r.pairs.find({int(i), int(j)}); it != r.pairs.end() && i != j) {
                cell = std::to_string(it->second.wins_a) + "/" + std::to_string(it->second.games);
            } else if (auto it2 = r.pairs.find({int(j), int(i)}); it2 != r.pairs.end() && i != j) {
                cell = std::to_string(it2->second.wins_b) + "/" + std::to_string(it2->second.games);
            }
            out << std::setw(int(w)) << cell;
        }
        out << '\n';
    }
    out << '\n' << std::setw(int(w)) << "agent" << " games  wins  losses  draws  mean-win-turn  mean-score  resources\n";
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const auto& s = r.summary[i];
        out << std::setw(int(w)) << r.agents[i] << ' ' << std::right << std::setw(5) << s.games << std::setw(6) << s.wins
            << std::setw(8) << s.losses << std::setw(7) << s.draws << std::setw(15) << fmt_double(s.mean_win_turn(), 1)
            << std::setw(12) << fmt_double(s.mean_score(), 1) << std::setw(11) << s.resources << std::left << '\n';
    }
}

// ---------------------------------------------------------------------------
// Inspection

std::vector<InspectRow> inspect(const rl::StateActionTable& table, int cluster,
                                const std::vector<std::string>& extra_actions) {
    const rl::StateStats* st = table.state(cluster);
    if (!st || st->actions.empty()) return {};
    std::vector<std::string> actions;
    for (const auto& [a, s] : st->actions) actions.push_back(a);
    for (const auto& a : extra_actions) {
        if (!st->actions.count(a)) actions.push_back(a);
    }
    auto params = rl::policy_params(table, cluster, actions);
    std::vector<rl::PolicyEntry> entries;
    for (const auto& a : actions) entries.push_back(params.at(a));
    auto p = rl::selection_probabilities(entries);
    std::vector<InspectRow> rows;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        InspectRow row;
        row.action = actions[i];
        if (const auto* s = table.stats(cluster, actions[i])) {
            row.n = s->n;
            row.mean = s->mean;
        }
        row.mu = entries[i].mu;
        row.sigma = entries[i].sigma;
        row.p = p[i];
        rows.push_back(row);
    }
    return rows;
}

void print_inspect(const rl::ClusterModel& model, const rl::StateActionTable& table, int cluster,
                   const std::vector<InspectRow>& rows, std::ostream& out) {
    out << "cluster " << cluster;
    if (auto it = model.cluster_turns.find(cluster); it != model.cluster_turns.end()) {
        out << "  T_C " << fmt_double(it->second.mean, 2) << " over " << it->second.count << " episodes";
    }
    if (const auto* st = table.state(cluster)) out << "  mean G_s " << fmt_double(st->mean, 2) << " (n " << st->n << ")";
    out << '\n';
    if (rows.empty()) {
        out << "no samples\n";
        return;
    }
    std::size_t w = 6;
    for (const auto& r : rows) w = std::max(w, r.action.size() + 2);
    out << std::left << std::setw(int(w)) << "action" << std::right << std::setw(6) << "n" << std::setw(12) << "mean"
        << std::setw(10) << "mu" << std::setw(10) << "sigma" << std::setw(10) << "p" << '\n';
    double total = 0.0;
    for (const auto& r : rows) {
        out << std::left << std::setw(int(w)) << r.action << std::right << std::setw(6) << r.n << std::setw(12)
            << fmt_double(r.mean, 2) << std::setw(10) << fmt_double(r.mu, 4) << std::setw(10) << fmt_double(r.sigma, 4)
            << std::setw(10) << fmt_double(r.p, 4) << '\n';
        total += r.p;
    }
    out << std::left << std::setw(int(w)) << "total" << std::right << std::setw(48) << fmt_double(total, 9) << '\n';
}

}  // namespace kbrl::harness
