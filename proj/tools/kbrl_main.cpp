#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kbrl/error.hpp"
#include "kbrl/harness/harness.hpp"
#include "kbrl/microciv/env.hpp"

namespace fs = std::filesystem;
using namespace kbrl;
using namespace kbrl::harness;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("kbrl");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("KBRL_LOG")) {
        auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            throw ConfigError(std::string("KBRL_LOG: unknown level '") + env + "'");
        }
        spdlog::set_level(level);
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-base agents with Monte-Carlo conflict resolution, played on MicroCiv"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string fixture = "continent";
    std::vector<std::string> kb;
    int episodes = 0;
    int stop_after = 0;
    int k = 16;
    std::vector<double> epsilon;
    int wave = 1;
    int max_turns = 400;
    std::string out;

    auto common = [&](CLI::App* c) {
        c->add_option("--seed", seed, "Random seed")->capture_default_str();
        c->add_option("--max-turns", max_turns, "Truncate episodes at this turn")->capture_default_str();
    };

    auto* collect_cmd = app.add_subcommand("collect", "Record per-turn features from uniform-resolution games");
    common(collect_cmd);
    collect_cmd->add_option("--fixture", fixture, "Map fixture name or file")->capture_default_str();
    collect_cmd->add_option("--kb", kb, "Rule pack directory (repeatable)")->required();
    collect_cmd->add_option("--episodes", episodes, "Episodes to play (default 20)");
    collect_cmd->add_option("--out", out, "Dataset CSV")->required();

    std::string dataset;
    auto* cluster_cmd = app.add_subcommand("cluster", "Fit k-means over a dataset");
    cluster_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cluster_cmd->add_option("--dataset", dataset, "Dataset CSV from collect")->required();
    cluster_cmd->add_option("--k", k, "Cluster count")->capture_default_str();
    cluster_cmd->add_option("--out", out, "Cluster model JSON")->required();

    int collect_episodes = 20;
    int checkpoint_every = 25;
    bool resume = false;
    auto* train_cmd = app.add_subcommand("train", "Learn conflict resolution against the scripted opponent");
    common(train_cmd);
    train_cmd->add_option("--fixture", fixture, "Map fixture name or file")->capture_default_str();
    train_cmd->add_option("--kb", kb, "Rule pack directory (repeatable)")->required();
    train_cmd->add_option("--episodes", episodes, "Training episodes (default 300)");
    train_cmd->add_option("--k", k, "Cluster count when clustering in-line")->capture_default_str();
    train_cmd->add_option("--epsilon", epsilon, "Exploration rate: START [END]")->expected(1, 2);
    train_cmd->add_option("--wave", wave, "Episodes per frozen-policy wave")->capture_default_str();
    train_cmd->add_option("--collect-episodes", collect_episodes, "Dataset episodes when clustering in-line")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint-every", checkpoint_every, "Checkpoint interval")->capture_default_str();
    train_cmd->add_flag("--resume", resume, "Continue from the checkpoint in --out");
    train_cmd->add_option("--stop-after", stop_after, "End this run after N new episodes (resume later)");
    train_cmd->add_option("--out", out, "Artifact directory")->required();

    std::vector<std::string> agent_specs;
    std::vector<std::string> fixtures;
    int games = 10;
    auto* tour_cmd = app.add_subcommand("tournament", "Round-robin between agents");
    common(tour_cmd);
    tour_cmd->add_option("--agent", agent_specs, "NAME=KBDIR[,KBDIR...][@ARTIFACT_DIR] (repeatable)")->required();
    tour_cmd->add_option("--fixture", fixtures, "Map fixture (repeatable, default continent)");
    tour_cmd->add_option("--games", games, "Games per pair and fixture")->capture_default_str();
    tour_cmd->add_option("--out", out, "Directory for tournament.csv and agents.csv");

    std::string artifacts;
    int cluster_id = 0;
    auto* inspect_cmd = app.add_subcommand("inspect", "Show learned values and policy for one cluster");
    inspect_cmd->add_option("--artifacts", artifacts, "Directory with cluster_model.json and sa_table.json")->required();
    inspect_cmd->add_option("--cluster", cluster_id, "Cluster id")->required();
    inspect_cmd->add_option("--kb", kb, "Also score the unsampled rules of these packs");

    std::string agent_spec, opponent_spec = "scripted", transport = "inprocess", command_file, verify;
    int seat = 0;
    auto* play_cmd = app.add_subcommand("play", "Play one game and write its replay");
    common(play_cmd);
    play_cmd->add_option("--fixture", fixture, "Map fixture name or file")->capture_default_str();
    play_cmd->add_option("--agent", agent_spec, "Agent in NAME=KBDIR[,...][@ARTIFACTS] form");
    play_cmd->add_option("--kb", kb, "Rule pack directory (repeatable), instead of --agent");
    play_cmd->add_option("--opponent", opponent_spec, "'scripted' or an agent spec")->capture_default_str();
    play_cmd->add_option("--seat", seat, "Seat of the agent (0 or 1)")->capture_default_str();
    play_cmd->add_option("--transport", transport, "inprocess or file")->capture_default_str();
    play_cmd->add_option("--command-file", command_file, "Command file for the file transport");
    play_cmd->add_option("--out", out, "Directory for replay.jsonl and episode.jsonl");
    play_cmd->add_option("--verify", verify, "Only re-play and check a replay file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        setup_logging();

        if (collect_cmd->parsed()) {
            CollectConfig cfg;
            cfg.episodes = episodes ? episodes : 20;
            if (collect_cmd->count("--episodes") && episodes == 0) cfg.episodes = 0;
            cfg.seed = seed;
            cfg.fixture = fixture;
            cfg.max_turns = max_turns;
            cfg.kb_dirs = to_paths(kb);
            Dataset d = collect(cfg);
            write_dataset(d, out);
            std::cout << "wrote " << d.rows.size() << " rows to " << out << '\n';
        } else if (cluster_cmd->parsed()) {
            Dataset d = read_dataset(dataset);
            auto model = cluster_dataset(d, k, seed);
            write_json_file(out, rl::to_json(model));
            std::cout << "k = " << model.k() << ", inertia " << model.inertia << ", " << model.iterations
                      << " iterations\n";
        } else if (train_cmd->parsed()) {
            TrainConfig cfg;
            cfg.episodes = train_cmd->count("--episodes") ? episodes : 300;
            if (!epsilon.empty()) {
                cfg.epsilon_start = epsilon[0];
                cfg.epsilon_end = epsilon.size() > 1 ? epsilon[1] : epsilon[0];
            }
            cfg.k = k;
            cfg.seed = seed;
            cfg.kb_dirs = to_paths(kb);
            cfg.fixture = fixture;
            cfg.wave = wave;
            cfg.max_turns = max_turns;
            cfg.collect_episodes = collect_episodes;
            cfg.checkpoint_every = checkpoint_every;
            cfg.out = out;
            cfg.resume = resume;
            cfg.stop_after = stop_after;
            auto r = train(cfg);
            const std::size_t n = r.curve.size();
            const std::size_t w = std::min<std::size_t>(50, n);
            double first = 0, last = 0;
            for (std::size_t i = 0; i < w; ++i) {
                first += r.curve[i].ret;
                last += r.curve[n - w + i].ret;
            }
            std::cout << n << " episodes; mean return first " << w << ": " << first / double(w) << ", last " << w
                      << ": " << last / double(w) << "\nartifacts in " << out << '\n';
        } else if (tour_cmd->parsed()) {
            std::vector<std::unique_ptr<Agent>> agents;
            for (const auto& s : agent_specs) agents.push_back(std::make_unique<Agent>(parse_agent_spec(s)));
            std::vector<const Agent*> ptrs;
            for (const auto& a : agents) ptrs.push_back(a.get());
            TournamentConfig cfg;
            if (!fixtures.empty()) cfg.fixtures = fixtures;
            cfg.games_per_pair = games;
            cfg.seed = seed;
            cfg.max_turns = max_turns;
            if (ptrs.size() == 1) cfg.pairs = {{0, 0}};
            auto r = tournament(ptrs, cfg);
            print_tournament(r, std::cout);
            if (!out.empty()) {
                write_file(fs::path(out) / "tournament.csv", tournament_csv(r));
                write_file(fs::path(out) / "agents.csv", agents_csv(r));
            }
        } else if (inspect_cmd->parsed()) {
            auto model = rl::cluster_model_from_json(read_json_file(fs::path(artifacts) / "cluster_model.json"));
            auto table = rl::table_from_json(read_json_file(fs::path(artifacts) / "sa_table.json"));
            if (cluster_id < 0 || cluster_id >= model.k()) {
                throw ConfigError("cluster must lie in [0, " + std::to_string(model.k()) + ")");
            }
            std::vector<std::string> extra;
            if (!kb.empty()) {
                for (const auto& item : load_kb(to_paths(kb))) extra.push_back(item.id());
            }
            auto rows = inspect(table, cluster_id, extra);
            print_inspect(model, table, cluster_id, rows, std::cout);
        } else if (play_cmd->parsed()) {
            if (!verify.empty()) {
                int turns = microciv::verify_replay(read_file(verify));
                std::cout << "replay ok: " << turns << " turns reproduced\n";
                return 0;
            }
            if (seat != 0 && seat != 1) throw ConfigError("seat must be 0 or 1");
            if (agent_spec.empty() && kb.empty()) throw ConfigError("play needs --agent or --kb");
            Agent agent = agent_spec.empty() ? Agent(AgentSpec{"agent", to_paths(kb), std::nullopt})
                                             : Agent(parse_agent_spec(agent_spec));
            std::unique_ptr<Agent> opponent_agent;
            std::unique_ptr<microciv::SeatController> opponent;
            inference::EpisodeLimits limits;
            limits.max_turns = max_turns;
            limits.seed = mix_seed(seed, 1);
            if (opponent_spec == "scripted") {
                opponent = std::make_unique<microciv::ScriptedOpponent>();
            } else {
                opponent_agent = std::make_unique<Agent>(parse_agent_spec(opponent_spec));
                inference::EpisodeLimits ol = limits;
                ol.seed = mix_seed(seed, 2);
                opponent = std::make_unique<microciv::KbController>(opponent_agent->kb(), opponent_agent->resolver(),
                                                                    ol, opponent_agent->state_fn());
            }
            microciv::Transport tr;
            if (transport == "inprocess") {
                tr = microciv::Transport::InProcess;
            } else if (transport == "file") {
                tr = microciv::Transport::File;
                if (command_file.empty()) command_file = (fs::path(out.empty() ? "." : out) / "commands.txt").string();
            } else {
                throw ConfigError("transport must be 'inprocess' or 'file'");
            }
            microciv::Game game(fixture, seed);
            microciv::SeatEnv env(game, seat, opponent.get(), tr, command_file);
            auto rec = inference::run_episode(agent.kb(), microciv::ontology(), env, agent.resolver(), limits,
                                              agent.state_fn());
            std::cout << microciv::describe(game.state()) << '\n'
                      << "outcome " << inference::to_string(rec.outcome) << " after " << rec.final_turn << " turns; "
                      << rec.decisions.size() << " decisions, " << rec.history.size() << " rules fired, "
                      << game.rejected() << " commands rejected\n";
            if (!out.empty()) {
                write_file(fs::path(out) / "replay.jsonl", game.replay_text());
                write_file(fs::path(out) / "episode.jsonl", inference::to_jsonl(rec));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
