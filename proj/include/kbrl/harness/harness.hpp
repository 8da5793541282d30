#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kbrl/inference/engine.hpp"
#include "kbrl/ki/ast.hpp"
#include "kbrl/rl/cluster.hpp"
#include "kbrl/rl/values.hpp"

namespace kbrl::harness {

namespace fs = std::filesystem;

// Deterministic seed derivation for per-episode streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

std::vector<ki::KnowledgeItem> load_kb(const std::vector<fs::path>& dirs);

// NAME=KBDIR[,KBDIR...][@ARTIFACT_DIR]
struct AgentSpec {
    std::string name;
    std::vector<fs::path> kb_dirs;
    std::optional<fs::path> artifacts;  // cluster_model.json + sa_table.json
};
AgentSpec parse_agent_spec(const std::string& text);

// Loaded agent: rules plus either a learned policy or uniform resolution.
class Agent {
public:
    explicit Agent(const AgentSpec& spec);
    Agent(std::string name, std::vector<ki::KnowledgeItem> kb, std::optional<rl::ClusterModel> model = {},
          std::optional<rl::StateActionTable> table = {});

    const std::string& name() const { return name_; }
    const std::vector<ki::KnowledgeItem>& kb() const { return kb_; }
    const inference::ConflictResolver& resolver() const { return *resolver_; }
    inference::StateFn state_fn() const;
    bool trained() const { return model_.has_value(); }

private:
    void init();

    std::string name_;
    std::vector<ki::KnowledgeItem> kb_;
    std::optional<rl::ClusterModel> model_;
    std::optional<rl::StateActionTable> table_;
    std::unique_ptr<inference::ConflictResolver> resolver_;
};

// ---------------------------------------------------------------------------
// Dataset

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<int> episode;
    std::vector<int> turn;
    std::vector<std::vector<double>> rows;
};

struct CollectConfig {
    int episodes = 20;
    std::uint64_t seed = 1;
    std::string fixture = "continent";
    int max_turns = 400;
    std::vector<fs::path> kb_dirs;
};

// Uniform-resolution episodes against the scripted opponent; one row per
// played turn.
Dataset collect(const CollectConfig& cfg);
void write_dataset(const Dataset& d, const fs::path& path);
Dataset read_dataset(const fs::path& path);

rl::ClusterModel cluster_dataset(const Dataset& d, int k, std::uint64_t seed, int max_iter = 100);

void write_json_file(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const fs::path& path);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    int episodes = 300;
    double epsilon_start = 0.1;
    double epsilon_end = 0.02;
    int k = 16;
    std::uint64_t seed = 1;
    std::vector<fs::path> kb_dirs;
    std::string fixture = "continent";
    int wave = 1;
    int max_turns = 400;
    int collect_episodes = 20;
    int checkpoint_every = 25;
    fs::path out = "kbrl-out";
    bool resume = false;
    // Stop this invocation after this many new episodes (0: run to the end).
    int stop_after = 0;
};

struct CurveRow {
    int episode = 0;
    int seat = 0;
    std::string outcome;
    int turns = 0;
    double ret = 0.0;
    double epsilon = 0.0;
    int decisions = 0;
    std::size_t samples = 0;
};

struct TrainResult {
    rl::ClusterModel model;
    rl::StateActionTable table;
    std::vector<CurveRow> curve;
};

// Validates the config; throws ConfigError.
void check(const TrainConfig& cfg);
// Writes cluster_model.json, sa_table.json, curve.csv and checkpoint.json
// under cfg.out every cfg.checkpoint_every episodes and at the end.
TrainResult train(const TrainConfig& cfg);
std::string curve_csv(const std::vector<CurveRow>& curve);

// ---------------------------------------------------------------------------
// Tournament

struct GameResult {
    int a = 0;  // agent indices
    int b = 0;
    std::string fixture;
    int seat_a = 0;
    int winner = -1;  // agent index, -1 for a draw
    int turns = 0;
    int score_a = 0;
    int score_b = 0;
    long resources_a = 0;  // summed per-turn science and production
    long resources_b = 0;
};

struct AgentSummary {
    int games = 0;
    int wins = 0;
    int losses = 0;
    int draws = 0;
    long win_turns = 0;
    long score = 0;
    long resources = 0;
    double mean_win_turn() const { return wins ? double(win_turns) / wins : 0.0; }
    double mean_score() const { return games ? double(score) / games : 0.0; }
};

struct PairSummary {
    int games = 0;
    int wins_a = 0;
    int wins_b = 0;
    int draws = 0;
};

struct TournamentResult {
    std::vector<std::string> agents;
    std::vector<GameResult> games;
    std::map<std::pair<int, int>, PairSummary> pairs;
    std::vector<AgentSummary> summary;
};

struct TournamentConfig {
    std::vector<std::string> fixtures = {"continent"};
    int games_per_pair = 10;
    std::uint64_t seed = 1;
    int max_turns = 400;
    // Pairs to play; empty means the full round robin (i < j).
    std::vector<std::pair<int, int>> pairs;
};

// Plays one game between two agents; agent a sits in seat_a.
GameResult play_game(const Agent& a, const Agent& b, const std::string& fixture, int seat_a, std::uint64_t seed,
                     int max_turns);
TournamentResult tournament(const std::vector<const Agent*>& agents, const TournamentConfig& cfg);
std::string tournament_csv(const TournamentResult& r);
std::string agents_csv(const TournamentResult& r);
void print_tournament(const TournamentResult& r, std::ostream& out);

// ---------------------------------------------------------------------------
// Inspection

struct InspectRow {
    std::string action;
    int n = 0;
    double mean = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double p = 0.0;
};

// Rows for every sampled action of the cluster plus any extra actions
// (scored as unseen); empty when the cluster has no samples.
std::vector<InspectRow> inspect(const rl::StateActionTable& table, int cluster,
                                const std::vector<std::string>& extra_actions = {});
void print_inspect(const rl::ClusterModel& model, const rl::StateActionTable& table, int cluster,
                   const std::vector<InspectRow>& rows, std::ostream& out);

}  // namespace kbrl::harness
