#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbrl/graph/semantic_graph.hpp"
#include "kbrl/inference/engine.hpp"
#include "kbrl/microciv/game.hpp"
#include "kbrl/microciv/view.hpp"

namespace kbrl::microciv {

// Names and clustering weights of the per-turn feature vector, in order.
const std::vector<std::string>& feature_names();
const std::vector<double>& feature_weights();
std::vector<double> build_feature_vector(const GameState& state, int seat);

// The MicroCiv ontology (data/ontology/microciv.ttl, compiled in).
std::shared_ptr<const graph::Ontology> ontology();
const std::string& ontology_text();

// Owns the state and the per-turn command log used for replays.
class Game {
public:
    Game(std::string fixture, std::uint64_t seed);
    Game(const MapFixture& fixture, std::uint64_t seed);

    const GameState& state() const { return state_; }
    ApplyResult command(int seat, const Command& c);
    void end_turn();

    // JSON Lines: a header, then one record per turn with the commands in
    // the order they were applied ([seat, text] pairs) and the state hash
    // after the turn.
    const std::vector<std::string>& replay() const { return replay_; }
    std::string replay_text() const;
    int rejected() const { return rejected_; }
    // Bumped by every accepted command and every end of turn.
    std::uint64_t version() const { return version_; }

private:
    GameState state_;
    std::uint64_t version_ = 0;
    std::vector<std::pair<int, std::string>> pending_;
    std::vector<std::string> replay_;
    int rejected_ = 0;
};

// Re-plays a replay log from scratch; returns the number of turns verified.
// Throws Error at the first hash mismatch.
int verify_replay(std::string_view text);

// Plays one seat for the current turn (without ending it).
class SeatController {
public:
    virtual ~SeatController() = default;
    virtual void play_turn(Game& game, int seat) = 0;
};

// Fixed-priority opponent: expand, then develop, then defend; raids weak
// enemy cities it knows about.
class ScriptedOpponent : public SeatController {
public:
    void play_turn(Game& game, int seat) override;
};

// Mirrors one seat's view into the graph, touching only changed nodes.
class Connector {
public:
    explicit Connector(int seat) : seat_(seat) {}
    void sync(const GameState& state, graph::SemanticGraph& graph);
    void reset() { cache_.clear(); }

private:
    void put(graph::SemanticGraph& graph, const std::string& id, std::vector<std::int64_t> sig,
             const std::function<graph::SemanticNode()>& make, std::vector<std::string>& seen);

    int seat_;
    std::unordered_map<std::string, std::vector<std::int64_t>> cache_;
};

enum class Transport { InProcess, File };

// AgentEnvironment for one seat of a Game. end_turn() lets the opponent
// controller play its seat, then advances the game.
class SeatEnv : public inference::AgentEnvironment {
public:
    SeatEnv(Game& game, int seat, SeatController* opponent = nullptr, Transport transport = Transport::InProcess,
            std::filesystem::path command_file = {});
    ~SeatEnv() override;

    void sync(graph::SemanticGraph& graph) override;
    inference::HandlerMap handlers() override;
    void flush() override;
    void end_turn() override;
    int turn() const override { return game_.state().turn; }
    std::optional<OutcomeKind> outcome() const override { return microciv::outcome(game_.state(), seat_); }
    std::vector<double> features() const override { return build_feature_vector(game_.state(), seat_); }

    int seat() const { return seat_; }
    Game& game() { return game_; }
    // Command texts dispatched so far, in order.
    const std::vector<std::string>& dispatched() const { return dispatched_; }

private:
    class Handler;
    friend class Handler;

    Game& game_;
    int seat_;
    SeatController* opponent_;
    Transport transport_;
    std::filesystem::path command_file_;
    Connector connector_;
    std::unique_ptr<Handler> handler_;
    std::vector<Command> queue_;
    std::vector<std::string> dispatched_;
    std::optional<std::uint64_t> synced_;
};

// A knowledge base playing a seat through its own engine and connector.
class KbController : public SeatController {
public:
    KbController(const std::vector<ki::KnowledgeItem>& kb, const inference::ConflictResolver& resolver,
                 inference::EpisodeLimits limits, inference::StateFn state_fn = {});
    void play_turn(Game& game, int seat) override;
    const inference::Engine* engine() const { return engine_.get(); }

private:
    const std::vector<ki::KnowledgeItem>& kb_;
    const inference::ConflictResolver& resolver_;
    inference::EpisodeLimits limits_;
    inference::StateFn state_fn_;
    std::unique_ptr<SeatEnv> env_;
    std::unique_ptr<inference::Engine> engine_;
    Game* game_ = nullptr;
};

}  // namespace kbrl::microciv
