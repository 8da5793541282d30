#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kbrl/inference/executor.hpp"

namespace kbrl::inference {

enum class OutcomeKind { Won, LostRace, Destroyed, Truncated };

std::string_view to_string(OutcomeKind kind);
OutcomeKind outcome_from_string(std::string_view text);

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// What the engine needs from the world it plays in.
class AgentEnvironment {
public:
    virtual ~AgentEnvironment() = default;
    // Mirrors the agent-visible state into the graph.
    virtual void sync(graph::SemanticGraph& graph) = 0;
    virtual HandlerMap handlers() = 0;
    // Applies commands dispatched since the last flush.
    virtual void flush() = 0;
    virtual void end_turn() = 0;
    virtual int turn() const = 0;
    virtual std::optional<OutcomeKind> outcome() const = 0;
    // Per-turn state features used for clustering.
    virtual std::vector<double> features() const = 0;
};

// Picks one action id among >= 2 distinct ones.
class ConflictResolver {
public:
    virtual ~ConflictResolver() = default;
    virtual std::string resolve(int cluster, const std::vector<std::string>& actions, Rng& rng) const = 0;
};

class UniformResolver : public ConflictResolver {
public:
    std::string resolve(int cluster, const std::vector<std::string>& actions, Rng& rng) const override;
};

// Always the first action in conflict-set order.
class FirstResolver : public ConflictResolver {
public:
    std::string resolve(int cluster, const std::vector<std::string>& actions, Rng& rng) const override;
};

struct Decision {
    int turn = 0;
    int cluster = -1;
    std::vector<std::string> candidates;  // distinct action ids
    std::string chosen;

    friend bool operator==(const Decision&, const Decision&) = default;
};

struct EpisodeRecord {
    std::vector<Decision> decisions;
    std::vector<int> turn_clusters;  // index = turn
    std::vector<HistoryEntry> history;
    OutcomeKind outcome = OutcomeKind::Truncated;
    int final_turn = 0;
    std::size_t conflicts_seen = 0;  // match steps with >= 1 candidate
    std::size_t multi_conflicts = 0;  // of those, with >= 2 distinct actions

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct EpisodeLimits {
    int max_turns = 400;
    int max_firings_per_turn = 64;
    std::uint64_t seed = 0;
};

using StateFn = std::function<int(const std::vector<double>&)>;

// Drives one agent. play_turn() fires rules for the current turn until the
// conflict set is exhausted; a (rule, binding) pair fires at most once per
// turn and at most limits.max_firings_per_turn rules fire in total.
class Engine {
public:
    Engine(const std::vector<ki::KnowledgeItem>& kb, std::shared_ptr<const graph::Ontology> ontology,
           const ConflictResolver& resolver, EpisodeLimits limits, StateFn state_fn = {});

    void play_turn(AgentEnvironment& env);

    const EpisodeRecord& record() const { return record_; }
    EpisodeRecord take_record();
    const Issue& issue() const { return issue_; }
    const graph::SemanticGraph& graph() const { return graph_; }

private:
    const std::vector<ki::KnowledgeItem>& kb_;
    const ConflictResolver& resolver_;
    EpisodeLimits limits_;
    StateFn state_fn_;
    graph::SemanticGraph graph_;
    Issue issue_;
    Rng rng_;
    HandlerMap handlers_;
    bool have_handlers_ = false;
    EpisodeRecord record_;
};

// sync -> match -> resolve -> execute, ending the turn whenever no rule is
// left, until the environment is terminal or max_turns is reached.
EpisodeRecord run_episode(const std::vector<ki::KnowledgeItem>& kb, std::shared_ptr<const graph::Ontology> ontology,
                          AgentEnvironment& env, const ConflictResolver& resolver, const EpisodeLimits& limits,
                          const StateFn& state_fn = {});

// Decision lines followed by one outcome line.
std::string to_jsonl(const EpisodeRecord& record);
EpisodeRecord episode_from_jsonl(std::string_view text);

}  // namespace kbrl::inference
