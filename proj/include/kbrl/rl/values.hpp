#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbrl/inference/engine.hpp"
#include "kbrl/rl/cluster.hpp"

namespace kbrl::rl {

using inference::OutcomeKind;
using inference::Rng;

struct Returns {
    double episode = 0.0;             // G
    std::map<int, double> per_state;  // cluster -> G_s
};

// G and G_s for a finished episode. `visited` lists the clusters to score;
// t comes from model.cluster_turns (0 for clusters never folded in).
Returns episode_returns(OutcomeKind outcome, int final_turn, const ClusterModel& model, const std::vector<int>& visited);
double episode_return(OutcomeKind outcome, int final_turn);
double state_return(OutcomeKind outcome, int final_turn, double cluster_turn);

struct ActionStats {
    std::int64_t n = 0;
    double mean = 0.0;  // Q̄(s, a)
    double m2 = 0.0;    // sum of squared deviations from `mean`

    friend bool operator==(const ActionStats&, const ActionStats&) = default;
};

struct StateStats {
    std::int64_t n = 0;
    double mean = 0.0;  // Ḡ_s over every sample taken in this cluster
    std::map<std::string, ActionStats> actions;

    friend bool operator==(const StateStats&, const StateStats&) = default;
};

class StateActionTable {
public:
    // Folds one return sample for (cluster, action).
    void add_sample(int cluster, const std::string& action, double g_s);

    const StateStats* state(int cluster) const;
    const ActionStats* stats(int cluster, const std::string& action) const;
    // sqrt(Σ(G_s − Ḡ_s)² / n_a) with the current Ḡ_s of the cluster.
    double sigma_raw(int cluster, const std::string& action) const;

    const std::map<int, StateStats>& states() const { return states_; }
    std::size_t sample_count() const;

    static StateActionTable from_states(std::map<int, StateStats> states) {
        StateActionTable t;
        t.states_ = std::move(states);
        return t;
    }

    friend bool operator==(const StateActionTable&, const StateActionTable&) = default;

private:
    std::map<int, StateStats> states_;
};

// One sample per recorded decision, valued at the decision cluster's G_s.
// Truncated episodes are ignored; returns the number of samples added.
std::size_t update_values(StateActionTable& table, const inference::EpisodeRecord& episode, const Returns& returns);

struct PolicyEntry {
    double mu = 0.0;
    double sigma = 0.0;
    bool seen = false;

    friend bool operator==(const PolicyEntry&, const PolicyEntry&) = default;
};

struct PolicyConfig {
    double sigma_floor = 1e-3;
    double unseen_mu = 1.0;
    double unseen_sigma = 0.5;
};

// μ, σ in min-max space for the requested actions. Min-max runs over every
// sampled action of the cluster.
std::map<std::string, PolicyEntry> policy_params(const StateActionTable& table, int cluster,
                                                 const std::vector<std::string>& actions, const PolicyConfig& cfg = {});

// Upper tail of the standard Normal.
double normal_tail(double z);

// p_a ∝ P(X_a > L), X_a ~ N(μ_a, σ_a), L = μ_max − σ_max; the first action with
// maximal μ supplies σ_max. Returned in input order.
std::vector<double> selection_probabilities(const std::vector<PolicyEntry>& params);

// ε-greedy: uniform with probability ε, otherwise a draw from selection_probabilities.
std::size_t select_action(const std::vector<PolicyEntry>& params, double epsilon, Rng& rng);

// Conflict resolver reading a frozen table.
class PolicyResolver : public inference::ConflictResolver {
public:
    PolicyResolver(StateActionTable table, double epsilon, PolicyConfig cfg = {})
        : table_(std::move(table)), epsilon_(epsilon), cfg_(cfg) {}

    std::string resolve(int cluster, const std::vector<std::string>& actions, Rng& rng) const override;

    const StateActionTable& table() const { return table_; }
    double epsilon() const { return epsilon_; }

private:
    StateActionTable table_;
    double epsilon_;
    PolicyConfig cfg_;
};

// Linear schedule from start (episode 0) to end (last episode).
double annealed_epsilon(double start, double end, int episode, int total);

nlohmann::json to_json(const StateActionTable& table);
StateActionTable table_from_json(const nlohmann::json& j);

inline constexpr const char* kTableSchema = "kbrl.sa_table";
inline constexpr int kTableVersion = 1;

}  // namespace kbrl::rl
