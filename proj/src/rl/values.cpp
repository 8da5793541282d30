#include "kbrl/rl/values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kbrl/error.hpp"

namespace kbrl::rl {

double episode_return(OutcomeKind outcome, int final_turn) {
    const double n = final_turn;
    switch (outcome) {
        case OutcomeKind::Won: return -n;
        case OutcomeKind::LostRace: return -2.0 * n;
        case OutcomeKind::Destroyed: return -(1000.0 - n);
        case OutcomeKind::Truncated: break;
    }
    throw Error("no return is defined for a truncated episode");
}

double state_return(OutcomeKind outcome, int final_turn, double t) {
    const double n = final_turn;
    switch (outcome) {
        case OutcomeKind::Won: return -(n - t);
        case OutcomeKind::LostRace: return -(2.0 * n - t);
        case OutcomeKind::Destroyed: return -(1000.0 - n + t);
        case OutcomeKind::Truncated: break;
    }
    throw Error("no return is defined for a truncated episode");
}

Returns episode_returns(OutcomeKind outcome, int final_turn, const ClusterModel& model, const std::vector<int>& visited) {
    Returns r;
    r.episode = episode_return(outcome, final_turn);
    for (int c : visited) {
        if (c < 0 || r.per_state.count(c)) continue;
        auto it = model.cluster_turns.find(c);
        double t = it == model.cluster_turns.end() ? 0.0 : it->second.mean;
        r.per_state[c] = state_return(outcome, final_turn, t);
    }
    return r;
}

void StateActionTable::add_sample(int cluster, const std::string& action, double g_s) {
    StateStats& s = states_[cluster];
    s.n += 1;
    s.mean += (g_s - s.mean) / static_cast<double>(s.n);
    ActionStats& a = s.actions[action];
    a.n += 1;
    double delta = g_s - a.mean;
    a.mean += delta / static_cast<double>(a.n);
    a.m2 += delta * (g_s - a.mean);
}

const StateStats* StateActionTable::state(int cluster) const {
    auto it = states_.find(cluster);
    return it == states_.end() ? nullptr : &it->second;
}

const ActionStats* StateActionTable::stats(int cluster, const std::string& action) const {
    const StateStats* s = state(cluster);
    if (!s) return nullptr;
    auto it = s->actions.find(action);
    return it == s->actions.end() ? nullptr : &it->second;
}

double StateActionTable::sigma_raw(int cluster, const std::string& action) const {
    const StateStats* s = state(cluster);
    const ActionStats* a = stats(cluster, action);
    if (!s || !a || a->n == 0) return 0.0;
    double offset = a->mean - s->mean;
    double ss = a->m2 + static_cast<double>(a->n) * offset * offset;
    return std::sqrt(std::max(0.0, ss) / static_cast<double>(a->n));
}

std::size_t StateActionTable::sample_count() const {
    std::size_t n = 0;
    for (const auto& [c, s] : states_) n += static_cast<std::size_t>(s.n);
    return n;
}

std::size_t update_values(StateActionTable& table, const inference::EpisodeRecord& episode, const Returns& returns) {
    if (episode.outcome == OutcomeKind::Truncated) return 0;
    std::size_t added = 0;
    for (const auto& d : episode.decisions) {
        auto it = returns.per_state.find(d.cluster);
        if (it == returns.per_state.end()) continue;
        table.add_sample(d.cluster, d.chosen, it->second);
        ++added;
    }
    return added;
}

std::map<std::string, PolicyEntry> policy_params(const StateActionTable& table, int cluster,
                                                 const std::vector<std::string>& actions, const PolicyConfig& cfg) {
    std::map<std::string, PolicyEntry> out;
    const StateStats* s = table.state(cluster);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (s) {
        for (const auto& [name, a] : s->actions) {
            if (a.n == 0) continue;
            lo = std::min(lo, a.mean);
            hi = std::max(hi, a.mean);
        }
    }
    const double range = hi - lo;
    for (const auto& name : actions) {
        PolicyEntry e;
        const ActionStats* a = table.stats(cluster, name);
        if (!a || a->n == 0) {
            e.mu = cfg.unseen_mu;
            e.sigma = cfg.unseen_sigma;
        } else {
            e.seen = true;
            double sr = table.sigma_raw(cluster, name);
            if (range > 0) {
                e.mu = (a->mean - lo) / range;
                e.sigma = std::max(sr / range, cfg.sigma_floor);
            } else {
                e.mu = 0.5;
                e.sigma = sr > 0 ? 0.5 : cfg.sigma_floor;
            }
        }
        out[name] = e;
    }
    return out;
}

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> selection_probabilities(const std::vector<PolicyEntry>& params) {
    std::vector<double> p(params.size(), 0.0);
    if (params.empty()) return p;
    std::size_t best = 0;
    for (std::size_t i = 1; i < params.size(); ++i) {
        if (params[i].mu > params[best].mu) best = i;
    }
    const double limit = params[best].mu - params[best].sigma;
    double total = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        p[i] = normal_tail((limit - params[i].mu) / params[i].sigma);
        total += p[i];
    }
    if (!(total > 0)) {
        std::fill(p.begin(), p.end(), 0.0);
        p[best] = 1.0;
        return p;
    }
    for (double& x : p) x /= total;
    return p;
}

std::size_t select_action(const std::vector<PolicyEntry>& params, double epsilon, Rng& rng) {
    if (params.empty()) throw Error("select_action on an empty conflict set");
    if (params.size() == 1) return 0;
    if (epsilon > 0 && inference::uniform01(rng) < epsilon) return static_cast<std::size_t>(rng() % params.size());
    std::vector<double> p = selection_probabilities(params);
    double u = inference::uniform01(rng);
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0) return i;
    }
    return 0;
}

std::string PolicyResolver::resolve(int cluster, const std::vector<std::string>& actions, Rng& rng) const {
    if (actions.empty()) throw Error("resolver called with no actions");
    auto params = policy_params(table_, cluster, actions, cfg_);
    std::vector<PolicyEntry> ordered;
    ordered.reserve(actions.size());
    for (const auto& a : actions) ordered.push_back(params.at(a));
    return actions[select_action(ordered, epsilon_, rng)];
}

double annealed_epsilon(double start, double end, int episode, int total) {
    if (total <= 1) return start;
    double f = static_cast<double>(std::clamp(episode, 0, total - 1)) / static_cast<double>(total - 1);
    return start + (end - start) * f;
}

nlohmann::json to_json(const StateActionTable& table) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& [c, s] : table.states()) {
        nlohmann::json actions = nlohmann::json::array();
        for (const auto& [name, a] : s.actions) {
            actions.push_back({{"action", name}, {"n", a.n}, {"mean", a.mean}, {"m2", a.m2}});
        }
        states.push_back({{"cluster", c}, {"n", s.n}, {"mean", s.mean}, {"actions", actions}});
    }
    return {{"schema", kTableSchema}, {"version", kTableVersion}, {"states", states}};
}

StateActionTable table_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kTableSchema) throw SchemaError("not a state-action table file");
        if (j.at("version").get<int>() != kTableVersion) {
            throw SchemaError("state-action table version " + std::to_string(j.at("version").get<int>()) +
                              " is not supported");
        }
        std::map<int, StateStats> states;
        for (const auto& s : j.at("states")) {
            StateStats st;
            st.n = s.at("n").get<std::int64_t>();
            st.mean = s.at("mean").get<double>();
            for (const auto& a : s.at("actions")) {
                st.actions[a.at("action").get<std::string>()] = {a.at("n").get<std::int64_t>(), a.at("mean").get<double>(),
                                                                 a.at("m2").get<double>()};
            }
            states[s.at("cluster").get<int>()] = std::move(st);
        }
        return StateActionTable::from_states(std::move(states));
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("malformed state-action table: ") + ex.what());
    }
}

}  // namespace kbrl::rl
