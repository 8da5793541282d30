#include "kbrl/inference/engine.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "kbrl/error.hpp"

namespace kbrl::inference {

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Won: return "won";
        case OutcomeKind::LostRace: return "lost_race";
        case OutcomeKind::Destroyed: return "destroyed";
        case OutcomeKind::Truncated: return "truncated";
    }
    return "truncated";
}

OutcomeKind outcome_from_string(std::string_view text) {
    if (text == "won") return OutcomeKind::Won;
    if (text == "lost_race") return OutcomeKind::LostRace;
    if (text == "destroyed") return OutcomeKind::Destroyed;
    if (text == "truncated") return OutcomeKind::Truncated;
    throw SchemaError("unknown outcome '" + std::string(text) + "'");
}

std::string UniformResolver::resolve(int, const std::vector<std::string>& actions, Rng& rng) const {
    if (actions.empty()) throw Error("resolver called with no actions");
    return actions[rng() % actions.size()];
}

std::string FirstResolver::resolve(int, const std::vector<std::string>& actions, Rng&) const {
    if (actions.empty()) throw Error("resolver called with no actions");
    return actions.front();
}

Engine::Engine(const std::vector<ki::KnowledgeItem>& kb, std::shared_ptr<const graph::Ontology> ontology,
               const ConflictResolver& resolver, EpisodeLimits limits, StateFn state_fn)
    : kb_(kb), resolver_(resolver), limits_(limits), state_fn_(std::move(state_fn)), graph_(std::move(ontology)),
      rng_(limits.seed) {
    issue_.attributes["StartPlaying"] = Value(true);
}

void Engine::play_turn(AgentEnvironment& env) {
    if (!have_handlers_) {
        handlers_ = env.handlers();
        have_handlers_ = true;
    }
    const int turn = env.turn();
    const int cluster = state_fn_ ? state_fn_(env.features()) : -1;
    if (turn >= 0) {
        if (record_.turn_clusters.size() <= static_cast<std::size_t>(turn)) {
            record_.turn_clusters.resize(static_cast<std::size_t>(turn) + 1, -1);
        }
        record_.turn_clusters[static_cast<std::size_t>(turn)] = cluster;
    }
    std::set<std::pair<std::string, std::string>> fired;
    for (int firings = 0; firings < limits_.max_firings_per_turn; ++firings) {
        if (env.outcome()) return;
        env.sync(graph_);
        ConflictSet cs = match_rules(kb_, graph_, issue_);
        cs.turn = turn;
        cs.cluster = cluster;
        std::vector<Candidate> live;
        for (auto& c : cs.candidates) {
            if (!fired.count({c.ki_id, canonical(c.binding)})) live.push_back(std::move(c));
        }
        cs.candidates = std::move(live);
        if (cs.empty()) return;

        ++record_.conflicts_seen;
        std::vector<std::string> actions = cs.actions();
        std::string chosen = actions.front();
        if (actions.size() > 1) {
            ++record_.multi_conflicts;
            chosen = resolver_.resolve(cluster, actions, rng_);
            record_.decisions.push_back({turn, cluster, actions, chosen});
        }
        const Candidate* pick = nullptr;
        for (const auto& c : cs.candidates) {
            if (c.ki_id == chosen) {
                pick = &c;
                break;
            }
        }
        if (!pick) throw Error("resolver chose '" + chosen + "', which is not in the conflict set");
        if (!holds(*pick->ki, pick->binding, graph_, issue_)) {
            throw Error("conditions of " + pick->ki_id + " no longer hold at execution");
        }
        execute(*pick->ki, pick->binding, graph_, issue_, handlers_);
        env.flush();
        fired.insert({pick->ki_id, canonical(pick->binding)});
        issue_.history.push_back({turn, pick->ki_id});
    }
}

EpisodeRecord Engine::take_record() {
    EpisodeRecord out = std::move(record_);
    out.history = issue_.history;
    record_ = EpisodeRecord{};
    return out;
}

EpisodeRecord run_episode(const std::vector<ki::KnowledgeItem>& kb, std::shared_ptr<const graph::Ontology> ontology,
                          AgentEnvironment& env, const ConflictResolver& resolver, const EpisodeLimits& limits,
                          const StateFn& state_fn) {
    Engine engine(kb, std::move(ontology), resolver, limits, state_fn);
    OutcomeKind outcome = OutcomeKind::Truncated;
    for (;;) {
        if (auto out = env.outcome()) {
            outcome = *out;
            break;
        }
        if (env.turn() >= limits.max_turns) break;
        engine.play_turn(env);
        if (auto out = env.outcome()) {
            outcome = *out;
            break;
        }
        env.end_turn();
    }
    EpisodeRecord rec = engine.take_record();
    rec.outcome = outcome;
    rec.final_turn = env.turn();
    return rec;
}

std::string to_jsonl(const EpisodeRecord& record) {
    std::ostringstream out;
    for (const auto& d : record.decisions) {
        nlohmann::json j = {{"kind", "decision"},
                            {"turn", d.turn},
                            {"cluster", d.cluster},
                            {"candidates", d.candidates},
                            {"chosen", d.chosen}};
        out << j.dump() << '\n';
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : record.history) hist.push_back({h.turn, h.ki_id});
    nlohmann::json fin = {{"kind", "outcome"},
                          {"outcome", std::string(to_string(record.outcome))},
                          {"final_turn", record.final_turn},
                          {"turn_clusters", record.turn_clusters},
                          {"conflicts_seen", record.conflicts_seen},
                          {"multi_conflicts", record.multi_conflicts},
                          {"history", hist}};
    out << fin.dump() << '\n';
    return out.str();
}

EpisodeRecord episode_from_jsonl(std::string_view text) {
    EpisodeRecord rec;
    std::istringstream in{std::string(text)};
    std::string line;
    bool finished = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            std::string kind = j.at("kind").get<std::string>();
            if (kind == "decision") {
                Decision d;
                d.turn = j.at("turn").get<int>();
                d.cluster = j.at("cluster").get<int>();
                d.candidates = j.at("candidates").get<std::vector<std::string>>();
                d.chosen = j.at("chosen").get<std::string>();
                rec.decisions.push_back(std::move(d));
            } else if (kind == "outcome") {
                rec.outcome = outcome_from_string(j.at("outcome").get<std::string>());
                rec.final_turn = j.at("final_turn").get<int>();
                rec.turn_clusters = j.at("turn_clusters").get<std::vector<int>>();
                rec.conflicts_seen = j.value("conflicts_seen", std::size_t{0});
                rec.multi_conflicts = j.value("multi_conflicts", std::size_t{0});
                if (j.contains("history")) {
                    for (const auto& h : j.at("history")) rec.history.push_back({h.at(0).get<int>(), h.at(1).get<std::string>()});
                }
                finished = true;
            }
            // other record kinds (headers) are ignored
        } catch (const nlohmann::json::exception& ex) {
            throw SyntaxError(std::string("bad episode record: ") + ex.what(), line_no, 1);
        }
    }
    if (!finished) throw SchemaError("episode log has no outcome record");
    return rec;
}

}  // namespace kbrl::inference
