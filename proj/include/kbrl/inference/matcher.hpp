#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kbrl/graph/semantic_graph.hpp"
#include "kbrl/ki/ast.hpp"

namespace kbrl::inference {

struct HistoryEntry {
    int turn = 0;
    std::string ki_id;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// Working memory of one task.
struct Issue {
    graph::AttributeMap attributes;
    std::vector<HistoryEntry> history;

    const Value* find(std::string_view name) const {
        auto it = attributes.find(name);
        return it == attributes.end() ? nullptr : &it->second;
    }

    friend bool operator==(const Issue&, const Issue&) = default;
};

// Variable name (without '$') -> value. Node variables hold the node id as a string.
using Binding = std::map<std::string, Value, std::less<>>;

// "a=1;b=\"x\";" with variables in name order.
std::string canonical(const Binding& binding);
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t binding_hash(const Binding& binding);

struct Candidate {
    const ki::KnowledgeItem* ki = nullptr;
    std::string ki_id;
    Binding binding;
    std::uint64_t hash = 0;

    friend bool operator==(const Candidate& a, const Candidate& b) {
        return a.ki_id == b.ki_id && a.binding == b.binding;
    }
};

struct ConflictSet {
    std::vector<Candidate> candidates;  // sorted by (ki id, binding hash, canonical binding)
    int turn = 0;
    int cluster = -1;

    bool empty() const { return candidates.empty(); }
    std::size_t size() const { return candidates.size(); }
    // Distinct action ids in candidate order.
    std::vector<std::string> actions() const;
};

void sort_candidates(std::vector<Candidate>& candidates);

// Every (rule, binding) whose ON pattern matches the graph and whose WHEN
// condition holds. Throws EvaluationError on incompatible comparisons.
ConflictSet match_rules(const std::vector<ki::KnowledgeItem>& kb, const graph::SemanticGraph& graph,
                        const Issue& issue);

// Re-checks one candidate against the current graph and issue.
bool holds(const ki::KnowledgeItem& ki, const Binding& binding, const graph::SemanticGraph& graph, const Issue& issue);

// Value of an operand under a binding; nullopt when an attribute is missing.
std::optional<Value> evaluate(const ki::Operand& operand, const Binding& binding, const graph::SemanticGraph& graph,
                              const Issue& issue);
bool evaluate(const ki::Expr& expr, const Binding& binding, const graph::SemanticGraph& graph, const Issue& issue);

}  // namespace kbrl::inference
