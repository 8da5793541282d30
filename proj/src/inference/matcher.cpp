#include "kbrl/inference/matcher.hpp"

#include <algorithm>
#include <tuple>

#include "kbrl/error.hpp"
#include "kbrl/ki/parser.hpp"

namespace kbrl::inference {

using graph::SemanticGraph;
using graph::SemanticNode;
using ki::Expr;
using ki::KnowledgeItem;
using ki::MatchClause;
using ki::Operand;

std::string canonical(const Binding& binding) {
    std::string out;
    for (const auto& [name, value] : binding) {
        out += name;
        out += '=';
        out += value.literal();
        out += ';';
    }
    return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t binding_hash(const Binding& binding) { return fnv1a(canonical(binding)); }

std::vector<std::string> ConflictSet::actions() const {
    std::vector<std::string> out;
    for (const auto& c : candidates) {
        if (std::find(out.begin(), out.end(), c.ki_id) == out.end()) out.push_back(c.ki_id);
    }
    return out;
}

void sort_candidates(std::vector<Candidate>& candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.ki_id != b.ki_id) return a.ki_id < b.ki_id;
        if (a.hash != b.hash) return a.hash < b.hash;
        return canonical(a.binding) < canonical(b.binding);
    });
}

std::optional<Value> evaluate(const Operand& operand, const Binding& binding, const SemanticGraph& graph,
                              const Issue& issue) {
    switch (operand.kind) {
        case Operand::Kind::Literal: return operand.literal;
        case Operand::Kind::IssueAttr: {
            const Value* v = issue.find(operand.name);
            if (!v) return std::nullopt;
            return *v;
        }
        case Operand::Kind::Var: {
            auto it = binding.find(operand.name);
            if (it == binding.end()) return std::nullopt;
            return it->second;
        }
        case Operand::Kind::NodeAttr: {
            auto it = binding.find(operand.name);
            if (it == binding.end() || it->second.kind() != ValueKind::String) return std::nullopt;
            const SemanticNode* node = graph.node(it->second.as_string());
            if (!node) return std::nullopt;
            const Value* v = node->find(operand.attr);
            if (!v) return std::nullopt;
            return *v;
        }
        case Operand::Kind::List: {
            Value::List items;
            for (const auto& item : operand.items) {
                auto v = evaluate(item, binding, graph, issue);
                if (!v) return std::nullopt;
                items.push_back(std::move(*v));
            }
            return Value(std::move(items));
        }
    }
    return std::nullopt;
}

bool evaluate(const Expr& expr, const Binding& binding, const SemanticGraph& graph, const Issue& issue) {
    switch (expr.kind) {
        case Expr::Kind::True: return true;
        case Expr::Kind::Compare: {
            auto l = evaluate(expr.lhs, binding, graph, issue);
            if (!l) return false;
            auto r = evaluate(expr.rhs, binding, graph, issue);
            if (!r) return false;
            return compare_values(*l, expr.op, *r);
        }
        case Expr::Kind::Exists: return evaluate(expr.lhs, binding, graph, issue).has_value();
        case Expr::Kind::Truthy: {
            auto v = evaluate(expr.lhs, binding, graph, issue);
            if (!v) return false;
            if (v->kind() != ValueKind::Boolean) {
                throw EvaluationError("condition '" + ki::print_operand(expr.lhs) + "' is " +
                                      std::string(to_string(v->kind())) + ", not boolean");
            }
            return v->as_bool();
        }
        case Expr::Kind::Not: return !evaluate(expr.children.at(0), binding, graph, issue);
        case Expr::Kind::And:
            for (const auto& c : expr.children) {
                if (!evaluate(c, binding, graph, issue)) return false;
            }
            return true;
        case Expr::Kind::Or:
            for (const auto& c : expr.children) {
                if (evaluate(c, binding, graph, issue)) return true;
            }
            return false;
    }
    return false;
}

namespace {

const Issue& empty_issue() {
    static const Issue issue;
    return issue;
}

void require_attribute(const SemanticGraph& graph, const MatchClause& clause, const std::string& attr) {
    if (!graph.ontology().attribute(clause.entity_type, attr)) {
        throw SchemaError("attribute '" + attr + "' is not declared for type '" + clause.entity_type + "'");
    }
}

// Checks constraints and relations of one clause for `node`, extending `b` with new bindings.
bool node_satisfies(const MatchClause& clause, const SemanticNode& node, Binding& b, const SemanticGraph& graph) {
    if (node.entity_type != clause.entity_type) return false;
    for (const auto& k : clause.constraints) {
        const Value* v = node.find(k.attribute);
        if (!v) return false;
        if (!k.op) continue;
        if (k.binds) {
            b[k.operand.name] = *v;
            continue;
        }
        auto rhs = evaluate(k.operand, b, graph, empty_issue());
        if (!rhs || !compare_values(*v, *k.op, *rhs)) return false;
    }
    for (const auto& r : clause.relations) {
        auto it = b.find(r.other_var);
        if (it == b.end()) return false;
        const std::string& other = it->second.as_string();
        bool ok = r.outgoing ? graph.has_edge(r.verb, node.id, other) : graph.has_edge(r.verb, other, node.id);
        if (!ok) return false;
    }
    return true;
}

// Smallest readily available superset of the nodes that can satisfy the clause.
std::vector<const SemanticNode*> clause_candidates(const MatchClause& clause, const Binding& b,
                                                   const SemanticGraph& graph) {
    const auto& all = graph.nodes_of_type(clause.entity_type);
    for (const auto& k : clause.constraints) require_attribute(graph, clause, k.attribute);

    if (!clause.relations.empty()) {
        const auto& r = clause.relations.front();
        auto it = b.find(r.other_var);
        if (it == b.end()) return {};
        const std::string& other = it->second.as_string();
        std::vector<std::string> ids = r.outgoing ? graph.sources(r.verb, other) : graph.targets(r.verb, other);
        std::vector<const SemanticNode*> out;
        for (const auto& id : ids) {
            const SemanticNode* n = graph.node(id);
            if (n && n->entity_type == clause.entity_type) out.push_back(n);
        }
        return out;
    }

    for (const auto& k : clause.constraints) {
        if (!k.op || *k.op != CompareOp::Eq || k.binds) continue;
        bool resolvable = k.operand.kind == Operand::Kind::Literal ||
                          ((k.operand.kind == Operand::Kind::Var || k.operand.kind == Operand::Kind::NodeAttr) &&
                           b.count(k.operand.name));
        if (!resolvable) continue;
        auto v = evaluate(k.operand, b, graph, empty_issue());
        if (!v) return {};
        auto kind = graph.ontology().attribute(clause.entity_type, k.attribute);
        if (kind->list) continue;
        Value probe = *v;
        if (kind->scalar == graph::ScalarKind::Float && probe.kind() == ValueKind::Integer) {
            probe = Value(static_cast<double>(probe.as_int()));
        }
        bool same_kind = (kind->scalar == graph::ScalarKind::Float && probe.kind() == ValueKind::Float) ||
                         (kind->scalar == graph::ScalarKind::Integer && probe.kind() == ValueKind::Integer) ||
                         (kind->scalar == graph::ScalarKind::String && probe.kind() == ValueKind::String) ||
                         (kind->scalar == graph::ScalarKind::Boolean && probe.kind() == ValueKind::Boolean);
        if (!same_kind) continue;
        return graph.lookup(clause.entity_type, k.attribute, probe);
    }
    return all;
}

void match_from(const KnowledgeItem& ki, std::size_t idx, const Binding& b, const SemanticGraph& graph,
                const Issue& issue, std::vector<Candidate>& out) {
    if (idx == ki.on.size()) {
        if (evaluate(ki.when, b, graph, issue)) {
            Candidate c;
            c.ki = &ki;
            c.ki_id = ki.id();
            c.binding = b;
            c.hash = binding_hash(b);
            out.push_back(std::move(c));
        }
        return;
    }
    const MatchClause& clause = ki.on[idx];
    for (const SemanticNode* node : clause_candidates(clause, b, graph)) {
        Binding next = b;
        next[clause.var] = Value(node->id);
        if (node_satisfies(clause, *node, next, graph)) match_from(ki, idx + 1, next, graph, issue, out);
    }
}

}  // namespace

ConflictSet match_rules(const std::vector<KnowledgeItem>& kb, const SemanticGraph& graph, const Issue& issue) {
    ConflictSet cs;
    for (const auto& ki : kb) match_from(ki, 0, Binding{}, graph, issue, cs.candidates);
    sort_candidates(cs.candidates);
    return cs;
}

bool holds(const KnowledgeItem& ki, const Binding& binding, const SemanticGraph& graph, const Issue& issue) {
    Binding check;
    for (const auto& clause : ki.on) {
        auto it = binding.find(clause.var);
        if (it == binding.end() || it->second.kind() != ValueKind::String) return false;
        const SemanticNode* node = graph.node(it->second.as_string());
        if (!node) return false;
        check[clause.var] = it->second;
        if (!node_satisfies(clause, *node, check, graph)) return false;
    }
    if (check != binding) return false;
    return evaluate(ki.when, binding, graph, issue);
}

}  // namespace kbrl::inference
