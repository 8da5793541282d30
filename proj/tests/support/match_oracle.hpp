#pragma once

// Brute-force rule matcher and random instance generator over a toy ontology.

#include <random>
#include <set>

#include "kbrl/inference/matcher.hpp"
#include "kbrl/ki/parser.hpp"

namespace kbrl::testing {

using namespace kbrl::inference;
using graph::SemanticGraph;
using graph::SemanticNode;

inline const char* kToyTtl = R"(@prefix kb: <http://kbrl.local/schema#> .
@prefix : <http://example.org/toy#> .
:A a kb:Entity .
:B a kb:Entity .
:C a kb:Entity .
:link a kb:Verb ; kb:domain :A ; kb:range :B .
:next a kb:Verb ; kb:domain :B ; kb:range :C .
:peer a kb:Verb ; kb:domain :A ; kb:range :A .
:n a kb:Attribute ; kb:domain :A, :B, :C ; kb:range kb:integer .
:f a kb:Attribute ; kb:domain :A, :B, :C ; kb:range kb:float .
:s a kb:Attribute ; kb:domain :A, :B, :C ; kb:range kb:string .
:b a kb:Attribute ; kb:domain :A, :B, :C ; kb:range kb:boolean .
)";

inline std::shared_ptr<const graph::Ontology> toy_ontology() {
    static auto o = std::make_shared<const graph::Ontology>(graph::load_ontology(kToyTtl));
    return o;
}

// ---------------------------------------------------------------------------
// Brute-force reference matcher: tries every node for every clause.

enum class K { Num, Str, Bool };

inline bool ref_equal(const Value& a, const Value& b) {
    if (a.is_numeric() && b.is_numeric()) return a.as_number() == b.as_number();
    return a == b;
}

inline bool ref_compare(const Value& a, CompareOp op, const Value& b) {
    if (op == CompareOp::Eq) return ref_equal(a, b);
    if (op == CompareOp::Ne) return !ref_equal(a, b);
    if (op == CompareOp::In) {
        for (const auto& x : b.as_list()) {
            if (ref_equal(a, x)) return true;
        }
        return false;
    }
    int c;
    if (a.kind() == ValueKind::String) {
        c = a.as_string() < b.as_string() ? -1 : (b.as_string() < a.as_string() ? 1 : 0);
    } else {
        c = a.as_number() < b.as_number() ? -1 : (b.as_number() < a.as_number() ? 1 : 0);
    }
    switch (op) {
        case CompareOp::Lt: return c < 0;
        case CompareOp::Le: return c <= 0;
        case CompareOp::Gt: return c > 0;
        default: return c >= 0;
    }
}

struct Ref {
    const SemanticGraph& g;
    const Issue& issue;

    std::optional<Value> val(const ki::Operand& o, const Binding& b) const {
        using OK = ki::Operand::Kind;
        if (o.kind == OK::Literal) return o.literal;
        if (o.kind == OK::IssueAttr) {
            auto it = issue.attributes.find(o.name);
            if (it == issue.attributes.end()) return std::nullopt;
            return it->second;
        }
        if (o.kind == OK::Var) return b.at(o.name);
        if (o.kind == OK::NodeAttr) {
            const auto& n = g.nodes().at(b.at(o.name).as_string());
            auto it = n.attributes.find(o.attr);
            if (it == n.attributes.end()) return std::nullopt;
            return it->second;
        }
        Value::List xs;
        for (const auto& i : o.items) {
            auto v = val(i, b);
            if (!v) return std::nullopt;
            xs.push_back(*v);
        }
        return Value(xs);
    }

    bool cond(const ki::Expr& e, const Binding& b) const {
        using EK = ki::Expr::Kind;
        switch (e.kind) {
            case EK::True: return true;
            case EK::Compare: {
                auto l = val(e.lhs, b), r = val(e.rhs, b);
                return l && r && ref_compare(*l, e.op, *r);
            }
            case EK::Exists: return val(e.lhs, b).has_value();
            case EK::Truthy: {
                auto v = val(e.lhs, b);
                return v && v->as_bool();
            }
            case EK::Not: return !cond(e.children[0], b);
            case EK::And: {
                bool all = true;
                for (const auto& c : e.children) all = all && cond(c, b);
                return all;
            }
            case EK::Or: {
                bool any = false;
                for (const auto& c : e.children) any = any || cond(c, b);
                return any;
            }
        }
        return false;
    }

    void walk(const ki::KnowledgeItem& k, std::size_t i, Binding b, std::set<std::pair<std::string, Binding>>& out) const {
        if (i == k.on.size()) {
            if (cond(k.when, b)) out.insert({k.id(), b});
            return;
        }
        const auto& cl = k.on[i];
        for (const auto& [id, node] : g.nodes()) {
            if (node.entity_type != cl.entity_type) continue;
            Binding nb = b;
            nb[cl.var] = Value(id);
            bool ok = true;
            for (const auto& c : cl.constraints) {
                auto it = node.attributes.find(c.attribute);
                if (it == node.attributes.end()) {
                    ok = false;
                    break;
                }
                if (!c.op) continue;
                if (c.binds) {
                    nb[c.operand.name] = it->second;
                    continue;
                }
                auto rhs = val(c.operand, nb);
                if (!rhs || !ref_compare(it->second, *c.op, *rhs)) {
                    ok = false;
                    break;
                }
            }
            for (const auto& r : cl.relations) {
                if (!ok) break;
                const std::string& other = nb.at(r.other_var).as_string();
                ok = g.edges().count(r.outgoing ? graph::SemanticEdge{r.verb, id, other}
                                                : graph::SemanticEdge{r.verb, other, id}) > 0;
            }
            if (ok) walk(k, i + 1, nb, out);
        }
    }
};

// ---------------------------------------------------------------------------
// Random instances.

class InstanceGen {
public:
    explicit InstanceGen(std::uint64_t seed) : rng_(seed) {}

    SemanticGraph graph() {
        SemanticGraph g(toy_ontology());
        static const char* types[] = {"A", "B", "C"};
        const int nodes = 1 + pick(30);
        std::vector<std::pair<std::string, std::string>> made;
        for (int i = 0; i < nodes; ++i) {
            SemanticNode n{"n" + std::to_string(i), types[pick(3)], {}};
            if (pick(6)) n.attributes["n"] = Value(pick(5));
            if (pick(6)) n.attributes["f"] = Value(pick(9) * 0.5);
            if (pick(6)) n.attributes["s"] = Value(str());
            if (pick(6)) n.attributes["b"] = Value(pick(2) == 0);
            made.emplace_back(n.id, n.entity_type);
            g.upsert_node(n);
        }
        for (int e = 0; e < nodes * 2; ++e) {
            const auto& a = made[static_cast<std::size_t>(pick(nodes))];
            const auto& b = made[static_cast<std::size_t>(pick(nodes))];
            if (a.second == "A" && b.second == "B") g.add_edge({"link", a.first, b.first});
            if (a.second == "B" && b.second == "C") g.add_edge({"next", a.first, b.first});
            if (a.second == "A" && b.second == "A" && a.first != b.first) g.add_edge({"peer", a.first, b.first});
        }
        return g;
    }

    Issue issue() {
        Issue is;
        if (pick(3)) is.attributes["n"] = Value(pick(5));
        if (pick(3)) is.attributes["s"] = Value(str());
        if (pick(3)) is.attributes["b"] = Value(pick(2) == 0);
        return is;
    }

    std::string rule(int index) {
        vars_.clear();
        std::string out = "ki r" + std::to_string(index) + " { }\non {\n";
        static const char* types[] = {"A", "B", "C"};
        const int clauses = 1 + pick(3);
        std::vector<std::string> clause_types;
        for (int i = 0; i < clauses; ++i) {
            const std::string type = types[pick(3)];
            const std::string var = "v" + std::to_string(i);
            out += "  match " + type + " as $" + var;
            std::string body;
            for (int c = 0, n = pick(3); c < n; ++c) body += (body.empty() ? " " : ", ") + constraint(i);
            if (!body.empty()) out += " {" + body + " }";
            for (int j = 0; j < i; ++j) {
                if (pick(3)) continue;
                const std::string& other = clause_types[static_cast<std::size_t>(j)];
                const std::string ov = " $v" + std::to_string(j);
                if (type == "B" && other == "A") out += " related via link from" + ov;
                if (type == "A" && other == "B") out += " related via link to" + ov;
                if (type == "C" && other == "B") out += " related via next from" + ov;
                if (type == "A" && other == "A") out += " related via peer " + std::string(pick(2) ? "to" : "from") + ov;
            }
            out += "\n";
            clause_types.push_back(type);
            nodes_ = i + 1;
        }
        out += "}\nwhen { " + (pick(3) ? expr(2) : std::string()) + " }\ndo { issue.unset done }\n";
        return out;
    }

private:
    int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    std::string str() {
        static const char* ss[] = {"red", "green", "blue"};
        return ss[pick(3)];
    }

    std::string literal(K k) {
        if (k == K::Num) return pick(2) ? std::to_string(pick(5)) : format_double(pick(9) * 0.5);
        if (k == K::Str) return "\"" + str() + "\"";
        return pick(2) ? "true" : "false";
    }

    static K kind_of(const std::string& attr) { return attr == "s" ? K::Str : (attr == "b" ? K::Bool : K::Num); }
    std::string attr() {
        static const char* as[] = {"n", "f", "s", "b"};
        return as[pick(4)];
    }

    std::string op(K k) {
        static const char* all[] = {"==", "!=", "<", "<=", ">", ">="};
        return k == K::Bool ? all[pick(2)] : all[pick(6)];
    }

    // A value expression of kind k built only from what is bound.
    std::string ref(K k, int bound_nodes, bool allow_issue) {
        std::vector<std::string> opts = {literal(k)};
        for (const auto& [v, vk] : vars_) {
            if (vk == k) opts.push_back("$" + v);
        }
        for (int i = 0; i < bound_nodes; ++i) {
            for (const char* a : {"n", "f", "s", "b"}) {
                if (kind_of(a) == k) opts.push_back("$v" + std::to_string(i) + "." + a);
            }
        }
        if (allow_issue) opts.push_back(k == K::Num ? "issue.n" : (k == K::Str ? "issue.s" : "issue.b"));
        return opts[static_cast<std::size_t>(pick(int(opts.size())))];
    }

    std::string constraint(int clause) {
        const std::string a = attr();
        const K k = kind_of(a);
        switch (pick(5)) {
            case 0: return a;
            case 1: {
                std::string v = "x" + std::to_string(vars_.size());
                vars_.emplace_back(v, k);
                return a + " == $" + v;
            }
            case 2: return a + " in [" + literal(k) + ", " + ref(k, clause, false) + "]";
            default: return a + " " + op(k) + " " + ref(k, clause, false);
        }
    }

    std::string expr(int depth) {
        switch (depth <= 0 ? pick(3) : pick(6)) {
            case 0: {
                const K k = static_cast<K>(pick(3));
                return ref(k, nodes_, true) + " " + op(k) + " " + ref(k, nodes_, true);
            }
            case 1: return pick(2) ? "issue." + attr() + " exists" : "$v0." + attr() + " exists";
            case 2: return pick(2) ? "issue.b" : "$v" + std::to_string(pick(nodes_)) + ".b";
            case 3: return "not (" + expr(depth - 1) + ")";
            case 4: return "(" + expr(depth - 1) + " and " + expr(depth - 1) + ")";
            default: return "(" + expr(depth - 1) + " or " + expr(depth - 1) + ")";
        }
    }

    std::mt19937_64 rng_;
    std::vector<std::pair<std::string, K>> vars_;
    int nodes_ = 1;
};

}  // namespace kbrl::testing
