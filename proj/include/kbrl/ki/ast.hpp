#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kbrl/graph/value.hpp"

namespace kbrl::ki {

// Right-hand side of a comparison or the value of an assignment.
struct Operand {
    enum class Kind {
        Literal,    // 3, 2.5, "text", true
        IssueAttr,  // issue.Name
        Var,        // $x  (scalar binding or node id)
        NodeAttr,   // $u.attr
        List,       // [a, b, ...]
    };

    Kind kind = Kind::Literal;
    Value literal;
    std::string name;  // issue attribute or variable name (without '$')
    std::string attr;  // NodeAttr only
    std::vector<Operand> items;

    static Operand make_literal(Value v) { return Operand{Kind::Literal, std::move(v), {}, {}, {}}; }
    static Operand make_issue(std::string n) { return Operand{Kind::IssueAttr, {}, std::move(n), {}, {}}; }
    static Operand make_var(std::string n) { return Operand{Kind::Var, {}, std::move(n), {}, {}}; }
    static Operand make_node_attr(std::string v, std::string a) {
        return Operand{Kind::NodeAttr, {}, std::move(v), std::move(a), {}};
    }
    static Operand make_list(std::vector<Operand> xs) { return Operand{Kind::List, {}, {}, {}, std::move(xs)}; }

    friend bool operator==(const Operand&, const Operand&) = default;
};

// WHEN condition tree.
struct Expr {
    enum class Kind {
        True,     // empty WHEN block
        Compare,  // lhs op rhs
        Exists,   // operand exists
        Truthy,   // bare boolean operand
        Not,
        And,
        Or,
    };

    Kind kind = Kind::True;
    CompareOp op = CompareOp::Eq;
    Operand lhs;
    Operand rhs;
    std::vector<Expr> children;

    friend bool operator==(const Expr&, const Expr&) = default;
};

// One `attr op operand` (or bare `attr` for existence) inside a match clause.
// When the operand is a variable not bound yet and op is ==, the constraint
// binds it to the attribute value.
struct Constraint {
    std::string attribute;
    std::optional<CompareOp> op;  // nullopt: attribute must exist
    Operand operand;
    bool binds = false;

    friend bool operator==(const Constraint&, const Constraint&) = default;
};

// `related via <verb> to $other` (edge this -> other) or `from $other`
// (edge other -> this). $other must be bound by an earlier clause.
struct Relation {
    std::string verb;
    bool outgoing = true;
    std::string other_var;

    friend bool operator==(const Relation&, const Relation&) = default;
};

struct MatchClause {
    std::string entity_type;
    std::string var;
    std::vector<Constraint> constraints;
    std::vector<Relation> relations;

    friend bool operator==(const MatchClause&, const MatchClause&) = default;
};

// `${ref}` piece of a handler command template.
struct TemplatePart {
    bool is_ref = false;
    std::string text;  // literal text, or the ref's var / "issue" head
    std::string attr;  // ref attribute, empty for a bare variable

    friend bool operator==(const TemplatePart&, const TemplatePart&) = default;
};

struct Statement {
    enum class Kind { IssueSet, IssueUnset, GraphSet, Handler };

    Kind kind = Kind::IssueSet;
    std::string target;  // issue attribute, node variable, or handler name
    std::string attr;    // GraphSet attribute
    Operand value;       // IssueSet / GraphSet
    std::string command_template;     // Handler raw text
    std::vector<TemplatePart> parts;  // Handler parsed template

    friend bool operator==(const Statement&, const Statement&) = default;
};

struct KnowledgeItem {
    std::string name;
    std::string expert_tag;
    std::vector<std::pair<std::string, Value>> meta;
    std::vector<MatchClause> on;
    Expr when;
    std::vector<Statement> actions;

    // Action identifier used by the learner: expert_tag + "/" + name.
    std::string id() const { return expert_tag + "/" + name; }

    friend bool operator==(const KnowledgeItem&, const KnowledgeItem&) = default;
};

}  // namespace kbrl::ki
