#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbrl/graph/value.hpp"

namespace kbrl::graph {

enum class ScalarKind { String, Integer, Float, Boolean };

struct AttributeKind {
    ScalarKind scalar = ScalarKind::String;
    bool list = false;

    friend bool operator==(const AttributeKind&, const AttributeKind&) = default;
};

std::string to_string(AttributeKind kind);

struct VerbDecl {
    std::string name;
    std::string from;
    std::string to;

    friend bool operator==(const VerbDecl&, const VerbDecl&) = default;
};

// Flat (non-hierarchical) schema of the semantic network: entity types, typed
// verbs between them, and per-entity attribute kinds.
class Ontology {
public:
    using AttributeKey = std::pair<std::string, std::string>;  // (entity, attribute)

    void add_entity(std::string name);
    // Both endpoint types must already be declared.
    void add_verb(VerbDecl verb);
    void add_attribute(std::string entity, std::string attribute, AttributeKind kind);

    bool has_entity(std::string_view name) const;
    const VerbDecl* verb(std::string_view name) const;
    std::optional<AttributeKind> attribute(std::string_view entity, std::string_view attribute) const;

    const std::set<std::string, std::less<>>& entities() const { return entities_; }
    const std::map<std::string, VerbDecl, std::less<>>& verbs() const { return verbs_; }
    const std::map<AttributeKey, AttributeKind>& attributes() const { return attributes_; }

    bool empty() const { return entities_.empty() && verbs_.empty() && attributes_.empty(); }

    // Checks the value against the declared kind. Integers are accepted for
    // float attributes and widened; the (possibly converted) value is returned.
    // Throws SchemaError on mismatch or unknown attribute.
    Value conform(std::string_view entity, std::string_view attribute, Value value) const;

    friend bool operator==(const Ontology&, const Ontology&) = default;

private:
    std::set<std::string, std::less<>> entities_;
    std::map<std::string, VerbDecl, std::less<>> verbs_;
    std::map<AttributeKey, AttributeKind> attributes_;
};

// Parses the Turtle subset documented in docs/ontology.md. Terms written with
// the empty prefix (`:Tile`) keep their local name; any other prefix is kept
// as a literal `prefix/` in front (`civ:Settlers` -> "civ/Settlers").
// Throws SyntaxError (with line/column) or SchemaError for references to
// undeclared types.
Ontology load_ontology(std::string_view text);

}  // namespace kbrl::graph
