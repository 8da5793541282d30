#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kbrl/graph/ontology.hpp"
#include "kbrl/graph/value.hpp"

namespace kbrl::graph {

using AttributeMap = std::map<std::string, Value, std::less<>>;

struct SemanticNode {
    std::string id;
    std::string entity_type;
    AttributeMap attributes;

    const Value* find(std::string_view attribute) const {
        auto it = attributes.find(attribute);
        return it == attributes.end() ? nullptr : &it->second;
    }

    friend bool operator==(const SemanticNode&, const SemanticNode&) = default;
};

struct SemanticEdge {
    std::string verb;
    std::string from_id;
    std::string to_id;

    friend auto operator<=>(const SemanticEdge&, const SemanticEdge&) = default;
};

struct AttributePredicate {
    std::string attribute;
    CompareOp op = CompareOp::Eq;
    Value value;
};

// In-memory semantic network validated against an Ontology.
//
// Mutations are single-writer. Const member functions never modify shared
// state, so a const graph (or a copy taken as a snapshot) may be read from
// several threads. Node pointers returned by queries stay valid until the
// node is removed; attribute contents change on upsert.
class SemanticGraph {
public:
    explicit SemanticGraph(std::shared_ptr<const Ontology> ontology);
    SemanticGraph(const SemanticGraph& other);
    SemanticGraph& operator=(const SemanticGraph& other);
    SemanticGraph(SemanticGraph&&) noexcept = default;
    SemanticGraph& operator=(SemanticGraph&&) noexcept = default;

    const Ontology& ontology() const { return *ontology_; }
    const std::shared_ptr<const Ontology>& ontology_ptr() const { return ontology_; }

    // Inserts the node or replaces the attributes of the node with the same id.
    // An id may not change entity type while edges reference it.
    std::string upsert_node(SemanticNode node);
    // Removes the node and every incident edge.
    bool remove_node(std::string_view id);
    // Sets one attribute of an existing node.
    void set_attribute(std::string_view id, std::string_view attribute, Value value);

    void add_edge(SemanticEdge edge);
    bool remove_edge(const SemanticEdge& edge);
    bool has_edge(std::string_view verb, std::string_view from_id, std::string_view to_id) const;
    // Ids of nodes reached by `verb` edges leaving from_id, sorted.
    std::vector<std::string> targets(std::string_view verb, std::string_view from_id) const;
    // Ids of nodes with a `verb` edge into to_id, sorted.
    std::vector<std::string> sources(std::string_view verb, std::string_view to_id) const;

    const SemanticNode* node(std::string_view id) const;

    // Nodes of the type satisfying every predicate, sorted by id. Comparisons
    // use compare_values(); a node lacking a predicate's attribute fails it.
    std::vector<const SemanticNode*> query_nodes(std::string_view entity_type,
                                                 const std::vector<AttributePredicate>& predicates) const;
    // All nodes of a type, sorted by id.
    const std::vector<const SemanticNode*>& nodes_of_type(std::string_view entity_type) const;
    // Nodes of the type whose attribute equals `value` exactly (same kind), sorted by id.
    std::vector<const SemanticNode*> lookup(std::string_view entity_type, std::string_view attribute,
                                            const Value& value) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::map<std::string, SemanticNode, std::less<>>& nodes() const { return nodes_; }
    const std::set<SemanticEdge>& edges() const { return edges_; }
    // Incremented by every successful mutation.
    std::uint64_t version() const { return version_; }

    // Re-checks every node and edge against the ontology; throws SchemaError.
    void validate() const;

    // One JSON object per line: nodes sorted by id, then edges sorted by
    // (verb, from, to). Byte-stable for equal graphs.
    std::string to_jsonl() const;
    static SemanticGraph from_jsonl(std::shared_ptr<const Ontology> ontology, std::string_view text);

    friend bool operator==(const SemanticGraph& a, const SemanticGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    struct ById {
        bool operator()(const SemanticNode* a, const SemanticNode* b) const { return a->id < b->id; }
    };
    using NodeSet = std::set<const SemanticNode*, ById>;
    using ValueIndex = std::map<Value, NodeSet>;

    void check_node(const SemanticNode& node) const;
    void index_node(const SemanticNode& node);
    void unindex_node(const SemanticNode& node);
    void rebuild_indexes();

    std::shared_ptr<const Ontology> ontology_;
    std::map<std::string, SemanticNode, std::less<>> nodes_;
    std::set<SemanticEdge> edges_;
    // entity type -> nodes sorted by id
    std::map<std::string, std::vector<const SemanticNode*>, std::less<>> by_type_;
    // entity type -> attribute -> value -> nodes
    std::map<std::string, std::map<std::string, ValueIndex, std::less<>>, std::less<>> by_value_;
    // to_id -> (verb, from_id)
    std::map<std::string, std::set<std::pair<std::string, std::string>>, std::less<>> incoming_;
    std::uint64_t version_ = 0;
};

}  // namespace kbrl::graph
