#include "kbrl/graph/semantic_graph.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "kbrl/error.hpp"
#include "kbrl/graph/json_value.hpp"

namespace kbrl::graph {

SemanticGraph::SemanticGraph(std::shared_ptr<const Ontology> ontology) : ontology_(std::move(ontology)) {
    if (!ontology_) throw SchemaError("graph requires an ontology");
}

SemanticGraph::SemanticGraph(const SemanticGraph& other)
    : ontology_(other.ontology_), nodes_(other.nodes_), edges_(other.edges_), version_(other.version_) {
    rebuild_indexes();
}

SemanticGraph& SemanticGraph::operator=(const SemanticGraph& other) {
    if (this != &other) {
        ontology_ = other.ontology_;
        nodes_ = other.nodes_;
        edges_ = other.edges_;
        version_ = other.version_;
        rebuild_indexes();
    }
    return *this;
}

void SemanticGraph::check_node(const SemanticNode& node) const {
    if (node.id.empty()) throw SchemaError("node id must not be empty");
    if (!ontology_->has_entity(node.entity_type)) {
        throw SchemaError("node '" + node.id + "' has unknown type '" + node.entity_type + "'");
    }
    for (const auto& [name, value] : node.attributes) {
        Value conformed = ontology_->conform(node.entity_type, name, value);
        if (!(conformed == value)) {
            throw SchemaError("attribute '" + node.entity_type + "." + name + "' is not in canonical kind");
        }
    }
}

void SemanticGraph::index_node(const SemanticNode& node) {
    auto& list = by_type_[node.entity_type];
    auto pos = std::lower_bound(list.begin(), list.end(), &node, ById{});
    list.insert(pos, &node);
    auto& attrs = by_value_[node.entity_type];
    for (const auto& [name, value] : node.attributes) {
        auto it = attrs.find(name);
        if (it == attrs.end()) it = attrs.emplace(name, ValueIndex{}).first;
        it->second[value].insert(&node);
    }
}

void SemanticGraph::unindex_node(const SemanticNode& node) {
    auto& list = by_type_[node.entity_type];
    auto pos = std::lower_bound(list.begin(), list.end(), &node, ById{});
    if (pos != list.end() && *pos == &node) list.erase(pos);
    auto& attrs = by_value_[node.entity_type];
    for (const auto& [name, value] : node.attributes) {
        auto it = attrs.find(name);
        if (it == attrs.end()) continue;
        auto vit = it->second.find(value);
        if (vit == it->second.end()) continue;
        vit->second.erase(&node);
        if (vit->second.empty()) it->second.erase(vit);
    }
}

void SemanticGraph::rebuild_indexes() {
    by_type_.clear();
    by_value_.clear();
    incoming_.clear();
    for (const auto& [id, node] : nodes_) index_node(node);
    for (const auto& e : edges_) incoming_[e.to_id].emplace(e.verb, e.from_id);
}

std::string SemanticGraph::upsert_node(SemanticNode node) {
    for (auto& [name, value] : node.attributes) {
        if (ontology_->has_entity(node.entity_type)) value = ontology_->conform(node.entity_type, name, std::move(value));
    }
    check_node(node);
    auto it = nodes_.find(node.id);
    if (it == nodes_.end()) {
        std::string id = node.id;
        auto [ins, ok] = nodes_.emplace(id, std::move(node));
        index_node(ins->second);
        ++version_;
        return id;
    }
    SemanticNode& existing = it->second;
    if (existing.entity_type == node.entity_type && existing.attributes == node.attributes) return existing.id;
    if (existing.entity_type != node.entity_type) {
        for (const auto& e : edges_) {
            if (e.from_id == existing.id || e.to_id == existing.id) {
                throw SchemaError("node '" + existing.id + "' cannot change type while edges reference it");
            }
        }
    }
    unindex_node(existing);
    existing.entity_type = std::move(node.entity_type);
    existing.attributes = std::move(node.attributes);
    index_node(existing);
    ++version_;
    return existing.id;
}

bool SemanticGraph::remove_node(std::string_view id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return false;
    for (auto e = edges_.begin(); e != edges_.end();) {
        if (e->from_id == id || e->to_id == id) {
            auto in = incoming_.find(e->to_id);
            if (in != incoming_.end()) in->second.erase({e->verb, e->from_id});
            e = edges_.erase(e);
        } else {
            ++e;
        }
    }
    if (auto in = incoming_.find(id); in != incoming_.end()) incoming_.erase(in);
    unindex_node(it->second);
    nodes_.erase(it);
    ++version_;
    return true;
}

void SemanticGraph::set_attribute(std::string_view id, std::string_view attribute, Value value) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw SchemaError("no node '" + std::string(id) + "'");
    SemanticNode updated = it->second;
    updated.attributes[std::string(attribute)] = ontology_->conform(updated.entity_type, attribute, std::move(value));
    upsert_node(std::move(updated));
}

void SemanticGraph::add_edge(SemanticEdge edge) {
    const VerbDecl* verb = ontology_->verb(edge.verb);
    if (!verb) throw SchemaError("unknown verb '" + edge.verb + "'");
    const SemanticNode* from = node(edge.from_id);
    const SemanticNode* to = node(edge.to_id);
    if (!from || !to) {
        throw SchemaError("edge '" + edge.verb + "' has a dangling endpoint ('" + edge.from_id + "' -> '" + edge.to_id + "')");
    }
    if (from->entity_type != verb->from || to->entity_type != verb->to) {
        throw SchemaError("edge '" + edge.verb + "' expects " + verb->from + " -> " + verb->to + ", got " +
                          from->entity_type + " -> " + to->entity_type);
    }
    incoming_[edge.to_id].emplace(edge.verb, edge.from_id);
    if (edges_.insert(std::move(edge)).second) ++version_;
}

bool SemanticGraph::remove_edge(const SemanticEdge& edge) {
    if (edges_.erase(edge) == 0) return false;
    if (auto in = incoming_.find(edge.to_id); in != incoming_.end()) in->second.erase({edge.verb, edge.from_id});
    ++version_;
    return true;
}

bool SemanticGraph::has_edge(std::string_view verb, std::string_view from_id, std::string_view to_id) const {
    return edges_.count(SemanticEdge{std::string(verb), std::string(from_id), std::string(to_id)}) > 0;
}

std::vector<std::string> SemanticGraph::targets(std::string_view verb, std::string_view from_id) const {
    std::vector<std::string> out;
    SemanticEdge probe{std::string(verb), std::string(from_id), std::string()};
    for (auto it = edges_.lower_bound(probe); it != edges_.end() && it->verb == verb && it->from_id == from_id; ++it) {
        out.push_back(it->to_id);
    }
    return out;
}

std::vector<std::string> SemanticGraph::sources(std::string_view verb, std::string_view to_id) const {
    std::vector<std::string> out;
    auto in = incoming_.find(to_id);
    if (in == incoming_.end()) return out;
    auto it = in->second.lower_bound({std::string(verb), std::string()});
    for (; it != in->second.end() && it->first == verb; ++it) out.push_back(it->second);
    return out;
}

const SemanticNode* SemanticGraph::node(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const std::vector<const SemanticNode*>& SemanticGraph::nodes_of_type(std::string_view entity_type) const {
    static const std::vector<const SemanticNode*> none;
    if (!ontology_->has_entity(entity_type)) {
        throw SchemaError("unknown entity type '" + std::string(entity_type) + "'");
    }
    auto it = by_type_.find(entity_type);
    return it == by_type_.end() ? none : it->second;
}

std::vector<const SemanticNode*> SemanticGraph::lookup(std::string_view entity_type, std::string_view attribute,
                                                       const Value& value) const {
    std::vector<const SemanticNode*> out;
    auto t = by_value_.find(entity_type);
    if (t == by_value_.end()) return out;
    auto a = t->second.find(attribute);
    if (a == t->second.end()) return out;
    auto v = a->second.find(value);
    if (v == a->second.end()) return out;
    out.assign(v->second.begin(), v->second.end());
    return out;
}

std::vector<const SemanticNode*> SemanticGraph::query_nodes(std::string_view entity_type,
                                                            const std::vector<AttributePredicate>& predicates) const {
    const auto& candidates = nodes_of_type(entity_type);
    for (const auto& p : predicates) {
        if (!ontology_->attribute(entity_type, p.attribute)) {
            throw SchemaError("attribute '" + p.attribute + "' is not declared for type '" + std::string(entity_type) + "'");
        }
    }
    std::vector<const SemanticNode*> out;
    for (const SemanticNode* n : candidates) {
        bool ok = true;
        for (const auto& p : predicates) {
            const Value* v = n->find(p.attribute);
            if (!v || !compare_values(*v, p.op, p.value)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(n);
    }
    return out;
}

void SemanticGraph::validate() const {
    for (const auto& [id, node] : nodes_) {
        if (id != node.id) throw SchemaError("node key mismatch for '" + id + "'");
        check_node(node);
    }
    for (const auto& e : edges_) {
        const VerbDecl* verb = ontology_->verb(e.verb);
        if (!verb) throw SchemaError("unknown verb '" + e.verb + "'");
        const SemanticNode* from = node(e.from_id);
        const SemanticNode* to = node(e.to_id);
        if (!from || !to) throw SchemaError("dangling edge '" + e.verb + "'");
        if (from->entity_type != verb->from || to->entity_type != verb->to) {
            throw SchemaError("edge '" + e.verb + "' endpoint types do not match the verb");
        }
    }
}

std::string SemanticGraph::to_jsonl() const {
    std::ostringstream out;
    for (const auto& [id, node] : nodes_) {
        nlohmann::json attrs = nlohmann::json::object();
        for (const auto& [name, value] : node.attributes) attrs[name] = to_json(value);
        nlohmann::json rec = {{"kind", "node"}, {"id", node.id}, {"type", node.entity_type}, {"attributes", attrs}};
        out << rec.dump() << '\n';
    }
    for (const auto& e : edges_) {
        nlohmann::json rec = {{"kind", "edge"}, {"verb", e.verb}, {"from", e.from_id}, {"to", e.to_id}};
        out << rec.dump() << '\n';
    }
    return out.str();
}

SemanticGraph SemanticGraph::from_jsonl(std::shared_ptr<const Ontology> ontology, std::string_view text) {
    SemanticGraph g(std::move(ontology));
    std::vector<SemanticEdge> edges;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
            std::string kind = rec.at("kind").get<std::string>();
            if (kind == "node") {
                SemanticNode n;
                n.id = rec.at("id").get<std::string>();
                n.entity_type = rec.at("type").get<std::string>();
                for (const auto& [name, value] : rec.at("attributes").items()) n.attributes[name] = from_json(value);
                g.upsert_node(std::move(n));
            } else if (kind == "edge") {
                edges.push_back({rec.at("verb").get<std::string>(), rec.at("from").get<std::string>(),
                                 rec.at("to").get<std::string>()});
            } else {
                throw SyntaxError("unknown record kind '" + kind + "'", line_no, 1);
            }
        } catch (const nlohmann::json::exception& ex) {
            throw SyntaxError(std::string("bad graph record: ") + ex.what(), line_no, 1);
        }
        if (end == text.size()) break;
    }
    for (auto& e : edges) g.add_edge(std::move(e));
    return g;
}

}  // namespace kbrl::graph
