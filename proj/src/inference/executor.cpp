#include "kbrl/inference/executor.hpp"

#include "kbrl/error.hpp"

namespace kbrl::inference {

std::string render_template(const ki::Statement& stmt, const Binding& binding, const graph::SemanticGraph& graph,
                            const Issue& issue) {
    std::string out;
    for (const auto& part : stmt.parts) {
        if (!part.is_ref) {
            out += part.text;
            continue;
        }
        const Value* v = nullptr;
        if (part.text == "issue") {
            v = issue.find(part.attr);
        } else {
            auto it = binding.find(part.text);
            if (it != binding.end()) {
                if (part.attr.empty()) {
                    v = &it->second;
                } else if (it->second.kind() == ValueKind::String) {
                    const graph::SemanticNode* node = graph.node(it->second.as_string());
                    if (node) v = node->find(part.attr);
                }
            }
        }
        if (!v) {
            std::string ref = part.attr.empty() ? part.text : part.text + "." + part.attr;
            throw ExecutionError("cannot interpolate ${" + ref + "} in handler " + stmt.target);
        }
        out += v->display();
    }
    return out;
}

ExecutionEffect execute(const ki::KnowledgeItem& ki, const Binding& binding, graph::SemanticGraph& graph,
                        Issue& issue, const HandlerMap& handlers) {
    ExecutionEffect effect;
    effect.ki_id = ki.id();

    // Stage everything against copies; later statements see earlier ones.
    Issue staged = issue;
    struct GraphWrite {
        std::string node;
        std::string attr;
        Value value;
    };
    std::vector<GraphWrite> writes;
    std::vector<std::pair<ActionHandler*, std::string>> sends;

    auto staged_graph_value = [&](const ki::Operand& op) -> std::optional<Value> {
        if (op.kind == ki::Operand::Kind::NodeAttr) {
            auto it = binding.find(op.name);
            if (it != binding.end()) {
                for (auto w = writes.rbegin(); w != writes.rend(); ++w) {
                    if (w->node == it->second.as_string() && w->attr == op.attr) return w->value;
                }
            }
        }
        return evaluate(op, binding, graph, staged);
    };

    for (const auto& s : ki.actions) {
        switch (s.kind) {
            case ki::Statement::Kind::IssueSet: {
                auto v = staged_graph_value(s.value);
                if (!v) throw ExecutionError(ki.id() + ": value for issue." + s.target + " is undefined");
                staged.attributes[s.target] = std::move(*v);
                effect.issue_changes.push_back(s.target);
                break;
            }
            case ki::Statement::Kind::IssueUnset:
                staged.attributes.erase(s.target);
                effect.issue_changes.push_back(s.target);
                break;
            case ki::Statement::Kind::GraphSet: {
                auto it = binding.find(s.target);
                if (it == binding.end()) throw ExecutionError(ki.id() + ": $" + s.target + " is unbound");
                const std::string& id = it->second.as_string();
                const graph::SemanticNode* node = graph.node(id);
                if (!node) throw ExecutionError(ki.id() + ": node '" + id + "' no longer exists");
                auto v = staged_graph_value(s.value);
                if (!v) throw ExecutionError(ki.id() + ": value for $" + s.target + "." + s.attr + " is undefined");
                Value conformed;
                try {
                    conformed = graph.ontology().conform(node->entity_type, s.attr, std::move(*v));
                } catch (const SchemaError& ex) {
                    throw ExecutionError(ki.id() + ": " + ex.what());
                }
                writes.push_back({id, s.attr, std::move(conformed)});
                effect.graph_changes.emplace_back(id, s.attr);
                break;
            }
            case ki::Statement::Kind::Handler: {
                auto h = handlers.find(s.target);
                if (h == handlers.end() || !h->second) {
                    throw ExecutionError(ki.id() + ": handler '" + s.target + "' is not configured");
                }
                std::string text = render_template(s, binding, graph, staged);
                h->second->validate(text);
                sends.emplace_back(h->second, text);
                effect.commands.emplace_back(s.target, std::move(text));
                break;
            }
        }
    }

    for (auto& w : writes) graph.set_attribute(w.node, w.attr, std::move(w.value));
    issue.attributes = std::move(staged.attributes);
    for (const auto& [handler, text] : sends) handler->dispatch(text);
    return effect;
}

}  // namespace kbrl::inference
