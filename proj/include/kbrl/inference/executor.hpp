#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kbrl/inference/matcher.hpp"

namespace kbrl::inference {

// Receiver of rendered command texts. validate() must reject anything
// dispatch() could not apply, so a DO program can be checked before any of
// its effects land.
class ActionHandler {
public:
    virtual ~ActionHandler() = default;
    virtual void validate(const std::string& command) const = 0;  // throws ExecutionError
    virtual void dispatch(const std::string& command) = 0;
};

using HandlerMap = std::map<std::string, ActionHandler*, std::less<>>;

struct ExecutionEffect {
    std::string ki_id;
    std::vector<std::string> issue_changes;                     // attribute names set or unset
    std::vector<std::pair<std::string, std::string>> graph_changes;  // (node id, attribute)
    std::vector<std::pair<std::string, std::string>> commands;       // (handler, text)
};

// Renders a handler template under a binding. Throws ExecutionError when a
// reference cannot be resolved.
std::string render_template(const ki::Statement& stmt, const Binding& binding, const graph::SemanticGraph& graph,
                            const Issue& issue);

// Applies the DO program all-or-nothing: every statement is evaluated and
// every command validated first; graph, issue and handlers are touched only
// when nothing failed.
ExecutionEffect execute(const ki::KnowledgeItem& ki, const Binding& binding, graph::SemanticGraph& graph,
                        Issue& issue, const HandlerMap& handlers);

}  // namespace kbrl::inference
