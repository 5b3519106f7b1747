#pragma once

#include <nlohmann/json.hpp>

#include "andor/plan_tree.hpp"

namespace andor {

inline constexpr const char* kSnapshotSchema = "andor.snapshot/1";

nlohmann::json node_to_json(const Node& node);
// Nodes in creation order, each with its children ids.
nlohmann::json tree_to_json(const PlanTree& tree);
// Entries listed top-first.
nlohmann::json stack_to_json(const ExecutionStack& stack);
nlohmann::json make_snapshot(const PlanTree& tree, const ExecutionStack& stack);

// Indented outline used in controller prompts, e.g.
// "- [0.1] (AND) Search for the item [VISITED]".
std::string render_tree_outline(const PlanTree& tree);
// Parent line plus sibling lines around node.
std::string render_local_context(const Node& node);

}  // namespace andor
