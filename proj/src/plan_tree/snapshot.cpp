#include <sstream>

#include "andor/snapshot.hpp"

namespace andor {

using nlohmann::json;

json node_to_json(const Node& node) {
  json children = json::array();
  for (const Node* child : node.children) children.push_back(child->id);
  json out = {
      {"id", node.id},
      {"parent", node.parent ? json(node.parent->id) : json(nullptr)},
      {"type", to_string(node.type)},
      {"status", to_string(node.status)},
      {"description", node.description},
      {"score", node.score ? json(*node.score) : json(nullptr)},
      {"action", node.action},
      {"url", node.url},
      {"reasoning", node.reasoning},
      {"children", std::move(children)},
      {"depth", node.depth},
      {"ordered", node.ordered},
      {"execution_count", node.execution_count},
      {"retry_count", node.retry_count},
      {"revision_count", node.revision_count},
      {"notes", node.notes},
  };
  if (!node.others.empty()) out["others"] = node.others;
  return out;
}

json tree_to_json(const PlanTree& tree) {
  json nodes = json::array();
  for (const Node* node : tree.nodes()) nodes.push_back(node_to_json(*node));
  return {{"root", tree.root().id}, {"nodes", std::move(nodes)}};
}

json stack_to_json(const ExecutionStack& stack) {
  json out = json::array();
  const auto& entries = stack.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    out.push_back({{"node", it->node->id}, {"state", to_string(it->state)}});
  }
  return out;
}

json make_snapshot(const PlanTree& tree, const ExecutionStack& stack) {
  json tree_json = tree_to_json(tree);
  return {{"schema", kSnapshotSchema},
          {"root", std::move(tree_json["root"])},
          {"nodes", std::move(tree_json["nodes"])},
          {"stack", stack_to_json(stack)}};
}

namespace {

std::string type_label(const Node& node) {
  switch (node.type) {
    case NodeType::And: return node.ordered ? "AND" : "AND, unordered";
    case NodeType::Or: return "OR";
    case NodeType::Action: return "Atomic";
    case NodeType::Unknown: break;
  }
  return "UNKNOWN";
}

void node_line(std::ostringstream& out, const Node& node, int indent) {
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ') << "- [" << node.id << "] ("
      << type_label(node) << ") " << node.description;
  if (node.type == NodeType::Action && !node.action.empty()) out << " {" << node.action << "}";
  if (node.score) {
    std::ostringstream score;
    score << *node.score;
    out << " (score: " << score.str() << ")";
  }
  out << " [" << to_string(node.status) << "]\n";
}

void outline(std::ostringstream& out, const Node& node, int indent) {
  node_line(out, node, indent);
  for (const Node* child : node.children) outline(out, *child, indent + 1);
}

}  // namespace

std::string render_tree_outline(const PlanTree& tree) {
  std::ostringstream out;
  outline(out, tree.root(), 0);
  return out.str();
}

std::string render_local_context(const Node& node) {
  std::ostringstream out;
  if (node.parent == nullptr) {
    out << "Parent: none (root)\n";
    return out.str();
  }
  out << "Parent:\n";
  node_line(out, *node.parent, 1);
  out << "Siblings:\n";
  for (const Node* sibling : node.parent->children) {
    if (sibling == &node) continue;
    node_line(out, *sibling, 1);
  }
  return out.str();
}

}  // namespace andor
