#include "andor/plan_tree.hpp"

#include <algorithm>
#include <array>

namespace andor {

namespace {

constexpr std::array<std::string_view, 4> kTypeNames{"UNKNOWN", "AND", "OR", "ACTION"};
constexpr std::array<std::string_view, 6> kStatusNames{"UNVISITED", "VISITED", "SUCCESS",
                                                       "FAIL",      "PRUNED",  "DELETED"};
constexpr std::array<std::string_view, 3> kStateNames{"ENTERING", "EXITING", "FAILED"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(NodeType type) { return kTypeNames.at(static_cast<std::size_t>(type)); }
std::string_view to_string(NodeStatus status) { return kStatusNames.at(static_cast<std::size_t>(status)); }
std::string_view to_string(StackState state) { return kStateNames.at(static_cast<std::size_t>(state)); }

std::optional<NodeType> parse_node_type(std::string_view text) { return lookup<NodeType>(kTypeNames, text); }
std::optional<NodeStatus> parse_node_status(std::string_view text) {
  return lookup<NodeStatus>(kStatusNames, text);
}
std::optional<StackState> parse_stack_state(std::string_view text) {
  return lookup<StackState>(kStateNames, text);
}

bool is_closed(NodeStatus status) {
  return status == NodeStatus::Success || status == NodeStatus::Pruned || status == NodeStatus::Deleted;
}

bool is_failed_or_pruned(NodeStatus status) {
  return status == NodeStatus::Fail || status == NodeStatus::Pruned;
}

PlanTree::PlanTree(std::string root_description, std::string root_id) {
  if (root_id.empty()) throw StructureError("root id must not be empty");
  auto root = std::make_unique<Node>();
  root->id = std::move(root_id);
  root->description = std::move(root_description);
  root_ = root.get();
  index_.emplace(root_->id, root_);
  nodes_.push_back(std::move(root));
}

Node* PlanTree::find(std::string_view id) {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : it->second;
}

const Node* PlanTree::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : it->second;
}

Node& PlanTree::at(std::string_view id) {
  Node* node = find(id);
  if (node == nullptr) throw StructureError("unknown node id '" + std::string(id) + "'");
  return *node;
}

std::vector<const Node*> PlanTree::nodes() const {
  std::vector<const Node*> out;
  out.reserve(nodes_.size());
  for (const auto& node : nodes_) out.push_back(node.get());
  return out;
}

Node& PlanTree::add_child(Node& parent, std::string description, std::optional<double> score) {
  if (parent.type == NodeType::Action) {
    throw StructureError("ACTION node " + parent.id + " cannot have children");
  }
  if (parent.type == NodeType::Or && (!score || !(*score > 0.0 && *score <= 1.0))) {
    throw StructureError("children of OR node " + parent.id + " need a score in (0, 1]");
  }
  if (parent.type == NodeType::And && score) {
    throw StructureError("children of AND node " + parent.id + " carry no score");
  }
  auto child = std::make_unique<Node>();
  child->id = parent.id + "." + std::to_string(parent.children.size() + 1);
  if (index_.count(child->id) != 0) throw StructureError("duplicate node id " + child->id);
  child->description = std::move(description);
  child->parent = &parent;
  child->depth = parent.depth + 1;
  child->score = score;
  Node* raw = child.get();
  parent.children.push_back(raw);
  index_.emplace(raw->id, raw);
  nodes_.push_back(std::move(child));
  if (observer_) observer_->on_node_added(*raw);
  return *raw;
}

void PlanTree::set_type(Node& node, NodeType type, bool ordered, std::string action) {
  if (node.type != NodeType::Unknown) throw StructureError("node " + node.id + " already typed");
  if (type == NodeType::Unknown) throw StructureError("cannot assign UNKNOWN type");
  if (type == NodeType::Action && !node.children.empty()) {
    throw StructureError("node " + node.id + " has children and cannot become ACTION");
  }
  node.type = type;
  node.ordered = type == NodeType::And ? ordered : true;
  node.action = type == NodeType::Action ? std::move(action) : std::string{};
  if (observer_) observer_->on_type_set(node);
}

void PlanTree::set_status(Node& node, NodeStatus status) {
  if (node.status == status) return;
  NodeStatus from = node.status;
  node.status = status;
  if (observer_) observer_->on_status_changed(node, from);
}

void PlanTree::set_description(Node& node, std::string description) {
  if (node.description == description) return;
  node.description = std::move(description);
  if (observer_) observer_->on_description_changed(node);
}

void PlanTree::close_subtree(Node& node, NodeStatus status, std::vector<Node*>& changed) {
  if (!is_closed(node.status)) {
    set_status(node, status);
    changed.push_back(&node);
  }
  for (Node* child : node.children) close_subtree(*child, status, changed);
}

std::vector<Node*> PlanTree::recursively_prune(std::string_view id) {
  std::vector<Node*> changed;
  close_subtree(at(id), NodeStatus::Pruned, changed);
  return changed;
}

std::vector<Node*> PlanTree::recursively_delete_children(std::span<Node* const> children) {
  std::vector<Node*> changed;
  for (Node* child : children) close_subtree(*child, NodeStatus::Deleted, changed);
  return changed;
}

void PlanTree::mark_success_path(Node& node, std::vector<Node*>& changed) {
  if (node.status != NodeStatus::Success && !is_closed(node.status)) {
    set_status(node, NodeStatus::Success);
    changed.push_back(&node);
  }
  // Only the in-progress chain is carried along; unexplored alternatives stay as they are.
  for (Node* child : node.children) {
    if (child->status == NodeStatus::Visited) mark_success_path(*child, changed);
  }
}

std::vector<Node*> PlanTree::recursively_mark_success(std::string_view id) {
  std::vector<Node*> changed;
  mark_success_path(at(id), changed);
  return changed;
}

bool is_valid_and(std::span<Node* const> children) {
  return std::any_of(children.begin(), children.end(), [](const Node* c) {
    return !is_closed(c->status) && c->status != NodeStatus::Fail;
  });
}

bool is_successful_and(const Node& node) {
  bool any = false;
  for (const Node* child : node.children) {
    if (child->status == NodeStatus::Deleted) continue;
    if (child->status != NodeStatus::Success) return false;
    any = true;
  }
  return any;
}

bool is_valid_or(std::span<Node* const> children) { return is_valid_and(children); }

bool is_successful_or(const Node& node) { return has_at_least_one_success(node); }

bool has_at_least_one_success(const Node& node) {
  return std::any_of(node.children.begin(), node.children.end(),
                     [](const Node* c) { return c->status == NodeStatus::Success; });
}

Node* find_next_promising(std::span<Node* const> children) {
  Node* best = nullptr;
  double best_score = -1.0;
  for (Node* child : children) {
    if (is_closed(child->status) || child->status == NodeStatus::Fail) continue;
    double score = child->score.value_or(0.0);
    if (best == nullptr || score > best_score) {
      best = child;
      best_score = score;
    }
  }
  return best;
}

std::vector<Node*> get_remaining_excluding_node(const Node& node, const Node& parent) {
  auto it = std::find(parent.children.begin(), parent.children.end(), &node);
  if (it == parent.children.end()) {
    throw StructureError("node " + node.id + " is not a child of " + parent.id);
  }
  return {std::next(it), parent.children.end()};
}

std::vector<Node*> backtrack_failure(PlanTree& tree, Node& node, ExecutionStack& stack) {
  Node* parent = node.parent;
  if (parent == nullptr) return {};
  if (parent->type != NodeType::And || !parent->ordered) return {};
  std::vector<Node*> later;
  for (Node* sibling : get_remaining_excluding_node(node, *parent)) {
    if (sibling->status != NodeStatus::Deleted) later.push_back(sibling);
  }
  auto changed = tree.recursively_delete_children(later);
  stack.purge(changed);
  return changed;
}

std::optional<std::string> check_tree_shape(const PlanTree& tree) {
  for (const Node* node : tree.nodes()) {
    if (tree.find(node->id) != node) return "index mismatch for " + node->id;
    if (node->parent == nullptr) {
      if (node != &tree.root()) return "non-root node " + node->id + " has no parent";
      if (node->depth != 0) return "root depth is " + std::to_string(node->depth);
    } else {
      const Node& parent = *node->parent;
      if (std::count(parent.children.begin(), parent.children.end(), node) != 1) {
        return "node " + node->id + " not listed exactly once under " + parent.id;
      }
      if (node->depth != parent.depth + 1) return "depth mismatch at " + node->id;
      if (node->id.rfind(parent.id + ".", 0) != 0) return "id " + node->id + " does not extend " + parent.id;
      if (parent.type == NodeType::Or) {
        if (!node->score || *node->score <= 0.0 || *node->score > 1.0) {
          return "OR child " + node->id + " lacks a score in (0,1]";
        }
      } else if (node->score) {
        return "non-OR child " + node->id + " carries a score";
      }
    }
    if (node->type == NodeType::Action && !node->children.empty()) {
      return "ACTION node " + node->id + " has children";
    }
    for (const Node* child : node->children) {
      if (child->parent != node) return "child " + child->id + " points at a different parent";
    }
  }
  return std::nullopt;
}

}  // namespace andor
