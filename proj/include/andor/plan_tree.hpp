#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace andor {

enum class NodeType { Unknown, And, Or, Action };
enum class NodeStatus { Unvisited, Visited, Success, Fail, Pruned, Deleted };
enum class StackState { Entering, Exiting, Failed };

std::string_view to_string(NodeType type);
std::string_view to_string(NodeStatus status);
std::string_view to_string(StackState state);
std::optional<NodeType> parse_node_type(std::string_view text);
std::optional<NodeStatus> parse_node_status(std::string_view text);
std::optional<StackState> parse_stack_state(std::string_view text);

// SUCCESS, PRUNED and DELETED.
bool is_closed(NodeStatus status);
bool is_failed_or_pruned(NodeStatus status);

class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  std::string id;
  NodeType type = NodeType::Unknown;
  std::string description;
  NodeStatus status = NodeStatus::Unvisited;
  std::vector<Node*> children;
  Node* parent = nullptr;
  int depth = 0;
  int execution_count = 0;
  int retry_count = 0;
  int revision_count = 0;
  bool ordered = true;
  std::string url;
  std::string action;
  std::string reasoning;
  std::optional<double> score;
  std::vector<std::string> notes;
  std::map<std::string, std::string> others;

  bool is_root() const { return parent == nullptr; }
};

struct StackEntry {
  Node* node = nullptr;
  StackState state = StackState::Entering;

  bool operator==(const StackEntry&) const = default;
};

// Receives every structural mutation of a tree or stack. Used for the
// trajectory log and for live mirrors.
class PlanObserver {
 public:
  virtual ~PlanObserver() = default;
  virtual void on_node_added(const Node&) {}
  virtual void on_type_set(const Node&) {}
  virtual void on_status_changed(const Node&, NodeStatus /*from*/) {}
  virtual void on_description_changed(const Node&) {}
  virtual void on_push(const StackEntry&) {}
  virtual void on_pop(const StackEntry&) {}
  virtual void on_purge(const std::vector<StackEntry>& /*removed*/) {}
  virtual void on_requeue(const Node&) {}
};

class PlanTree {
 public:
  explicit PlanTree(std::string root_description, std::string root_id = "0");
  PlanTree(const PlanTree&) = delete;
  PlanTree& operator=(const PlanTree&) = delete;

  Node& root() { return *root_; }
  const Node& root() const { return *root_; }
  Node* find(std::string_view id);
  const Node* find(std::string_view id) const;
  // Throws StructureError for unknown ids.
  Node& at(std::string_view id);
  std::size_t size() const { return nodes_.size(); }
  // Nodes in creation order.
  std::vector<const Node*> nodes() const;

  void set_observer(PlanObserver* observer) { observer_ = observer; }
  PlanObserver* observer() const { return observer_; }

  // Child ids continue the parent's numbering: "P.k" with k = children + 1.
  Node& add_child(Node& parent, std::string description, std::optional<double> score = std::nullopt);
  // Types can only be assigned once, from Unknown.
  void set_type(Node& node, NodeType type, bool ordered = true, std::string action = {});
  void set_status(Node& node, NodeStatus status);
  void set_description(Node& node, std::string description);

  std::vector<Node*> recursively_prune(std::string_view id);
  std::vector<Node*> recursively_delete_children(std::span<Node* const> children);
  std::vector<Node*> recursively_mark_success(std::string_view id);

 private:
  void close_subtree(Node& node, NodeStatus status, std::vector<Node*>& changed);
  void mark_success_path(Node& node, std::vector<Node*>& changed);

  std::vector<std::unique_ptr<Node>> nodes_;
  std::unordered_map<std::string, Node*> index_;
  Node* root_ = nullptr;
  PlanObserver* observer_ = nullptr;
};

bool is_valid_and(std::span<Node* const> children);
bool is_successful_and(const Node& node);
bool is_valid_or(std::span<Node* const> children);
bool is_successful_or(const Node& node);
bool has_at_least_one_success(const Node& node);

// Highest score among children that are neither CLOSED nor FAIL; the first
// listed wins ties. Missing scores rank as 0. Returns nullptr when exhausted.
Node* find_next_promising(std::span<Node* const> children);

// Siblings strictly after node in parent's child list.
std::vector<Node*> get_remaining_excluding_node(const Node& node, const Node& parent);

// The execution stack; back of the vector is the top.
class ExecutionStack {
 public:
  void set_observer(PlanObserver* observer) { observer_ = observer; }

  void push(Node& node, StackState state);
  StackEntry pop();
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<StackEntry>& entries() const { return entries_; }
  // Removes every entry whose node is in removed; returns the removed entries.
  std::vector<StackEntry> purge(std::span<Node* const> removed);
  // Replaces the topmost EXITING entry of node with an ENTERING entry.
  bool requeue(const Node& node);

 private:
  std::vector<StackEntry> entries_;
  PlanObserver* observer_ = nullptr;
};

std::vector<StackEntry> purge_stack(std::span<Node* const> removed, std::vector<StackEntry> stack);

// Deletes the later siblings of node under an ordered AND parent and purges
// them from the stack. Returns the nodes that changed status.
std::vector<Node*> backtrack_failure(PlanTree& tree, Node& node, ExecutionStack& stack);

// Full-tree structural check; returns a description of the first problem.
std::optional<std::string> check_tree_shape(const PlanTree& tree);

}  // namespace andor
