#include <algorithm>

#include "andor/plan_tree.hpp"

namespace andor {

void ExecutionStack::push(Node& node, StackState state) {
  entries_.push_back({&node, state});
  if (observer_) observer_->on_push(entries_.back());
}

StackEntry ExecutionStack::pop() {
  if (entries_.empty()) throw StructureError("pop from empty stack");
  StackEntry entry = entries_.back();
  entries_.pop_back();
  if (observer_) observer_->on_pop(entry);
  return entry;
}

std::vector<StackEntry> ExecutionStack::purge(std::span<Node* const> removed) {
  std::vector<StackEntry> dropped;
  if (removed.empty()) return dropped;
  std::vector<StackEntry> kept;
  kept.reserve(entries_.size());
  for (const StackEntry& entry : entries_) {
    if (std::find(removed.begin(), removed.end(), entry.node) != removed.end()) {
      dropped.push_back(entry);
    } else {
      kept.push_back(entry);
    }
  }
  entries_ = std::move(kept);
  if (!dropped.empty() && observer_) observer_->on_purge(dropped);
  return dropped;
}

bool ExecutionStack::requeue(const Node& node) {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->node == &node && it->state == StackState::Exiting) {
      it->state = StackState::Entering;
      if (observer_) observer_->on_requeue(node);
      return true;
    }
  }
  return false;
}

std::vector<StackEntry> purge_stack(std::span<Node* const> removed, std::vector<StackEntry> stack) {
  std::erase_if(stack, [&](const StackEntry& entry) {
    return std::find(removed.begin(), removed.end(), entry.node) != removed.end();
  });
  return stack;
}

}  // namespace andor
