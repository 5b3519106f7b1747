#include <array>

#include "andor/controller.hpp"

namespace andor {

namespace {

constexpr std::array<std::string_view, 9> kOperatorNames{"expand",      "revise_and",          "revise_or",
                                                         "global_update", "check_completion", "full_update",
                                                         "extract_constraints", "memory_update", "final_response"};

template <typename T, typename Size>
void drop_oldest(std::vector<T>& entries, std::size_t budget, Size size_of) {
  std::size_t total = 0;
  for (const T& e : entries) total += size_of(e);
  std::size_t drop = 0;
  while (drop < entries.size() && total > budget) total -= size_of(entries[drop++]);
  entries.erase(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(drop));
}

}  // namespace

std::string_view to_string(Operator op) { return kOperatorNames.at(static_cast<std::size_t>(op)); }

std::optional<Operator> parse_operator(std::string_view text) {
  for (std::size_t i = 0; i < kOperatorNames.size(); ++i) {
    if (kOperatorNames[i] == text) return static_cast<Operator>(i);
  }
  return std::nullopt;
}

NodeView make_node_view(const Node& node) {
  NodeView view;
  view.id = node.id;
  view.type = node.type;
  view.status = node.status;
  view.description = node.description;
  view.action = node.action;
  view.depth = node.depth;
  view.execution_count = node.execution_count;
  view.revision_count = node.revision_count;
  view.is_root = node.is_root();
  for (const Node* child : node.children) {
    view.children.push_back({child->id, child->type, child->status, child->description, child->score, child->action});
  }
  return view;
}

void truncate_oldest_first(std::vector<std::string>& entries, std::size_t budget) {
  drop_oldest(entries, budget, [](const std::string& s) { return s.size() + 1; });
}

void truncate_oldest_first(std::vector<InteractionRecord>& entries, std::size_t budget) {
  drop_oldest(entries, budget, [](const InteractionRecord& r) { return r.summary.size() + r.action.size() + 2; });
}

}  // namespace andor
