#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "andor/plan_tree.hpp"
#include "andor/snapshot.hpp"

using namespace andor;

namespace {

// Builds a parent with one child per status.
struct Family {
  PlanTree tree{"root"};
  std::vector<Node*> kids;

  Family(NodeType type, std::initializer_list<NodeStatus> statuses) {
    tree.set_type(tree.root(), type);
    for (NodeStatus s : statuses) {
      Node& c = tree.add_child(tree.root(), "c", type == NodeType::Or ? std::optional<double>(0.5) : std::nullopt);
      if (s != NodeStatus::Unvisited) tree.set_status(c, s);
      kids.push_back(&c);
    }
  }
};

std::vector<std::string> ids(const std::vector<Node*>& nodes) {
  std::vector<std::string> out;
  for (const Node* n : nodes) out.push_back(n->id);
  return out;
}

}  // namespace

TEST_CASE("child ids extend the parent id and depth grows by one") {
  PlanTree tree("task", "1");
  Node& a = tree.add_child(tree.root(), "a");
  Node& b = tree.add_child(tree.root(), "b");
  Node& a1 = tree.add_child(a, "a1");
  CHECK(a.id == "1.1");
  CHECK(b.id == "1.2");
  CHECK(a1.id == "1.1.1");
  CHECK(a1.depth == 2);
  CHECK(a1.parent == &a);
  CHECK(tree.size() == 4);
  CHECK(tree.find("1.1.1") == &a1);
  CHECK(tree.find("9") == nullptr);
  CHECK_THROWS_AS(tree.at("9"), StructureError);
  CHECK_FALSE(check_tree_shape(tree).has_value());
}

TEST_CASE("type is assigned once and ACTION nodes take no children") {
  PlanTree tree("task");
  Node& leaf = tree.add_child(tree.root(), "leaf");
  tree.set_type(leaf, NodeType::Action, true, "click [1]");
  CHECK(leaf.action == "click [1]");
  CHECK_THROWS_AS(tree.set_type(leaf, NodeType::And), StructureError);
  CHECK_THROWS_AS(tree.add_child(leaf, "x"), StructureError);
}

TEST_CASE("OR children need a score in (0,1], AND children none") {
  PlanTree tree("task");
  tree.set_type(tree.root(), NodeType::Or);
  CHECK_THROWS_AS(tree.add_child(tree.root(), "no score"), StructureError);
  CHECK_THROWS_AS(tree.add_child(tree.root(), "zero", 0.0), StructureError);
  CHECK_THROWS_AS(tree.add_child(tree.root(), "big", 1.5), StructureError);
  CHECK(tree.add_child(tree.root(), "ok", 1.0).score == 1.0);

  PlanTree and_tree("task");
  and_tree.set_type(and_tree.root(), NodeType::And);
  CHECK_THROWS_AS(and_tree.add_child(and_tree.root(), "scored", 0.5), StructureError);
}

TEST_CASE("is_valid_and") {
  CHECK(is_valid_and(Family(NodeType::And, {NodeStatus::Unvisited, NodeStatus::Success}).kids));
  CHECK_FALSE(is_valid_and(Family(NodeType::And, {NodeStatus::Success, NodeStatus::Pruned, NodeStatus::Deleted}).kids));
  CHECK_FALSE(is_valid_and(std::vector<Node*>{}));
  CHECK_FALSE(is_valid_and(Family(NodeType::And, {NodeStatus::Fail, NodeStatus::Success}).kids));
}

TEST_CASE("is_successful_and") {
  Family all(NodeType::And, {NodeStatus::Success, NodeStatus::Success});
  CHECK(is_successful_and(all.tree.root()));
  Family failed(NodeType::And, {NodeStatus::Success, NodeStatus::Fail});
  CHECK_FALSE(is_successful_and(failed.tree.root()));
  // Deleted children do not count; a pruned one routes through the completion check instead.
  Family deleted(NodeType::And, {NodeStatus::Success, NodeStatus::Deleted});
  CHECK(is_successful_and(deleted.tree.root()));
  Family pruned(NodeType::And, {NodeStatus::Success, NodeStatus::Pruned});
  CHECK_FALSE(is_successful_and(pruned.tree.root()));
  CHECK(has_at_least_one_success(pruned.tree.root()));
  Family none(NodeType::And, {});
  CHECK_FALSE(is_successful_and(none.tree.root()));
}

TEST_CASE("OR validity and success") {
  Family a(NodeType::Or, {NodeStatus::Fail, NodeStatus::Unvisited});
  CHECK(is_valid_or(a.kids));
  Family b(NodeType::Or, {NodeStatus::Fail, NodeStatus::Pruned});
  CHECK_FALSE(is_valid_or(b.kids));
  CHECK_FALSE(is_successful_or(b.tree.root()));
  Family c(NodeType::Or, {NodeStatus::Success, NodeStatus::Unvisited});
  CHECK(is_successful_or(c.tree.root()));
}

TEST_CASE("find_next_promising") {
  PlanTree tree("t");
  tree.set_type(tree.root(), NodeType::Or);
  Node& a = tree.add_child(tree.root(), "A", 1.0);
  Node& b = tree.add_child(tree.root(), "B", 0.95);
  CHECK(find_next_promising(tree.root().children) == &a);
  tree.set_status(a, NodeStatus::Fail);
  CHECK(find_next_promising(tree.root().children) == &b);
  tree.set_status(b, NodeStatus::Pruned);
  CHECK(find_next_promising(tree.root().children) == nullptr);
}

TEST_CASE("find_next_promising: ties go to the earliest child under every permutation") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 200; ++round) {
    PlanTree tree("t");
    tree.set_type(tree.root(), NodeType::Or);
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<double> scores;
    for (int i = 0; i < n; ++i) scores.push_back(0.25 * static_cast<double>(1 + rng() % 4));
    for (int i = 0; i < n; ++i) tree.add_child(tree.root(), "c" + std::to_string(i), scores[i]);
    std::vector<Node*> order = tree.root().children;
    std::shuffle(order.begin(), order.end(), rng);
    // Oracle: max score, then smallest position in the given list.
    Node* expected = nullptr;
    for (Node* c : order) {
      if (expected == nullptr || *c->score > *expected->score) expected = c;
    }
    CHECK(find_next_promising(order) == expected);
  }
}

TEST_CASE("get_remaining_excluding_node") {
  PlanTree tree("t");
  Node& a = tree.add_child(tree.root(), "a");
  Node& b = tree.add_child(tree.root(), "b");
  Node& c = tree.add_child(tree.root(), "c");
  CHECK(ids(get_remaining_excluding_node(a, tree.root())) == std::vector<std::string>{"0.2", "0.3"});
  CHECK(get_remaining_excluding_node(c, tree.root()).empty());
  CHECK(ids(get_remaining_excluding_node(b, tree.root())) == std::vector<std::string>{"0.3"});
}

TEST_CASE("recursively_prune closes open nodes and leaves SUCCESS alone") {
  PlanTree tree("t");
  Node& a = tree.add_child(tree.root(), "a");
  tree.add_child(a, "a1");
  tree.add_child(a, "a2");
  CHECK(tree.recursively_prune("0.1").size() == 3);
  for (const char* id : {"0.1", "0.1.1", "0.1.2"}) CHECK(tree.at(id).status == NodeStatus::Pruned);

  PlanTree t2("t");
  Node& x = t2.add_child(t2.root(), "x");
  Node& done = t2.add_child(x, "done");
  t2.add_child(x, "open");
  t2.set_status(done, NodeStatus::Success);
  auto changed = t2.recursively_prune("0.1");
  CHECK(ids(changed) == std::vector<std::string>{"0.1", "0.1.2"});
  CHECK(done.status == NodeStatus::Success);
}

TEST_CASE("recursively_delete_children covers descendants") {
  PlanTree tree("t");
  tree.add_child(tree.root(), "a");
  Node& b = tree.add_child(tree.root(), "b");
  Node& c = tree.add_child(tree.root(), "c");
  tree.add_child(c, "c1");
  tree.add_child(c, "c2");
  std::vector<Node*> targets{&b, &c};
  CHECK(tree.recursively_delete_children(targets).size() == 4);
  CHECK(tree.at("0.3.2").status == NodeStatus::Deleted);
  CHECK(tree.at("0.1").status == NodeStatus::Unvisited);
}

TEST_CASE("recursively_mark_success follows the chosen OR child only") {
  PlanTree tree("t");
  tree.set_type(tree.root(), NodeType::Or);
  Node& chosen = tree.add_child(tree.root(), "chosen", 1.0);
  Node& other = tree.add_child(tree.root(), "other", 0.9);
  tree.set_status(chosen, NodeStatus::Visited);
  tree.recursively_mark_success(tree.root().id);
  CHECK(tree.root().status == NodeStatus::Success);
  CHECK(chosen.status == NodeStatus::Success);
  CHECK(other.status == NodeStatus::Unvisited);
}

TEST_CASE("purge_stack") {
  PlanTree tree("t");
  Node& x = tree.add_child(tree.root(), "x");
  Node& y = tree.add_child(tree.root(), "y");
  Node& z = tree.add_child(tree.root(), "z");
  std::vector<StackEntry> stack{{&x, StackState::Entering}, {&y, StackState::Entering}, {&z, StackState::Exiting}};
  std::vector<Node*> remove_y{&y};
  CHECK(purge_stack(remove_y, stack) == std::vector<StackEntry>{stack[0], stack[2]});
  CHECK(purge_stack({}, stack) == stack);
  std::vector<Node*> all{&x, &y, &z};
  CHECK(purge_stack(all, stack).empty());
}

TEST_CASE("stack is LIFO and requeue swaps EXITING for ENTERING") {
  PlanTree tree("t");
  Node& x = tree.add_child(tree.root(), "x");
  ExecutionStack stack;
  stack.push(tree.root(), StackState::Exiting);
  stack.push(x, StackState::Entering);
  CHECK(stack.pop().node == &x);
  CHECK(stack.requeue(tree.root()));
  CHECK(stack.entries().back().state == StackState::Entering);
  CHECK_FALSE(stack.requeue(x));
  CHECK_THROWS(ExecutionStack().pop());
}

TEST_CASE("backtrack_failure") {
  SUBCASE("ordered AND deletes and purges later siblings") {
    PlanTree tree("t");
    tree.set_type(tree.root(), NodeType::And);
    Node& a = tree.add_child(tree.root(), "a");
    Node& b = tree.add_child(tree.root(), "b");
    Node& c = tree.add_child(tree.root(), "c");
    ExecutionStack stack;
    stack.push(tree.root(), StackState::Exiting);
    stack.push(c, StackState::Entering);
    stack.push(b, StackState::Entering);
    tree.set_status(a, NodeStatus::Fail);
    auto changed = backtrack_failure(tree, a, stack);
    CHECK(ids(changed) == std::vector<std::string>{"0.2", "0.3"});
    CHECK(b.status == NodeStatus::Deleted);
    CHECK(c.status == NodeStatus::Deleted);
    CHECK(stack.size() == 1);
  }
  SUBCASE("root has nothing to backtrack to") {
    PlanTree tree("t");
    ExecutionStack stack;
    CHECK(backtrack_failure(tree, tree.root(), stack).empty());
  }
  SUBCASE("OR parent keeps its other alternatives") {
    PlanTree tree("t");
    tree.set_type(tree.root(), NodeType::Or);
    Node& a = tree.add_child(tree.root(), "a", 1.0);
    Node& b = tree.add_child(tree.root(), "b", 0.9);
    ExecutionStack stack;
    CHECK(backtrack_failure(tree, a, stack).empty());
    CHECK(b.status == NodeStatus::Unvisited);
  }
  SUBCASE("unordered AND keeps its other children") {
    PlanTree tree("t");
    tree.set_type(tree.root(), NodeType::And, false);
    Node& a = tree.add_child(tree.root(), "a");
    tree.add_child(tree.root(), "b");
    ExecutionStack stack;
    CHECK(backtrack_failure(tree, a, stack).empty());
  }
}

TEST_CASE("snapshot lists nodes in creation order and the stack top first") {
  PlanTree tree("t", "1");
  tree.set_type(tree.root(), NodeType::Or);
  Node& a = tree.add_child(tree.root(), "A", 1.0);
  tree.add_child(tree.root(), "B", 0.95);
  ExecutionStack stack;
  stack.push(tree.root(), StackState::Exiting);
  stack.push(a, StackState::Entering);
  auto snap = make_snapshot(tree, stack);
  CHECK(snap["schema"] == kSnapshotSchema);
  REQUIRE(snap["nodes"].size() == 3);
  CHECK(snap["nodes"][0]["type"] == "OR");
  CHECK(snap["nodes"][1]["score"] == 1.0);
  CHECK(snap["nodes"][2]["score"] == 0.95);
  CHECK(snap["stack"][0]["node"] == "1.1");
  CHECK(snap["stack"][0]["state"] == "ENTERING");
  CHECK(render_tree_outline(tree).find("[1.2]") != std::string::npos);
}
