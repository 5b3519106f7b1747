#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "andor/controller.hpp"

namespace andor::testing {

// A planned decomposition the test controllers answer expansions from.
struct SpecNode {
  enum class Kind { Leaf, And, Or };
  Kind kind = Kind::Leaf;
  std::string action;  // Leaf only
  std::vector<SpecNode> children;

  std::size_t size() const;
};

// Leaf actions for the rule environment.
inline constexpr const char* kSucceedingClick = "click [10]";
inline constexpr const char* kFailingClick = "click [19]";

// Every tree with at most `levels` levels (a single leaf is one level) and
// fan-out 1..3, leaves either succeeding or failing clicks.
std::vector<SpecNode> enumerate_trees(int levels);

// Brute-force value: leaves by their click, AND = conjunction, OR = disjunction.
bool evaluate(const SpecNode& node);

// Random tree with at most max_nodes nodes and max_depth edges on any path.
SpecNode random_tree(std::mt19937_64& rng, int max_nodes, int max_depth);

// Resolves "R.a.b" against root_id "R" by child positions; nullptr when the
// id is outside the spec.
const SpecNode* resolve(const SpecNode& root, std::string_view root_id, std::string_view id);

std::string render_spec_expansion(const SpecNode& node, const std::string& id, const std::string& description);

// Deterministic controller for the oracle: expansions from the spec, empty
// repairs and global updates, strict completion checks.
class SpecController : public Controller {
 public:
  SpecController(const SpecNode& root, std::string root_id) : root_(root), root_id_(std::move(root_id)) {}
  std::string respond(const ControllerRequest& request) override;

 private:
  const SpecNode& root_;
  std::string root_id_;
};

// Seeded random policy over a spec tree. Answers every operator, sometimes
// with malformed text, invalid repairs, stray prunes or transport errors.
// Its answers depend only on the seed and the call sequence.
class PolicyController : public Controller {
 public:
  PolicyController(std::uint64_t seed, SpecNode root, std::string root_id);
  std::string respond(const ControllerRequest& request) override;

  const SpecNode& spec() const { return root_; }

 private:
  bool chance(double p);
  int uniform(int lo, int hi);
  std::string random_leaf_action();
  std::string revise(const ControllerRequest& request);
  std::string global_update(const ControllerRequest& request);

  std::mt19937_64 rng_;
  SpecNode root_;
  std::string root_id_;
  int element_counter_ = 0;
  int description_counter_ = 0;
};

}  // namespace andor::testing
