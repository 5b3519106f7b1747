#include "andor/replay.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "andor/plan_tree.hpp"

namespace andor {

using nlohmann::json;

namespace {

struct Violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MirrorNode {
  std::string id;
  MirrorNode* parent = nullptr;
  std::vector<MirrorNode*> children;
  int depth = 0;
  NodeType type = NodeType::Unknown;
  NodeStatus status = NodeStatus::Unvisited;
  bool ordered = true;
  int execution_count = 0;
  int retry_count = 0;
  int revision_count = 0;
};

struct Limits {
  int budget = 0;
  int max_steps = 0;
  int max_retry = 0;
  int max_revision = 0;
};

class Checker {
 public:
  void feed(const json& r) {
    const std::string ev = r.at("ev").get<std::string>();
    if (!started_) {
      if (ev != "run_start") throw Violation("first record must be run_start, got " + ev);
      start(r);
      return;
    }
    if (ended_) throw Violation("record after run_end");
    if (ev == "run_start") throw Violation("second run_start");
    if (ev == "node_added") {
      node_added(r);
    } else if (ev == "type") {
      type_set(r);
    } else if (ev == "status") {
      status(r);
    } else if (ev == "push") {
      push(r);
    } else if (ev == "pop") {
      pop(r);
    } else if (ev == "purge") {
      purge(r);
    } else if (ev == "requeue") {
      requeue(r);
    } else if (ev == "enter") {
      enter(r);
    } else if (ev == "attempt") {
      attempt(r);
    } else if (ev == "revised") {
      revised(r);
    } else if (ev == "describe") {
      node(r.at("node").get<std::string>());
    } else if (ev == "run_end") {
      run_end(r);
    }
  }

  bool ended() const { return ended_; }
  const std::string& outcome() const { return outcome_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  MirrorNode& node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Violation("unknown node " + id);
    return *it->second;
  }

  MirrorNode& add(std::string id, MirrorNode* parent) {
    auto n = std::make_unique<MirrorNode>();
    n->id = id;
    n->parent = parent;
    n->depth = parent ? parent->depth + 1 : 0;
    MirrorNode& ref = *n;
    nodes_.emplace(std::move(id), std::move(n));
    if (parent) parent->children.push_back(&ref);
    return ref;
  }

  void start(const json& r) {
    started_ = true;
    const json& config = r.at("config");
    limits_.budget = config.at("budget").get<int>();
    limits_.max_steps = config.at("max_steps").get<int>();
    limits_.max_retry = config.at("max_retry_count").get<int>();
    limits_.max_revision = config.at("max_revision_count").get<int>();
    const std::string root = r.at("root").get<std::string>();
    if (root.empty() || root.find('.') != std::string::npos) throw Violation("bad root id '" + root + "'");
    add(root, nullptr);
  }

  void node_added(const json& r) {
    const std::string id = r.at("node").get<std::string>();
    if (nodes_.count(id)) throw Violation("node " + id + " added twice");
    MirrorNode& parent = node(r.at("parent").get<std::string>());
    if (parent.type == NodeType::Action) throw Violation("child " + id + " added under ACTION " + parent.id);
    const std::string expected = parent.id + "." + std::to_string(parent.children.size() + 1);
    if (id != expected) throw Violation("node id " + id + " should be " + expected);
    if (r.at("depth").get<int>() != parent.depth + 1) throw Violation("depth of " + id + " inconsistent");
    const bool scored = r.contains("score");
    if (parent.type == NodeType::Or) {
      if (!scored) throw Violation("OR child " + id + " has no score");
      double s = r.at("score").get<double>();
      if (!(s > 0.0 && s <= 1.0)) throw Violation("OR child " + id + " score outside (0,1]");
    } else if (scored) {
      throw Violation("non-OR child " + id + " carries a score");
    }
    add(id, &parent);
  }

  void type_set(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    if (n.type != NodeType::Unknown) throw Violation("type of " + n.id + " set twice");
    auto type = parse_node_type(r.at("type").get<std::string>());
    if (!type || *type == NodeType::Unknown) throw Violation("bad type for " + n.id);
    if (*type == NodeType::Action && !n.children.empty()) throw Violation("ACTION " + n.id + " has children");
    check_or_sibling_success(n, "typed");
    n.type = *type;
    n.ordered = r.value("ordered", true);
  }

  void status(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    auto from = parse_node_status(r.at("from").get<std::string>());
    auto to = parse_node_status(r.at("to").get<std::string>());
    if (!from || !to) throw Violation("bad status names for " + n.id);
    if (*from != n.status) {
      throw Violation("status of " + n.id + " is " + std::string(to_string(n.status)) + ", log says " +
                      std::string(to_string(*from)));
    }
    if (*from == *to) throw Violation("no-op status change on " + n.id);
    const std::string jump =
        n.id + " " + std::string(to_string(*from)) + " -> " + std::string(to_string(*to));
    if (*from == NodeStatus::Pruned || *from == NodeStatus::Deleted) throw Violation("terminal status left: " + jump);
    if (*to == NodeStatus::Unvisited) throw Violation("status returned to UNVISITED: " + jump);
    if (*from == NodeStatus::Success) {
      if (n.revision_count >= limits_.max_revision) throw Violation("settled SUCCESS reopened: " + jump);
      if (*to == NodeStatus::Pruned || *to == NodeStatus::Deleted) throw Violation("closed node overwritten: " + jump);
    }
    if (*to == NodeStatus::Deleted && !deletion_justified(n)) {
      throw Violation("DELETED without a failed earlier sibling under an ordered AND: " + n.id);
    }
    n.status = *to;
    if (*to == NodeStatus::Pruned) record_causality(n);
  }

  // Some ancestor-or-self sits under an ordered AND after a pruned or failed sibling.
  bool deletion_justified(const MirrorNode& n) const {
    for (const MirrorNode* a = &n; a->parent != nullptr; a = a->parent) {
      const MirrorNode& p = *a->parent;
      if (p.type != NodeType::And || !p.ordered) continue;
      for (const MirrorNode* sibling : p.children) {
        if (sibling == a) break;
        if (sibling->status == NodeStatus::Pruned || sibling->status == NodeStatus::Fail) return true;
      }
    }
    return false;
  }

  void record_causality(const MirrorNode& n) {
    if (n.parent == nullptr || n.parent->type != NodeType::And || !n.parent->ordered) return;
    bool after = false;
    for (MirrorNode* sibling : n.parent->children) {
      if (after && sibling->status == NodeStatus::Unvisited) must_delete_.insert(sibling);
      if (sibling == &n) after = true;
    }
  }

  void check_causality() {
    for (const MirrorNode* n : must_delete_) {
      // A pruned ancestor closes the whole subtree, so PRUNED also counts.
      if (n->status != NodeStatus::Deleted && n->status != NodeStatus::Pruned) {
        throw Violation("ordered-AND causality: " + n->id + " follows a pruned sibling but is " +
                        std::string(to_string(n->status)));
      }
    }
    must_delete_.clear();
  }

  void check_hygiene() const {
    for (const auto& [n, state] : stack_) {
      if (n->status == NodeStatus::Pruned || n->status == NodeStatus::Deleted) {
        throw Violation("stack still holds " + std::string(to_string(n->status)) + " node " + n->id);
      }
    }
  }

  void check_or_exclusivity() const {
    for (const auto& [id, n] : nodes_) {
      if (n->type != NodeType::Or) continue;
      int open = 0;
      for (const MirrorNode* c : n->children) {
        if (c->status == NodeStatus::Visited || c->status == NodeStatus::Fail) ++open;
      }
      if (open > 1) throw Violation("OR node " + id + " has " + std::to_string(open) + " children in progress");
    }
  }

  void check_or_sibling_success(const MirrorNode& n, const char* what) const {
    if (n.parent == nullptr || n.parent->type != NodeType::Or) return;
    for (const MirrorNode* sibling : n.parent->children) {
      if (sibling != &n && sibling->status == NodeStatus::Success) {
        throw Violation("OR child " + n.id + " " + what + " after sibling " + sibling->id + " succeeded");
      }
    }
  }

  void push(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    auto state = parse_stack_state(r.at("state").get<std::string>());
    if (!state) throw Violation("bad stack state");
    if (n.status == NodeStatus::Pruned || n.status == NodeStatus::Deleted) {
      throw Violation("pushed " + std::string(to_string(n.status)) + " node " + n.id);
    }
    if (n.status == NodeStatus::Success && *state == StackState::Entering) {
      throw Violation("pushed SUCCESS node " + n.id + " for entry");
    }
    stack_.emplace_back(&n, *state);
  }

  void pop(const json& r) {
    check_causality();
    check_hygiene();
    check_or_exclusivity();
    const int iter = r.at("iter").get<int>();
    if (iter != iterations_ + 1) throw Violation("iteration counter jumped to " + std::to_string(iter));
    if (iter > limits_.budget) throw Violation("iteration " + std::to_string(iter) + " exceeds budget");
    iterations_ = iter;
    if (stack_.empty()) throw Violation("pop from empty stack");
    MirrorNode& n = node(r.at("node").get<std::string>());
    auto state = parse_stack_state(r.at("state").get<std::string>());
    if (stack_.back().first != &n || !state || stack_.back().second != *state) {
      throw Violation("popped " + n.id + " but the top of the stack is " + stack_.back().first->id);
    }
    stack_.pop_back();
  }

  void purge(const json& r) {
    for (const json& e : r.at("entries")) {
      MirrorNode* n = &node(e.at("node").get<std::string>());
      auto state = parse_stack_state(e.at("state").get<std::string>());
      auto it = std::find_if(stack_.begin(), stack_.end(),
                             [&](const auto& entry) { return entry.first == n && state && entry.second == *state; });
      if (it == stack_.end()) throw Violation("purged entry for " + n->id + " is not on the stack");
      stack_.erase(it);
    }
  }

  void requeue(const json& r) {
    MirrorNode* n = &node(r.at("node").get<std::string>());
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      if (it->first == n && it->second == StackState::Exiting) {
        it->second = StackState::Entering;
        return;
      }
    }
    throw Violation("requeue of " + n->id + " without an EXITING entry");
  }

  void enter(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    const int count = r.at("execution_count").get<int>();
    if (count != n.execution_count + 1) throw Violation("execution_count of " + n.id + " did not grow by 1");
    check_or_sibling_success(n, "entered");
    n.execution_count = count;
  }

  void attempt(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    if (n.type != NodeType::Action) throw Violation("attempt on non-ACTION " + n.id);
    const int a = r.at("attempt").get<int>();
    if (a != n.retry_count + 1) throw Violation("retry_count of " + n.id + " did not grow by 1");
    if (a > limits_.max_retry) throw Violation("retry_count of " + n.id + " exceeds the limit");
    n.retry_count = a;
    if (r.at("ok").get<bool>() && !r.value("note", false)) {
      if (++steps_ > limits_.max_steps) throw Violation("environment steps exceed the limit");
    }
  }

  void revised(const json& r) {
    MirrorNode& n = node(r.at("node").get<std::string>());
    const int count = r.at("revision_count").get<int>();
    if (count != n.revision_count + 1) throw Violation("revision_count of " + n.id + " did not grow by 1");
    if (count > limits_.max_revision) throw Violation("revision_count of " + n.id + " exceeds the limit");
    n.revision_count = count;
  }

  void run_end(const json& r) {
    check_causality();
    check_hygiene();
    if (r.at("iterations").get<int>() != iterations_) throw Violation("run_end iteration count disagrees");
    if (r.at("steps").get<int>() != steps_) throw Violation("run_end step count disagrees");
    outcome_ = r.at("outcome").get<std::string>();
    ended_ = true;
  }

  std::map<std::string, std::unique_ptr<MirrorNode>> nodes_;
  std::vector<std::pair<MirrorNode*, StackState>> stack_;
  std::set<const MirrorNode*> must_delete_;
  Limits limits_;
  bool started_ = false;
  bool ended_ = false;
  int iterations_ = 0;
  int steps_ = 0;
  std::string outcome_;
};

}  // namespace

ReplayReport replay_lines(const std::vector<std::string>& lines) {
  ReplayReport report;
  Checker checker;
  std::uint64_t expected = 1;
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      report.failing_seq = expected;
      report.message = "record " + std::to_string(expected) + " is not valid JSON: " + e.what();
      return report;
    }
    if (!record.is_object() || !record.contains("seq") || !record["seq"].is_number_unsigned() ||
        !record.contains("ev") || !record["ev"].is_string()) {
      report.failing_seq = expected;
      report.message = "record " + std::to_string(expected) + " lacks seq or ev";
      return report;
    }
    const auto seq = record["seq"].get<std::uint64_t>();
    if (seq != expected) {
      report.failing_seq = expected;
      report.message = "expected seq " + std::to_string(expected) + ", found " + std::to_string(seq);
      return report;
    }
    try {
      checker.feed(record);
    } catch (const Violation& v) {
      report.failing_seq = seq;
      report.message = v.what();
      return report;
    } catch (const json::exception& e) {
      report.failing_seq = seq;
      report.message = std::string("malformed record: ") + e.what();
      return report;
    }
    report.records = seq;
    ++expected;
  }
  report.nodes = checker.size();
  if (!checker.ended()) {
    report.failing_seq = expected;
    report.message = "log ends without run_end";
    return report;
  }
  report.outcome = checker.outcome();
  report.ok = true;
  report.message = "ok";
  return report;
}

ReplayReport replay_stream(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return replay_lines(lines);
}

ReplayReport replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return replay_stream(in);
}

}  // namespace andor
