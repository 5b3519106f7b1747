#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "andor/engine.hpp"
#include "andor/replay.hpp"
#include "andor/scripted_controller.hpp"
#include "harness.hpp"
#include "rule_environment.hpp"

using namespace andor;
using nlohmann::json;

namespace {

constexpr const char* kHome = "https://www.allrecipes.com/";
constexpr const char* kResults = "https://www.allrecipes.com/search?q=brownie";

struct ScriptBuilder {
  Script script;

  ScriptBuilder& add(Operator op, const std::string& node, const std::string& response,
                     std::optional<int> visit = std::nullopt) {
    script.entries.push_back({op, node, visit, std::nullopt, response});
    return *this;
  }
  ScriptBuilder& and_node(const std::string& id, std::vector<std::string> children, bool ordered = true) {
    ExpansionDirective d{id, "goal " + id, ExpansionKind::And, ordered, {}, {}, {}};
    for (auto& c : children) d.children.push_back({std::move(c), std::nullopt});
    return add(Operator::Expand, id, render_expansion(d));
  }
  ScriptBuilder& or_node(const std::string& id, std::vector<ScoredItem> children) {
    return add(Operator::Expand, id, render_expansion({id, "goal " + id, ExpansionKind::Or, true, {}, std::move(children), {}}));
  }
  ScriptBuilder& atomic(const std::string& id, const std::string& action) {
    return add(Operator::Expand, id, render_expansion({id, "do " + id, ExpansionKind::Atomic, true, action, {}, {}}));
  }
};

// Counts requests per operator on top of a scripted controller.
class CountingController : public Controller {
 public:
  explicit CountingController(Script script) : inner_(std::move(script)) {}
  std::string respond(const ControllerRequest& request) override {
    calls.push_back({request.op, request.node.id});
    return inner_.respond(request);
  }
  int count(Operator op, const std::string& node = "*") const {
    return static_cast<int>(std::count_if(calls.begin(), calls.end(), [&](const auto& c) {
      return c.first == op && (node == "*" || c.second == node);
    }));
  }
  std::vector<std::pair<Operator, std::string>> calls;

 private:
  ScriptedController inner_;
};

struct Rig {
  EngineConfig config;
  CountingController controller;
  SimulatedSite site;
  CandidateMemory memory;
  EventLog log;
  Engine engine;

  explicit Rig(const ScriptBuilder& b, EngineConfig cfg = {}, std::optional<SiteFixture> fixture = std::nullopt)
      : config(cfg),
        controller(b.script),
        site(fixture ? *fixture : load_site_fixture(testing::source_path("scenarios/recipe_site.json"))),
        engine(config, controller, site, memory, log) {}

  std::vector<json> events(const std::string& name) const { return testing::events_named(log.text(), name); }

  // Stack as "id:STATE" strings, top first.
  std::vector<std::string> stack() {
    std::vector<std::string> out;
    const auto& entries = engine.stack().entries();
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      out.push_back(it->node->id + ":" + std::string(to_string(it->state)));
    }
    return out;
  }

  void run_to_end() {
    while (engine.step()) {
    }
  }
};

NodeStatus status_of(Rig& rig, const std::string& id) { return rig.engine.tree().at(id).status; }

void check_replays(const Rig& rig) {
  ReplayReport report = replay_lines(testing::split_records(rig.log.text()));
  CHECK_MESSAGE(report.ok, report.message);
}

}  // namespace

TEST_CASE("config validation and JSON overrides") {
  EngineConfig c = EngineConfig::from_json({{"budget", 5}, {"completion_check_root_only", false}});
  CHECK(c.budget == 5);
  CHECK_FALSE(c.completion_check_root_only);
  CHECK(c.max_steps == 60);
  CHECK(EngineConfig::from_json(c.to_json()).budget == 5);
  CHECK_THROWS_AS(EngineConfig::from_json({{"budgett", 5}}), std::invalid_argument);
  CHECK_THROWS_AS(EngineConfig::from_json({{"budget", -1}}), std::invalid_argument);
  CHECK_THROWS_AS(EngineConfig::from_json({{"max_retry_count", 0}}), std::invalid_argument);
  CHECK_NOTHROW(EngineConfig::from_json({{"budget", 0}}));
}

TEST_CASE("budget 0 ends the run at once") {
  ScriptBuilder b;
  EngineConfig cfg;
  cfg.budget = 0;
  Rig rig(b, cfg);
  RunResult r = rig.engine.run("task");
  CHECK(r.outcome == Outcome::BudgetExhausted);
  CHECK(r.trajectory.empty());
  CHECK(r.iterations == 0);
  check_replays(rig);
}

TEST_CASE("entering a fresh root: AND with three ordered children, first child on top") {
  ScriptBuilder b;
  b.and_node("0", {"type query", "select recipe", "note recipe"});
  Rig rig(b);
  rig.engine.start("find a recipe");
  CHECK(rig.stack() == std::vector<std::string>{"0:ENTERING"});
  REQUIRE(rig.engine.step());
  CHECK(rig.engine.tree().root().type == NodeType::And);
  CHECK(rig.stack() == std::vector<std::string>{"0.1:ENTERING", "0.2:ENTERING", "0.3:ENTERING", "0:EXITING"});
  CHECK(rig.engine.tree().root().execution_count == 1);
}

TEST_CASE("an ACTION node is not expanded again on its second visit") {
  ScriptBuilder b;
  b.atomic("0", "click [9999]");
  EngineConfig cfg;
  Rig rig(b, cfg);
  rig.engine.start("t");
  REQUIRE(rig.engine.step());
  Node& root = rig.engine.tree().root();
  CHECK(root.type == NodeType::Action);
  // Send it round again by hand.
  rig.engine.tree().set_status(root, NodeStatus::Visited);
  root.retry_count = 0;
  rig.engine.process_node_entering(root);
  CHECK(rig.controller.count(Operator::Expand, "0") == 1);
  CHECK(root.execution_count == 2);
  CHECK(rig.events("attempt").size() == 4);
}

TEST_CASE("AND processing pushes open children in reverse order") {
  ScriptBuilder b;
  b.and_node("0", {"a", "b", "c"});
  Rig rig(b);
  rig.engine.start("t");
  rig.engine.step();
  PlanTree& tree = rig.engine.tree();
  while (!rig.engine.stack().empty()) rig.engine.stack().pop();
  rig.engine.process_and_node(tree.root());
  CHECK(rig.stack() == std::vector<std::string>{"0.1:ENTERING", "0.2:ENTERING", "0.3:ENTERING", "0:EXITING"});

  SUBCASE("all children SUCCESS") {
    while (!rig.engine.stack().empty()) rig.engine.stack().pop();
    for (Node* c : tree.root().children) tree.set_status(*c, NodeStatus::Success);
    rig.engine.process_and_node(tree.root());
    CHECK(tree.root().status == NodeStatus::Success);
    CHECK(rig.stack() == std::vector<std::string>{"0:EXITING"});
  }
  SUBCASE("no valid children") {
    while (!rig.engine.stack().empty()) rig.engine.stack().pop();
    tree.set_status(*tree.root().children[0], NodeStatus::Success);
    tree.set_status(*tree.root().children[1], NodeStatus::Pruned);
    tree.set_status(*tree.root().children[2], NodeStatus::Deleted);
    rig.engine.process_and_node(tree.root());
    CHECK(tree.root().status == NodeStatus::Fail);
  }
}

TEST_CASE("OR processing pushes only the best child") {
  ScriptBuilder b;
  b.or_node("0", {{"A", 1.0}, {"B", 0.95}});
  Rig rig(b);
  rig.engine.start("t");
  rig.engine.step();
  CHECK(rig.stack() == std::vector<std::string>{"0.1:ENTERING", "0:EXITING"});
  PlanTree& tree = rig.engine.tree();

  SUBCASE("a successful child makes the node SUCCESS") {
    while (!rig.engine.stack().empty()) rig.engine.stack().pop();
    tree.set_status(*tree.root().children[0], NodeStatus::Success);
    rig.engine.process_or_node(tree.root());
    CHECK(tree.root().status == NodeStatus::Success);
  }
  SUBCASE("all children failed") {
    while (!rig.engine.stack().empty()) rig.engine.stack().pop();
    for (Node* c : tree.root().children) tree.set_status(*c, NodeStatus::Fail);
    rig.engine.process_or_node(tree.root());
    CHECK(tree.root().status == NodeStatus::Fail);
  }
}

TEST_CASE("typing a query succeeds, counts a step and runs the full update") {
  ScriptBuilder b;
  b.atomic("0", "type [401] [Diwali ethnic wear trends 2024] [1]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.steps == 1);
  CHECK(rig.site.get_url() == "https://www.allrecipes.com/search?q=other");
  CHECK(rig.events("full_update").size() == 1);
  CHECK(rig.controller.count(Operator::FullUpdate) == 1);
  CHECK(rig.controller.count(Operator::GlobalUpdate) == 1);
  CHECK(r.outcome == Outcome::Success);
  REQUIRE(r.trajectory.size() == 1);
  CHECK(r.trajectory[0].action == "type [401] [Diwali ethnic wear trends 2024] [1]");
  check_replays(rig);
}

TEST_CASE("a note is recorded without a step or a full update") {
  ScriptBuilder b;
  b.atomic("0", "note [Found matching pink footwear options: A, B]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(r.steps == 0);
  CHECK(rig.engine.notes() == std::vector<std::string>{"Found matching pink footwear options: A, B"});
  CHECK(rig.events("full_update").empty());
  CHECK(r.final_response.find("pink footwear") != std::string::npos);
}

TEST_CASE("clicking a missing element fails after MAX_RETRY_COUNT attempts") {
  ScriptBuilder b;
  b.atomic("0", "click [9999]");
  Rig rig(b);
  rig.engine.start("t");
  rig.engine.step();
  Node& root = rig.engine.tree().root();
  CHECK(root.retry_count == 2);
  CHECK(root.status == NodeStatus::Fail);
  auto attempts = rig.events("attempt");
  REQUIRE(attempts.size() == 2);
  CHECK_FALSE(attempts[0]["ok"].get<bool>());
  CHECK(attempts[1]["attempt"] == 2);
  rig.run_to_end();
  RunResult r = rig.engine.finish();
  CHECK(r.outcome == Outcome::Fail);
}

TEST_CASE("root completion check decides the AND outcome") {
  SUBCASE("COMPLETE") {
    ScriptBuilder b;
    b.and_node("0", {"a", "b", "c"});
    for (const char* id : {"0.1", "0.2", "0.3"}) b.atomic(id, std::string("note [") + id + "]");
    b.add(Operator::CheckCompletion, "0", render_completion({true, "0", "all done"}));
    Rig rig(b);
    RunResult r = rig.engine.run("t");
    CHECK(r.outcome == Outcome::Success);
    CHECK(rig.events("completion").size() == 1);
    check_replays(rig);
  }
  SUBCASE("INCOMPLETE pushes FAILED and engages repair") {
    ScriptBuilder b;
    b.and_node("0", {"a", "b", "c"});
    for (const char* id : {"0.1", "0.2", "0.3"}) b.atomic(id, std::string("note [") + id + "]");
    b.add(Operator::CheckCompletion, "0", render_completion({false, "0", "missing detail"}));
    Rig rig(b);
    rig.engine.start("t");
    for (int i = 0; i < 8; ++i) rig.engine.step();
    CHECK(rig.stack() == std::vector<std::string>{"0:FAILED"});
    rig.run_to_end();
    rig.engine.finish();
    CHECK(rig.controller.count(Operator::ReviseAnd, "0") >= 1);
    CHECK(status_of(rig, "0") == NodeStatus::Pruned);
    check_replays(rig);
  }
}

TEST_CASE("non-root ANDs skip the completion check under root-only gating") {
  ScriptBuilder b;
  b.and_node("0", {"inner"});
  b.and_node("0.1", {"x"});
  b.atomic("0.1.1", "note [x]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(rig.controller.count(Operator::CheckCompletion, "0.1") == 0);
  CHECK(rig.controller.count(Operator::CheckCompletion, "0") == 1);

  EngineConfig every;
  every.completion_check_root_only = false;
  Rig rig2(b, every);
  rig2.engine.run("t");
  CHECK(rig2.controller.count(Operator::CheckCompletion, "0.1") == 1);
}

TEST_CASE("a failed action under an ordered AND is pruned and its later siblings deleted") {
  ScriptBuilder b;
  b.and_node("0", {"a", "b", "c"});
  b.atomic("0.1", "click [9999]");
  Rig rig(b);
  rig.engine.start("t");
  rig.engine.step();  // root
  rig.engine.step();  // 0.1 fails
  rig.engine.step();  // 0.1 exits as FAIL
  CHECK(rig.stack() == std::vector<std::string>{"0.1:FAILED", "0.2:ENTERING", "0.3:ENTERING", "0:EXITING"});
  rig.engine.step();
  CHECK(status_of(rig, "0.1") == NodeStatus::Pruned);
  CHECK(status_of(rig, "0.2") == NodeStatus::Deleted);
  CHECK(status_of(rig, "0.3") == NodeStatus::Deleted);
  CHECK(rig.stack() == std::vector<std::string>{"0:EXITING"});
}

TEST_CASE("a failed OR with an untried alternative tries it next") {
  ScriptBuilder b;
  b.or_node("0", {{"A", 1.0}, {"B", 0.95}});
  b.atomic("0.1", "click [9999]");
  b.atomic("0.2", "type [401] [brownie] [1]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(status_of(rig, "0.1") == NodeStatus::Pruned);
  CHECK(status_of(rig, "0.2") == NodeStatus::Success);
  // The OR went round FAILED -> ENTERING before picking 0.2.
  auto pops = rig.events("pop");
  std::vector<std::string> seq;
  for (const auto& p : pops) seq.push_back(p["node"].get<std::string>() + ":" + p["state"].get<std::string>());
  CHECK(seq == std::vector<std::string>{"0:ENTERING", "0.1:ENTERING", "0.1:EXITING", "0.1:FAILED", "0:EXITING", "0:FAILED",
                                        "0:ENTERING", "0.2:ENTERING", "0.2:EXITING", "0:EXITING"});
  check_replays(rig);
}

TEST_CASE("a failed AND at the revision limit is pruned with its subtree") {
  ScriptBuilder b;
  b.and_node("0", {"outer"});
  b.and_node("0.1", {"x", "y"});
  b.atomic("0.1.1", "click [9999]");
  b.add(Operator::ReviseAnd, "0.1", "ADD [0.1] AND : <<1. z>>");
  b.atomic("0.1.3", "click [9998]");
  EngineConfig cfg;
  cfg.max_revision_count = 1;
  Rig rig(b, cfg);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Fail);
  CHECK(rig.engine.tree().at("0.1").revision_count == 1);
  CHECK(rig.controller.count(Operator::ReviseAnd, "0.1") == 1);
  CHECK(status_of(rig, "0.1.2") == NodeStatus::Deleted);
  CHECK(status_of(rig, "0.1.3") == NodeStatus::Pruned);
  CHECK(status_of(rig, "0.1") == NodeStatus::Pruned);
  CHECK(status_of(rig, "0") == NodeStatus::Pruned);
  check_replays(rig);
}

TEST_CASE("repair adds children and the node is retried") {
  ScriptBuilder b;
  b.and_node("0", {"a"});
  b.atomic("0.1", "click [9999]");
  b.add(Operator::ReviseAnd, "0", "ADD [0] AND : <<1. search instead>>");
  b.atomic("0.2", "type [401] [brownie] [1]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(rig.engine.tree().root().revision_count == 1);
  CHECK(status_of(rig, "0.2") == NodeStatus::Success);
  // The strict completion check sees the pruned 0.1.
  CHECK(r.outcome == Outcome::Fail);
  check_replays(rig);
}

TEST_CASE("repair filters prunes of closed children and foreign additions") {
  ScriptBuilder b;
  b.and_node("0", {"a", "b"});
  b.atomic("0.1", "note [a]");
  b.atomic("0.2", "click [9999]");
  b.add(Operator::ReviseAnd, "0", "PRUNE [0.1]\nADD [0.7] AND : <<1. elsewhere>>\nADD [0] OR : <<1. wrong type (score: 0.5)>>\nADD [0] AND : <<1. a; 2. fresh>>");
  EngineConfig cfg;
  cfg.max_revision_count = 1;
  Rig rig(b, cfg);
  rig.engine.run("t");
  CHECK(status_of(rig, "0.1") == NodeStatus::Success);
  auto repairs = rig.events("repair");
  REQUIRE_FALSE(repairs.empty());
  CHECK(repairs[0]["pruned"].empty());
  CHECK(repairs[0]["added"] == json::array({"0.3"}));
  CHECK(repairs[0]["dropped"].size() == 4);
  CHECK(rig.engine.tree().at("0.3").description == "fresh");
  check_replays(rig);
}

TEST_CASE("failed OR repair adds a scored alternative") {
  ScriptBuilder b;
  b.or_node("0", {{"A", 1.0}, {"B", 0.9}});
  b.atomic("0.1", "click [9999]");
  b.atomic("0.2", "click [9998]");
  b.add(Operator::ReviseOr, "0", "ADD [0] OR : <<1. Third way (score: 0.4)>>");
  b.atomic("0.3", "note [third]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(rig.engine.tree().at("0.3").score == 0.4);
  CHECK(status_of(rig, "0.3") == NodeStatus::Success);
  check_replays(rig);
}

TEST_CASE("rollback") {
  ScriptBuilder b;
  b.and_node("0", {"search", "pick"});
  b.atomic("0.1", "type [401] [brownie] [1]");
  b.or_node("0.2", {{"A then broken", 1.0}, {"B", 0.9}});
  b.and_node("0.2.1", {"open A", "break"});
  b.atomic("0.2.1.1", "click [501]");
  b.atomic("0.2.1.2", "click [9999]");
  b.atomic("0.2.2", "click [502]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(rig.engine.tree().at("0.2").url == kResults);
  auto rollbacks = rig.events("rollback");
  REQUIRE(rollbacks.size() >= 2);
  // Entering 0.2.2: the site was on recipe A and goes back to the results page.
  const json& last = rollbacks.back();
  CHECK(last["node"] == "0.2");
  CHECK(last["url"] == kResults);
  CHECK(last["ok"] == true);
  CHECK(rig.site.get_url() == "https://www.allrecipes.com/recipe/b");
  check_replays(rig);
}

TEST_CASE("perform_rollback edge cases") {
  ScriptBuilder b;
  b.or_node("0", {{"A", 1.0}});
  Rig rig(b);
  rig.engine.start("t");
  Node& root = rig.engine.tree().root();
  root.url = kHome;
  CHECK(rig.engine.perform_rollback(root));
  CHECK(rig.site.get_url() == kHome);
  root.url.clear();
  CHECK_FALSE(rig.engine.perform_rollback(root));
  root.url = kResults;
  CHECK(rig.engine.perform_rollback(root));
  CHECK(rig.site.get_url() == kResults);
}

TEST_CASE("global update rewords and prunes") {
  ScriptBuilder b;
  b.and_node("0", {"search", "note", "search again"});
  b.atomic("0.1", "type [401] [brownie] [1]");
  b.add(Operator::GlobalUpdate, "*", "PRUNE [0.3]\nUPDATE [0.2] <<Note the brownie recipe>>\nPRUNE [0.1]");
  b.atomic("0.2", "note [done]");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(status_of(rig, "0.3") == NodeStatus::Pruned);
  CHECK(rig.engine.tree().at("0.2").description == "Note the brownie recipe");
  CHECK(status_of(rig, "0.2") == NodeStatus::Success);
  auto updates = rig.events("global_update");
  REQUIRE_FALSE(updates.empty());
  CHECK(updates[0]["dropped"] == json::array({{{"prune", "0.1"}}}));
  // Strict completion sees the pruned 0.3.
  CHECK(r.outcome == Outcome::Fail);
  check_replays(rig);
}

TEST_CASE("stop finishes the run with the stop answer") {
  ScriptBuilder b;
  b.and_node("0", {"a", "b"});
  b.atomic("0.1", "stop [42]");
  b.add(Operator::FinalResponse, "*", "");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::Success);
  CHECK(r.final_response.rfind("Answer: 42", 0) == 0);
  CHECK(status_of(rig, "0.2") == NodeStatus::Unvisited);
  check_replays(rig);
}

TEST_CASE("the step limit halts before the action runs") {
  ScriptBuilder b;
  b.and_node("0", {"a", "b"});
  b.atomic("0.1", "type [401] [brownie] [1]");
  b.atomic("0.2", "click [501]");
  EngineConfig cfg;
  cfg.max_steps = 1;
  Rig rig(b, cfg);
  RunResult r = rig.engine.run("t");
  CHECK(r.outcome == Outcome::StepsExhausted);
  CHECK(r.steps == 1);
  CHECK(rig.site.get_url() == kResults);
  check_replays(rig);
}

TEST_CASE("final response falls back to the notes when the controller gives nothing") {
  ScriptBuilder b;
  b.atomic("0", "click [9999]");
  b.add(Operator::FinalResponse, "*", "");
  Rig rig(b);
  RunResult r = rig.engine.run("t");
  CHECK(r.final_response == "No grounded answer was found in the collected notes.");
}

TEST_CASE("a controller that never answers aborts the run") {
  class Down : public Controller {
    std::string respond(const ControllerRequest&) override { throw TransportError("offline"); }
  } down;
  testing::RuleEnvironment env;
  CandidateMemory memory;
  EventLog log;
  Engine engine(EngineConfig{}, down, env, memory, log);
  RunResult r = engine.run("t");
  CHECK(r.outcome == Outcome::Fail);
  CHECK_FALSE(r.abort_reason.empty());
  CHECK(r.final_response == "No grounded answer was found in the collected notes.");
  CHECK(replay_lines(testing::split_records(log.text())).ok);
}

TEST_CASE("interventions") {
  ScriptBuilder b;
  b.and_node("0", {"a bad step"});
  b.atomic("0.1", "click [9999]");
  b.atomic("0.2", "type [401] [brownie] [1]");
  b.atomic("0.3", "click [501]");
  b.atomic("0.4", "note [Vegan Fudgy Chocolate Brownies]");

  SUBCASE("three injected subgoals run in order") {
    Rig rig(b);
    rig.engine.start("t");
    rig.engine.step();
    rig.engine.apply_intervention({Intervention::Kind::Prune, "0.1", {}, {}});
    InterventionAck ack = rig.engine.apply_intervention(
        {Intervention::Kind::InjectChildren, "0", {{"search", {}}, {"open", {}}, {"note", {}}}, {}});
    CHECK(ack.accepted);
    rig.run_to_end();
    RunResult r = rig.engine.finish();
    for (const char* id : {"0.2", "0.3", "0.4"}) CHECK(status_of(rig, id) == NodeStatus::Success);
    std::vector<std::string> order;
    for (const auto& a : rig.events("attempt")) order.push_back(a["node"]);
    CHECK(order == std::vector<std::string>{"0.2", "0.3", "0.4"});
    CHECK(rig.events("intervention").size() == 2);
    // Strict completion sees the pruned 0.1.
    CHECK(r.outcome == Outcome::Fail);
    check_replays(rig);
  }
  SUBCASE("rejections") {
    ScriptBuilder ok;
    ok.and_node("0", {"a", "b"});
    ok.atomic("0.1", "note [a]");
    Rig rig(ok);
    rig.engine.start("t");
    rig.engine.step();
    rig.engine.step();
    rig.engine.step();
    REQUIRE(status_of(rig, "0.1") == NodeStatus::Success);
    InterventionAck a = rig.engine.apply_intervention({Intervention::Kind::Prune, "0.1", {}, {}});
    CHECK_FALSE(a.accepted);
    CHECK(a.reason.find("SUCCESS") != std::string::npos);
    CHECK_FALSE(rig.engine.apply_intervention({Intervention::Kind::Prune, "0.9", {}, {}}).accepted);
    CHECK_FALSE(rig.engine.apply_intervention({Intervention::Kind::InjectChildren, "0.1", {{"x", {}}}, {}}).accepted);
    CHECK(rig.engine.apply_intervention({Intervention::Kind::Prune, "0.2", {}, {}}).accepted);
    rig.run_to_end();
    rig.engine.finish();
    CHECK_FALSE(rig.engine.apply_intervention({Intervention::Kind::Prune, "0", {}, {}}).accepted);
    check_replays(rig);
  }
}

TEST_CASE("PAUSE and RESUME through the mailbox leave the run unchanged") {
  ScriptBuilder b;
  b.and_node("0", {"search", "open"});
  b.atomic("0.1", "type [401] [brownie] [1]");
  b.atomic("0.2", "click [501]");

  Rig plain(b);
  RunResult expected = plain.engine.run("t");

  Rig paused(b);
  Mailbox mailbox;
  paused.engine.attach_mailbox(&mailbox);
  mailbox.submit({Intervention::Kind::Pause, {}, {}, {}});
  paused.engine.start("t");
  std::thread resumer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    mailbox.submit({Intervention::Kind::Resume, {}, {}, {}});
  });
  paused.run_to_end();
  resumer.join();
  RunResult got = paused.engine.finish();
  CHECK(got.to_json() == expected.to_json());
  CHECK(paused.log.text() == plain.log.text());
}

TEST_CASE("snapshot carries counters and the OR scores") {
  ScriptBuilder b;
  b.and_node("0", {"search", "pick"});
  b.atomic("0.1", "type [401] [brownie] [1]");
  b.or_node("0.2", {{"Select Recipe A", 1.0}, {"Select Recipe B", 0.95}});
  Rig rig(b);
  SnapshotBoard board;
  rig.engine.attach_board(&board);
  rig.engine.start("t");
  for (int i = 0; i < 4; ++i) rig.engine.step();
  json snap = board.snapshot();
  CHECK(snap["iterations"] == 4);
  CHECK(snap["steps"] == 1);
  CHECK(snap["run_state"] == "running");
  bool found = false;
  for (const json& n : snap["nodes"]) {
    if (n["id"] == "0.2") {
      found = true;
      CHECK(n["type"] == "OR");
    }
    if (n["id"] == "0.2.1") CHECK(n["score"] == 1.0);
    if (n["id"] == "0.2.2") CHECK(n["score"] == 0.95);
  }
  CHECK(found);
  rig.run_to_end();
  rig.engine.finish();
  CHECK(board.run_state() == "terminated");
  CHECK(board.snapshot()["stack"].empty());
}
