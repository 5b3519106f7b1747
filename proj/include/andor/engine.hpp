#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "andor/controller.hpp"
#include "andor/environment.hpp"
#include "andor/mailbox.hpp"
#include "andor/memory.hpp"
#include "andor/plan_tree.hpp"
#include "andor/trajectory.hpp"

namespace andor {

struct EngineConfig {
  int budget = 200;  // loop iterations; 0 is allowed and ends the run at once
  int max_steps = 60;
  int max_retry_count = 2;
  int max_revision_count = 2;
  int max_children = 8;
  bool completion_check_root_only = true;
  std::string root_id = "0";
  int top_k = 5;
  int context_char_budget = 12000;

  // Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
  // Fields missing from j keep their value from base. Unknown keys throw.
  static EngineConfig from_json(const nlohmann::json& j, EngineConfig base);
  static EngineConfig from_json(const nlohmann::json& j) { return from_json(j, EngineConfig()); }
};

enum class Outcome { Success, Fail, BudgetExhausted, StepsExhausted };
std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

struct TrajectoryStep {
  int step = 0;
  std::string node_id;
  std::string action;
  std::string url;
  std::string observation_summary;
  std::string status;
};

struct RunResult {
  Outcome outcome = Outcome::Fail;
  std::string final_response;
  std::vector<TrajectoryStep> trajectory;
  nlohmann::json final_snapshot;
  int iterations = 0;
  int steps = 0;
  std::string abort_reason;

  nlohmann::json to_json() const;
};

// Latest published snapshot plus the run state, readable from any thread.
class SnapshotBoard {
 public:
  void publish(nlohmann::json snapshot);
  void set_run_state(std::string state);
  // The last published snapshot with "run_state" filled in; null before the
  // first publish.
  nlohmann::json snapshot() const;
  std::string run_state() const;

 private:
  mutable std::mutex mutex_;
  nlohmann::json snapshot_;
  std::string run_state_ = "running";
};

class Engine {
 public:
  Engine(EngineConfig config, Controller& controller, Environment& env, CandidateMemory& memory, EventLog& log);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void attach_mailbox(Mailbox* mailbox) { mailbox_ = mailbox; }
  void attach_board(SnapshotBoard* board) { board_ = board; }

  RunResult run(const std::string& task);

  // run() split up, for tests that drive the loop by hand.
  void start(const std::string& task);
  // One loop iteration. Returns false once the run has terminated.
  bool step();
  RunResult finish();

  void process_node_entering(Node& node);
  void process_action_node(Node& node);
  void process_and_node(Node& node);
  void process_or_node(Node& node);
  void process_node_exiting(Node& node);
  void process_node_failed(Node& node);
  void process_failed_and_node(Node& node);
  void process_failed_or_node(Node& node);
  bool perform_rollback(Node& or_parent);
  InterventionAck apply_intervention(const Intervention& intervention);

  PlanTree& tree() { return *tree_; }
  ExecutionStack& stack() { return stack_; }
  const ContextBundle& context() const { return ctx_; }
  const std::vector<std::string>& notes() const { return notes_; }
  const EngineConfig& config() const { return config_; }
  int steps() const { return steps_; }
  int iterations() const { return iterations_; }
  bool paused() const { return paused_; }
  std::optional<Outcome> outcome() const { return outcome_; }
  nlohmann::json snapshot() const;

 private:
  class Recorder;
  struct RepairResult {
    std::vector<Node*> pruned;
    std::vector<Node*> deleted;
    std::vector<Node*> added;
  };

  void dispatch(const StackEntry& entry);
  bool populate(Node& node);
  bool check_completion(Node& node);
  RepairResult repair(Node& node, Operator op);
  void prune_and_backtrack(Node& node);
  void full_update(Node& node, const Action& action);
  void update_memory();
  void global_update();
  void drain_interventions();
  void halt(Outcome outcome, const std::string& reason);
  void publish();
  std::string compose_final_response();
  std::string fallback_response() const;
  ControllerRequest make_request(Operator op, const Node& node);

  EngineConfig config_;
  Controller& controller_;
  Environment& env_;
  CandidateMemory& memory_;
  EventLog& log_;
  std::unique_ptr<Recorder> recorder_;
  std::unique_ptr<ControllerSession> session_;
  Mailbox* mailbox_ = nullptr;
  SnapshotBoard* board_ = nullptr;

  std::unique_ptr<PlanTree> tree_;
  ExecutionStack stack_;
  ContextBundle ctx_;
  std::vector<std::string> notes_;
  std::vector<TrajectoryStep> trajectory_;
  std::string current_url_;
  int steps_ = 0;
  int iterations_ = 0;
  bool paused_ = false;
  bool started_ = false;
  bool finished_ = false;
  std::optional<Outcome> outcome_;
  std::string abort_reason_;
};

}  // namespace andor
