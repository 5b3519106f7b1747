#include "andor/engine.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "andor/snapshot.hpp"
#include "andor/text_util.hpp"

namespace andor {

using nlohmann::json;

// ---------------------------------------------------------------- config

void EngineConfig::validate() const {
  auto need = [](int value, int min, const char* name) {
    if (value < min) {
      throw std::invalid_argument(std::string(name) + " must be >= " + std::to_string(min) + ", got " +
                                  std::to_string(value));
    }
  };
  need(budget, 0, "budget");
  need(max_steps, 1, "max_steps");
  need(max_retry_count, 1, "max_retry_count");
  need(max_revision_count, 1, "max_revision_count");
  need(max_children, 1, "max_children");
  need(top_k, 1, "top_k");
  need(context_char_budget, 1, "context_char_budget");
  if (root_id.empty() || root_id.find('.') != std::string::npos) {
    throw std::invalid_argument("root_id must be non-empty and contain no '.'");
  }
}

json EngineConfig::to_json() const {
  return {{"budget", budget},
          {"max_steps", max_steps},
          {"max_retry_count", max_retry_count},
          {"max_revision_count", max_revision_count},
          {"max_children", max_children},
          {"completion_check_root_only", completion_check_root_only},
          {"root_id", root_id},
          {"top_k", top_k},
          {"context_char_budget", context_char_budget}};
}

EngineConfig EngineConfig::from_json(const json& j, EngineConfig base) {
  if (!j.is_object()) throw std::invalid_argument("engine config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "budget") {
        base.budget = value.get<int>();
      } else if (key == "max_steps") {
        base.max_steps = value.get<int>();
      } else if (key == "max_retry_count") {
        base.max_retry_count = value.get<int>();
      } else if (key == "max_revision_count") {
        base.max_revision_count = value.get<int>();
      } else if (key == "max_children") {
        base.max_children = value.get<int>();
      } else if (key == "completion_check_root_only") {
        base.completion_check_root_only = value.get<bool>();
      } else if (key == "root_id") {
        base.root_id = value.get<std::string>();
      } else if (key == "top_k") {
        base.top_k = value.get<int>();
      } else if (key == "context_char_budget") {
        base.context_char_budget = value.get<int>();
      } else {
        throw std::invalid_argument("unknown engine config key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw std::invalid_argument("bad value for '" + key + "': " + e.what());
    }
  }
  base.validate();
  return base;
}

namespace {

constexpr std::array<std::string_view, 4> kOutcomeNames{"SUCCESS", "FAIL", "BUDGET_EXHAUSTED", "STEPS_EXHAUSTED"};

}  // namespace

std::string_view to_string(Outcome outcome) { return kOutcomeNames.at(static_cast<std::size_t>(outcome)); }

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == text) return static_cast<Outcome>(i);
  }
  return std::nullopt;
}

json RunResult::to_json() const {
  json steps_json = json::array();
  for (const TrajectoryStep& s : trajectory) {
    steps_json.push_back({{"step", s.step},
                          {"node", s.node_id},
                          {"action", s.action},
                          {"url", s.url},
                          {"observation_summary", s.observation_summary},
                          {"status", s.status}});
  }
  json out = {{"outcome", to_string(outcome)},
              {"final_response", final_response},
              {"iterations", iterations},
              {"steps", steps},
              {"trajectory", std::move(steps_json)},
              {"final_snapshot", final_snapshot}};
  if (!abort_reason.empty()) out["abort_reason"] = abort_reason;
  return out;
}

// ---------------------------------------------------------------- board

void SnapshotBoard::publish(json snapshot) {
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(snapshot);
}

void SnapshotBoard::set_run_state(std::string state) {
  std::lock_guard lock(mutex_);
  run_state_ = std::move(state);
}

json SnapshotBoard::snapshot() const {
  std::lock_guard lock(mutex_);
  if (snapshot_.is_null()) return nullptr;
  json out = snapshot_;
  out["run_state"] = run_state_;
  return out;
}

std::string SnapshotBoard::run_state() const {
  std::lock_guard lock(mutex_);
  return run_state_;
}

// ---------------------------------------------------------------- recorder

class Engine::Recorder : public PlanObserver {
 public:
  Recorder(EventLog& log, const int& iterations) : log_(log), iterations_(iterations) {}

  void on_node_added(const Node& node) override {
    Fields f("node_added");
    f.str("node", node.id).str("parent", node.parent ? node.parent->id : "").num("depth", node.depth);
    f.str("description", node.description);
    if (node.score) f.value("score", *node.score);
    log_.append(f);
  }
  void on_type_set(const Node& node) override {
    Fields f("type");
    f.str("node", node.id).str("type", to_string(node.type));
    if (node.type == NodeType::And) f.flag("ordered", node.ordered);
    if (node.type == NodeType::Action) f.str("action", node.action);
    log_.append(f);
  }
  void on_status_changed(const Node& node, NodeStatus from) override {
    log_.append(Fields("status").str("node", node.id).str("from", to_string(from)).str("to", to_string(node.status)));
  }
  void on_description_changed(const Node& node) override {
    log_.append(Fields("describe").str("node", node.id).str("description", node.description));
  }
  void on_push(const StackEntry& entry) override {
    log_.append(Fields("push").str("node", entry.node->id).str("state", to_string(entry.state)));
  }
  void on_pop(const StackEntry& entry) override {
    log_.append(
        Fields("pop").num("iter", iterations_).str("node", entry.node->id).str("state", to_string(entry.state)));
  }
  void on_purge(const std::vector<StackEntry>& removed) override {
    Record entries = Record::array();
    for (const StackEntry& e : removed) entries.push_back({{"node", e.node->id}, {"state", to_string(e.state)}});
    log_.append({{"ev", "purge"}, {"entries", std::move(entries)}});
  }
  void on_requeue(const Node& node) override { log_.append(Fields("requeue").str("node", node.id)); }

 private:
  EventLog& log_;
  const int& iterations_;
};

namespace {

Record ids(const std::vector<Node*>& nodes) {
  Record out = Record::array();
  for (const Node* n : nodes) out.push_back(n->id);
  return out;
}

NodeType node_type_of(ExpansionKind kind) {
  switch (kind) {
    case ExpansionKind::And: return NodeType::And;
    case ExpansionKind::Or: return NodeType::Or;
    case ExpansionKind::Atomic: return NodeType::Action;
  }
  return NodeType::Unknown;
}

std::string action_text(const Action& action) {
  if (const auto* note = std::get_if<action::Note>(&action)) return note->text;
  return {};
}

}  // namespace

// ---------------------------------------------------------------- engine

Engine::Engine(EngineConfig config, Controller& controller, Environment& env, CandidateMemory& memory,
               EventLog& log)
    : config_(std::move(config)), controller_(controller), env_(env), memory_(memory), log_(log) {
  config_.validate();
  recorder_ = std::make_unique<Recorder>(log_, iterations_);
  session_ = std::make_unique<ControllerSession>(controller_, config_.max_retry_count, [this](const CallRecord& c) {
    Fields f("controller");
    f.str("op", to_string(c.op)).str("node", c.node).num("attempt", c.attempt).flag("ok", c.ok);
    if (!c.error.empty()) f.str("error", c.error);
    f.str("response", c.response);
    log_.append(f);
  });
  stack_.set_observer(recorder_.get());
}

Engine::~Engine() = default;

RunResult Engine::run(const std::string& task) {
  start(task);
  while (step()) {
  }
  return finish();
}

void Engine::start(const std::string& task) {
  if (started_) throw std::logic_error("engine already started");
  started_ = true;
  env_.reset();
  tree_ = std::make_unique<PlanTree>(task, config_.root_id);
  tree_->set_observer(recorder_.get());
  ctx_ = ContextBundle{};
  ctx_.task_description = task;
  current_url_ = env_.get_url();
  ctx_.current_observation = env_.observe();

  log_.append({{"ev", "run_start"},
               {"task", task},
               {"root", tree_->root().id},
               {"url", current_url_},
               {"config", config_.to_json()},
               {"controller", controller_.describe()}});

  try {
    if (auto constraints = session_->extract_constraints(make_request(Operator::ExtractConstraints, tree_->root()))) {
      ctx_.item_constraints = *constraints;
      memory_.declare(*constraints);
    }
  } catch (const ControllerUnavailable& e) {
    halt(Outcome::Fail, e.what());
    abort_reason_ = e.what();
  }
  log_.append({{"ev", "constraints"}, {"constraints", json::parse(render_constraints(ctx_.item_constraints))}});

  if (board_) board_->set_run_state("running");
  stack_.push(tree_->root(), StackState::Entering);
  publish();
}

bool Engine::step() {
  if (!started_) throw std::logic_error("engine not started");
  if (finished_) return false;
  drain_interventions();
  if (outcome_) {
    finished_ = true;
    return false;
  }
  if (stack_.empty()) {
    outcome_ = tree_->root().status == NodeStatus::Success ? Outcome::Success : Outcome::Fail;
    finished_ = true;
    return false;
  }
  if (iterations_ >= config_.budget) {
    halt(Outcome::BudgetExhausted, "iteration budget reached");
    finished_ = true;
    return false;
  }
  ++iterations_;
  StackEntry entry = stack_.pop();
  try {
    dispatch(entry);
  } catch (const ControllerUnavailable& e) {
    abort_reason_ = e.what();
    halt(Outcome::Fail, e.what());
  }
  if (outcome_) finished_ = true;
  publish();
  return !finished_;
}

void Engine::dispatch(const StackEntry& entry) {
  Node& node = *entry.node;
  const bool settled = node.status == NodeStatus::Success && node.revision_count >= config_.max_revision_count;
  if (settled || node.status == NodeStatus::Deleted) {
    log_.append(Fields("skip").str("node", node.id).str("status", to_string(node.status)));
    return;
  }
  if (node.status == NodeStatus::Pruned) {
    log_.append(Fields("skip").str("node", node.id).str("status", to_string(node.status)));
    backtrack_failure(*tree_, node, stack_);
    return;
  }
  switch (entry.state) {
    case StackState::Entering: process_node_entering(node); break;
    case StackState::Exiting: process_node_exiting(node); break;
    case StackState::Failed: process_node_failed(node); break;
  }
}

RunResult Engine::finish() {
  if (!started_) throw std::logic_error("engine not started");
  if (!outcome_) {
    outcome_ = !stack_.empty() ? Outcome::BudgetExhausted
               : tree_->root().status == NodeStatus::Success ? Outcome::Success
                                                              : Outcome::Fail;
  }
  finished_ = true;
  if (mailbox_) mailbox_->close("run terminated");

  std::string response = abort_reason_.empty() ? compose_final_response() : fallback_response();
  log_.append({{"ev", "run_end"},
               {"outcome", to_string(*outcome_)},
               {"iterations", iterations_},
               {"steps", steps_},
               {"final_response", response}});
  RunResult result;
  result.final_snapshot = snapshot();
  if (board_) {
    board_->set_run_state("terminated");
    board_->publish(result.final_snapshot);
  }
  result.outcome = *outcome_;
  result.final_response = std::move(response);
  result.trajectory = trajectory_;
  result.iterations = iterations_;
  result.steps = steps_;
  result.abort_reason = abort_reason_;
  return result;
}

void Engine::halt(Outcome outcome, const std::string& reason) {
  if (outcome_) return;
  outcome_ = outcome;
  log_.append({{"ev", "halt"}, {"outcome", to_string(outcome)}, {"reason", reason}});
}

json Engine::snapshot() const {
  if (!tree_) return nullptr;
  json snap = make_snapshot(*tree_, stack_);
  snap["memory"] = memory_.to_json();
  snap["seq"] = log_.last_seq();
  snap["iterations"] = iterations_;
  snap["steps"] = steps_;
  snap["notes"] = notes_;
  if (outcome_) snap["outcome"] = to_string(*outcome_);
  return snap;
}

void Engine::publish() {
  if (board_) board_->publish(snapshot());
}

ControllerRequest Engine::make_request(Operator op, const Node& node) {
  ControllerRequest request;
  request.op = op;
  request.node = make_node_view(node);
  request.ctx = ctx_;
  const auto budget = static_cast<std::size_t>(config_.context_char_budget);
  truncate_oldest_first(request.ctx.action_history, budget);
  truncate_oldest_first(request.ctx.interaction_history, budget);
  request.ctx.current_observation = env_.observe();
  request.ctx.local_tree_info = render_local_context(node);
  request.ctx.candidate_table_excerpt = memory_.render_excerpt(static_cast<std::size_t>(config_.top_k));
  request.notes = notes_;
  truncate_oldest_first(request.notes, budget);
  if (op == Operator::GlobalUpdate || op == Operator::FinalResponse) request.tree_outline = render_tree_outline(*tree_);
  if (op == Operator::MemoryUpdate) request.memory_tables = memory_.render_excerpt(static_cast<std::size_t>(-1));
  if (op == Operator::FinalResponse) {
    if (auto answer = env_.answer()) request.stop_answer = *answer;
  }
  return request;
}

// ---------------------------------------------------------------- entering

void Engine::process_node_entering(Node& node) {
  if (node.parent && node.parent->type == NodeType::Or) {
    if (perform_rollback(*node.parent)) current_url_ = node.parent->url;
  }
  ++node.execution_count;
  if (node.url.empty()) node.url = current_url_;
  log_.append(
      Fields("enter").str("node", node.id).num("execution_count", node.execution_count).str("url", node.url));

  if (node.type == NodeType::Unknown && !is_closed(node.status)) {
    if (!populate(node)) {
      tree_->set_status(node, NodeStatus::Fail);
      stack_.push(node, StackState::Failed);
      return;
    }
  }
  tree_->set_status(node, NodeStatus::Visited);
  switch (node.type) {
    case NodeType::Action: process_action_node(node); break;
    case NodeType::And: process_and_node(node); break;
    case NodeType::Or: process_or_node(node); break;
    case NodeType::Unknown: break;
  }
}

bool Engine::populate(Node& node) {
  auto directive = session_->expand_node(make_request(Operator::Expand, node));
  if (!directive) return false;
  node.reasoning = directive->reasoning;
  const NodeType type = node_type_of(directive->kind);
  tree_->set_type(node, type, directive->ordered, directive->kind == ExpansionKind::Atomic ? directive->action : "");
  if (type == NodeType::Or) {
    for (std::size_t i = 0; i < directive->children.size(); ++i) {
      const ScoredItem& item = directive->children[i];
      tree_->add_child(node, item.description, item.score.value_or(fallback_score(i)));
    }
  } else if (type == NodeType::And) {
    for (const ScoredItem& item : directive->children) tree_->add_child(node, item.description);
  }
  return true;
}

bool Engine::perform_rollback(Node& or_parent) {
  if (or_parent.url.empty()) {
    log_.append({{"ev", "rollback"}, {"node", or_parent.id}, {"url", ""}, {"ok", false}});
    return false;
  }
  const bool ok = env_.navigate(or_parent.url);
  log_.append({{"ev", "rollback"}, {"node", or_parent.id}, {"url", or_parent.url}, {"ok", ok}});
  if (ok) {
    current_url_ = or_parent.url;
    ctx_.current_observation = env_.observe();
  }
  return ok;
}

void Engine::process_action_node(Node& node) {
  stack_.push(node, StackState::Exiting);
  bool success = false;
  while (node.retry_count < config_.max_retry_count) {
    ++node.retry_count;
    std::optional<Action> action;
    StepResult result;
    try {
      action = parse_action(node.action);
    } catch (const ActionParseError& e) {
      result = {false, e.what()};
    }
    const bool note = action && is_note(*action);
    if (action && !note && steps_ >= config_.max_steps) {
      halt(Outcome::StepsExhausted, "step limit reached before " + node.id);
      return;
    }
    if (action) result = env_.step(*action);
    Fields attempt("attempt");
    attempt.str("node", node.id).num("attempt", node.retry_count).str("action", node.action).flag("ok", result.ok);
    if (!result.error.empty()) attempt.str("error", result.error);
    attempt.flag("note", note).str("url", env_.get_url());
    log_.append(attempt);
    if (!result.ok) continue;

    if (note) {
      const std::string text = action_text(*action);
      notes_.push_back(text);
      node.notes.push_back(text);
    }
    if (!note) {
      ++steps_;
      current_url_ = env_.get_url();
      node.url = current_url_;
      if (env_.done()) {
        trajectory_.push_back({steps_, node.id, node.action, current_url_, ctx_.observation_summary, "DONE"});
        halt(Outcome::Success, "environment reported done");
        return;
      }
    }
    tree_->set_status(node, NodeStatus::Success);
    success = true;
    if (!note) {
      full_update(node, *action);
      trajectory_.push_back({steps_, node.id, node.action, current_url_, ctx_.observation_summary, "SUCCESS"});
    }
    break;
  }
  if (!success) tree_->set_status(node, NodeStatus::Fail);
}

void Engine::process_and_node(Node& node) {
  stack_.push(node, StackState::Exiting);
  const bool valid = is_valid_and(node.children);
  if (is_successful_and(node)) {
    tree_->set_status(node, NodeStatus::Success);
  } else if (!valid) {
    tree_->set_status(node, NodeStatus::Fail);
  } else {
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      if (!is_closed((*it)->status)) stack_.push(**it, StackState::Entering);
    }
  }
}

void Engine::process_or_node(Node& node) {
  stack_.push(node, StackState::Exiting);
  if (is_successful_or(node)) {
    tree_->set_status(node, NodeStatus::Success);
  } else if (!is_valid_or(node.children)) {
    tree_->set_status(node, NodeStatus::Fail);
  } else if (Node* child = find_next_promising(node.children)) {
    stack_.push(*child, StackState::Entering);
  }
}

// ---------------------------------------------------------------- exiting

bool Engine::check_completion(Node& node) {
  if (config_.completion_check_root_only && !node.is_root()) {
    log_.append({{"ev", "completion"}, {"node", node.id}, {"complete", false}, {"reasoning", ""}, {"source", "gated"}});
    return false;
  }
  auto verdict = session_->check_completion(make_request(Operator::CheckCompletion, node));
  const bool complete = verdict && verdict->complete;
  node.reasoning = verdict ? verdict->reasoning : "completion check unanswered";
  log_.append({{"ev", "completion"},
               {"node", node.id},
               {"complete", complete},
               {"reasoning", node.reasoning},
               {"source", verdict ? "controller" : "fallback"}});
  return complete;
}

void Engine::process_node_exiting(Node& node) {
  switch (node.type) {
    case NodeType::Action:
      if (is_failed_or_pruned(node.status)) {
        stack_.push(node, StackState::Failed);
      } else {
        tree_->set_status(node, NodeStatus::Success);
      }
      return;
    case NodeType::And:
      if (!is_successful_and(node)) {
        node.reasoning = "not every remaining child succeeded";
        tree_->set_status(node, NodeStatus::Fail);
        stack_.push(node, StackState::Failed);
      } else if (node.revision_count >= config_.max_revision_count) {
        tree_->set_status(node, NodeStatus::Success);
      } else if (config_.completion_check_root_only && !node.is_root()) {
        tree_->set_status(node, NodeStatus::Success);
      } else if (check_completion(node)) {
        tree_->set_status(node, NodeStatus::Success);
      } else {
        tree_->set_status(node, NodeStatus::Fail);
        stack_.push(node, StackState::Failed);
      }
      return;
    case NodeType::Or:
      if (is_successful_or(node)) {
        tree_->set_status(node, NodeStatus::Success);
      } else {
        node.reasoning = "no alternative succeeded";
        tree_->set_status(node, NodeStatus::Fail);
        stack_.push(node, StackState::Failed);
      }
      return;
    case NodeType::Unknown:
      tree_->set_status(node, NodeStatus::Fail);
      stack_.push(node, StackState::Failed);
      return;
  }
}

// ---------------------------------------------------------------- failed

void Engine::process_node_failed(Node& node) {
  switch (node.type) {
    case NodeType::And: process_failed_and_node(node); break;
    case NodeType::Or: process_failed_or_node(node); break;
    case NodeType::Action:
    case NodeType::Unknown: prune_and_backtrack(node); break;
  }
}

void Engine::prune_and_backtrack(Node& node) {
  auto pruned = tree_->recursively_prune(node.id);
  stack_.purge(pruned);
  backtrack_failure(*tree_, node, stack_);
}

void Engine::process_failed_and_node(Node& node) {
  const bool valid = is_valid_and(node.children);
  bool revised = false;
  if (!valid) {
    if (has_at_least_one_success(node) && check_completion(node)) {
      tree_->set_status(node, NodeStatus::Success);
      tree_->recursively_mark_success(node.id);
      return;
    }
    tree_->set_status(node, NodeStatus::Fail);
    if (static_cast<int>(node.children.size()) < config_.max_children &&
        node.revision_count < config_.max_revision_count) {
      RepairResult r = repair(node, Operator::ReviseAnd);
      if (node.status != NodeStatus::Pruned && (!r.added.empty() || !r.pruned.empty())) {
        revised = true;
        ++node.revision_count;
        log_.append(Fields("revised").str("node", node.id).num("revision_count", node.revision_count));
      }
    }
  }
  if (revised || valid) {
    tree_->set_status(node, NodeStatus::Visited);
    stack_.push(node, StackState::Entering);
  } else {
    prune_and_backtrack(node);
  }
}

void Engine::process_failed_or_node(Node& node) {
  if (is_valid_or(node.children)) {
    tree_->set_status(node, NodeStatus::Visited);
    stack_.push(node, StackState::Entering);
    return;
  }
  bool revised = false;
  if (node.revision_count < config_.max_revision_count) {
    RepairResult r = repair(node, Operator::ReviseOr);
    if (!r.added.empty()) {
      revised = true;
      ++node.revision_count;
      log_.append(Fields("revised").str("node", node.id).num("revision_count", node.revision_count));
    }
  }
  if (revised) {
    tree_->set_status(node, NodeStatus::Visited);
    stack_.push(node, StackState::Entering);
  } else {
    prune_and_backtrack(node);
  }
}

Engine::RepairResult Engine::repair(Node& node, Operator op) {
  ControllerRequest request = make_request(op, node);
  request.reason = node.reasoning;
  auto directive = session_->revise(request);
  RepairResult r;
  Record dropped = Record::array();
  if (directive) {
    for (const std::string& id : directive->prunes) {
      Node* child = tree_->find(id);
      if (child == nullptr || child->parent != &node || is_closed(child->status)) {
        dropped.push_back({{"prune", id}, {"why", child == nullptr       ? "unknown node"
                                                  : child->parent != &node ? "not a child of the repaired node"
                                                                           : "node is closed"}});
        continue;
      }
      auto pruned = tree_->recursively_prune(child->id);
      stack_.purge(pruned);
      r.pruned.push_back(child);
      auto deleted = backtrack_failure(*tree_, *child, stack_);
      r.deleted.insert(r.deleted.end(), deleted.begin(), deleted.end());
    }
    for (const RepairAddition& add : directive->additions) {
      if (add.target != node.id || node_type_of(add.node_type) != node.type) {
        dropped.push_back({{"add", add.target}, {"why", add.target != node.id ? "targets another node"
                                                                                : "type differs from node"}});
        continue;
      }
      for (std::size_t i = 0; i < add.children.size(); ++i) {
        const ScoredItem& item = add.children[i];
        const bool duplicate = std::any_of(node.children.begin(), node.children.end(), [&](const Node* c) {
          return text_util::iequals(text_util::trim(c->description), text_util::trim(item.description));
        });
        if (duplicate || static_cast<int>(node.children.size()) >= config_.max_children) {
          dropped.push_back({{"add", item.description}, {"why", duplicate ? "duplicate description" : "child cap"}});
          continue;
        }
        std::optional<double> score;
        if (node.type == NodeType::Or) score = item.score.value_or(fallback_score(i));
        r.added.push_back(&tree_->add_child(node, item.description, score));
      }
    }
  }
  log_.append({{"ev", "repair"},
               {"node", node.id},
               {"op", to_string(op)},
               {"answered", directive.has_value()},
               {"pruned", ids(r.pruned)},
               {"deleted", ids(r.deleted)},
               {"added", ids(r.added)},
               {"dropped", std::move(dropped)}});
  return r;
}

// ---------------------------------------------------------------- full update

void Engine::full_update(Node& node, const Action& action) {
  const Observation observation = env_.observe();
  ctx_.current_observation = observation;
  auto update = session_->full_update(make_request(Operator::FullUpdate, node));
  Record r{{"ev", "full_update"}, {"node", node.id}, {"answered", update.has_value()}};
  if (update) {
    std::vector<int> highlights;
    for (int id : update->observation_highlights) {
      if (observation.elements.count(id)) highlights.push_back(id);
    }
    update->observation_highlights = highlights;
    ctx_.observation_summary = update->observation_summary;
    if (!update->task_progress.empty()) ctx_.task_progress_summary = update->task_progress;
    if (!update->task_feedback.empty()) ctx_.task_feedback = update->task_feedback;
    if (!update->new_notes.empty()) {
      notes_.push_back(update->new_notes);
      if (!ctx_.notes_summary.empty()) ctx_.notes_summary += "\n";
      ctx_.notes_summary += update->new_notes;
    }
    r["summary"] = update->observation_summary;
    r["highlights"] = highlights;
    r["new_notes"] = update->new_notes;
  }
  const std::string command = to_string(action);
  ctx_.action_history.push_back(command);
  ctx_.interaction_history.push_back({ctx_.observation_summary, command});
  log_.append(std::move(r));

  if (memory_.active()) update_memory();
  global_update();
}

void Engine::update_memory() {
  auto commands = session_->memory_commands(make_request(Operator::MemoryUpdate, tree_->root()));
  ApplyReport report;
  if (commands) report = memory_.apply_commands(*commands);
  const std::string fixes = memory_.validate_tables();
  ApplyReport validation;
  if (!fixes.empty()) validation = memory_.apply_commands(fixes);
  Record rejected = Record::array();
  for (const CommandOutcome& o : report.outcomes) {
    if (!o.accepted) rejected.push_back({{"line", o.line}, {"reason", o.reason}});
  }
  log_.append({{"ev", "memory"},
               {"accepted", report.accepted()},
               {"rejected", std::move(rejected)},
               {"validation_fixes", validation.accepted()}});
}

void Engine::global_update() {
  auto directive = session_->global_update(make_request(Operator::GlobalUpdate, tree_->root()));
  Record applied = Record::array();
  Record dropped = Record::array();
  if (directive) {
    for (const std::string& id : directive->prunes) {
      Node* target = tree_->find(id);
      if (target == nullptr || target->is_root() || is_closed(target->status)) {
        dropped.push_back({{"prune", id}});
        continue;
      }
      prune_and_backtrack(*target);
      applied.push_back({{"prune", id}});
    }
    for (const auto& [id, description] : directive->updates) {
      Node* target = tree_->find(id);
      if (target == nullptr || target->is_root() || is_closed(target->status)) {
        dropped.push_back({{"update", id}});
        continue;
      }
      tree_->set_description(*target, description);
      applied.push_back({{"update", id}});
    }
  }
  log_.append({{"ev", "global_update"}, {"answered", directive.has_value()}, {"applied", std::move(applied)},
               {"dropped", std::move(dropped)}});
}

// ---------------------------------------------------------------- response

std::string Engine::fallback_response() const {
  std::string out;
  if (auto answer = env_.answer(); answer && !answer->empty()) out = "Answer: " + *answer + "\n";
  if (notes_.empty()) return out + "No grounded answer was found in the collected notes.";
  out += "Based on the collected notes:";
  for (const std::string& note : notes_) out += "\n- " + note;
  return out;
}

std::string Engine::compose_final_response() {
  try {
    auto text = session_->final_response(make_request(Operator::FinalResponse, tree_->root()));
    if (text && !text_util::trim(*text).empty()) return *text;
  } catch (const ControllerUnavailable& e) {
    log_.append({{"ev", "final_response_fallback"}, {"reason", e.what()}});
  }
  return fallback_response();
}

// ---------------------------------------------------------------- interventions

void Engine::drain_interventions() {
  if (!mailbox_) return;
  for (;;) {
    auto pending = mailbox_->drain();
    for (auto& p : pending) p.promise.set_value(apply_intervention(p.intervention));
    if (!pending.empty()) publish();
    if (!paused_ || outcome_) return;
    if (mailbox_->closed()) {
      paused_ = false;
      if (board_) board_->set_run_state("running");
      return;
    }
    mailbox_->wait();
  }
}

InterventionAck Engine::apply_intervention(const Intervention& in) {
  using Kind = Intervention::Kind;
  if (finished_ || outcome_) return {false, "run terminated"};
  if (in.kind == Kind::Pause) {
    paused_ = true;
    if (board_) board_->set_run_state("paused");
    return {true, "paused"};
  }
  if (in.kind == Kind::Resume) {
    paused_ = false;
    if (board_) board_->set_run_state("running");
    return {true, "running"};
  }

  InterventionAck ack{true, {}};
  Node* target = tree_->find(in.target);
  Record added = Record::array();
  if (target == nullptr) {
    ack = {false, "unknown node " + in.target};
  } else if (is_closed(target->status)) {
    ack = {false, "node " + target->id + " is " + std::string(to_string(target->status))};
  } else if (in.kind == Kind::InjectChildren) {
    if (target->type != NodeType::And && target->type != NodeType::Or) {
      ack = {false, "node " + target->id + " is " + std::string(to_string(target->type)) +
                        "; only AND and OR nodes take children"};
    } else {
      for (std::size_t i = 0; i < in.children.size(); ++i) {
        const ScoredItem& item = in.children[i];
        std::optional<double> score;
        if (target->type == NodeType::Or) score = item.score.value_or(fallback_score(i));
        added.push_back(tree_->add_child(*target, item.description, score).id);
      }
      stack_.requeue(*target);
      ack.reason = "added " + std::to_string(in.children.size()) + " children";
    }
  } else {
    prune_and_backtrack(*target);
    ack.reason = "pruned";
  }
  Record r{{"ev", "intervention"}, {"kind", to_string(in.kind)}, {"target", in.target},
           {"accepted", ack.accepted}, {"reason", ack.reason}};
  if (!added.empty()) r["added"] = std::move(added);
  log_.append(std::move(r));
  return ack;
}

}  // namespace andor
