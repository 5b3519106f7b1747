#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "andor/directives.hpp"
#include "andor/environment.hpp"
#include "andor/memory.hpp"
#include "andor/plan_tree.hpp"

namespace andor {

enum class Operator {
  Expand,
  ReviseAnd,
  ReviseOr,
  GlobalUpdate,
  CheckCompletion,
  FullUpdate,
  ExtractConstraints,
  MemoryUpdate,
  FinalResponse,
};
std::string_view to_string(Operator op);
std::optional<Operator> parse_operator(std::string_view text);

struct InteractionRecord {
  std::string summary;
  std::string action;
};

struct ContextBundle {
  std::string task_description;
  ConstraintSet item_constraints;
  std::string task_progress_summary;
  std::string task_feedback;
  std::string notes_summary;
  std::string observation_summary;
  std::vector<std::string> action_history;
  std::vector<InteractionRecord> interaction_history;
  Observation current_observation;
  std::string local_tree_info;
  std::string candidate_table_excerpt;
};

struct ChildView {
  std::string id;
  NodeType type = NodeType::Unknown;
  NodeStatus status = NodeStatus::Unvisited;
  std::string description;
  std::optional<double> score;
  std::string action;
};

struct NodeView {
  std::string id;
  NodeType type = NodeType::Unknown;
  NodeStatus status = NodeStatus::Unvisited;
  std::string description;
  std::string action;
  int depth = 0;
  int execution_count = 0;
  int revision_count = 0;
  bool is_root = false;
  std::vector<ChildView> children;
};

NodeView make_node_view(const Node& node);

struct ControllerRequest {
  Operator op = Operator::Expand;
  NodeView node;
  ContextBundle ctx;
  std::string reason;        // repair: why the node failed
  std::string tree_outline;  // global update
  std::vector<std::string> notes;
  std::string memory_tables;
  std::string stop_answer;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A backend answers one request with raw text in the directive wire format.
class Controller {
 public:
  virtual ~Controller() = default;
  // Throws TransportError when the backend cannot be reached.
  virtual std::string respond(const ControllerRequest& request) = 0;
  // Non-secret settings recorded in the run log.
  virtual nlohmann::json describe() const { return nlohmann::json::object(); }
};

// Drops the oldest entries until they fit in budget characters, one line each
// (every entry counts its length plus a newline).
void truncate_oldest_first(std::vector<std::string>& entries, std::size_t budget);
void truncate_oldest_first(std::vector<InteractionRecord>& entries, std::size_t budget);

class ControllerUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CallRecord {
  Operator op = Operator::Expand;
  std::string node;
  int attempt = 0;
  bool ok = false;
  std::string error;
  std::string response;
};

// Shared parse/retry layer in front of any backend. Each call makes up to
// max_attempts requests; if every attempt failed at the transport level it
// throws ControllerUnavailable, otherwise a parse failure on every attempt
// yields nullopt.
class ControllerSession {
 public:
  using Listener = std::function<void(const CallRecord&)>;

  ControllerSession(Controller& backend, int max_attempts, Listener listener = {});

  std::optional<ExpansionDirective> expand_node(const ControllerRequest& request);
  std::optional<RepairDirective> revise(const ControllerRequest& request);
  std::optional<GlobalUpdateDirective> global_update(const ControllerRequest& request);
  std::optional<CompletionVerdict> check_completion(const ControllerRequest& request);
  std::optional<SummaryUpdate> full_update(const ControllerRequest& request);
  std::optional<ConstraintSet> extract_constraints(const ControllerRequest& request);
  std::optional<std::string> memory_commands(const ControllerRequest& request);
  std::optional<std::string> final_response(const ControllerRequest& request);

  Controller& backend() { return backend_; }

 private:
  template <typename T, typename Parse>
  std::optional<T> call(const ControllerRequest& request, Parse parse);

  Controller& backend_;
  int max_attempts_;
  Listener listener_;
};

}  // namespace andor
