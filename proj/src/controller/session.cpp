#include <algorithm>

#include "andor/controller.hpp"
#include "andor/text_util.hpp"

namespace andor {

ControllerSession::ControllerSession(Controller& backend, int max_attempts, Listener listener)
    : backend_(backend), max_attempts_(std::max(1, max_attempts)), listener_(std::move(listener)) {}

template <typename T, typename Parse>
std::optional<T> ControllerSession::call(const ControllerRequest& request, Parse parse) {
  bool any_response = false;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    CallRecord record{request.op, request.node.id, attempt, false, {}, {}};
    try {
      record.response = backend_.respond(request);
      any_response = true;
      T value = parse(record.response);
      record.ok = true;
      if (listener_) listener_(record);
      return value;
    } catch (const TransportError& e) {
      record.error = std::string("transport: ") + e.what();
    } catch (const DirectiveParseError& e) {
      record.error = std::string("parse: ") + e.what();
    }
    last_error = record.error;
    if (listener_) listener_(record);
  }
  if (!any_response) {
    throw ControllerUnavailable("controller unavailable for " + std::string(to_string(request.op)) + ": " + last_error);
  }
  return std::nullopt;
}

std::optional<ExpansionDirective> ControllerSession::expand_node(const ControllerRequest& request) {
  return call<ExpansionDirective>(request, [&](const std::string& text) {
    ExpansionDirective d = parse_expansion(text);
    if (d.node_id != request.node.id) {
      throw DirectiveParseError("expansion answers node " + d.node_id + " instead of " + request.node.id);
    }
    return d;
  });
}

std::optional<RepairDirective> ControllerSession::revise(const ControllerRequest& request) {
  return call<RepairDirective>(request, [](const std::string& text) { return parse_repair(text); });
}

std::optional<GlobalUpdateDirective> ControllerSession::global_update(const ControllerRequest& request) {
  return call<GlobalUpdateDirective>(request, [](const std::string& text) { return parse_global_update(text); });
}

std::optional<CompletionVerdict> ControllerSession::check_completion(const ControllerRequest& request) {
  return call<CompletionVerdict>(request, [&](const std::string& text) {
    CompletionVerdict v = parse_completion(text);
    if (v.node_id != request.node.id) {
      throw DirectiveParseError("verdict names node " + v.node_id + " instead of " + request.node.id);
    }
    return v;
  });
}

std::optional<SummaryUpdate> ControllerSession::full_update(const ControllerRequest& request) {
  return call<SummaryUpdate>(request, [](const std::string& text) { return parse_summary(text); });
}

std::optional<ConstraintSet> ControllerSession::extract_constraints(const ControllerRequest& request) {
  return call<ConstraintSet>(request, [](const std::string& text) { return parse_constraints(text); });
}

std::optional<std::string> ControllerSession::memory_commands(const ControllerRequest& request) {
  return call<std::string>(request, [](const std::string& text) { return text; });
}

std::optional<std::string> ControllerSession::final_response(const ControllerRequest& request) {
  return call<std::string>(request, [](const std::string& text) { return parse_task_response(text); });
}

}  // namespace andor
