#include "andor/scripted_controller.hpp"

#include <fstream>

#include "andor/environment.hpp"

namespace andor {

using nlohmann::json;

namespace {

CompletionPolicy parse_completion_policy(const std::string& text) {
  if (text == "complete") return CompletionPolicy::Complete;
  if (text == "incomplete") return CompletionPolicy::Incomplete;
  if (text == "strict") return CompletionPolicy::Strict;
  throw FixtureError("unknown completion policy '" + text + "'");
}

std::string to_string(CompletionPolicy policy) {
  switch (policy) {
    case CompletionPolicy::Complete: return "complete";
    case CompletionPolicy::Incomplete: return "incomplete";
    case CompletionPolicy::Strict: return "strict";
  }
  return "strict";
}

std::string join_lines(const json& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i].get<std::string>();
  }
  return out;
}

bool all_children_successful(const NodeView& node) {
  bool any = false;
  for (const ChildView& child : node.children) {
    if (child.status == NodeStatus::Deleted) continue;
    if (child.status != NodeStatus::Success) return false;
    any = true;
  }
  return any;
}

}  // namespace

Script Script::from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != kFormat) {
      throw FixtureError(std::string("script must declare format \"") + kFormat + "\"");
    }
    Script script;
    script.completion = parse_completion_policy(j.value("completion_policy", std::string("strict")));
    std::string unmatched = j.value("unmatched", std::string("default"));
    if (unmatched == "default") {
      script.unmatched = UnmatchedPolicy::Default;
    } else if (unmatched == "fail") {
      script.unmatched = UnmatchedPolicy::Fail;
    } else {
      throw FixtureError("unknown unmatched policy '" + unmatched + "'");
    }
    for (const auto& e : j.value("entries", json::array())) {
      ScriptEntry entry;
      auto op = parse_operator(e.at("op").get<std::string>());
      if (!op) throw FixtureError("unknown operator '" + e.at("op").get<std::string>() + "'");
      entry.op = *op;
      entry.node = e.value("node", std::string("*"));
      if (e.contains("visit")) entry.visit = e.at("visit").get<int>();
      if (e.contains("obs")) entry.obs = e.at("obs").get<std::string>();
      if (e.contains("response_lines")) {
        entry.response = join_lines(e.at("response_lines"));
      } else {
        entry.response = e.value("response", std::string{});
      }
      script.entries.push_back(std::move(entry));
    }
    return script;
  } catch (const json::exception& e) {
    throw FixtureError(std::string("malformed script: ") + e.what());
  }
}

json Script::to_json() const {
  json entries = json::array();
  for (const ScriptEntry& e : this->entries) {
    json ej = {{"op", andor::to_string(e.op)}, {"node", e.node}, {"response", e.response}};
    if (e.visit) ej["visit"] = *e.visit;
    if (e.obs) ej["obs"] = *e.obs;
    entries.push_back(ej);
  }
  return {{"format", kFormat},
          {"completion_policy", to_string(completion)},
          {"unmatched", unmatched == UnmatchedPolicy::Default ? "default" : "fail"},
          {"entries", entries}};
}

Script load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FixtureError("cannot open script '" + path + "'");
  try {
    return Script::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FixtureError("script '" + path + "' is not valid JSON: " + e.what());
  }
}

ScriptedController::ScriptedController(Script script) : script_(std::move(script)) {}

const ScriptEntry* ScriptedController::match(const ControllerRequest& request) const {
  const int visit = request.node.execution_count;
  std::optional<std::string> hash;
  auto obs_hash = [&]() -> const std::string& {
    if (!hash) hash = observation_hash(request.ctx.current_observation);
    return *hash;
  };
  // Most specific key first: visit+obs, visit, obs, bare node.
  for (int tier = 0; tier < 4; ++tier) {
    for (const ScriptEntry& e : script_.entries) {
      if (e.op != request.op || (e.node != "*" && e.node != request.node.id)) continue;
      const bool want_visit = tier == 0 || tier == 1;
      const bool want_obs = tier == 0 || tier == 2;
      if (e.visit.has_value() != want_visit || e.obs.has_value() != want_obs) continue;
      if (e.visit && *e.visit != visit) continue;
      if (e.obs && *e.obs != obs_hash()) continue;
      return &e;
    }
  }
  return nullptr;
}

std::string ScriptedController::respond(const ControllerRequest& request) {
  if (const ScriptEntry* entry = match(request)) return entry->response;
  if (script_.unmatched == UnmatchedPolicy::Fail) return {};
  return default_response(request);
}

std::string ScriptedController::default_response(const ControllerRequest& request) const {
  switch (request.op) {
    case Operator::Expand:
    case Operator::ReviseAnd:
    case Operator::ReviseOr:
    case Operator::GlobalUpdate:
    case Operator::MemoryUpdate:
      return {};
    case Operator::CheckCompletion: {
      bool complete = script_.completion == CompletionPolicy::Complete ||
                      (script_.completion == CompletionPolicy::Strict && all_children_successful(request.node));
      return render_completion({complete, request.node.id, "scripted " + to_string(script_.completion) + " policy"});
    }
    case Operator::FullUpdate: {
      const Observation& obs = request.ctx.current_observation;
      SummaryUpdate update;
      update.observation_summary = obs.title.empty() ? obs.url : obs.title + " (" + obs.url + ")";
      for (const auto& [id, element] : obs.elements) update.observation_highlights.push_back(id);
      update.task_progress = "Actions executed so far: " + std::to_string(request.ctx.action_history.size());
      return render_summary(update);
    }
    case Operator::ExtractConstraints:
      return render_constraints({});
    case Operator::FinalResponse: {
      std::string answer;
      for (const std::string& note : request.notes) answer += (answer.empty() ? "" : "; ") + note;
      if (!request.stop_answer.empty()) answer += (answer.empty() ? "" : "; ") + request.stop_answer;
      if (answer.empty()) return render_task_response("No grounded answer was found in the collected notes.");
      return render_task_response("Based on the collected notes: " + answer);
    }
  }
  return {};
}

json ScriptedController::describe() const {
  return {{"kind", "scripted"},
          {"entries", script_.entries.size()},
          {"completion_policy", to_string(script_.completion)},
          {"unmatched", script_.unmatched == UnmatchedPolicy::Default ? "default" : "fail"}};
}

}  // namespace andor
