#include <fstream>
#include <sstream>

#include "andor/remote_controller.hpp"
#include "andor/snapshot.hpp"

namespace andor {

namespace {

std::string render_children(const NodeView& node) {
  std::string out;
  for (const ChildView& child : node.children) {
    out += "- [" + child.id + "] (" + std::string(to_string(child.type)) + ") " + child.description;
    if (child.score) {
      std::ostringstream score;
      score << *child.score;
      out += " (score: " + score.str() + ")";
    }
    out += " [" + std::string(to_string(child.status)) + "]\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string render_interactions(const std::vector<InteractionRecord>& records) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(i + 1) + ". " + records[i].summary + "\n   action: " + records[i].action + "\n";
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

std::string fill_template(std::string_view tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    if (tpl[pos] == '{') {
      auto close = tpl.find('}', pos + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tpl.substr(pos + 1, close - pos - 1)));
        if (it != values.end()) {
          out += it->second;
          pos = close + 1;
          continue;
        }
      }
    }
    out += tpl[pos++];
  }
  return out;
}

std::map<std::string, std::string> template_values(const ControllerRequest& request) {
  const ContextBundle& ctx = request.ctx;
  const Observation& obs = ctx.current_observation;
  return {
      {"task_description", ctx.task_description},
      {"item_constraints", ctx.item_constraints.render()},
      {"task_progress", ctx.task_progress_summary},
      {"task_feedback", ctx.task_feedback},
      {"notes", ctx.notes_summary},
      {"observation_summary", ctx.observation_summary},
      {"action_history", join(ctx.action_history, "\n")},
      {"interaction_history", render_interactions(ctx.interaction_history)},
      {"current_observation", "URL: " + obs.url + "\nTITLE: " + obs.title + "\n" + obs.page_text},
      {"local_tree_info", ctx.local_tree_info},
      {"candidate_table", ctx.candidate_table_excerpt},
      {"node_id", request.node.id},
      {"node_description", request.node.description},
      {"node_type", std::string(to_string(request.node.type))},
      {"children", render_children(request.node)},
      {"reason", request.reason},
      {"tree", request.tree_outline},
      {"memory_tables", request.memory_tables},
      {"collected_notes", join(request.notes, "\n")},
      {"stop_answer", request.stop_answer},
  };
}

PromptLibrary::PromptLibrary(std::string directory) : directory_(std::move(directory)) {}

std::vector<std::string> PromptLibrary::template_names(Operator op) {
  switch (op) {
    case Operator::Expand: return {"expand"};
    case Operator::ReviseAnd:
    case Operator::ReviseOr: return {"repair"};
    case Operator::GlobalUpdate: return {"global_update"};
    case Operator::CheckCompletion: return {"check_completion"};
    case Operator::FullUpdate: return {"observation_summary", "notes_summary"};
    case Operator::ExtractConstraints: return {"extract_constraints"};
    case Operator::MemoryUpdate: return {"memory_update"};
    case Operator::FinalResponse: return {"final_response"};
  }
  return {};
}

std::string PromptLibrary::load(const std::string& name) const {
  const std::string path = directory_ + "/" + name + ".txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing prompt template " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::string> PromptLibrary::render(const ControllerRequest& request) const {
  auto values = template_values(request);
  std::vector<std::string> prompts;
  for (const std::string& name : template_names(request.op)) prompts.push_back(fill_template(load(name), values));
  return prompts;
}

}  // namespace andor
