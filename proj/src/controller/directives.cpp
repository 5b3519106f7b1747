#include "andor/directives.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

#include <nlohmann/json.hpp>

#include "andor/environment.hpp"
#include "andor/text_util.hpp"

namespace andor {

namespace {

using text_util::trim;

[[noreturn]] void fail(const std::string& message) { throw DirectiveParseError(message); }

std::string format_score(double score) {
  std::ostringstream out;
  out << score;
  return out.str();
}

// Value of a "<<...>>" block starting at or after pos (only whitespace may
// precede it). Extra trailing '>' characters are tolerated. On return pos
// points past the block.
std::string take_delimited(std::string_view text, std::size_t& pos, std::string_view what) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r' || text[pos] == '\n')) ++pos;
  if (text.substr(pos, 2) != "<<") fail(std::string(what) + ": expected '<<'");
  std::size_t open = pos + 2;
  std::size_t close = text.find(">>", open);
  if (close == std::string_view::npos) fail(std::string(what) + ": missing '>>'");
  if (text.substr(open, close - open).find("<<") != std::string_view::npos) {
    fail(std::string(what) + ": nested '<<' before closing '>>'");
  }
  pos = close + 2;
  while (pos < text.size() && text[pos] == '>') ++pos;
  return std::string(trim(text.substr(open, close - open)));
}

// Line-anchored key lookup: the value after the first line (at or after
// from) whose trimmed text starts with key.
std::optional<std::string> keyed_value(std::string_view text, std::string_view key, std::size_t from = 0) {
  std::size_t line_start = from;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = text.substr(line_start, line_end - line_start);
    std::size_t indent = line.find_first_not_of(" \t");
    if (indent != std::string_view::npos && line.substr(indent, key.size()) == key) {
      std::size_t pos = line_start + indent + key.size();
      return take_delimited(text, pos, key);
    }
    line_start = line_end + 1;
  }
  return std::nullopt;
}

std::size_t last_line_with(std::string_view text, std::string_view key) {
  std::size_t found = std::string_view::npos;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = trim(text.substr(line_start, line_end - line_start));
    if (line.substr(0, key.size()) == key) found = line_start;
    line_start = line_end + 1;
  }
  return found;
}

std::string_view strip_bullet(std::string_view line) {
  line = trim(line);
  if (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim(line.substr(1));
  return line;
}

// "[id]" at pos; advances pos past the closing bracket.
std::string take_bracketed_id(std::string_view text, std::size_t& pos, std::string_view what) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  if (pos >= text.size() || text[pos] != '[') fail(std::string(what) + ": expected '['");
  std::size_t close = text.find(']', pos);
  if (close == std::string_view::npos) fail(std::string(what) + ": missing ']'");
  std::string id(trim(text.substr(pos + 1, close - pos - 1)));
  if (id.empty() || id.find_first_of("[ \t") != std::string::npos) fail(std::string(what) + ": malformed node id");
  pos = close + 1;
  return id;
}

void expect_end(std::string_view text, std::size_t pos, std::string_view what) {
  if (!trim(text.substr(std::min(pos, text.size()))).empty()) fail(std::string(what) + ": unexpected trailing text");
}

bool keyword_line(std::string_view line, std::string_view keyword) {
  return line.substr(0, keyword.size()) == keyword &&
         (line.size() == keyword.size() || line[keyword.size()] == ' ' || line[keyword.size()] == '[' ||
          line[keyword.size()] == '<' || line[keyword.size()] == ':');
}

ScoredItem parse_item(std::string_view raw) {
  std::string_view item = trim(raw);
  ScoredItem out;
  auto marker = item.rfind("(score:");
  if (marker != std::string_view::npos) {
    std::string_view tail = trim(item.substr(marker + 7));
    if (tail.empty() || tail.back() != ')') fail("score suffix must end with ')'");
    std::string number(trim(tail.substr(0, tail.size() - 1)));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc{} || ptr != number.data() + number.size()) fail("unparseable score '" + number + "'");
    if (!(value > 0.0 && value <= 1.0)) fail("score " + number + " outside (0, 1]");
    out.score = value;
    item = trim(item.substr(0, marker));
  }
  if (item.empty()) fail("empty list item");
  out.description = std::string(item);
  return out;
}

constexpr std::array<std::string_view, 6> kSummaryHeaders{"OBSERVATION SUMMARY", "OBSERVATION HIGHLIGHTS", "NEW NOTES",
                                                          "TASK PROGRESS",       "TASK FEEDBACK",          "TASK RESPONSE"};

std::vector<int> parse_highlights(std::string_view value) {
  value = trim(value);
  if (!value.empty() && value.front() == '[') {
    if (value.back() != ']') fail("highlights list missing ']'");
    value = value.substr(1, value.size() - 2);
  }
  std::vector<int> ids;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    std::string_view token = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!token.empty()) {
      int id = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
      if (ec != std::errc{} || ptr != token.data() + token.size()) fail("non-integer highlight '" + std::string(token) + "'");
      ids.push_back(id);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ids;
}

std::vector<std::string> string_list(const nlohmann::json& j) {
  std::vector<std::string> out;
  if (!j.is_array()) fail("constraint list must be an array");
  for (const auto& v : j) {
    if (!v.is_string()) fail("constraints must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void add_item(ConstraintSet& set, const std::string& item, const std::vector<std::string>& constraints) {
  if (trim(item).empty()) fail("empty item name");
  auto it = std::find_if(set.items.begin(), set.items.end(),
                         [&](const ItemConstraints& x) { return text_util::iequals(x.item_type, trim(item)); });
  if (it == set.items.end()) {
    set.items.push_back({std::string(trim(item)), {}});
    it = std::prev(set.items.end());
  }
  for (const std::string& text : constraints) {
    Constraint c = Constraint::parse(text);
    if (c.key.empty()) continue;
    if (std::find(it->constraints.begin(), it->constraints.end(), c) == it->constraints.end()) it->constraints.push_back(c);
  }
}

}  // namespace

std::string_view to_string(ExpansionKind kind) {
  switch (kind) {
    case ExpansionKind::And: return "AND";
    case ExpansionKind::Or: return "OR";
    case ExpansionKind::Atomic: return "Atomic";
  }
  return "AND";
}

std::optional<ExpansionKind> parse_expansion_kind(std::string_view text) {
  const std::string t = text_util::lower(trim(text));
  if (t == "and") return ExpansionKind::And;
  if (t == "or") return ExpansionKind::Or;
  if (t == "atomic") return ExpansionKind::Atomic;
  return std::nullopt;
}

double fallback_score(std::size_t rank) { return std::max(0.01, 1.0 - 0.05 * static_cast<double>(rank)); }

std::vector<ScoredItem> parse_numbered_list(std::string_view text) {
  text = trim(text);
  if (text.substr(0, 2) != "1." ) fail("list must start with '1.'");
  std::vector<ScoredItem> items;
  std::size_t start = 2;
  for (int next = 2;; ++next) {
    const std::string marker = std::to_string(next) + ".";
    std::size_t found = std::string_view::npos;
    for (std::size_t pos = text.find(marker, start); pos != std::string_view::npos; pos = text.find(marker, pos + 1)) {
      // The marker must follow a ';' or ',' separator and precede whitespace.
      std::size_t before = pos;
      while (before > start && (text[before - 1] == ' ' || text[before - 1] == '\t' || text[before - 1] == '\n')) --before;
      bool separated = before > start && (text[before - 1] == ';' || text[before - 1] == ',');
      bool spaced = pos + marker.size() < text.size() && (text[pos + marker.size()] == ' ' || text[pos + marker.size()] == '\t');
      if (separated && spaced) {
        found = pos;
        break;
      }
    }
    if (found == std::string_view::npos) {
      std::string_view last = trim(text.substr(start));
      if (!last.empty() && last.back() == ';') last = trim(last.substr(0, last.size() - 1));
      items.push_back(parse_item(last));
      break;
    }
    std::size_t end = found;
    while (end > start && (text[end - 1] == ' ' || text[end - 1] == '\t' || text[end - 1] == '\n')) --end;
    items.push_back(parse_item(text.substr(start, end - 1 - start)));
    start = found + marker.size();
  }
  return items;
}

std::string render_numbered_list(const std::vector<ScoredItem>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "; ";
    out += std::to_string(i + 1) + ". " + items[i].description;
    if (items[i].score) out += " (score: " + format_score(*items[i].score) + ")";
  }
  return out;
}

ExpansionDirective parse_expansion(std::string_view text) {
  std::size_t anchor = last_line_with(text, "Node ID:");
  if (anchor == std::string_view::npos) fail("expansion: missing 'Node ID:'");
  ExpansionDirective d;
  d.node_id = *keyed_value(text, "Node ID:", anchor);
  if (d.node_id.empty()) fail("expansion: empty node id");
  if (auto desc = keyed_value(text, "Node Description:", anchor)) d.description = *desc;
  auto type = keyed_value(text, "Node Type:", anchor);
  if (!type) fail("expansion: missing 'Node Type:'");
  auto kind = parse_expansion_kind(*type);
  if (!kind) fail("expansion: unknown node type '" + *type + "'");
  d.kind = *kind;
  auto expansion = keyed_value(text, "Expansion:", anchor);
  if (!expansion) fail("expansion: missing 'Expansion:'");
  if (auto ordered = keyed_value(text, "Ordered:", anchor)) {
    const std::string v = text_util::lower(*ordered);
    if (v == "true" || v == "yes") {
      d.ordered = true;
    } else if (v == "false" || v == "no") {
      d.ordered = false;
    } else {
      fail("expansion: Ordered must be true or false");
    }
  }
  if (auto reasoning = keyed_value(text, "Reasoning:", anchor)) d.reasoning = *reasoning;

  if (d.kind == ExpansionKind::Atomic) {
    try {
      parse_action(*expansion);
    } catch (const ActionParseError& e) {
      fail(std::string("expansion: atomic payload is not a valid action: ") + e.what());
    }
    d.action = *expansion;
  } else {
    d.children = parse_numbered_list(*expansion);
  }
  return d;
}

std::string render_expansion(const ExpansionDirective& d) {
  std::string out = "Node ID: <<" + d.node_id + ">>\n";
  out += "Node Description: <<" + d.description + ">>\n";
  out += "Node Type: <<" + std::string(to_string(d.kind)) + ">>\n";
  if (d.kind == ExpansionKind::Atomic) {
    out += "Expansion: <<" + d.action + ">>\n";
  } else {
    out += "Expansion: <<" + render_numbered_list(d.children) + ">>\n";
  }
  if (d.kind == ExpansionKind::And && !d.ordered) out += "Ordered: <<false>>\n";
  if (!d.reasoning.empty()) out += "Reasoning: <<" + d.reasoning + ">>\n";
  return out;
}

RepairDirective parse_repair(std::string_view text) {
  RepairDirective d;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = strip_bullet(text.substr(line_start, line_end - line_start));
    if (keyword_line(line, "PRUNE")) {
      std::size_t pos = 5;
      d.prunes.push_back(take_bracketed_id(line, pos, "PRUNE"));
      expect_end(line, pos, "PRUNE");
    } else if (keyword_line(line, "ADD")) {
      std::size_t pos = 3;
      RepairAddition add;
      add.target = take_bracketed_id(line, pos, "ADD");
      std::size_t colon = line.find(':', pos);
      if (colon == std::string_view::npos) fail("ADD: missing ':' after node type");
      auto kind = parse_expansion_kind(line.substr(pos, colon - pos));
      if (!kind) fail("ADD: unknown node type '" + std::string(trim(line.substr(pos, colon - pos))) + "'");
      add.node_type = *kind;
      pos = colon + 1;
      add.children = parse_numbered_list(take_delimited(line, pos, "ADD"));
      expect_end(line, pos, "ADD");
      d.additions.push_back(std::move(add));
    } else if (keyword_line(line, "Reasoning")) {
      std::size_t offset = static_cast<std::size_t>(line.data() - text.data());
      std::size_t pos = offset + 9;
      while (pos < text.size() && text[pos] == ' ') ++pos;
      if (pos < text.size() && text[pos] == ':') ++pos;
      d.reasoning = take_delimited(text, pos, "Reasoning");
      line_end = text.find('\n', pos);
      if (line_end == std::string_view::npos) line_end = text.size();
    }
    line_start = line_end + 1;
  }
  return d;
}

std::string render_repair(const RepairDirective& d) {
  std::string out;
  for (const std::string& id : d.prunes) out += "PRUNE [" + id + "]\n";
  for (const RepairAddition& add : d.additions) {
    out += "ADD [" + add.target + "] " + std::string(to_string(add.node_type)) + " : <<" +
           render_numbered_list(add.children) + ">>\n";
  }
  if (!d.reasoning.empty()) out += "Reasoning <<" + d.reasoning + ">>\n";
  return out;
}

GlobalUpdateDirective parse_global_update(std::string_view text) {
  GlobalUpdateDirective d;
  for (std::string_view raw : text_util::split_lines(text)) {
    std::string_view line = strip_bullet(raw);
    if (keyword_line(line, "PRUNE")) {
      std::size_t pos = 5;
      d.prunes.push_back(take_bracketed_id(line, pos, "PRUNE"));
      expect_end(line, pos, "PRUNE");
    } else if (keyword_line(line, "UPDATE")) {
      std::size_t pos = 6;
      std::string id = take_bracketed_id(line, pos, "UPDATE");
      std::string description = take_delimited(line, pos, "UPDATE");
      if (description.empty()) fail("UPDATE: empty description");
      expect_end(line, pos, "UPDATE");
      d.updates.emplace_back(std::move(id), std::move(description));
    }
  }
  return d;
}

std::string render_global_update(const GlobalUpdateDirective& d) {
  std::string out;
  for (const std::string& id : d.prunes) out += "PRUNE [" + id + "]\n";
  for (const auto& [id, description] : d.updates) out += "UPDATE [" + id + "] <<" + description + ">>\n";
  return out;
}

CompletionVerdict parse_completion(std::string_view text) {
  std::optional<CompletionVerdict> verdict;
  std::size_t line_start = 0;
  while (line_start < text.size() && !verdict) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = strip_bullet(text.substr(line_start, line_end - line_start));
    for (std::string_view keyword : {std::string_view("INCOMPLETE"), std::string_view("COMPLETE")}) {
      if (!keyword_line(line, keyword)) continue;
      std::size_t pos = keyword.size();
      CompletionVerdict v;
      v.complete = keyword == "COMPLETE";
      v.node_id = take_delimited(line, pos, keyword);
      if (v.node_id.empty()) fail("completion: empty node id");
      expect_end(line, pos, keyword);
      verdict = v;
      if (auto reasoning = keyed_value(text, "Reasoning:", line_end)) verdict->reasoning = *reasoning;
      break;
    }
    line_start = line_end + 1;
  }
  if (!verdict) fail("completion: missing COMPLETE/INCOMPLETE line");
  return *verdict;
}

std::string render_completion(const CompletionVerdict& v) {
  std::string out = std::string(v.complete ? "COMPLETE" : "INCOMPLETE") + " <<" + v.node_id + ">>\n";
  if (!v.reasoning.empty()) out += "Reasoning: <<" + v.reasoning + ">>\n";
  return out;
}

SummaryUpdate parse_summary(std::string_view text) {
  SummaryUpdate update;
  int sections = 0;
  for (std::size_t h = 0; h < kSummaryHeaders.size(); ++h) {
    std::string_view header = kSummaryHeaders[h];
    std::size_t line_start = 0;
    std::optional<std::string> value;
    while (line_start < text.size()) {
      std::size_t line_end = text.find('\n', line_start);
      if (line_end == std::string_view::npos) line_end = text.size();
      std::string_view line = trim(text.substr(line_start, line_end - line_start));
      if (line == header || (line.size() == header.size() + 1 && line.substr(0, header.size()) == header && line.back() == ':')) {
        std::size_t pos = line_end;
        value = take_delimited(text, pos, header);
        break;
      }
      line_start = line_end + 1;
    }
    if (!value) continue;
    ++sections;
    switch (h) {
      case 0: update.observation_summary = *value; break;
      case 1: update.observation_highlights = parse_highlights(*value); break;
      case 2: update.new_notes = *value; break;
      case 3: update.task_progress = *value; break;
      case 4: update.task_feedback = *value; break;
      case 5: update.task_response = *value; break;
      default: break;
    }
  }
  if (sections == 0) fail("summary: no recognized sections");
  return update;
}

std::string render_summary(const SummaryUpdate& u) {
  std::string highlights = "[";
  for (std::size_t i = 0; i < u.observation_highlights.size(); ++i) {
    highlights += (i ? ", " : "") + std::to_string(u.observation_highlights[i]);
  }
  highlights += "]";
  std::string out;
  out += "OBSERVATION SUMMARY\n<<" + u.observation_summary + ">>\n\n";
  out += "OBSERVATION HIGHLIGHTS\n<<" + highlights + ">>\n\n";
  out += "NEW NOTES\n<<" + u.new_notes + ">>\n\n";
  out += "TASK PROGRESS\n<<" + u.task_progress + ">>\n\n";
  out += "TASK FEEDBACK\n<<" + u.task_feedback + ">>\n";
  if (!u.task_response.empty()) out += "\nTASK RESPONSE\n<<" + u.task_response + ">>\n";
  return out;
}

std::string parse_task_response(std::string_view text) {
  std::size_t anchor = last_line_with(text, "Task Response:");
  if (anchor == std::string_view::npos) fail("task response: missing 'Task Response:'");
  return *keyed_value(text, "Task Response:", anchor);
}

std::string render_task_response(const std::string& response) { return "Task Response: <<" + response + ">>\n"; }

ConstraintSet parse_constraints(std::string_view text) {
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    fail("constraints: no JSON object found");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(open, close - open + 1));
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string("constraints: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("constraints: expected a JSON object");
  ConstraintSet set;
  if (j.contains("TASK_CONSTRAINTS")) set.task_constraints = string_list(j["TASK_CONSTRAINTS"]);
  if (j.contains("ITEM_CONSTRAINTS")) {
    if (!j["ITEM_CONSTRAINTS"].is_array()) fail("constraints: ITEM_CONSTRAINTS must be an array");
    for (const auto& entry : j["ITEM_CONSTRAINTS"]) {
      if (!entry.is_object()) fail("constraints: ITEM_CONSTRAINTS entries must be objects");
      for (const auto& [item, constraints] : entry.items()) add_item(set, item, string_list(constraints));
    }
  }
  if (j.contains("ITEMS")) {
    if (!j["ITEMS"].is_array()) fail("constraints: ITEMS must be an array");
    for (const auto& entry : j["ITEMS"]) {
      if (!entry.is_object() || !entry.contains("item") || !entry["item"].is_string()) {
        fail("constraints: ITEMS entries need an \"item\" string");
      }
      add_item(set, entry["item"].get<std::string>(),
               entry.contains("constraints") ? string_list(entry["constraints"]) : std::vector<std::string>{});
    }
  }
  if (!j.contains("TASK_CONSTRAINTS") && !j.contains("ITEM_CONSTRAINTS") && !j.contains("ITEMS")) {
    fail("constraints: none of TASK_CONSTRAINTS, ITEM_CONSTRAINTS, ITEMS present");
  }
  return set;
}

std::string render_constraints(const ConstraintSet& set) {
  nlohmann::json items = nlohmann::json::array();
  for (const ItemConstraints& item : set.items) {
    std::vector<std::string> texts;
    for (const Constraint& c : item.constraints) texts.push_back(c.text());
    items.push_back({{item.item_type, texts}});
  }
  return nlohmann::json{{"TASK_CONSTRAINTS", set.task_constraints}, {"ITEM_CONSTRAINTS", items}}.dump();
}

}  // namespace andor
