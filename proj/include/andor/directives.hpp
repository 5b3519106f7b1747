#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "andor/memory.hpp"

namespace andor {

class DirectiveParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExpansionKind { And, Or, Atomic };
std::string_view to_string(ExpansionKind kind);
std::optional<ExpansionKind> parse_expansion_kind(std::string_view text);

struct ScoredItem {
  std::string description;
  std::optional<double> score;
  bool operator==(const ScoredItem&) const = default;
};

// Score used when an item carries none: 1.0 - 0.05 * rank, floored at 0.01.
double fallback_score(std::size_t rank);
// "1. First; 2. Second (score: 0.9)". Scores must lie in (0, 1].
std::vector<ScoredItem> parse_numbered_list(std::string_view text);
std::string render_numbered_list(const std::vector<ScoredItem>& items);

struct ExpansionDirective {
  std::string node_id;
  std::string description;
  ExpansionKind kind = ExpansionKind::And;
  bool ordered = true;
  std::string action;               // Atomic only
  std::vector<ScoredItem> children;  // AND / OR only
  std::string reasoning;
  bool operator==(const ExpansionDirective&) const = default;
};

struct RepairAddition {
  std::string target;
  ExpansionKind node_type = ExpansionKind::And;
  std::vector<ScoredItem> children;
  bool operator==(const RepairAddition&) const = default;
};

struct RepairDirective {
  std::vector<std::string> prunes;
  std::vector<RepairAddition> additions;
  std::string reasoning;
  bool empty() const { return prunes.empty() && additions.empty(); }
  bool operator==(const RepairDirective&) const = default;
};

struct GlobalUpdateDirective {
  std::vector<std::string> prunes;
  std::vector<std::pair<std::string, std::string>> updates;
  bool empty() const { return prunes.empty() && updates.empty(); }
  bool operator==(const GlobalUpdateDirective&) const = default;
};

struct CompletionVerdict {
  bool complete = false;
  std::string node_id;
  std::string reasoning;
  bool operator==(const CompletionVerdict&) const = default;
};

struct SummaryUpdate {
  std::string observation_summary;
  std::vector<int> observation_highlights;
  std::string task_progress;
  std::string task_feedback;
  std::string new_notes;
  std::string task_response;
  bool operator==(const SummaryUpdate&) const = default;
};

// All parsers throw DirectiveParseError on format violations.
ExpansionDirective parse_expansion(std::string_view text);
std::string render_expansion(const ExpansionDirective& directive);

RepairDirective parse_repair(std::string_view text);
std::string render_repair(const RepairDirective& directive);

GlobalUpdateDirective parse_global_update(std::string_view text);
std::string render_global_update(const GlobalUpdateDirective& directive);

CompletionVerdict parse_completion(std::string_view text);
std::string render_completion(const CompletionVerdict& verdict);

// Sections may be missing; present sections must be well formed. At least
// one section is required.
SummaryUpdate parse_summary(std::string_view text);
std::string render_summary(const SummaryUpdate& update);

std::string parse_task_response(std::string_view text);
std::string render_task_response(const std::string& response);

// Accepts {"TASK_CONSTRAINTS": [...], "ITEM_CONSTRAINTS": [{item: [..]}]} and
// {"ITEMS": [{"item": .., "constraints": [..]}]}. Surrounding prose and code
// fences are ignored.
ConstraintSet parse_constraints(std::string_view text);
std::string render_constraints(const ConstraintSet& constraints);

}  // namespace andor
