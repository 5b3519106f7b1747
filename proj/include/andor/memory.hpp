#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace andor {

// "Price: under $40" -> key "Price", requirement "under $40".
struct Constraint {
  std::string key;
  std::string requirement;

  static Constraint parse(std::string_view text);
  std::string text() const;
  bool operator==(const Constraint&) const = default;
};

struct ItemConstraints {
  std::string item_type;
  std::vector<Constraint> constraints;
  bool operator==(const ItemConstraints&) const = default;
};

struct ConstraintSet {
  std::vector<std::string> task_constraints;
  std::vector<ItemConstraints> items;

  bool empty() const { return task_constraints.empty() && items.empty(); }
  std::string render() const;
  bool operator==(const ConstraintSet&) const = default;
};

enum class Bound { None, Below, AtMost, Above, AtLeast };

struct NumericRequirement {
  Bound bound = Bound::None;
  double value = 0.0;
};

// Recognizes "under $350", "at most 2", "within 2 days", "4+", "over 100", ...
std::optional<NumericRequirement> parse_numeric_requirement(std::string_view requirement);
// First number in text after dropping "$" and thousands separators.
std::optional<double> parse_number(std::string_view text);

enum class RowStatus { Uncertain, Complete, Deleted };
std::string_view to_string(RowStatus status);
std::optional<RowStatus> parse_row_status(std::string_view text);

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct CandidateRow {
  std::string item_type;
  std::string row_id;
  Attributes attributes;
  std::vector<std::string> constraints_not_met;
  RowStatus status = RowStatus::Uncertain;
  std::string comment;

  const std::string* attribute(std::string_view key) const;
  bool operator==(const CandidateRow&) const = default;
};

struct CandidateTable {
  std::string item_type;
  std::vector<Constraint> constraints;
  std::vector<CandidateRow> rows;
  std::vector<std::string> schema;

  CandidateRow* find_row(std::string_view row_id);
  const CandidateRow* find_row(std::string_view row_id) const;
};

enum class ConstraintState { Satisfied, Missing, Violated, MarkedUnmet };

// Per-constraint evaluation of a row: numeric requirements decide when both
// sides parse; otherwise presence plus the row's constraints_not_met list.
ConstraintState evaluate_constraint(const Constraint& constraint, const CandidateRow& row);
int satisfied_count(const CandidateTable& table, const CandidateRow& row);

// One parsed ADD/UPDATE/DELETE line.
struct MemoryCommand {
  enum class Kind { Add, Update, Delete };
  Kind kind = Kind::Add;
  std::string item_type;
  std::string row_id;
  Attributes fields;
  std::optional<std::vector<std::string>> constraints_not_met;
  std::optional<std::string> status;
  std::optional<std::string> comment;
};

class CommandParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

MemoryCommand parse_memory_command(std::string_view line);
std::string render_memory_command(const MemoryCommand& command);

struct CommandOutcome {
  std::string line;
  bool accepted = false;
  std::string reason;
};

struct ApplyReport {
  std::vector<CommandOutcome> outcomes;
  int accepted() const;
  int rejected() const;
};

class CandidateMemory {
 public:
  // Declares item types and their constraints; resets all tables.
  void declare(const ConstraintSet& constraints);
  bool active() const { return !tables_.empty(); }

  ApplyReport apply_commands(std::string_view command_text);
  // Commands that bring constraints_not_met/status in line with the declared
  // constraints; empty when nothing needs fixing.
  std::string validate_tables() const;
  std::vector<CandidateRow> top_k(std::string_view item_type, std::size_t k) const;

  const CandidateTable* table(std::string_view item_type) const;
  const std::vector<CandidateTable>& tables() const { return tables_; }

  // "item:ID key:value; ...; status:...; comment:"..."" per row. Prefixing a
  // line with "UPDATE " yields a command that reproduces the row.
  static std::string render_row(const CandidateRow& row);
  // Top-k rows of every table, one per line.
  std::string render_excerpt(std::size_t k) const;
  nlohmann::json to_json() const;

 private:
  CandidateTable* find_table(std::string_view item_type);
  CommandOutcome apply(const MemoryCommand& command, std::string line);
  CommandOutcome apply_add(CandidateTable& table, const MemoryCommand& command);
  CommandOutcome apply_update(CandidateTable& table, CandidateRow& row, const MemoryCommand& command);

  std::vector<CandidateTable> tables_;
};

}  // namespace andor
