#include <algorithm>

#include <nlohmann/json.hpp>

#include "andor/memory.hpp"
#include "andor/text_util.hpp"

namespace andor {

namespace {

bool is_blank_value(std::string_view value) {
  const std::string v = text_util::lower(text_util::trim(value));
  return v.empty() || v == "unknown" || v == "n/a";
}

Attributes usable_fields(const Attributes& fields) {
  Attributes out;
  for (const auto& [key, value] : fields) {
    if (!is_blank_value(value)) out.emplace_back(key, std::string(text_util::trim(value)));
  }
  return out;
}

void extend_schema(CandidateTable& table, const Attributes& fields) {
  for (const auto& [key, value] : fields) {
    bool known = std::any_of(table.schema.begin(), table.schema.end(),
                             [&](const std::string& k) { return text_util::iequals(k, key); });
    if (!known) table.schema.push_back(key);
  }
}

bool matches_all(const CandidateRow& row, const Attributes& fields) {
  for (const auto& [key, value] : fields) {
    const std::string* existing = row.attribute(key);
    if (existing == nullptr || *existing != value) return false;
  }
  return true;
}

void downgrade_if_inconsistent(CandidateRow& row) {
  if (row.status == RowStatus::Complete && !row.constraints_not_met.empty()) row.status = RowStatus::Uncertain;
}

std::string sanitize_id(std::string id) {
  for (char& c : id) {
    if (c == ' ' || c == '\t' || c == ';' || c == '[' || c == ']') c = '_';
  }
  return id;
}

}  // namespace

void CandidateMemory::declare(const ConstraintSet& constraints) {
  tables_.clear();
  for (const ItemConstraints& item : constraints.items) {
    if (find_table(item.item_type) != nullptr) continue;
    CandidateTable table;
    table.item_type = item.item_type;
    table.constraints = item.constraints;
    for (const Constraint& c : item.constraints) table.schema.push_back(c.key);
    tables_.push_back(std::move(table));
  }
}

CandidateTable* CandidateMemory::find_table(std::string_view item_type) {
  for (CandidateTable& table : tables_) {
    if (text_util::iequals(table.item_type, text_util::trim(item_type))) return &table;
  }
  return nullptr;
}

const CandidateTable* CandidateMemory::table(std::string_view item_type) const {
  return const_cast<CandidateMemory*>(this)->find_table(item_type);
}

ApplyReport CandidateMemory::apply_commands(std::string_view command_text) {
  ApplyReport report;
  for (std::string_view raw : text_util::split_lines(command_text)) {
    auto line = text_util::trim(raw);
    if (line.empty() || text_util::starts_with(line, "```")) continue;
    MemoryCommand command;
    try {
      command = parse_memory_command(line);
    } catch (const CommandParseError& e) {
      report.outcomes.push_back({std::string(line), false, std::string("malformed: ") + e.what()});
      continue;
    }
    report.outcomes.push_back(apply(command, std::string(line)));
  }
  return report;
}

CommandOutcome CandidateMemory::apply(const MemoryCommand& command, std::string line) {
  CandidateTable* table = find_table(command.item_type);
  if (table == nullptr) return {std::move(line), false, "unknown item type '" + command.item_type + "'"};
  CommandOutcome outcome;
  switch (command.kind) {
    case MemoryCommand::Kind::Add:
      outcome = apply_add(*table, command);
      break;
    case MemoryCommand::Kind::Update: {
      CandidateRow* row = table->find_row(command.row_id);
      if (row == nullptr) {
        outcome = {{}, false, "unknown row " + command.row_id};
      } else if (row->status == RowStatus::Deleted) {
        outcome = {{}, false, "row " + command.row_id + " is deleted"};
      } else {
        outcome = apply_update(*table, *row, command);
      }
      break;
    }
    case MemoryCommand::Kind::Delete: {
      CandidateRow* row = table->find_row(command.row_id);
      if (row == nullptr) {
        outcome = {{}, false, "unknown row " + command.row_id};
      } else {
        row->status = RowStatus::Deleted;
        outcome = {{}, true, "deleted " + command.row_id};
      }
      break;
    }
  }
  outcome.line = std::move(line);
  return outcome;
}

CommandOutcome CandidateMemory::apply_add(CandidateTable& table, const MemoryCommand& command) {
  Attributes fields = usable_fields(command.fields);
  if (fields.empty()) return {{}, false, "ADD without attribute values"};
  for (CandidateRow& row : table.rows) {
    if (row.status == RowStatus::Deleted || !matches_all(row, fields)) continue;
    MemoryCommand merged = command;
    merged.kind = MemoryCommand::Kind::Update;
    merged.row_id = row.row_id;
    CommandOutcome outcome = apply_update(table, row, merged);
    if (outcome.accepted) outcome.reason = "duplicate of " + row.row_id + "; merged";
    return outcome;
  }

  CandidateRow row;
  row.item_type = table.item_type;
  row.attributes = fields;
  row.constraints_not_met = command.constraints_not_met.value_or(std::vector<std::string>{});
  if (command.status) {
    auto status = parse_row_status(*command.status);
    if (!status || *status == RowStatus::Deleted) return {{}, false, "invalid status '" + *command.status + "'"};
    row.status = *status;
  }
  row.comment = command.comment.value_or("");
  downgrade_if_inconsistent(row);

  const int declared = static_cast<int>(table.constraints.size());
  const int satisfied = satisfied_count(table, row);
  if (declared > 0 && satisfied * 5 < declared * 3) {
    return {{}, false,
            "satisfies " + std::to_string(satisfied) + " of " + std::to_string(declared) +
                " constraints; at least 60% required"};
  }

  std::string base = sanitize_id(command.row_id.empty() ? "R" + std::to_string(table.rows.size() + 1) : command.row_id);
  std::string id = base;
  for (int bump = 2; table.find_row(id) != nullptr; ++bump) id = base + "-" + std::to_string(bump);
  row.row_id = id;
  extend_schema(table, fields);
  table.rows.push_back(std::move(row));
  return {{}, true, id == base ? "added " + id : "added as " + id + " (id collision)"};
}

CommandOutcome CandidateMemory::apply_update(CandidateTable& table, CandidateRow& row, const MemoryCommand& command) {
  std::optional<RowStatus> status;
  if (command.status) {
    status = parse_row_status(*command.status);
    if (!status || *status == RowStatus::Deleted) return {{}, false, "invalid status '" + *command.status + "'"};
  }
  Attributes fields = usable_fields(command.fields);
  for (const auto& [key, value] : fields) {
    auto it = std::find_if(row.attributes.begin(), row.attributes.end(),
                           [&](const auto& kv) { return text_util::iequals(kv.first, key); });
    if (it == row.attributes.end()) {
      row.attributes.emplace_back(key, value);
    } else {
      it->second = value;
    }
    if (!command.constraints_not_met) {
      std::erase_if(row.constraints_not_met, [&](const std::string& k) { return text_util::iequals(k, key); });
    }
  }
  if (command.constraints_not_met) row.constraints_not_met = *command.constraints_not_met;
  if (status) row.status = *status;
  if (command.comment) row.comment = *command.comment;
  downgrade_if_inconsistent(row);
  extend_schema(table, fields);
  return {{}, true, "updated " + row.row_id};
}

std::string CandidateMemory::validate_tables() const {
  std::string out;
  for (const CandidateTable& table : tables_) {
    const int declared = static_cast<int>(table.constraints.size());
    for (const CandidateRow& row : table.rows) {
      if (row.status == RowStatus::Deleted) continue;
      std::vector<std::string> unmet;
      int present = 0;
      int violated = 0;
      for (const Constraint& c : table.constraints) {
        ConstraintState state = evaluate_constraint(c, row);
        if (state != ConstraintState::Missing) ++present;
        if (state == ConstraintState::Violated) ++violated;
        if (state != ConstraintState::Satisfied) unmet.push_back(c.key);
      }
      const bool mostly_complete = 2 * present > declared;
      if (mostly_complete && ((row.status == RowStatus::Complete && !unmet.empty()) || 2 * violated > declared)) {
        MemoryCommand del;
        del.kind = MemoryCommand::Kind::Delete;
        del.item_type = table.item_type;
        del.row_id = row.row_id;
        out += render_memory_command(del) + "\n";
        continue;
      }
      const RowStatus expected = unmet.empty() ? RowStatus::Complete : RowStatus::Uncertain;
      if (unmet == row.constraints_not_met && expected == row.status) continue;
      MemoryCommand fix;
      fix.kind = MemoryCommand::Kind::Update;
      fix.item_type = table.item_type;
      fix.row_id = row.row_id;
      fix.constraints_not_met = unmet;
      fix.status = std::string(to_string(expected));
      std::string comment = unmet.empty() ? "all constraints met" : "constraints not met:";
      for (std::size_t i = 0; i < unmet.size(); ++i) comment += (i ? ", " : " ") + unmet[i];
      fix.comment = comment;
      out += render_memory_command(fix) + "\n";
    }
  }
  return out;
}

std::vector<CandidateRow> CandidateMemory::top_k(std::string_view item_type, std::size_t k) const {
  const CandidateTable* t = table(item_type);
  if (t == nullptr) return {};
  std::vector<std::pair<int, const CandidateRow*>> ranked;
  for (const CandidateRow& row : t->rows) {
    if (row.status != RowStatus::Deleted) ranked.emplace_back(satisfied_count(*t, row), &row);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<CandidateRow> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(*ranked[i].second);
  return out;
}

std::string CandidateMemory::render_row(const CandidateRow& row) {
  MemoryCommand command;
  command.kind = MemoryCommand::Kind::Update;
  command.item_type = row.item_type;
  command.row_id = row.row_id;
  command.fields = row.attributes;
  command.constraints_not_met = row.constraints_not_met;
  command.status = std::string(to_string(row.status));
  command.comment = row.comment;
  std::string line = render_memory_command(command);
  return line.substr(std::string_view("UPDATE ").size());
}

std::string CandidateMemory::render_excerpt(std::size_t k) const {
  std::string out;
  for (const CandidateTable& table : tables_) {
    out += "# " + table.item_type + " (constraints:";
    for (std::size_t i = 0; i < table.constraints.size(); ++i) {
      out += (i ? "; " : " ") + table.constraints[i].text();
    }
    out += ")\n";
    for (const CandidateRow& row : top_k(table.item_type, k)) out += render_row(row) + "\n";
  }
  return out;
}

nlohmann::json CandidateMemory::to_json() const {
  using nlohmann::json;
  json tables = json::array();
  for (const CandidateTable& table : tables_) {
    json constraints = json::array();
    for (const Constraint& c : table.constraints) constraints.push_back(c.text());
    json rows = json::array();
    for (const CandidateRow& row : table.rows) {
      json attributes = json::array();
      for (const auto& [key, value] : row.attributes) attributes.push_back({key, value});
      rows.push_back({{"row_id", row.row_id},
                      {"attributes", attributes},
                      {"constraints_not_met", row.constraints_not_met},
                      {"status", to_string(row.status)},
                      {"comment", row.comment},
                      {"satisfied", satisfied_count(table, row)}});
    }
    tables.push_back(
        {{"item_type", table.item_type}, {"constraints", constraints}, {"schema", table.schema}, {"rows", rows}});
  }
  return tables;
}

}  // namespace andor
