#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "andor/memory.hpp"
#include "andor/text_util.hpp"

namespace andor {

Constraint Constraint::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return {std::string(text_util::trim(text)), {}};
  return {std::string(text_util::trim(text.substr(0, colon))), std::string(text_util::trim(text.substr(colon + 1)))};
}

std::string Constraint::text() const { return requirement.empty() ? key : key + ": " + requirement; }

std::string ConstraintSet::render() const {
  std::string out;
  for (const std::string& c : task_constraints) out += "- task: " + c + "\n";
  for (const ItemConstraints& item : items) {
    out += "- " + item.item_type + ":";
    for (std::size_t i = 0; i < item.constraints.size(); ++i) {
      out += (i == 0 ? " " : "; ") + item.constraints[i].text();
    }
    out += "\n";
  }
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  std::string cleaned;
  for (char c : text) {
    if (c == '$' || c == ',') continue;
    cleaned += c;
  }
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(cleaned[i]))) continue;
    std::size_t start = i;
    if (start > 0 && cleaned[start - 1] == '.') --start;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cleaned.data() + start, cleaned.data() + cleaned.size(), value);
    if (ec == std::errc{}) return value;
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<NumericRequirement> parse_numeric_requirement(std::string_view requirement) {
  const std::string req = text_util::lower(requirement);
  struct Cue {
    std::string_view phrase;
    Bound bound;
  };
  // Longer phrases first so "at least" wins over "least" style overlaps.
  static constexpr std::array<Cue, 22> kCues{{
      {"no more than", Bound::AtMost},  {"less than", Bound::Below},     {"fewer than", Bound::Below},
      {"cheaper than", Bound::Below},   {"greater than", Bound::Above},  {"more than", Bound::Above},
      {"at least", Bound::AtLeast},     {"at most", Bound::AtMost},      {"or more", Bound::AtLeast},
      {"or higher", Bound::AtLeast},    {"or less", Bound::AtMost},      {"minimum", Bound::AtLeast},
      {"maximum", Bound::AtMost},       {"within", Bound::AtMost},       {"up to", Bound::AtMost},
      {"under", Bound::Below},          {"below", Bound::Below},         {"above", Bound::Above},
      {"over", Bound::Above},           {"<=", Bound::AtMost},           {">=", Bound::AtLeast},
      {"max", Bound::AtMost},
  }};
  auto number = parse_number(req);
  if (!number) return std::nullopt;
  for (const Cue& cue : kCues) {
    if (text_util::contains_word(req, cue.phrase)) return NumericRequirement{cue.bound, *number};
  }
  if (req.find('<') != std::string::npos) return NumericRequirement{Bound::Below, *number};
  if (req.find('>') != std::string::npos) return NumericRequirement{Bound::Above, *number};
  if (text_util::contains_word(req, "min")) return NumericRequirement{Bound::AtLeast, *number};
  // "4+" style lower bounds.
  for (std::size_t i = 1; i < req.size(); ++i) {
    if (req[i] == '+' && std::isdigit(static_cast<unsigned char>(req[i - 1]))) {
      return NumericRequirement{Bound::AtLeast, *number};
    }
  }
  return std::nullopt;
}

std::string_view to_string(RowStatus status) {
  switch (status) {
    case RowStatus::Uncertain: return "uncertain";
    case RowStatus::Complete: return "complete";
    case RowStatus::Deleted: return "deleted";
  }
  return "uncertain";
}

std::optional<RowStatus> parse_row_status(std::string_view text) {
  const std::string s = text_util::lower(text_util::trim(text));
  if (s == "uncertain") return RowStatus::Uncertain;
  if (s == "complete") return RowStatus::Complete;
  if (s == "deleted") return RowStatus::Deleted;
  return std::nullopt;
}

const std::string* CandidateRow::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (text_util::iequals(k, key)) return &v;
  }
  return nullptr;
}

CandidateRow* CandidateTable::find_row(std::string_view row_id) {
  for (CandidateRow& row : rows) {
    if (row.row_id == row_id) return &row;
  }
  return nullptr;
}

const CandidateRow* CandidateTable::find_row(std::string_view row_id) const {
  for (const CandidateRow& row : rows) {
    if (row.row_id == row_id) return &row;
  }
  return nullptr;
}

ConstraintState evaluate_constraint(const Constraint& constraint, const CandidateRow& row) {
  const std::string* value = row.attribute(constraint.key);
  if (value == nullptr || text_util::trim(*value).empty()) return ConstraintState::Missing;
  auto requirement = parse_numeric_requirement(constraint.requirement);
  auto actual = parse_number(*value);
  if (requirement && actual) {
    bool ok = false;
    switch (requirement->bound) {
      case Bound::Below: ok = *actual < requirement->value; break;
      case Bound::AtMost: ok = *actual <= requirement->value; break;
      case Bound::Above: ok = *actual > requirement->value; break;
      case Bound::AtLeast: ok = *actual >= requirement->value; break;
      case Bound::None: ok = true; break;
    }
    return ok ? ConstraintState::Satisfied : ConstraintState::Violated;
  }
  for (const std::string& unmet : row.constraints_not_met) {
    if (text_util::iequals(unmet, constraint.key)) return ConstraintState::MarkedUnmet;
  }
  return ConstraintState::Satisfied;
}

int satisfied_count(const CandidateTable& table, const CandidateRow& row) {
  return static_cast<int>(std::count_if(table.constraints.begin(), table.constraints.end(), [&](const Constraint& c) {
    return evaluate_constraint(c, row) == ConstraintState::Satisfied;
  }));
}

}  // namespace andor
