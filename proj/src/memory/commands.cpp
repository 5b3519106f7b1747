#include "andor/memory.hpp"
#include "andor/text_util.hpp"

namespace andor {

namespace {

using text_util::trim;

std::vector<std::string> split_fields(std::string_view text) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted && c == '\\' && i + 1 < text.size()) {
      current += c;
      current += text[++i];
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (c == ';' && !quoted) {
      fields.push_back(current);
      current.clear();
      continue;
    }
    current += c;
  }
  if (quoted) throw CommandParseError("unterminated quote");
  fields.push_back(current);
  return fields;
}

std::string unquote(std::string_view value) {
  value = trim(value);
  if (value.size() < 2 || value.front() != '"' || value.back() != '"') return std::string(value);
  std::string out;
  for (std::size_t i = 1; i + 1 < value.size(); ++i) {
    if (value[i] == '\\' && i + 2 < value.size()) {
      out += value[++i];
    } else {
      out += value[i];
    }
  }
  return out;
}

std::string quote(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

bool needs_quotes(std::string_view value) {
  if (value.empty() || value != trim(value)) return true;
  return value.find_first_of(";\"\\") != std::string_view::npos;
}

std::vector<std::string> parse_unmet_list(std::string_view value) {
  value = trim(value);
  std::vector<std::string> keys;
  const std::string lowered = text_util::lower(value);
  if (value.empty() || lowered == "none" || value == "[]" || value == "<>") return keys;
  if (value.find('<') != std::string_view::npos) {
    std::size_t pos = 0;
    while ((pos = value.find('<', pos)) != std::string_view::npos) {
      auto end = value.find('>', pos);
      if (end == std::string_view::npos) throw CommandParseError("unterminated <key> in constraints_not_met");
      auto key = trim(value.substr(pos + 1, end - pos - 1));
      if (!key.empty()) keys.emplace_back(key);
      pos = end + 1;
    }
    return keys;
  }
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    auto key = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!key.empty()) keys.emplace_back(key);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return keys;
}

std::string render_unmet_list(const std::vector<std::string>& keys) {
  if (keys.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) out += (i ? " <" : "<") + keys[i] + ">";
  return out;
}

void parse_fields(std::string_view text, MemoryCommand& command, bool allow_id) {
  for (const std::string& raw : split_fields(text)) {
    auto field = trim(raw);
    if (field.empty()) continue;
    auto colon = field.find(':');
    if (colon == std::string_view::npos) throw CommandParseError("field without ':' in '" + std::string(field) + "'");
    std::string key(trim(field.substr(0, colon)));
    std::string_view value = field.substr(colon + 1);
    if (key.empty()) throw CommandParseError("empty field name");
    const std::string lowered = text_util::lower(key);
    if (lowered == "id" && allow_id) {
      command.row_id = unquote(value);
    } else if (lowered == "status") {
      command.status = unquote(value);
    } else if (lowered == "comment") {
      command.comment = unquote(value);
    } else if (lowered == "constraints_not_met") {
      command.constraints_not_met = parse_unmet_list(value);
    } else {
      command.fields.emplace_back(std::move(key), unquote(value));
    }
  }
}

}  // namespace

MemoryCommand parse_memory_command(std::string_view line) {
  line = trim(line);
  MemoryCommand command;
  std::string_view rest;
  if (text_util::starts_with(line, "ADD ")) {
    command.kind = MemoryCommand::Kind::Add;
    rest = line.substr(4);
  } else if (text_util::starts_with(line, "UPDATE ")) {
    command.kind = MemoryCommand::Kind::Update;
    rest = line.substr(7);
  } else if (text_util::starts_with(line, "DELETE ")) {
    command.kind = MemoryCommand::Kind::Delete;
    rest = line.substr(7);
  } else {
    throw CommandParseError("line must start with ADD, UPDATE or DELETE");
  }
  rest = trim(rest);

  if (command.kind == MemoryCommand::Kind::Delete) {
    if (!rest.empty() && rest.back() == ']') {
      auto open = rest.rfind('[');
      if (open == std::string_view::npos) throw CommandParseError("DELETE missing '['");
      command.item_type = std::string(trim(rest.substr(0, open)));
      command.row_id = std::string(trim(rest.substr(open + 1, rest.size() - open - 2)));
    } else {
      auto colon = rest.rfind(':');
      if (colon == std::string_view::npos) throw CommandParseError("DELETE needs 'item [ID]' or 'item:ID'");
      command.item_type = std::string(trim(rest.substr(0, colon)));
      command.row_id = std::string(trim(rest.substr(colon + 1)));
    }
    if (command.item_type.empty() || command.row_id.empty()) throw CommandParseError("DELETE needs item type and id");
    return command;
  }

  auto colon = rest.find(':');
  if (colon == std::string_view::npos) throw CommandParseError("missing ':' after item type");
  command.item_type = std::string(trim(rest.substr(0, colon)));
  if (command.item_type.empty()) throw CommandParseError("empty item type");
  std::string_view body = rest.substr(colon + 1);

  if (command.kind == MemoryCommand::Kind::Add) {
    parse_fields(body, command, true);
    return command;
  }
  body = trim(body);
  auto id_end = body.find_first_of(" \t;");
  command.row_id = std::string(body.substr(0, id_end));
  if (command.row_id.empty()) throw CommandParseError("UPDATE needs a row id");
  if (id_end != std::string_view::npos) parse_fields(body.substr(id_end), command, false);
  return command;
}

std::string render_memory_command(const MemoryCommand& command) {
  if (command.kind == MemoryCommand::Kind::Delete) return "DELETE " + command.item_type + " [" + command.row_id + "]";
  std::vector<std::string> parts;
  for (const auto& [key, value] : command.fields) {
    parts.push_back(key + ":" + (needs_quotes(value) ? quote(value) : value));
  }
  if (command.constraints_not_met) parts.push_back("constraints_not_met:" + render_unmet_list(*command.constraints_not_met));
  if (command.status) parts.push_back("status:" + *command.status);
  if (command.comment) parts.push_back("comment:" + quote(*command.comment));

  std::string out;
  if (command.kind == MemoryCommand::Kind::Add) {
    out = "ADD " + command.item_type + ":";
    if (!command.row_id.empty()) parts.insert(parts.begin(), "ID:" + command.row_id);
  } else {
    out = "UPDATE " + command.item_type + ":" + command.row_id + (parts.empty() ? "" : " ");
  }
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "; " : "") + parts[i];
  return out;
}

int ApplyReport::accepted() const {
  int n = 0;
  for (const auto& o : outcomes) n += o.accepted ? 1 : 0;
  return n;
}

int ApplyReport::rejected() const { return static_cast<int>(outcomes.size()) - accepted(); }

}  // namespace andor
