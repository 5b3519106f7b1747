#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <regex>

#include "andor/environment.hpp"

namespace andor {

namespace {

std::string_view trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int parse_id(const std::string& digits) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value <= 0) {
    throw ActionParseError("invalid element id '" + digits + "'");
  }
  return value;
}

const std::regex kClick(R"(click \[(\d+)\])");
// Typed text may not contain brackets; they delimit the fields.
const std::regex kType(R"(type \[(\d+)\] \[([^\[\]]*)\] \[([01])\])");
const std::regex kGoto(R"(goto \[([^\[\]\s]+)\])");
const std::regex kScroll(R"(scroll \[(down|up)\])");
const std::regex kNote(R"(note \[(.*)\])");
const std::regex kStop(R"(stop \[(.*)\])");

constexpr std::array<std::string_view, 8> kKeywords{"click", "type",   "go_back", "go_home",
                                                    "goto",  "scroll", "note",    "stop"};

}  // namespace

Action parse_action(std::string_view input) {
  const std::string text(trim(input));
  std::smatch m;
  if (std::regex_match(text, m, kClick)) {
    return action::Click{parse_id(m[1])};
  }
  if (std::regex_match(text, m, kType)) {
    std::string body = m[2];
    if (body.empty()) throw ActionParseError("type action with empty text");
    return action::Type{parse_id(m[1]), body, m[3] == "1"};
  }
  if (text == "go_back") return action::GoBack{};
  if (text == "go_home") return action::GoHome{};
  if (std::regex_match(text, m, kGoto)) return action::Goto{m[1]};
  if (std::regex_match(text, m, kScroll)) {
    return action::Scroll{m[1] == "down" ? action::Direction::Down : action::Direction::Up};
  }
  if (std::regex_match(text, m, kNote)) {
    if (m[1].length() == 0) throw ActionParseError("note action with empty text");
    return action::Note{m[1]};
  }
  if (text == "stop") return action::Stop{};
  if (std::regex_match(text, m, kStop)) return action::Stop{std::string(m[1])};
  throw ActionParseError("unrecognized action '" + text + "'");
}

std::string to_string(const Action& act) {
  struct Renderer {
    std::string operator()(const action::Click& a) const { return "click [" + std::to_string(a.element_id) + "]"; }
    std::string operator()(const action::Type& a) const {
      return "type [" + std::to_string(a.element_id) + "] [" + a.text + "] [" + (a.press_enter ? "1" : "0") + "]";
    }
    std::string operator()(const action::GoBack&) const { return "go_back"; }
    std::string operator()(const action::GoHome&) const { return "go_home"; }
    std::string operator()(const action::Goto& a) const { return "goto [" + a.url + "]"; }
    std::string operator()(const action::Scroll& a) const {
      return a.direction == action::Direction::Down ? "scroll [down]" : "scroll [up]";
    }
    std::string operator()(const action::Note& a) const { return "note [" + a.text + "]"; }
    std::string operator()(const action::Stop& a) const { return a.answer ? "stop [" + *a.answer + "]" : "stop"; }
  };
  return std::visit(Renderer{}, act);
}

bool is_note(const Action& act) { return std::holds_alternative<action::Note>(act); }

std::optional<std::string> extract_command(std::string_view text) {
  std::size_t best = std::string_view::npos;
  for (std::string_view keyword : kKeywords) {
    std::size_t pos = 0;
    while ((pos = text.find(keyword, pos)) != std::string_view::npos) {
      bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(text[pos - 1])) || text[pos - 1] == '_');
      std::size_t end = pos + keyword.size();
      bool right_ok = end == text.size() || text[end] == ' ' || text[end] == '\n' || text[end] == '`' ||
                      text[end] == '\r';
      if (left_ok && right_ok) {
        best = std::min(best, pos);
        break;
      }
      pos = end;
    }
  }
  if (best == std::string_view::npos) return std::nullopt;
  std::string_view rest = text.substr(best);
  rest = rest.substr(0, rest.find('\n'));
  if (auto tick = rest.find('`'); tick != std::string_view::npos) rest = rest.substr(0, tick);
  return std::string(trim(rest));
}

std::string observation_hash(const Observation& observation) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      hash ^= c;
      hash *= 1099511628211ULL;
    }
    hash ^= 0xff;
    hash *= 1099511628211ULL;
  };
  feed(observation.url);
  feed(observation.page_text);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace andor
