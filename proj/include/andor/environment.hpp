#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace andor {

namespace action {
struct Click {
  int element_id = 0;
  bool operator==(const Click&) const = default;
};
struct Type {
  int element_id = 0;
  std::string text;
  bool press_enter = false;
  bool operator==(const Type&) const = default;
};
struct GoBack {
  bool operator==(const GoBack&) const = default;
};
struct GoHome {
  bool operator==(const GoHome&) const = default;
};
struct Goto {
  std::string url;
  bool operator==(const Goto&) const = default;
};
enum class Direction { Down, Up };
struct Scroll {
  Direction direction = Direction::Down;
  bool operator==(const Scroll&) const = default;
};
struct Note {
  std::string text;
  bool operator==(const Note&) const = default;
};
struct Stop {
  std::optional<std::string> answer;
  bool operator==(const Stop&) const = default;
};
}  // namespace action

using Action = std::variant<action::Click, action::Type, action::GoBack, action::GoHome, action::Goto,
                            action::Scroll, action::Note, action::Stop>;

class ActionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact grammar: "click [ID]", "type [ID] [TEXT] [0|1]", "go_back", "go_home",
// "goto [URL]", "scroll [down|up]", "note [TEXT]", "stop [ANSWER]" or "stop".
Action parse_action(std::string_view text);
std::string to_string(const Action& action);
bool is_note(const Action& action);

// Pulls a single command out of controller text that may wrap it in prose or
// backticks. Returns nullopt when no command keyword is found.
std::optional<std::string> extract_command(std::string_view text);

struct Element {
  int id = 0;
  std::string kind;
  std::string label;
  std::string target;
  bool operator==(const Element&) const = default;
};

struct Observation {
  std::string url;
  std::string title;
  std::string page_text;
  std::map<int, Element> elements;
  bool operator==(const Observation&) const = default;
};

// FNV-1a over url and page text; used to key scripted responses.
std::string observation_hash(const Observation& observation);

struct StepResult {
  bool ok = false;
  std::string error;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual void reset() = 0;
  virtual StepResult step(const Action& action) = 0;
  virtual Observation observe() const = 0;
  virtual std::string get_url() const = 0;
  virtual bool navigate(std::string_view url) = 0;
  virtual bool done() const = 0;
  virtual std::optional<std::string> answer() const = 0;
};

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Transition {
  int element = 0;
  // Case-insensitive substring of the typed text; "*" or empty matches anything.
  std::string pattern;
  std::string target;
};

struct PageDef {
  std::string title;
  // Lines may reference elements as "{ID}" and the last typed query as "{query}".
  std::vector<std::string> text;
  std::vector<Element> elements;
  std::vector<Transition> transitions;
};

struct FailureInjection {
  std::string url;  // empty = any page
  int element = 0;
  int times = -1;   // -1 = always
};

struct SiteFixture {
  static constexpr const char* kFormat = "andor.site/1";
  std::string start;
  int window = 20;
  std::map<std::string, PageDef> pages;
  std::vector<FailureInjection> failures;

  // Validates that start and every transition target is defined.
  void validate() const;
  static SiteFixture from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

SiteFixture load_site_fixture(const std::string& path);

class SimulatedSite : public Environment {
 public:
  explicit SimulatedSite(SiteFixture fixture);

  void reset() override;
  StepResult step(const Action& action) override;
  Observation observe() const override;
  std::string get_url() const override { return url_; }
  bool navigate(std::string_view url) override;
  bool done() const override { return done_; }
  std::optional<std::string> answer() const override { return answer_; }

  // Pages go_back can return to, oldest first; the current page is not included.
  std::vector<std::string> history() const;
  const SiteFixture& fixture() const { return fixture_; }

 private:
  struct Frame {
    std::string url;
    std::string query;
    int offset = 0;
  };

  std::vector<std::string> render_lines() const;
  bool go_to(const std::string& url, std::string query);
  bool injected_failure(int element);

  SiteFixture fixture_;
  std::string url_;
  std::string query_;
  int offset_ = 0;
  std::vector<Frame> frames_;
  std::vector<int> failures_left_;
  bool done_ = false;
  std::optional<std::string> answer_;
};

}  // namespace andor
