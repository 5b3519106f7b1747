#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "andor/controller.hpp"

namespace andor {

struct ScriptEntry {
  Operator op = Operator::Expand;
  std::string node;              // "*" matches any node
  std::optional<int> visit;      // node execution_count
  std::optional<std::string> obs;  // observation_hash of the current page
  std::string response;
};

enum class CompletionPolicy { Complete, Incomplete, Strict };
// Default answers unmatched requests with a neutral response per operator;
// Fail answers them with an empty string, which fails parsing where the
// format requires content.
enum class UnmatchedPolicy { Default, Fail };

struct Script {
  static constexpr const char* kFormat = "andor.script/1";
  std::vector<ScriptEntry> entries;
  CompletionPolicy completion = CompletionPolicy::Strict;
  UnmatchedPolicy unmatched = UnmatchedPolicy::Default;

  static Script from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Script load_script(const std::string& path);

class ScriptedController : public Controller {
 public:
  explicit ScriptedController(Script script);

  std::string respond(const ControllerRequest& request) override;
  nlohmann::json describe() const override;

  // The entry a request resolves to, if any.
  const ScriptEntry* match(const ControllerRequest& request) const;
  std::string default_response(const ControllerRequest& request) const;

 private:
  Script script_;
};

}  // namespace andor
