#pragma once

#include <map>
#include <string>
#include <string_view>

#include "andor/controller.hpp"

namespace andor {

// Substitutes "{name}" for every known key; unknown braces are left alone so
// JSON examples inside templates survive.
std::string fill_template(std::string_view tpl, const std::map<std::string, std::string>& values);
std::map<std::string, std::string> template_values(const ControllerRequest& request);

// Prompt templates stored as "<name>.txt" files in one directory.
class PromptLibrary {
 public:
  explicit PromptLibrary(std::string directory);
  // Template file names used for an operator; full updates use two prompts.
  static std::vector<std::string> template_names(Operator op);
  std::string load(const std::string& name) const;
  std::vector<std::string> render(const ControllerRequest& request) const;

 private:
  std::string directory_;
};

struct RemoteSettings {
  std::string endpoint;  // e.g. "http://127.0.0.1:8000" or ".../v1/chat/completions"
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the token
  std::string prompt_dir = ANDOR_DEFAULT_PROMPT_DIR;
  int timeout_seconds = 60;
  double temperature = 0.0;
  int max_tokens = 2048;
};

// Sends each rendered prompt as one user message to a chat-completion
// endpoint and returns the concatenated message contents.
class RemoteLLMController : public Controller {
 public:
  explicit RemoteLLMController(RemoteSettings settings);

  std::string respond(const ControllerRequest& request) override;
  nlohmann::json describe() const override;

  const std::string& path() const { return path_; }

 private:
  std::string complete(const std::string& prompt);

  RemoteSettings settings_;
  PromptLibrary prompts_;
  std::string origin_;
  std::string path_;
};

}  // namespace andor
