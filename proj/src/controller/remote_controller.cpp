#include "andor/remote_controller.hpp"

#include <cstdlib>

#include <httplib.h>

namespace andor {

using nlohmann::json;

namespace {

constexpr std::string_view kChatPath = "/v1/chat/completions";

void split_endpoint(const std::string& endpoint, std::string& origin, std::string& path) {
  auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("endpoint must start with http:// or https://");
  auto slash = endpoint.find('/', scheme + 3);
  origin = endpoint.substr(0, slash);
  std::string prefix = slash == std::string::npos ? std::string{} : endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (prefix.size() >= 17 && prefix.compare(prefix.size() - 17, 17, "/chat/completions") == 0) {
    path = prefix;
  } else if (prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0) {
    path = prefix + "/chat/completions";
  } else {
    path = prefix + std::string(kChatPath);
  }
}

}  // namespace

RemoteLLMController::RemoteLLMController(RemoteSettings settings)
    : settings_(std::move(settings)), prompts_(settings_.prompt_dir) {
  if (settings_.endpoint.empty()) throw std::invalid_argument("remote controller needs an endpoint");
  if (settings_.model.empty()) throw std::invalid_argument("remote controller needs a model name");
  split_endpoint(settings_.endpoint, origin_, path_);
  for (Operator op : {Operator::Expand, Operator::ReviseAnd, Operator::GlobalUpdate, Operator::CheckCompletion,
                      Operator::FullUpdate, Operator::ExtractConstraints, Operator::MemoryUpdate,
                      Operator::FinalResponse}) {
    for (const std::string& name : PromptLibrary::template_names(op)) prompts_.load(name);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (origin_.rfind("https://", 0) == 0) throw std::invalid_argument("this build has no HTTPS support");
#endif
}

std::string RemoteLLMController::complete(const std::string& prompt) {
  httplib::Client client(origin_);
  client.set_connection_timeout(settings_.timeout_seconds, 0);
  client.set_read_timeout(settings_.timeout_seconds, 0);
  client.set_write_timeout(settings_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!settings_.api_key_env.empty()) {
    if (const char* token = std::getenv(settings_.api_key_env.c_str()); token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  json body = {{"model", settings_.model},
               {"temperature", settings_.temperature},
               {"max_tokens", settings_.max_tokens},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto result = client.Post(path_, headers, body.dump(), "application/json");
  if (!result) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(result.error()));
  if (result->status != 200) {
    throw TransportError("endpoint returned HTTP " + std::to_string(result->status));
  }
  try {
    json reply = json::parse(result->body);
    const json& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw TransportError("completion content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what());
  }
}

std::string RemoteLLMController::respond(const ControllerRequest& request) {
  std::vector<std::string> prompts;
  try {
    prompts = prompts_.render(request);
  } catch (const std::runtime_error& e) {
    throw TransportError(e.what());
  }
  std::string out;
  for (const std::string& prompt : prompts) {
    if (!out.empty()) out += "\n\n";
    out += complete(prompt);
  }
  return out;
}

json RemoteLLMController::describe() const {
  bool has_token = false;
  if (!settings_.api_key_env.empty()) {
    const char* token = std::getenv(settings_.api_key_env.c_str());
    has_token = token != nullptr && *token != '\0';
  }
  return {{"kind", "remote"},
          {"endpoint", origin_ + path_},
          {"model", settings_.model},
          {"api_key_env", settings_.api_key_env},
          {"authorization", has_token ? "Bearer ***" : "none"},
          {"timeout_seconds", settings_.timeout_seconds},
          {"prompt_dir", settings_.prompt_dir}};
}

}  // namespace andor
