#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "andor/engine.hpp"
#include "andor/environment.hpp"
#include "andor/scripted_controller.hpp"

namespace andor {

// A self-contained scripted run: task, engine settings, site and script.
// "site_file"/"script_file" paths resolve against the bundle's directory.
struct Scenario {
  static constexpr const char* kFormat = "andor.scenario/1";
  std::string task;
  EngineConfig config;
  SiteFixture site;
  Script script;

  static Scenario from_json(const nlohmann::json& j, const std::string& base_dir = ".");
};

// Throws FixtureError for malformed content, std::runtime_error when a file
// cannot be opened.
Scenario load_scenario(const std::string& path);

}  // namespace andor
