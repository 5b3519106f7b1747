#include "andor/scenario.hpp"

#include <filesystem>
#include <fstream>

namespace andor {

using nlohmann::json;
namespace fs = std::filesystem;

Scenario Scenario::from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw FixtureError("scenario must be a JSON object");
  if (j.value("format", std::string{}) != kFormat) {
    throw FixtureError(std::string("scenario format must be \"") + kFormat + "\"");
  }
  Scenario s;
  if (!j.contains("task") || !j["task"].is_string() || j["task"].get<std::string>().empty()) {
    throw FixtureError("scenario needs a non-empty task");
  }
  s.task = j["task"].get<std::string>();
  if (j.contains("config")) s.config = EngineConfig::from_json(j["config"], s.config);
  if (j.contains("root_id")) {
    s.config.root_id = j["root_id"].get<std::string>();
    s.config.validate();
  }

  auto resolve = [&](const std::string& file) { return (fs::path(base_dir) / file).string(); };
  if (j.contains("site")) {
    s.site = SiteFixture::from_json(j["site"]);
  } else if (j.contains("site_file")) {
    s.site = load_site_fixture(resolve(j["site_file"].get<std::string>()));
  } else {
    throw FixtureError("scenario needs site or site_file");
  }
  s.site.validate();
  if (j.contains("script")) {
    s.script = Script::from_json(j["script"]);
  } else if (j.contains("script_file")) {
    s.script = load_script(resolve(j["script_file"].get<std::string>()));
  } else {
    throw FixtureError("scenario needs script or script_file");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FixtureError("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return Scenario::from_json(j, fs::path(path).parent_path().string());
}

}  // namespace andor
