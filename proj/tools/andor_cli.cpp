// andor: run, serve and replay planning runs.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "andor/run_command.hpp"

namespace {

struct Overrides {
  std::string config_file;
  std::optional<int> budget;
  std::optional<int> max_steps;
  std::optional<int> max_retry;
  std::optional<int> max_revision;
  std::optional<int> max_children;
  bool check_every_and = false;
};

void add_run_options(CLI::App& cmd, andor::RunConfig& cfg, Overrides& ov) {
  cmd.add_option("--scenario", cfg.scenario, "Scenario bundle (task, config, site, script)");
  cmd.add_option("--task", cfg.task, "Task description (overrides the scenario task)");
  cmd.add_option("--task-file", cfg.task_file, "File holding the task description");
  cmd.add_option("--site", cfg.site, "Site fixture JSON");
  cmd.add_option("--script", cfg.script, "Controller script JSON (scripted mode)");
  cmd.add_option("--controller", cfg.controller, "scripted or remote")
      ->check(CLI::IsMember({"scripted", "remote"}));
  cmd.add_option("--endpoint", cfg.remote.endpoint, "Chat-completion endpoint (remote mode)");
  cmd.add_option("--model", cfg.remote.model, "Model name (remote mode)");
  cmd.add_option("--api-key-env", cfg.remote.api_key_env, "Environment variable holding the API token");
  cmd.add_option("--prompt-dir", cfg.remote.prompt_dir, "Prompt template directory");
  cmd.add_option("--timeout", cfg.remote.timeout_seconds, "Remote request timeout in seconds");
  cmd.add_option("--config", ov.config_file, "JSON file with engine settings");
  cmd.add_option("--budget", ov.budget, "Loop iteration budget");
  cmd.add_option("--max-steps", ov.max_steps, "Environment step limit");
  cmd.add_option("--max-retry", ov.max_retry, "Attempts per action and per controller call");
  cmd.add_option("--max-revision", ov.max_revision, "Repairs per node");
  cmd.add_option("--max-children", ov.max_children, "Child cap for repairs");
  cmd.add_flag("--check-every-and", ov.check_every_and, "Run the completion check on every AND node");
  cmd.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  cmd.add_option("--host", cfg.host, "Service bind address")->capture_default_str();
  cmd.add_option("--port", cfg.port, "Service port (0 = any)")->capture_default_str();
  cmd.add_flag("--start-paused", cfg.start_paused, "Pause before the first step (serve mode)");
}

// Returns an exit code on error.
std::optional<int> apply_overrides(andor::RunConfig& cfg, const Overrides& ov) {
  nlohmann::json j = nlohmann::json::object();
  if (!ov.config_file.empty()) {
    std::ifstream in(ov.config_file);
    if (!in) {
      std::cerr << "error: config file not found: " << ov.config_file << "\n";
      return andor::kExitMissingFile;
    }
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: " << ov.config_file << ": " << e.what() << "\n";
      return andor::kExitData;
    }
    if (!j.is_object()) {
      std::cerr << "error: " << ov.config_file << " must hold a JSON object\n";
      return andor::kExitConfig;
    }
  }
  if (ov.budget) j["budget"] = *ov.budget;
  if (ov.max_steps) j["max_steps"] = *ov.max_steps;
  if (ov.max_retry) j["max_retry_count"] = *ov.max_retry;
  if (ov.max_revision) j["max_revision_count"] = *ov.max_revision;
  if (ov.max_children) j["max_children"] = *ov.max_children;
  if (ov.check_every_and) j["completion_check_root_only"] = false;
  cfg.engine_overrides = std::move(j);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AND/OR tree planning engine"};
  app.require_subcommand(1);

  andor::RunConfig run_cfg;
  Overrides run_ov;
  CLI::App* run = app.add_subcommand("run", "Execute one run and write its outputs");
  add_run_options(*run, run_cfg, run_ov);
  run->add_flag("--serve", run_cfg.serve, "Expose the run over HTTP while it executes");

  andor::RunConfig serve_cfg;
  Overrides serve_ov;
  CLI::App* serve = app.add_subcommand("serve", "Execute a run behind the HTTP service and keep serving");
  add_run_options(*serve, serve_cfg, serve_ov);
  bool exit_when_done = false;
  serve->add_flag("--exit-when-done", exit_when_done, "Stop serving once the run ends");

  std::string log_path;
  CLI::App* replay = app.add_subcommand("replay", "Check a trajectory log against the plan invariants");
  replay->add_option("log", log_path, "trajectory.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : andor::kExitConfig;
  }

  if (run->parsed()) {
    if (auto code = apply_overrides(run_cfg, run_ov)) return *code;
    return andor::cmd_run(run_cfg, std::cout, std::cerr);
  }
  if (serve->parsed()) {
    if (auto code = apply_overrides(serve_cfg, serve_ov)) return *code;
    serve_cfg.serve = true;
    serve_cfg.linger = !exit_when_done;
    return andor::cmd_run(serve_cfg, std::cout, std::cerr);
  }
  return andor::cmd_replay(log_path, std::cout, std::cerr);
}
