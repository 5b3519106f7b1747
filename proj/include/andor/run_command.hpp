#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "andor/engine.hpp"
#include "andor/environment.hpp"
#include "andor/remote_controller.hpp"

namespace andor {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitFail = 1,
  kExitBudget = 2,
  kExitSteps = 3,
  kExitConfig = 64,
  kExitData = 65,
  kExitMissingFile = 66,
};

int exit_code_for(Outcome outcome);

// Carries the exit code the CLI should return.
class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct RunConfig {
  std::string scenario;   // bundle with task, config, site and script
  std::string task;       // overrides the scenario task
  std::string task_file;
  std::string site;       // site fixture, when no scenario is given
  std::string script;     // scripted mode, when no scenario is given
  std::string controller = "scripted";  // or "remote"
  RemoteSettings remote;  // the API key is read from remote.api_key_env
  nlohmann::json engine_overrides = nlohmann::json::object();
  std::string out_dir = "out";
  bool serve = false;
  std::string host = "127.0.0.1";
  int port = 8765;
  bool start_paused = false;
  bool linger = false;  // keep serving after the run until POST /api/shutdown
};

struct PreparedRun {
  std::string task;
  EngineConfig config;
  SiteFixture site;
  std::unique_ptr<Controller> controller;
};

// Resolves files and settings. Throws CommandError.
PreparedRun prepare_run(const RunConfig& config);

// One engine run over a fresh simulated site and memory.
RunResult execute_run(PreparedRun& run, EventLog& log, Mailbox* mailbox = nullptr, SnapshotBoard* board = nullptr);

// Writes trajectory.jsonl, tree.json, response.txt and result.json.
void write_outputs(const std::string& out_dir, const RunResult& result, const EventLog& log);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_replay(const std::string& log_path, std::ostream& out, std::ostream& err);

}  // namespace andor
