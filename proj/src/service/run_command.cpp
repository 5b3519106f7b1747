#include "andor/run_command.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "andor/http_service.hpp"
#include "andor/replay.hpp"
#include "andor/scenario.hpp"
#include "andor/scripted_controller.hpp"

namespace andor {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return kExitSuccess;
    case Outcome::Fail: return kExitFail;
    case Outcome::BudgetExhausted: return kExitBudget;
    case Outcome::StepsExhausted: return kExitSteps;
  }
  return kExitFail;
}

namespace {

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw CommandError(kExitMissingFile, std::string(what) + " not found: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandError(kExitConfig, "cannot write " + path.string());
  out << content;
}

}  // namespace

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun run;
  std::optional<Script> script;
  try {
    if (!config.scenario.empty()) {
      require_file(config.scenario, "scenario");
      Scenario scenario = load_scenario(config.scenario);
      run.task = scenario.task;
      run.config = scenario.config;
      run.site = std::move(scenario.site);
      script = std::move(scenario.script);
    } else {
      if (config.site.empty()) throw CommandError(kExitConfig, "a site fixture is required (--site or --scenario)");
      require_file(config.site, "site fixture");
      run.site = load_site_fixture(config.site);
    }
    if (!config.task_file.empty()) {
      require_file(config.task_file, "task file");
      run.task = read_file(config.task_file);
      while (!run.task.empty() && (run.task.back() == '\n' || run.task.back() == '\r')) run.task.pop_back();
    }
    if (!config.task.empty()) run.task = config.task;
    if (run.task.empty()) throw CommandError(kExitConfig, "no task given (--task, --task-file or --scenario)");

    run.config = EngineConfig::from_json(config.engine_overrides, run.config);

    if (config.controller == "scripted") {
      if (!config.script.empty()) {
        require_file(config.script, "script");
        script = load_script(config.script);
      }
      if (!script) throw CommandError(kExitConfig, "scripted mode needs a script (--script or --scenario)");
      run.controller = std::make_unique<ScriptedController>(std::move(*script));
    } else if (config.controller == "remote") {
      if (config.remote.endpoint.empty() || config.remote.model.empty() || config.remote.api_key_env.empty()) {
        throw CommandError(kExitConfig, "remote mode needs --endpoint, --model and --api-key-env");
      }
      run.controller = std::make_unique<RemoteLLMController>(config.remote);
    } else {
      throw CommandError(kExitConfig, "unknown controller mode '" + config.controller + "'");
    }
  } catch (const FixtureError& e) {
    throw CommandError(kExitData, e.what());
  } catch (const std::invalid_argument& e) {
    throw CommandError(kExitConfig, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(kExitData, e.what());
  } catch (const CommandError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw CommandError(kExitMissingFile, e.what());
  }
  return run;
}

RunResult execute_run(PreparedRun& run, EventLog& log, Mailbox* mailbox, SnapshotBoard* board) {
  SimulatedSite site(run.site);
  CandidateMemory memory;
  Engine engine(run.config, *run.controller, site, memory, log);
  engine.attach_mailbox(mailbox);
  engine.attach_board(board);
  return engine.run(run.task);
}

void write_outputs(const std::string& out_dir, const RunResult& result, const EventLog& log) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw CommandError(kExitConfig, "cannot create " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);
  write_file(dir / "trajectory.jsonl", log.text());
  write_file(dir / "tree.json", result.final_snapshot.dump(2) + "\n");
  write_file(dir / "response.txt", result.final_response + "\n");
  json summary = result.to_json();
  summary.erase("final_snapshot");
  write_file(dir / "result.json", summary.dump(2) + "\n");
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    PreparedRun run = prepare_run(config);
    EventLog log;
    RunResult result;
    if (config.serve) {
      Mailbox mailbox;
      SnapshotBoard board;
      HttpService service(board, log, mailbox);
      const int port = service.start(config.host, config.port);
      out << "serving on http://" << config.host << ":" << port << std::endl;
      if (config.start_paused) mailbox.submit(Intervention{Intervention::Kind::Pause, {}, {}, {}});
      result = execute_run(run, log, &mailbox, &board);
      log.close();
      write_outputs(config.out_dir, result, log);
      out << "outcome: " << to_string(result.outcome) << std::endl;
      if (config.linger && !service.shutdown_requested()) {
        out << "run finished; POST /api/shutdown to stop the service" << std::endl;
        service.wait_for_shutdown();
      }
      service.stop();
    } else {
      result = execute_run(run, log);
      log.close();
      write_outputs(config.out_dir, result, log);
      out << "outcome: " << to_string(result.outcome) << std::endl;
    }
    out << "iterations: " << result.iterations << ", steps: " << result.steps << std::endl;
    if (!result.abort_reason.empty()) err << "aborted: " << result.abort_reason << std::endl;
    return exit_code_for(result.outcome);
  } catch (const CommandError& e) {
    err << "error: " << e.what() << std::endl;
    return e.code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << std::endl;
    return kExitFail;
  }
}

int cmd_replay(const std::string& log_path, std::ostream& out, std::ostream& err) {
  if (!fs::is_regular_file(log_path)) {
    err << "error: log not found: " << log_path << std::endl;
    return kExitMissingFile;
  }
  ReplayReport report = replay_file(log_path);
  if (!report.ok) {
    err << "replay failed at seq " << report.failing_seq.value_or(0) << ": " << report.message << std::endl;
    return kExitFail;
  }
  out << "replay ok: " << report.records << " records, " << report.nodes << " nodes, outcome " << report.outcome
      << std::endl;
  return kExitSuccess;
}

}  // namespace andor
