#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "andor/engine.hpp"
#include "andor/mailbox.hpp"
#include "andor/trajectory.hpp"

namespace httplib {
class Server;
}

namespace andor {

// Local HTTP front end for one run:
//   GET  /api/snapshot            latest snapshot (tree, stack, memory, run_state)
//   GET  /api/events?since=N      trajectory records with seq > N, one per line
//   GET  /api/events/stream?since=N  same, streamed until the log closes
//   POST /api/interventions       {"kind": ..., "target": ..., ...} -> ack
//   POST /api/shutdown
class HttpService {
 public:
  HttpService(SnapshotBoard& board, EventLog& log, Mailbox& mailbox);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port. Returns the bound port; throws std::runtime_error on failure.
  int start(const std::string& host, int port);
  void stop();
  // Blocks until POST /api/shutdown.
  void wait_for_shutdown();
  bool shutdown_requested() const { return shutdown_requested_; }

 private:
  void routes();

  SnapshotBoard& board_;
  EventLog& log_;
  Mailbox& mailbox_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex mutex_;
  std::condition_variable shutdown_cv_;
  std::atomic<bool> shutdown_requested_{false};
};

}  // namespace andor
