#pragma once

#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "andor/directives.hpp"

namespace andor {

struct Intervention {
  enum class Kind { InjectChildren, Prune, Pause, Resume };
  Kind kind = Kind::Pause;
  std::string target;
  std::vector<ScoredItem> children;
  std::string idempotency_key;

  // {"kind": "INJECT_CHILDREN", "target": "0", "children": ["..", ..],
  //  "scores": [..]?, "idempotency_key": ".."?}
  static Intervention from_json(const nlohmann::json& j);
};

std::string_view to_string(Intervention::Kind kind);

struct InterventionAck {
  bool accepted = false;
  std::string reason;
};

// Queue between operator threads and the engine thread. The engine drains it
// at step boundaries and fulfils each request's future.
class Mailbox {
 public:
  struct Pending {
    Intervention intervention;
    std::promise<InterventionAck> promise;
  };

  // Requests sharing an idempotency key resolve to the first request's ack.
  std::shared_future<InterventionAck> submit(Intervention intervention);
  std::vector<Pending> drain();
  // Blocks until something is queued or the mailbox is closed.
  void wait();
  // Rejects queued and future requests with reason.
  void close(const std::string& reason);
  bool closed() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable available_;
  std::deque<Pending> queue_;
  std::map<std::string, std::shared_future<InterventionAck>> by_key_;
  std::optional<std::string> closed_reason_;
};

}  // namespace andor
