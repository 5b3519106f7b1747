#include "andor/mailbox.hpp"

#include <stdexcept>

namespace andor {

using nlohmann::json;

std::string_view to_string(Intervention::Kind kind) {
  switch (kind) {
    case Intervention::Kind::InjectChildren: return "INJECT_CHILDREN";
    case Intervention::Kind::Prune: return "PRUNE";
    case Intervention::Kind::Pause: return "PAUSE";
    case Intervention::Kind::Resume: return "RESUME";
  }
  return "PAUSE";
}

Intervention Intervention::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("intervention must be a JSON object");
  Intervention out;
  const std::string kind = j.value("kind", std::string{});
  if (kind == "INJECT_CHILDREN") {
    out.kind = Kind::InjectChildren;
  } else if (kind == "PRUNE") {
    out.kind = Kind::Prune;
  } else if (kind == "PAUSE") {
    out.kind = Kind::Pause;
  } else if (kind == "RESUME") {
    out.kind = Kind::Resume;
  } else {
    throw std::invalid_argument("unknown intervention kind '" + kind + "'");
  }
  if (j.contains("target")) {
    if (!j["target"].is_string()) throw std::invalid_argument("target must be a string");
    out.target = j["target"].get<std::string>();
  }
  if ((out.kind == Kind::InjectChildren || out.kind == Kind::Prune) && out.target.empty()) {
    throw std::invalid_argument(std::string(to_string(out.kind)) + " needs a target node id");
  }
  if (out.kind == Kind::InjectChildren) {
    const json children = j.value("children", json::array());
    if (!children.is_array() || children.empty()) throw std::invalid_argument("INJECT_CHILDREN needs children");
    const json scores = j.value("scores", json::array());
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (!children[i].is_string() || children[i].get<std::string>().empty()) {
        throw std::invalid_argument("children must be non-empty strings");
      }
      ScoredItem item{children[i].get<std::string>(), std::nullopt};
      if (i < scores.size() && !scores[i].is_null()) {
        double s = scores[i].get<double>();
        if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("scores must lie in (0, 1]");
        item.score = s;
      }
      out.children.push_back(std::move(item));
    }
  }
  out.idempotency_key = j.value("idempotency_key", std::string{});
  return out;
}

std::shared_future<InterventionAck> Mailbox::submit(Intervention intervention) {
  std::lock_guard lock(mutex_);
  if (!intervention.idempotency_key.empty()) {
    auto it = by_key_.find(intervention.idempotency_key);
    if (it != by_key_.end()) return it->second;
  }
  Pending pending{std::move(intervention), {}};
  std::shared_future<InterventionAck> future = pending.promise.get_future().share();
  if (!pending.intervention.idempotency_key.empty()) by_key_.emplace(pending.intervention.idempotency_key, future);
  if (closed_reason_) {
    pending.promise.set_value({false, *closed_reason_});
    return future;
  }
  queue_.push_back(std::move(pending));
  available_.notify_all();
  return future;
}

std::vector<Mailbox::Pending> Mailbox::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Pending> out;
  while (!queue_.empty()) {
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  return out;
}

void Mailbox::wait() {
  std::unique_lock lock(mutex_);
  available_.wait(lock, [&] { return !queue_.empty() || closed_reason_.has_value(); });
}

void Mailbox::close(const std::string& reason) {
  std::lock_guard lock(mutex_);
  closed_reason_ = reason;
  while (!queue_.empty()) {
    queue_.front().promise.set_value({false, reason});
    queue_.pop_front();
  }
  available_.notify_all();
}

bool Mailbox::closed() const {
  std::lock_guard lock(mutex_);
  return closed_reason_.has_value();
}

}  // namespace andor
