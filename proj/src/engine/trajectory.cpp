#include "andor/trajectory.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace andor {

namespace {

// Escapes like nlohmann's serializer. Anything with bytes >= 0x80 goes through
// the library so UTF-8 validation behaves identically.
void append_string(std::string& out, std::string_view text) {
  for (const char ch : text) {
    if (static_cast<unsigned char>(ch) >= 0x80) {
      out += Record(std::string(text)).dump();
      return;
    }
  }
  out.reserve(out.size() + text.size() + 2);
  out += '"';
  for (const char ch : text) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\f': out += "\\f"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch));
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

}  // namespace

Fields::Fields(std::string_view ev) {
  body_ = "{";
  key("ev");
  append_string(body_, ev);
}

void Fields::key(std::string_view name) {
  if (body_.size() > 1) body_ += ',';
  append_string(body_, name);
  body_ += ':';
}

Fields& Fields::str(std::string_view key_name, std::string_view value) {
  key(key_name);
  append_string(body_, value);
  return *this;
}

Fields& Fields::num(std::string_view key_name, std::int64_t value) {
  key(key_name);
  body_ += std::to_string(value);
  return *this;
}

Fields& Fields::flag(std::string_view key_name, bool value) {
  key(key_name);
  body_ += value ? "true" : "false";
  return *this;
}

Fields& Fields::value(std::string_view key_name, const Record& value) {
  key(key_name);
  body_ += value.dump();
  return *this;
}

std::uint64_t EventLog::append(const Fields& fields) {
  std::lock_guard lock(mutex_);
  const std::uint64_t seq = lines_.size() + 1;
  std::string line = "{\"seq\":" + std::to_string(seq) + ",";
  line.append(fields.body_, 1);
  line += '}';
  lines_.push_back(std::move(line));
  if (sink_) *sink_ << lines_.back() << '\n' << std::flush;
  changed_.notify_all();
  return seq;
}

std::uint64_t EventLog::append(Record fields) {
  if (!fields.contains("ev")) throw std::invalid_argument("event record without \"ev\"");
  std::lock_guard lock(mutex_);
  const std::uint64_t seq = lines_.size() + 1;
  // seq goes first; splicing it into the dumped object avoids rebuilding the record.
  const std::string body = fields.dump();
  lines_.push_back("{\"seq\":" + std::to_string(seq) + "," + body.substr(1));
  if (sink_) *sink_ << lines_.back() << '\n' << std::flush;
  changed_.notify_all();
  return seq;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mutex_);
  return lines_.size();
}

std::vector<std::string> EventLog::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

std::vector<std::string> EventLog::since(std::uint64_t after) const {
  std::lock_guard lock(mutex_);
  if (after >= lines_.size()) return {};
  return {lines_.begin() + static_cast<std::ptrdiff_t>(after), lines_.end()};
}

std::string EventLog::text() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const std::string& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

bool EventLog::wait_for(std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] { return lines_.size() > after || closed_; });
  return lines_.size() > after;
}

void EventLog::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  changed_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

void EventLog::set_sink(std::ostream* out) {
  std::lock_guard lock(mutex_);
  sink_ = out;
}

}  // namespace andor
