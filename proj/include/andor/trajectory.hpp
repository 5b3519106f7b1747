#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace andor {

using Record = nlohmann::ordered_json;

// Fields of one record serialized as they are added, in order. The text is the
// same as Record::dump() would give for the same fields; keys must be unique.
class Fields {
 public:
  explicit Fields(std::string_view ev);
  Fields& str(std::string_view key, std::string_view value);
  Fields& num(std::string_view key, std::int64_t value);
  Fields& flag(std::string_view key, bool value);
  Fields& value(std::string_view key, const Record& value);

 private:
  friend class EventLog;
  void key(std::string_view name);
  std::string body_;  // object text without the closing brace
};

// Append-only line-delimited event log. Every record gets the next sequence
// number (starting at 1) as its first field. Thread-safe.
class EventLog {
 public:
  // Records must carry an "ev" field. Returns the assigned sequence number.
  std::uint64_t append(Record fields);
  std::uint64_t append(const Fields& fields);
  std::uint64_t last_seq() const;
  std::vector<std::string> lines() const;
  // Lines with seq > after.
  std::vector<std::string> since(std::uint64_t after) const;
  // All lines, each terminated by '\n'.
  std::string text() const;
  // Blocks until a record with seq > after exists, the log is closed or the
  // timeout passes. Returns true when new records are available.
  bool wait_for(std::uint64_t after, std::chrono::milliseconds timeout) const;
  void close();
  bool closed() const;
  // Mirrors every appended line to out (not owned).
  void set_sink(std::ostream* out);

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::vector<std::string> lines_;
  bool closed_ = false;
  std::ostream* sink_ = nullptr;
};

}  // namespace andor
