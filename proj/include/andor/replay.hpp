#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace andor {

struct ReplayReport {
  bool ok = false;
  std::uint64_t records = 0;
  // Sequence number (or 1-based line number for unparseable lines) of the
  // first record that breaks an invariant.
  std::optional<std::uint64_t> failing_seq;
  std::string message;
  std::string outcome;  // from run_end, if reached
  std::size_t nodes = 0;
};

// Rebuilds the tree and stack from a trajectory log and checks the plan
// invariants after every record.
ReplayReport replay_lines(const std::vector<std::string>& lines);
ReplayReport replay_stream(std::istream& in);
ReplayReport replay_file(const std::string& path);

}  // namespace andor
