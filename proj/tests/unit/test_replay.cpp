#include <doctest.h>

#include <sstream>

#include "andor/replay.hpp"
#include "harness.hpp"

using namespace andor;
using nlohmann::json;

namespace {

std::vector<json> parse_all(const std::vector<std::string>& lines) {
  std::vector<json> out;
  for (const auto& l : lines) out.push_back(json::parse(l));
  return out;
}

// Inserts rec after position i and renumbers seq.
std::vector<std::string> insert_after(std::vector<json> records, std::size_t i, json rec) {
  records.insert(records.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(rec));
  std::vector<std::string> out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    records[k]["seq"] = k + 1;
    out.push_back(records[k].dump());
  }
  return out;
}

}  // namespace

TEST_CASE("logs of the bundled scenarios replay cleanly") {
  for (const char* scenario : {"scenarios/worked_example.json", "scenarios/failure_propagation.json"}) {
    CAPTURE(scenario);
    auto run = testing::run_scenario(scenario);
    auto lines = testing::split_records(run.log);
    ReplayReport r = replay_lines(lines);
    CHECK_MESSAGE(r.ok, r.message);
    CHECK(r.records == lines.size());
    CHECK(r.outcome == std::string(to_string(run.result.outcome)));
    std::istringstream in(run.log);
    CHECK(replay_stream(in).ok);
  }
}

TEST_CASE("replay rejects a DELETED node coming back") {
  auto run = testing::run_scenario("scenarios/failure_propagation.json");
  auto records = parse_all(testing::split_records(run.log));
  std::size_t at = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i]["ev"] == "status" && records[i]["to"] == "DELETED") {
      at = i;
      break;
    }
  }
  REQUIRE(at < records.size());
  const std::string node = records[at]["node"];
  ReplayReport r = replay_lines(insert_after(records, at, {{"ev", "status"}, {"node", node}, {"from", "DELETED"}, {"to", "VISITED"}}));
  CHECK_FALSE(r.ok);
  CHECK(r.failing_seq == at + 2);
  CHECK(r.message.find("terminal status left") != std::string::npos);
}

TEST_CASE("replay rejects forged counters and stack moves") {
  auto run = testing::run_scenario("scenarios/worked_example.json");
  auto records = parse_all(testing::split_records(run.log));

  SUBCASE("retry beyond the limit") {
    std::size_t at = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i]["ev"] == "attempt") {
        at = i;
        break;
      }
    }
    json extra = records[at];
    extra.erase("seq");
    extra["attempt"] = 2;
    json third = extra;
    third["attempt"] = 3;
    auto lines = insert_after(records, at, extra);
    auto r = replay_lines(insert_after(parse_all(lines), at + 1, third));
    CHECK_FALSE(r.ok);
    CHECK(r.message.find("exceeds the limit") != std::string::npos);
  }
  SUBCASE("pop that does not match the stack top") {
    std::size_t at = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i]["ev"] == "pop" && records[i]["iter"] == 2) at = i;
    }
    records[at]["node"] = "1";
    std::vector<std::string> lines;
    for (const auto& rec : records) lines.push_back(rec.dump());
    auto r = replay_lines(lines);
    CHECK_FALSE(r.ok);
    CHECK(r.failing_seq == records[at]["seq"].get<std::uint64_t>());
  }
  SUBCASE("a second child on an ACTION node") {
    std::size_t at = 0;
    std::string action_node;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i]["ev"] == "type" && records[i]["type"] == "ACTION") {
        at = i;
        action_node = records[i]["node"];
        break;
      }
    }
    REQUIRE_FALSE(action_node.empty());
    auto r = replay_lines(insert_after(records, at,
                                       {{"ev", "node_added"}, {"node", action_node + ".1"}, {"parent", action_node},
                                        {"depth", 9}, {"description", "x"}}));
    CHECK_FALSE(r.ok);
    CHECK(r.message.find("under ACTION") != std::string::npos);
  }
}

TEST_CASE("replay diagnoses damaged logs") {
  auto run = testing::run_scenario("scenarios/worked_example.json");
  auto lines = testing::split_records(run.log);

  SUBCASE("cut in the middle of a record") {
    lines.back() = lines.back().substr(0, lines.back().size() / 2);
    auto r = replay_lines(lines);
    CHECK_FALSE(r.ok);
    CHECK(r.failing_seq == lines.size());
    CHECK(r.message.find("not valid JSON") != std::string::npos);
  }
  SUBCASE("missing the tail") {
    lines.pop_back();
    auto r = replay_lines(lines);
    CHECK_FALSE(r.ok);
    CHECK(r.message == "log ends without run_end");
  }
  SUBCASE("a gap in the sequence") {
    lines.erase(lines.begin() + 3);
    auto r = replay_lines(lines);
    CHECK_FALSE(r.ok);
    CHECK(r.failing_seq == 4);
  }
  SUBCASE("record without ev") {
    lines[1] = R"({"seq":2})";
    CHECK(replay_lines(lines).message.find("lacks seq or ev") != std::string::npos);
  }
}
