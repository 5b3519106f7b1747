#include <doctest.h>

#include <nlohmann/json.hpp>

#include "andor/environment.hpp"
#include "harness.hpp"
#include "rule_environment.hpp"

using namespace andor;

namespace {

SiteFixture recipe_site() { return load_site_fixture(testing::source_path("scenarios/recipe_site.json")); }

constexpr const char* kHome = "https://www.allrecipes.com/";
constexpr const char* kResults = "https://www.allrecipes.com/search?q=brownie";

}  // namespace

TEST_CASE("action grammar") {
  CHECK(parse_action("click [6028]") == Action{action::Click{6028}});
  CHECK(parse_action("type [401] [eggless cake] [1]") == Action{action::Type{401, "eggless cake", true}});
  CHECK(parse_action("type [401] [eggless cake] [0]") == Action{action::Type{401, "eggless cake", false}});
  CHECK(parse_action("go_back") == Action{action::GoBack{}});
  CHECK(parse_action("go_home") == Action{action::GoHome{}});
  CHECK(parse_action("goto [https://x.test/a]") == Action{action::Goto{"https://x.test/a"}});
  CHECK(parse_action("scroll [up]") == Action{action::Scroll{action::Direction::Up}});
  CHECK(parse_action("note [Found matching pink footwear options: A, B]") ==
        Action{action::Note{"Found matching pink footwear options: A, B"}});
  CHECK(parse_action("stop [42]") == Action{action::Stop{"42"}});
  CHECK(parse_action("stop") == Action{action::Stop{}});
  CHECK_THROWS_AS(parse_action("clik [12]"), ActionParseError);
  CHECK_THROWS_AS(parse_action("click [abc]"), ActionParseError);
  CHECK_THROWS_AS(parse_action("click 12"), ActionParseError);
  CHECK_THROWS_AS(parse_action("note []"), ActionParseError);
  CHECK_THROWS_AS(parse_action("type [401] [eggless cake]"), ActionParseError);
  CHECK_THROWS_AS(parse_action("type [401] [eggless cake [1]"), ActionParseError);
  CHECK_THROWS_AS(parse_action("type [401] [eggless cake] 1]"), ActionParseError);
  CHECK_THROWS_AS(parse_action("type [401] [] [1]"), ActionParseError);
  CHECK(is_note(parse_action("note [x]")));
  CHECK_FALSE(is_note(parse_action("click [1]")));
}

TEST_CASE("actions render back to their own text") {
  for (const char* text : {"click [6028]", "type [401] [eggless cake] [1]", "go_back", "go_home", "goto [https://x.test/a]",
                           "scroll [down]", "note [a, b]", "stop [yes]", "stop"}) {
    CHECK(to_string(parse_action(text)) == text);
  }
}

TEST_CASE("extract_command finds a command inside prose") {
  CHECK(extract_command("I will now `click [501]` to open it") == std::optional<std::string>("click [501]"));
  CHECK_FALSE(extract_command("nothing to do here").has_value());
}

TEST_CASE("simulated site: typing a matching query opens the results page") {
  SimulatedSite site(recipe_site());
  CHECK(site.get_url() == kHome);
  const Observation before = site.observe();
  CHECK(before.elements.count(401) == 1);
  StepResult r = site.step(action::Type{401, "vegan chocolate brownie", true});
  CHECK(r.ok);
  CHECK(site.get_url() == kResults);
  const Observation after = site.observe();
  CHECK(after != before);
  CHECK(after.page_text.find("vegan chocolate brownie") != std::string::npos);
  CHECK(after.elements.count(501) == 1);
}

TEST_CASE("simulated site: clicking an absent element leaves the page as it was") {
  SimulatedSite site(recipe_site());
  const Observation before = site.observe();
  StepResult r = site.step(action::Click{9999});
  CHECK_FALSE(r.ok);
  CHECK_FALSE(r.error.empty());
  CHECK(site.observe() == before);
}

TEST_CASE("simulated site: history") {
  SimulatedSite site(recipe_site());
  CHECK_FALSE(site.step(action::GoBack{}).ok);
  REQUIRE(site.step(action::Type{401, "brownie", true}).ok);
  REQUIRE(site.step(action::Click{501}).ok);
  CHECK(site.history() == std::vector<std::string>{kHome, kResults});
  CHECK(site.step(action::GoBack{}).ok);
  CHECK(site.get_url() == kResults);
  CHECK(site.observe().page_text.find("brownie") != std::string::npos);
}

TEST_CASE("simulated site: navigate") {
  SimulatedSite site(recipe_site());
  REQUIRE(site.step(action::Type{401, "brownie", true}).ok);
  CHECK(site.navigate(kHome));
  CHECK(site.get_url() == kHome);
  CHECK(site.observe().title == "Allrecipes home");
  CHECK_FALSE(site.navigate("missing"));
  CHECK(site.get_url() == kHome);
}

TEST_CASE("simulated site: stop ends the episode") {
  SimulatedSite site(recipe_site());
  CHECK(site.step(action::Stop{"done"}).ok);
  CHECK(site.done());
  CHECK(site.answer() == std::optional<std::string>("done"));
  CHECK_FALSE(site.step(action::Click{401}).ok);
  site.reset();
  CHECK_FALSE(site.done());
}

TEST_CASE("simulated site: injected failures") {
  SiteFixture fixture = recipe_site();
  fixture.failures.push_back({"", 501, 1});
  SimulatedSite site(fixture);
  REQUIRE(site.step(action::Type{401, "brownie", true}).ok);
  CHECK_FALSE(site.step(action::Click{501}).ok);
  CHECK(site.step(action::Click{501}).ok);
}

TEST_CASE("site fixtures are validated") {
  nlohmann::json j = recipe_site().to_json();
  CHECK_NOTHROW(SiteFixture::from_json(j));
  nlohmann::json bad = j;
  bad["start"] = "https://nowhere.test/";
  CHECK_THROWS_AS(SiteFixture::from_json(bad), FixtureError);
  nlohmann::json no_format = j;
  no_format.erase("format");
  CHECK_THROWS_AS(SiteFixture::from_json(no_format), FixtureError);
}

TEST_CASE("observation hash depends on url and text") {
  SimulatedSite site(recipe_site());
  const std::string h0 = observation_hash(site.observe());
  CHECK(h0 == observation_hash(site.observe()));
  REQUIRE(site.step(action::Type{401, "brownie", true}).ok);
  CHECK(h0 != observation_hash(site.observe()));
}

TEST_CASE("rule environment encodes failures in element ids") {
  testing::RuleEnvironment env;
  CHECK(env.step(action::Click{10}).ok);
  CHECK_FALSE(env.step(action::Click{21}).ok);
  CHECK(env.step(action::Click{21}).ok);
  CHECK_FALSE(env.step(action::Click{19}).ok);
  CHECK_FALSE(env.step(action::Click{19}).ok);
  CHECK(env.attempts(19) == 2);
}
