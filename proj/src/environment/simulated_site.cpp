#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "andor/environment.hpp"

namespace andor {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool pattern_matches(const std::string& pattern, const std::string& typed) {
  if (pattern.empty() || pattern == "*") return true;
  return lower(typed).find(lower(pattern)) != std::string::npos;
}

std::string element_line(const Element& e) {
  std::string line = "[" + std::to_string(e.id) + "] " + e.kind;
  if (!e.label.empty()) line += " '" + e.label + "'";
  return line;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

void SiteFixture::validate() const {
  if (window < 1) throw FixtureError("window must be >= 1");
  if (pages.count(start) == 0) throw FixtureError("start url '" + start + "' is not a defined page");
  for (const auto& [url, page] : pages) {
    std::set<int> ids;
    for (const Element& e : page.elements) {
      if (e.id <= 0) throw FixtureError("page '" + url + "' has a non-positive element id");
      if (!ids.insert(e.id).second) {
        throw FixtureError("page '" + url + "' repeats element id " + std::to_string(e.id));
      }
      if (!e.target.empty() && pages.count(e.target) == 0) {
        throw FixtureError("element " + std::to_string(e.id) + " on '" + url + "' targets undefined page '" +
                           e.target + "'");
      }
    }
    for (const Transition& t : page.transitions) {
      if (ids.count(t.element) == 0) {
        throw FixtureError("transition on '" + url + "' references missing element " + std::to_string(t.element));
      }
      if (pages.count(t.target) == 0) {
        throw FixtureError("transition on '" + url + "' targets undefined page '" + t.target + "'");
      }
    }
  }
}

SiteFixture SiteFixture::from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != kFormat) {
      throw FixtureError(std::string("site fixture must declare format \"") + kFormat + "\"");
    }
    SiteFixture site;
    site.start = j.at("start").get<std::string>();
    site.window = j.value("window", 20);
    for (const auto& [url, page_json] : j.at("pages").items()) {
      PageDef page;
      page.title = page_json.value("title", std::string{});
      page.text = page_json.value("text", std::vector<std::string>{});
      for (const auto& e : page_json.value("elements", json::array())) {
        page.elements.push_back({e.at("id").get<int>(), e.value("kind", std::string("element")),
                                 e.value("label", std::string{}), e.value("target", std::string{})});
      }
      for (const auto& t : page_json.value("transitions", json::array())) {
        page.transitions.push_back(
            {t.at("element").get<int>(), t.value("pattern", std::string{}), t.at("target").get<std::string>()});
      }
      site.pages.emplace(url, std::move(page));
    }
    for (const auto& f : j.value("failures", json::array())) {
      site.failures.push_back({f.value("url", std::string{}), f.at("element").get<int>(), f.value("times", -1)});
    }
    site.validate();
    return site;
  } catch (const json::exception& e) {
    throw FixtureError(std::string("malformed site fixture: ") + e.what());
  }
}

json SiteFixture::to_json() const {
  json page_map = json::object();
  for (const auto& [url, page] : pages) {
    json elements = json::array();
    for (const Element& e : page.elements) {
      json ej = {{"id", e.id}, {"kind", e.kind}, {"label", e.label}};
      if (!e.target.empty()) ej["target"] = e.target;
      elements.push_back(ej);
    }
    json transitions = json::array();
    for (const Transition& t : page.transitions) {
      transitions.push_back({{"element", t.element}, {"pattern", t.pattern}, {"target", t.target}});
    }
    page_map[url] = {{"title", page.title}, {"text", page.text}, {"elements", elements}, {"transitions", transitions}};
  }
  json failure_list = json::array();
  for (const FailureInjection& f : failures) {
    failure_list.push_back({{"url", f.url}, {"element", f.element}, {"times", f.times}});
  }
  return {{"format", kFormat}, {"start", start},          {"window", window},
          {"pages", page_map}, {"failures", failure_list}};
}

SiteFixture load_site_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FixtureError("cannot open site fixture '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FixtureError("site fixture '" + path + "' is not valid JSON: " + e.what());
  }
  return SiteFixture::from_json(j);
}

SimulatedSite::SimulatedSite(SiteFixture fixture) : fixture_(std::move(fixture)) {
  fixture_.validate();
  reset();
}

void SimulatedSite::reset() {
  url_ = fixture_.start;
  query_.clear();
  offset_ = 0;
  frames_.clear();
  failures_left_.clear();
  for (const FailureInjection& f : fixture_.failures) failures_left_.push_back(f.times);
  done_ = false;
  answer_.reset();
}

std::vector<std::string> SimulatedSite::history() const {
  std::vector<std::string> urls;
  for (const Frame& f : frames_) urls.push_back(f.url);
  return urls;
}

std::vector<std::string> SimulatedSite::render_lines() const {
  const PageDef& page = fixture_.pages.at(url_);
  std::vector<std::string> lines;
  std::set<int> placed;
  for (std::string line : page.text) {
    replace_all(line, "{query}", query_);
    for (const Element& e : page.elements) {
      std::string token = "{" + std::to_string(e.id) + "}";
      if (line.find(token) != std::string::npos) {
        replace_all(line, token, element_line(e));
        placed.insert(e.id);
      }
    }
    lines.push_back(std::move(line));
  }
  for (const Element& e : page.elements) {
    if (placed.count(e.id) == 0) lines.push_back(element_line(e));
  }
  return lines;
}

Observation SimulatedSite::observe() const {
  const PageDef& page = fixture_.pages.at(url_);
  auto lines = render_lines();
  Observation obs;
  obs.url = url_;
  obs.title = page.title;
  std::size_t begin = std::min<std::size_t>(static_cast<std::size_t>(offset_), lines.size());
  std::size_t end = std::min(lines.size(), begin + static_cast<std::size_t>(fixture_.window));
  for (std::size_t i = begin; i < end; ++i) {
    obs.page_text += lines[i];
    obs.page_text += '\n';
  }
  for (const Element& e : page.elements) {
    if (obs.page_text.find("[" + std::to_string(e.id) + "] ") != std::string::npos) obs.elements.emplace(e.id, e);
  }
  return obs;
}

bool SimulatedSite::go_to(const std::string& url, std::string query) {
  if (fixture_.pages.count(url) == 0) return false;
  frames_.push_back({url_, query_, offset_});
  url_ = url;
  query_ = std::move(query);
  offset_ = 0;
  return true;
}

bool SimulatedSite::navigate(std::string_view url) {
  std::string target(url);
  if (fixture_.pages.count(target) == 0) return false;
  if (target == url_) return true;
  return go_to(target, {});
}

bool SimulatedSite::injected_failure(int element) {
  for (std::size_t i = 0; i < fixture_.failures.size(); ++i) {
    const FailureInjection& f = fixture_.failures[i];
    if (f.element != element || (!f.url.empty() && f.url != url_)) continue;
    if (failures_left_[i] == 0) continue;
    if (failures_left_[i] > 0) --failures_left_[i];
    return true;
  }
  return false;
}

StepResult SimulatedSite::step(const Action& act) {
  if (done_) return {false, "episode already finished"};
  const PageDef& page = fixture_.pages.at(url_);
  auto visible = [&](int id) { return observe().elements.count(id) != 0; };

  if (const auto* click = std::get_if<action::Click>(&act)) {
    if (!visible(click->element_id)) return {false, "element " + std::to_string(click->element_id) + " not on page"};
    if (injected_failure(click->element_id)) return {false, "injected failure"};
    for (const Transition& t : page.transitions) {
      if (t.element == click->element_id && (t.pattern.empty() || t.pattern == "*")) return {go_to(t.target, {}), ""};
    }
    for (const Element& e : page.elements) {
      if (e.id == click->element_id && !e.target.empty()) return {go_to(e.target, {}), ""};
    }
    return {false, "element " + std::to_string(click->element_id) + " has no effect"};
  }
  if (const auto* type = std::get_if<action::Type>(&act)) {
    if (!visible(type->element_id)) return {false, "element " + std::to_string(type->element_id) + " not on page"};
    if (injected_failure(type->element_id)) return {false, "injected failure"};
    for (const Transition& t : page.transitions) {
      if (t.element == type->element_id && pattern_matches(t.pattern, type->text)) {
        return {go_to(t.target, type->text), ""};
      }
    }
    return {false, "no transition for typed text"};
  }
  if (std::holds_alternative<action::GoBack>(act)) {
    if (frames_.empty()) return {false, "history is empty"};
    Frame frame = frames_.back();
    frames_.pop_back();
    url_ = frame.url;
    query_ = frame.query;
    offset_ = frame.offset;
    return {true, ""};
  }
  if (std::holds_alternative<action::GoHome>(act)) {
    if (url_ == fixture_.start) return {true, ""};
    return {go_to(fixture_.start, {}), ""};
  }
  if (const auto* go = std::get_if<action::Goto>(&act)) {
    if (go->url == url_) return {true, ""};
    if (!go_to(go->url, {})) return {false, "unknown url " + go->url};
    return {true, ""};
  }
  if (const auto* scroll = std::get_if<action::Scroll>(&act)) {
    int total = static_cast<int>(render_lines().size());
    int next = scroll->direction == action::Direction::Down ? offset_ + fixture_.window : offset_ - fixture_.window;
    if (next < 0 || next >= total) return {false, "cannot scroll further"};
    offset_ = next;
    return {true, ""};
  }
  if (std::holds_alternative<action::Note>(act)) return {true, ""};
  if (const auto* stop = std::get_if<action::Stop>(&act)) {
    done_ = true;
    answer_ = stop->answer;
    return {true, ""};
  }
  return {false, "unsupported action"};
}

}  // namespace andor
