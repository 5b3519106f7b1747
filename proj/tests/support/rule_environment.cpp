#include "rule_environment.hpp"

#include <type_traits>

namespace andor::testing {

void RuleEnvironment::reset() {
  url_ = kStart;
  attempts_.clear();
  done_ = false;
  answer_.reset();
}

StepResult RuleEnvironment::interact(int element) {
  const int n = ++attempts_[element];
  const int f = element % 10;
  if (f == 9 || n <= f) return {false, "element " + std::to_string(element) + " did not respond"};
  url_ = "rule://e" + std::to_string(element);
  return {true, {}};
}

StepResult RuleEnvironment::step(const Action& action) {
  if (done_) return {false, "episode finished"};
  return std::visit(
      [this](const auto& a) -> StepResult {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::Click>) {
          return interact(a.element_id);
        } else if constexpr (std::is_same_v<T, action::Type>) {
          return interact(a.element_id);
        } else if constexpr (std::is_same_v<T, action::Stop>) {
          done_ = true;
          answer_ = a.answer;
          return {true, {}};
        } else if constexpr (std::is_same_v<T, action::Goto>) {
          url_ = a.url;
          return {true, {}};
        } else if constexpr (std::is_same_v<T, action::GoHome>) {
          url_ = kStart;
          return {true, {}};
        } else {
          return {true, {}};
        }
      },
      action);
}

Observation RuleEnvironment::observe() const {
  Observation obs;
  obs.url = url_;
  obs.title = "page " + url_;
  obs.page_text = "content of " + url_;
  for (int id : {11, 12, 13}) obs.elements[id] = Element{id, "link", "link " + std::to_string(id), {}};
  return obs;
}

bool RuleEnvironment::navigate(std::string_view url) {
  if (url.empty()) return false;
  url_ = std::string(url);
  return true;
}

int RuleEnvironment::attempts(int element) const {
  auto it = attempts_.find(element);
  return it == attempts_.end() ? 0 : it->second;
}

}  // namespace andor::testing
