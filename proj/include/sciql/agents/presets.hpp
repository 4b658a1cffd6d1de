#pragma once

#include <string>
#include <vector>

#include "sciql/agents/config.hpp"

namespace sciql::agents {

/// smoke: 1e3 steps, small nets. desk: single-core desk scale. full: the
/// default HyperParams.
inline HyperParams preset(const std::string& name) {
  HyperParams hp;
  if (name == "full") return hp;
  if (name == "smoke") {
    hp.steps_chi = hp.steps_value = hp.steps_policy = 1000;
    hp.hidden = {32, 32};
    hp.batch = 64;
    hp.log_every = 100;
    return hp;
  }
  if (name == "desk") {
    hp.steps_chi = hp.steps_value = hp.steps_policy = 40000;
    hp.hidden = {64, 64};
    hp.batch = 128;
    hp.log_every = 1000;
    return hp;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected smoke, desk or full)");
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"smoke", "desk", "full"};
  return names;
}

}  // namespace sciql::agents
