#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sciql/data/trajectory.hpp"
#include "sciql/env/circle2d.hpp"

namespace sciql::env {

enum class Orientation { cw, ccw };

/// Hard-coded circle drawer. With navigate_first it pursues approach_point in
/// a straight line until within 1.0 of it, then draws the circle starting from
/// wherever it is. Without it the circle starts at the spawn pose. The circle
/// center is placed on the normal of the heading at the moment circling starts
/// so the agent enters tangentially.
struct ScriptedPlan {
  double radius = 5.0;
  Orientation orientation = Orientation::ccw;
  double speed = 1.0;
  double noise = 0.0;
  bool navigate_first = false;
  double approach_x = 0.0;
  double approach_y = 0.0;
  /// Fixed center instead of the tangent construction (used for on-target runs).
  bool fixed_center = false;
  double center_x = 0.0;
  double center_y = 0.0;
};

inline constexpr double kArrivalTolerance = 1.0;

class ScriptedController {
 public:
  explicit ScriptedController(const ScriptedPlan& plan) : plan_(plan), navigating_(plan.navigate_first) {}

  /// Noise-free (turn, speed) raw action for the current pose.
  std::array<double, 2> nominal_action(const Pose& p) {
    if (navigating_) {
      const double dx = plan_.approach_x - p.x;
      const double dy = plan_.approach_y - p.y;
      if (std::hypot(dx, dy) >= kArrivalTolerance) {
        return encode_action(wrap_angle(std::atan2(dy, dx) - p.theta), plan_.speed);
      }
      navigating_ = false;
    }
    if (!center_set_) place_center(p);
    const double sign = plan_.orientation == Orientation::ccw ? 1.0 : -1.0;
    double rx = p.x - cx_;
    double ry = p.y - cy_;
    double dist = std::hypot(rx, ry);
    if (dist < 1e-9) {
      rx = 1.0;
      ry = 0.0;
      dist = 1.0;
    }
    // Closest point on the planned circle, advanced by one chord.
    const double base = std::atan2(ry, rx);
    const double chord = 2.0 * std::asin(std::min(plan_.speed / (2.0 * plan_.radius), 1.0));
    const double ang = base + sign * chord;
    const double tx = cx_ + plan_.radius * std::cos(ang);
    const double ty = cy_ + plan_.radius * std::sin(ang);
    const double heading = std::atan2(ty - p.y, tx - p.x);
    return encode_action(wrap_angle(heading - p.theta), plan_.speed);
  }

  [[nodiscard]] bool navigating() const { return navigating_; }

 private:
  void place_center(const Pose& p) {
    if (plan_.fixed_center) {
      cx_ = plan_.center_x;
      cy_ = plan_.center_y;
    } else {
      const double sign = plan_.orientation == Orientation::ccw ? 1.0 : -1.0;
      cx_ = p.x - sign * plan_.radius * std::sin(p.theta);
      cy_ = p.y + sign * plan_.radius * std::cos(p.theta);
    }
    center_set_ = true;
  }

  ScriptedPlan plan_;
  bool navigating_;
  bool center_set_ = false;
  double cx_ = 0.0;
  double cy_ = 0.0;
};

/// Full-horizon rollout of the scripted controller with Gaussian action noise.
inline data::Trajectory scripted_rollout(const ScriptedPlan& plan, std::uint64_t seed,
                                         const EnvConfig& config = {}) {
  std::mt19937_64 rng(seed);
  EnvState state = reset(rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  ScriptedController controller(plan);
  data::Trajectory traj;
  traj.observations.reserve((config.horizon + 1) * kObsDim);
  traj.actions.reserve(config.horizon * kActionDim);
  traj.rewards.reserve(config.horizon);
  traj.push_observation(state);
  for (int t = 0; t < config.horizon; ++t) {
    auto a = controller.nominal_action(state.current());
    a[0] = std::clamp(a[0] + plan.noise * noise(rng), -1.0, 1.0);
    a[1] = std::clamp(a[1] + plan.noise * noise(rng), -1.0, 1.0);
    const auto out = step(state, a[0], a[1], config);
    traj.actions.push_back(static_cast<float>(a[0]));
    traj.actions.push_back(static_cast<float>(a[1]));
    traj.rewards.push_back(static_cast<float>(out.reward));
    state = out.state;
    traj.push_observation(state);
  }
  return traj;
}

}  // namespace sciql::env
