#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sciql/errors.hpp"

namespace sciql::env {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kBound = 50.0;
inline constexpr double kSpawnFraction = 0.7;
inline constexpr double kMinSpeed = 0.5;
inline constexpr double kMaxSpeed = 3.0;
inline constexpr int kHistory = 4;
inline constexpr int kHorizon = 1000;
inline constexpr std::size_t kObsDim = 3 * kHistory;
inline constexpr std::size_t kActionDim = 2;

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool operator==(const Pose&) const = default;
};

struct EnvState {
  std::array<Pose, kHistory> history{};  // oldest first
  int t = 0;

  [[nodiscard]] const Pose& current() const { return history.back(); }

  /// 12 floats: (x, y, theta) per history slot, oldest first.
  [[nodiscard]] std::array<float, kObsDim> observation() const {
    std::array<float, kObsDim> obs{};
    for (int i = 0; i < kHistory; ++i) {
      obs[3 * i] = static_cast<float>(history[i].x);
      obs[3 * i + 1] = static_cast<float>(history[i].y);
      obs[3 * i + 2] = static_cast<float>(history[i].theta);
    }
    return obs;
  }

  bool operator==(const EnvState&) const = default;
};

struct TaskTarget {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 10.0;
  bool operator==(const TaskTarget&) const = default;
};

enum class RewardMode { distance, literal_squared };

inline std::string to_string(RewardMode m) {
  return m == RewardMode::distance ? "distance" : "literal_squared";
}

inline RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "distance") return RewardMode::distance;
  if (s == "literal_squared") return RewardMode::literal_squared;
  throw std::invalid_argument("unknown reward mode '" + s + "'");
}

/// Default: -| ||p - c|| - r |. Literal: -| ||p - c||^2 - r |.
inline double task_reward(double x, double y, const TaskTarget& target,
                          RewardMode mode = RewardMode::distance) {
  const double dx = x - target.cx;
  const double dy = y - target.cy;
  const double sq = dx * dx + dy * dy;
  if (mode == RewardMode::literal_squared) return -std::abs(sq - target.radius);
  return -std::abs(std::sqrt(sq) - target.radius);
}

struct DecodedAction {
  double delta_theta;
  double speed;
};

/// Affine maps [-1,1] -> [-pi,pi] and [-1,1] -> [0.5, 3.0]; inputs are clamped.
inline DecodedAction decode_action(double raw_turn, double raw_speed) {
  raw_turn = std::clamp(raw_turn, -1.0, 1.0);
  raw_speed = std::clamp(raw_speed, -1.0, 1.0);
  return {raw_turn * kPi, kMinSpeed + (raw_speed + 1.0) * 0.5 * (kMaxSpeed - kMinSpeed)};
}

/// Inverse of decode_action for in-range values.
inline std::array<double, 2> encode_action(double delta_theta, double speed) {
  return {std::clamp(delta_theta / kPi, -1.0, 1.0),
          std::clamp(2.0 * (speed - kMinSpeed) / (kMaxSpeed - kMinSpeed) - 1.0, -1.0, 1.0)};
}

struct EnvConfig {
  TaskTarget target{};
  RewardMode reward_mode = RewardMode::distance;
  int horizon = kHorizon;
  bool operator==(const EnvConfig&) const = default;
};

struct StepResult {
  EnvState state;
  double reward;
  bool done;
};

/// Uniform position in the spawn box, uniform heading, history padded.
template <class Rng>
EnvState reset(Rng& rng) {
  std::uniform_real_distribution<double> pos(-kSpawnFraction * kBound, kSpawnFraction * kBound);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  Pose p;
  p.x = pos(rng);
  p.y = pos(rng);
  p.theta = wrap_angle(ang(rng));
  EnvState s;
  s.history.fill(p);
  s.t = 0;
  return s;
}

inline EnvState reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return reset(rng);
}

/// Rotate by the decoded turn, then move by speed along the new heading,
/// clamped to the square.
inline StepResult step(const EnvState& state, double raw_turn, double raw_speed,
                       const EnvConfig& config = {}) {
  if (state.t >= config.horizon) {
    throw InvalidState("step: episode already finished at t=" + std::to_string(state.t));
  }
  const auto [dtheta, speed] = decode_action(raw_turn, raw_speed);
  const Pose& cur = state.current();
  Pose next;
  next.theta = wrap_angle(cur.theta + dtheta);
  next.x = std::clamp(cur.x + speed * std::cos(next.theta), -kBound, kBound);
  next.y = std::clamp(cur.y + speed * std::sin(next.theta), -kBound, kBound);
  StepResult out;
  for (int i = 0; i + 1 < kHistory; ++i) out.state.history[i] = state.history[i + 1];
  out.state.history.back() = next;
  out.state.t = state.t + 1;
  out.reward = task_reward(next.x, next.y, config.target, config.reward_mode);
  out.done = out.state.t >= config.horizon;
  return out;
}

}  // namespace sciql::env
