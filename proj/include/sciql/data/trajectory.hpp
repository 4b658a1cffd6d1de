#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sciql/env/circle2d.hpp"

namespace sciql::data {

/// One episode: T+1 observations, T actions, T rewards.
struct Trajectory {
  std::vector<float> observations;  // (T+1) * kObsDim
  std::vector<float> actions;       // T * kActionDim
  std::vector<float> rewards;       // T

  [[nodiscard]] std::size_t length() const { return rewards.size(); }

  [[nodiscard]] std::span<const float> observation(std::size_t t) const {
    return {observations.data() + t * env::kObsDim, env::kObsDim};
  }
  [[nodiscard]] std::span<const float> action(std::size_t t) const {
    return {actions.data() + t * env::kActionDim, env::kActionDim};
  }

  /// Most recent pose of observation t (t in [0, T]).
  [[nodiscard]] env::Pose pose(std::size_t t) const {
    const float* o = observations.data() + t * env::kObsDim + 3 * (env::kHistory - 1);
    return {o[0], o[1], o[2]};
  }

  [[nodiscard]] std::vector<env::Pose> poses() const {
    std::vector<env::Pose> out(length() + 1);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = pose(t);
    return out;
  }

  [[nodiscard]] double total_return() const {
    double r = 0.0;
    for (float v : rewards) r += v;
    return r;
  }

  void push_observation(const env::EnvState& s) {
    const auto o = s.observation();
    observations.insert(observations.end(), o.begin(), o.end());
  }

  bool operator==(const Trajectory&) const = default;
};

struct ReturnBounds {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const ReturnBounds&) const = default;
};

struct DatasetHeader {
  std::string env_id = "circle2d-inplace-v0";
  std::string variant = "inplace";
  env::EnvConfig env{};
  std::uint64_t seed = 0;
  std::size_t episode_count = 0;
  std::size_t horizon = env::kHorizon;
  /// Normalized-return convention: lo = dataset minimum episode return,
  /// hi = best scripted on-target episode return.
  ReturnBounds return_bounds{};
  bool operator==(const DatasetHeader&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Trajectory> episodes;

  /// Offsets of each episode's first transition in the flat transition index.
  [[nodiscard]] std::vector<std::size_t> episode_offsets() const {
    std::vector<std::size_t> out(episodes.size() + 1, 0);
    for (std::size_t i = 0; i < episodes.size(); ++i) out[i + 1] = out[i] + episodes[i].length();
    return out;
  }

  [[nodiscard]] std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.length();
    return n;
  }

  bool operator==(const Dataset&) const = default;
};

}  // namespace sciql::data
