#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "sciql/data/trajectory.hpp"
#include "sciql/env/scripted.hpp"

namespace sciql::env {

enum class Variant { inplace, navigate };

inline std::string to_string(Variant v) { return v == Variant::inplace ? "inplace" : "navigate"; }

inline Variant variant_from_string(const std::string& s) {
  if (s == "inplace") return Variant::inplace;
  if (s == "navigate") return Variant::navigate;
  throw std::invalid_argument("unknown variant '" + s + "' (expected inplace or navigate)");
}

struct PlanRanges {
  double radius_min = 2.0;
  double radius_max = 11.0;
  double speed_min = kMinSpeed;
  double speed_max = kMaxSpeed;
  /// Raw-action noise scale; the upper end pushes the heading
  /// second-difference spread past the top curvature-noise bin edge.
  double noise_min = 0.0;
  double noise_max = 0.2;
};

template <class Rng>
ScriptedPlan sample_plan(Variant variant, const PlanRanges& ranges, Rng& rng) {
  std::uniform_real_distribution<double> radius(ranges.radius_min, ranges.radius_max);
  std::uniform_real_distribution<double> speed(ranges.speed_min, ranges.speed_max);
  std::uniform_real_distribution<double> noise(ranges.noise_min, ranges.noise_max);
  std::uniform_real_distribution<double> spot(-kSpawnFraction * kBound, kSpawnFraction * kBound);
  std::bernoulli_distribution coin(0.5);
  ScriptedPlan plan;
  plan.radius = radius(rng);
  plan.orientation = coin(rng) ? Orientation::ccw : Orientation::cw;
  plan.speed = speed(rng);
  plan.noise = noise(rng);
  plan.navigate_first = variant == Variant::navigate;
  plan.approach_x = spot(rng);
  plan.approach_y = spot(rng);
  return plan;
}

/// Best noise-free return of the scripted controller tracing the task circle
/// itself, over a fixed grid of speeds and spawn seeds.
inline double best_on_target_return(const EnvConfig& config) {
  double best = -std::numeric_limits<double>::infinity();
  for (double speed : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      ScriptedPlan plan;
      plan.radius = config.target.radius;
      plan.speed = speed;
      plan.orientation = seed % 2 ? Orientation::cw : Orientation::ccw;
      plan.fixed_center = true;
      plan.center_x = config.target.cx;
      plan.center_y = config.target.cy;
      best = std::max(best, scripted_rollout(plan, 0x7a39e7ULL + seed, config).total_return());
    }
  }
  return best;
}

inline data::Dataset generate_dataset(Variant variant, std::size_t n_episodes, std::uint64_t seed,
                                      const EnvConfig& config = {}, const PlanRanges& ranges = {}) {
  if (n_episodes < 1) throw std::invalid_argument("generate_dataset: n_episodes must be >= 1");
  std::mt19937_64 rng(seed);
  data::Dataset ds;
  ds.header.env_id = "circle2d-" + to_string(variant) + "-v0";
  ds.header.variant = to_string(variant);
  ds.header.env = config;
  ds.header.seed = seed;
  ds.header.episode_count = n_episodes;
  ds.header.horizon = static_cast<std::size_t>(config.horizon);
  ds.episodes.reserve(n_episodes);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_episodes; ++i) {
    const ScriptedPlan plan = sample_plan(variant, ranges, rng);
    const std::uint64_t episode_seed = rng();
    ds.episodes.push_back(scripted_rollout(plan, episode_seed, config));
    lo = std::min(lo, ds.episodes.back().total_return());
  }
  ds.header.return_bounds = {lo, best_on_target_return(config)};
  return ds;
}

}  // namespace sciql::env
