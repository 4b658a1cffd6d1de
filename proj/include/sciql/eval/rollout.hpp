#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sciql/agents/agent.hpp"
#include "sciql/env/circle2d.hpp"
#include "sciql/eval/metrics.hpp"
#include "sciql/labeling/criteria.hpp"

namespace sciql::eval {

inline void check_promptable(const labeling::StyleCriterion& c, int z) {
  if (c.is_promptable(z)) return;
  std::string set;
  for (std::size_t i = 0; i < c.promptable.size(); ++i) set += (i ? "," : "") + std::to_string(c.promptable[i]);
  throw std::invalid_argument("label " + std::to_string(z) + " is not promptable for " + labeling::to_string(c.id) +
                              " (promptable: " + set + ")");
}

/// Episode start seeds shared by every label so labels face the same starts.
inline std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> out(n);
  for (auto& s : out) s = rng();
  return out;
}

/// Rolls out the deterministic mean-action policy for each requested label,
/// n_episodes each, all episodes stepped in lockstep through one batched
/// forward pass per timestep. Every trajectory is labeled post hoc.
inline std::vector<RolloutReport> rollout(const agents::Agent& agent, const std::vector<int>& labels,
                                          std::size_t n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("rollout: n_episodes must be >= 1");
  for (int z : labels) check_promptable(agent.criterion, z);
  const auto& cfg = agent.dataset.env;
  const auto seeds = episode_seeds(seed, n_episodes);
  const std::size_t n = labels.size() * n_episodes;
  std::vector<env::EnvState> states(n);
  std::vector<std::uint32_t> z(n);
  std::vector<data::Trajectory> trajs(n);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    for (std::size_t e = 0; e < n_episodes; ++e) {
      const std::size_t i = l * n_episodes + e;
      states[i] = env::reset(seeds[e]);
      z[i] = static_cast<std::uint32_t>(labels[l]);
      trajs[i].push_observation(states[i]);
    }
  }
  const bool conditioned = agent.policy.conditioned();
  DenseArray feats({n, agents::kStateFeatures});
  for (int t = 0; t < cfg.horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto obs = states[i].observation();
      agents::write_state_features(obs, feats.row(i));
    }
    const DenseArray act = conditioned ? agent.policy.mean_action(feats, z) : agent.policy.mean_action(feats);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = env::step(states[i], act.at(i, 0), act.at(i, 1), cfg);
      states[i] = r.state;
      trajs[i].actions.push_back(act.at(i, 0));
      trajs[i].actions.push_back(act.at(i, 1));
      trajs[i].rewards.push_back(static_cast<float>(r.reward));
      trajs[i].push_observation(states[i]);
    }
  }
  std::vector<RolloutReport> reports(labels.size());
  for (std::size_t l = 0; l < labels.size(); ++l) {
    reports[l].criterion = agent.criterion.id;
    reports[l].z = labels[l];
    reports[l].seed = seed;
    for (std::size_t e = 0; e < n_episodes; ++e) {
      const auto& tr = trajs[l * n_episodes + e];
      const auto lab = labeling::label_episode(tr.poses(), agent.criterion);
      double ret = 0.0;
      for (float r : tr.rewards) ret += r;
      reports[l].episodes.push_back(
          {alignment(lab, labels[l]), ret, normalized_return(ret, agent.dataset.return_bounds)});
    }
  }
  return reports;
}

/// Every promptable label of the agent's criterion.
inline std::vector<RolloutReport> rollout_all(const agents::Agent& agent, std::size_t n_episodes, std::uint64_t seed) {
  return rollout(agent, agent.criterion.promptable, n_episodes, seed);
}

}  // namespace sciql::eval
