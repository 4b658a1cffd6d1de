#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sciql/agents/agent.hpp"
#include "sciql/errors.hpp"

namespace sciql::agents {

/// Periodic scalar log: one row per logged step, fixed column order.
struct TrainingLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(const std::map<std::string, double>& values) {
    if (columns.empty()) {
      for (const auto& [k, v] : values) columns.push_back(k);
    }
    std::vector<double> row;
    for (const auto& c : columns) {
      const auto it = values.find(c);
      row.push_back(it == values.end() ? std::nan("") : it->second);
    }
    rows.push_back(std::move(row));
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step";
    for (const auto& c : columns) {
      if (c != "step") out << ',' << c;
    }
    out << '\n';
    out.precision(9);
    for (const auto& row : rows) {
      std::ostringstream line;
      line.precision(9);
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == "step") line << static_cast<std::int64_t>(row[i]);
      }
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] != "step") line << ',' << row[i];
      }
      out << line.str() << '\n';
    }
  }
};

/// Thrown when a loss exceeds the divergence threshold or turns non-finite.
/// Carries the last snapshot taken before the failure.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Agent last_good, TrainingLog log)
      : std::runtime_error(what), last_good(std::move(last_good)), log(std::move(log)) {}
  Agent last_good;
  TrainingLog log;
};

struct TrainResult {
  Agent agent;
  TrainingLog log;
};

namespace detail {

inline std::vector<std::uint32_t> draw_marginal(const std::vector<double>& prior, std::size_t n, std::mt19937_64& rng) {
  std::discrete_distribution<std::uint32_t> pick(prior.begin(), prior.end());
  std::vector<std::uint32_t> out(n);
  for (auto& z : out) z = pick(rng);
  return out;
}

}  // namespace detail

/// Runs value learning (task and style), chi estimation and policy
/// extraction jointly: every gradient step updates each component that is
/// still within its step budget. Deterministic given the seed.
inline TrainResult train_agent(const AgentConfig& config, const labeling::LabeledDataset& labeled,
                               const HyperParams& hp, std::uint64_t seed,
                               const std::function<void(const Agent&, const std::map<std::string, double>&)>& on_log = {}) {
  Agent agent = init_agent(config, hp, labeled, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto sampling = config.resolved_sampling();
  TrainingLog log;
  Agent last_good = agent;
  const auto value_opt = agent.value_optimizer();
  const auto policy_opt = agent.policy_optimizer();
  const std::int64_t total = hp.total_steps();

  std::map<std::string, double> acc;
  std::int64_t acc_count = 0;
  auto fail = [&](const std::string& why) -> void {
    throw TrainingDiverged("training diverged at step " + std::to_string(agent.step) + ": " + why, last_good, log);
  };
  auto record = [&](const char* key, double v) {
    if (!std::isfinite(v) || std::abs(v) > hp.divergence_threshold) {
      fail(std::string(key) + " = " + std::to_string(v));
    }
    acc[key] += v;
  };

  for (std::int64_t step = 0; step < total; ++step) {
    try {
      const auto batch = data::sample_batch(labeled, sampling, hp.batch, rng);
      const auto b = prepare(batch, hp.reward_scale);

      if (agent.chi && agent.chi->learned() && step < hp.steps_chi) {
        const auto zm = detail::draw_marginal(agent.label_prior, b.size(), rng);
        const auto stats = mine_step(*agent.chi, b.sa, b.z_center, zm, hp.mine_ema_rate, value_opt);
        record("mine_bound", stats.bound);
      }
      if (agent.task && step < hp.steps_value) {
        const ValueInputs in{&b.s, &b.sa, &b.s_next, {}};
        const auto l = value_step(*agent.task, in, b.task_reward, hp.gamma, hp.kappa, hp.polyak_upsilon, value_opt);
        record("task_v_loss", l.v_loss);
        record("task_q_loss", l.q_loss);
        record("task_adv", l.mean_advantage);
      }
      if (agent.style && step < hp.steps_value) {
        const auto reward = chi_evaluate(*agent.chi, &b.sa, b.z, b.z_center);
        const ValueInputs in{&b.s, &b.sa, &b.s_next, b.z};
        const auto l = value_step(*agent.style, in, reward, hp.gamma, hp.kappa, hp.polyak_upsilon, value_opt);
        record("style_v_loss", l.v_loss);
        record("style_q_loss", l.q_loss);
        record("style_adv", l.mean_advantage);
        double mean_r = 0.0;
        for (float r : reward) mean_r += r;
        record("style_reward", mean_r / static_cast<double>(reward.size()));
      }
      if (step < hp.steps_policy) {
        const auto scores = build_training_score(agent, b);
        const auto targets = policy_targets(agent, b, scores);
        const double loss = policy_step(agent.policy, targets.features, targets.labels, targets.actions,
                                        targets.weights, policy_opt);
        record("policy_loss", loss);
        double mw = 0.0;
        for (float w : targets.weights) mw += w;
        record("mean_weight", mw / static_cast<double>(targets.weights.size()));
      }
    } catch (const NumericError& e) {
      fail(e.what());
    }
    agent.step = step + 1;
    acc_count += 1;
    if (agent.step % hp.log_every == 0 || agent.step == total) {
      std::map<std::string, double> row;
      for (const auto& [k, v] : acc) row[k] = v / static_cast<double>(acc_count);
      row["step"] = static_cast<double>(agent.step);
      if (agent.task) row["task_adv_scale"] = agent.task_norm.scale();
      if (agent.style) row["style_adv_scale"] = agent.style_norm.scale();
      log.add(row);
      if (on_log) on_log(agent, row);
      acc.clear();
      acc_count = 0;
      last_good = agent;
    }
  }
  return {std::move(agent), std::move(log)};
}

}  // namespace sciql::agents
