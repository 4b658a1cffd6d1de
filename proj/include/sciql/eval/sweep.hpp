#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "sciql/agents/train.hpp"
#include "sciql/eval/report.hpp"
#include "sciql/eval/rollout.hpp"

namespace sciql::eval {

/// Runs jobs on up to `workers` threads. Jobs share nothing mutable; the
/// first exception is rethrown after all threads finish.
inline void run_parallel(std::vector<std::function<void()>> jobs, std::size_t workers) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs.size(), 1));
  if (workers == 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          jobs[i]();
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Rollouts use the training seed so a (config, seed) pair fixes everything.
inline std::vector<RolloutReport> train_and_evaluate(const agents::AgentConfig& config,
                                                     const labeling::LabeledDataset& labeled,
                                                     const agents::HyperParams& hp, std::uint64_t seed,
                                                     std::size_t episodes) {
  const auto result = agents::train_agent(config, labeled, hp, seed);
  return rollout_all(result.agent, episodes, seed);
}

struct VariantRun {
  std::string name;
  agents::AgentConfig config;
  agents::HyperParams hp;
};

struct VariantResult {
  std::string name;
  std::vector<RolloutReport> reports;  // all seeds
  AggregateTable table;

  [[nodiscard]] ParetoPoint pareto_point() const {
    return {100.0 * table.alignment.mean, 100.0 * table.normalized_return.mean, name};
  }
};

/// Every (variant, seed) pair is an independent job.
inline std::vector<VariantResult> evaluate_variants(const std::vector<VariantRun>& variants,
                                                    const labeling::LabeledDataset& labeled,
                                                    const std::vector<std::uint64_t>& seeds, std::size_t episodes,
                                                    std::size_t workers = 1) {
  std::vector<std::vector<std::vector<RolloutReport>>> per(variants.size(),
                                                           std::vector<std::vector<RolloutReport>>(seeds.size()));
  std::vector<std::function<void()>> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      jobs.push_back([&, v, s] {
        per[v][s] = train_and_evaluate(variants[v].config, labeled, variants[v].hp, seeds[s], episodes);
      });
    }
  }
  run_parallel(std::move(jobs), workers);
  std::vector<VariantResult> out;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantResult r{variants[v].name, {}, {}};
    for (auto& s : per[v]) r.reports.insert(r.reports.end(), s.begin(), s.end());
    r.table = aggregate(r.reports, {labeled.criterion});
    out.push_back(std::move(r));
  }
  return out;
}

/// For each zeta: pollute the clean labels (pollution seed = run seed),
/// retrain, and evaluate. zeta = 0 trains on the clean labels.
inline NoiseCurve noise_sweep(const std::string& name, const agents::AgentConfig& config,
                              const labeling::LabeledDataset& clean, const std::vector<double>& zetas,
                              const agents::HyperParams& hp, const std::vector<std::uint64_t>& seeds,
                              std::size_t episodes, std::size_t workers = 1) {
  for (double z : zetas) {
    if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("noise_sweep: zetas must lie in [0,1]");
  }
  std::vector<std::vector<std::vector<RolloutReport>>> per(zetas.size(),
                                                           std::vector<std::vector<RolloutReport>>(seeds.size()));
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < zetas.size(); ++i) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      jobs.push_back([&, i, s] {
        const auto labeled = zetas[i] > 0.0 ? labeling::pollute(clean, zetas[i], seeds[s]) : clean;
        per[i][s] = train_and_evaluate(config, labeled, hp, seeds[s], episodes);
      });
    }
  }
  run_parallel(std::move(jobs), workers);
  NoiseCurve curve{name, clean.criterion.num_labels, noise_threshold(clean.criterion.num_labels), {}};
  for (std::size_t i = 0; i < zetas.size(); ++i) {
    std::vector<RolloutReport> all;
    for (auto& s : per[i]) all.insert(all.end(), s.begin(), s.end());
    const auto t = aggregate(all, {clean.criterion});
    curve.points.push_back({zetas[i], t.alignment, t.normalized_return});
  }
  return curve;
}

}  // namespace sciql::eval
