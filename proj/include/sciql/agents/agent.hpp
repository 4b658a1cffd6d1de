#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sciql/agents/advantage.hpp"
#include "sciql/agents/chi.hpp"
#include "sciql/agents/config.hpp"
#include "sciql/agents/networks.hpp"
#include "sciql/data/batch.hpp"

namespace sciql::agents {

/// Everything one training run owns.
struct Agent {
  AgentConfig config;
  HyperParams hp;
  labeling::StyleCriterion criterion;
  std::vector<double> label_prior;
  data::DatasetHeader dataset;
  double zeta = 0.0;

  GaussianPolicy policy;
  std::optional<ValueHeads> task;
  std::optional<ValueHeads> style;
  std::optional<ChiEstimator> chi;
  AdvantageNormalizer task_norm;
  AdvantageNormalizer style_norm;
  std::int64_t step = 0;

  [[nodiscard]] std::size_t num_labels() const { return static_cast<std::size_t>(criterion.num_labels); }

  [[nodiscard]] OptimizerConfig value_optimizer() const {
    OptimizerConfig o;
    o.learning_rate = hp.learning_rate;
    return o;
  }
  [[nodiscard]] OptimizerConfig policy_optimizer() const {
    OptimizerConfig o;
    o.learning_rate = hp.learning_rate;
    o.cosine_decay = true;
    o.total_steps = hp.steps_policy;
    return o;
  }
};

inline Agent init_agent(const AgentConfig& config, const HyperParams& hp, const labeling::LabeledDataset& labeled,
                        std::uint64_t seed) {
  config.validate();
  hp.validate();
  Agent a;
  a.config = config;
  a.hp = hp;
  a.criterion = labeled.criterion;
  a.label_prior = labeled.label_distribution();
  a.dataset = labeled.base->header;
  a.zeta = labeled.zeta;
  a.task_norm.coefficient = hp.adv_norm_ema;
  a.style_norm.coefficient = hp.adv_norm_ema;
  std::mt19937_64 rng(seed);
  const std::size_t k = a.num_labels();
  a.policy = make_policy(kStateFeatures, env::kActionDim, hp.hidden, config.conditioned() ? k : 0, hp.embed_dim, rng);
  if (config.needs_task_values()) {
    a.task = make_value_heads(kStateFeatures, kStateActionFeatures, hp.hidden, 0, hp.embed_dim, rng);
  }
  if (config.needs_style_values()) {
    a.style = make_value_heads(kStateFeatures, kStateActionFeatures, hp.hidden, k, hp.embed_dim, rng);
  }
  if (config.needs_chi()) {
    a.chi = make_chi(config.resolved_chi(), a.label_prior, kStateActionFeatures, hp.hidden, rng);
  }
  return a;
}

/// Network inputs derived from one sampled batch.
struct PreparedBatch {
  DenseArray s;
  DenseArray s_next;
  DenseArray sa;
  DenseArray actions;
  std::vector<float> task_reward;  // scaled
  std::vector<std::uint32_t> z;
  std::vector<std::uint32_t> z_center;

  [[nodiscard]] std::size_t size() const { return z.size(); }
};

inline PreparedBatch prepare(const data::Batch& b, double reward_scale) {
  PreparedBatch p;
  p.s = state_features(b.s);
  p.s_next = state_features(b.s_next);
  p.sa = concat_cols(p.s, b.a);
  p.actions = b.a;
  p.task_reward.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) p.task_reward[i] = static_cast<float>(b.r[i] * reward_scale);
  p.z = b.z;
  p.z_center = b.z_center;
  return p;
}

/// Rows the policy is fit on, with their AWR weights.
struct PolicyTargets {
  DenseArray features;
  std::vector<std::uint32_t> labels;  // empty when unconditioned
  DenseArray actions;
  std::vector<float> weights;
};

/// Per-sample preference scores (before exp(beta * .)) for the score-based
/// algorithms. Updates the advantage normalizers from this batch.
inline std::vector<float> build_training_score(Agent& agent, const PreparedBatch& b) {
  const std::size_t n = b.size();
  const auto& cfg = agent.config;
  switch (cfg.algo) {
    case Algorithm::bc:
    case Algorithm::cbc:
    case Algorithm::scbc: return std::vector<float>(n, 0.0f);
    case Algorithm::bcpmi: {
      const auto t = critic_values(*agent.chi, b.sa, b.z_center);
      return {t.begin(), t.end()};
    }
    case Algorithm::sorl: {
      const auto a = agent.task->advantage(b.s, b.sa);
      agent.task_norm.update(a);
      return agent.task_norm.normalize(a);
    }
    case Algorithm::sciql: {
      // Normalization only precedes gating; the plain style score is the
      // raw advantage, so a near-zero advantage stays near-uniform weight.
      const auto al = agent.style->advantage(b.s, b.sa, b.z);
      agent.style_norm.update(al);
      if (cfg.gawr == GawrMode::none) return al;
      const auto nl = agent.style_norm.normalize(al);
      const auto ar = agent.task->advantage(b.s, b.sa);
      agent.task_norm.update(ar);
      const auto nr = agent.task_norm.normalize(ar);
      std::vector<float> xi(n);
      for (std::size_t i = 0; i < n; ++i) {
        xi[i] = static_cast<float>(cfg.gawr == GawrMode::style_first ? gated_advantage(nl[i], nr[i])
                                                                      : gated_advantage(nr[i], nl[i]));
      }
      return xi;
    }
  }
  return {};
}

inline double score_beta(const Agent& agent) {
  switch (agent.config.algo) {
    case Algorithm::bcpmi: return 1.0;
    case Algorithm::sorl: return agent.hp.beta_sorl;
    case Algorithm::sciql: return agent.config.gawr == GawrMode::none ? agent.hp.beta_lambda : agent.hp.beta_r_given_lambda;
    default: return 0.0;
  }
}

/// Expands scores into weighted policy rows. SORL fits every label per
/// sample with weight chi(s,a,z) / |labels| times the task AWR weight.
inline PolicyTargets policy_targets(const Agent& agent, const PreparedBatch& b, std::span<const float> scores) {
  PolicyTargets t;
  const double clip = agent.hp.awr_weight_clip;
  const auto w = awr_weights(scores, score_beta(agent), clip);
  switch (agent.config.algo) {
    case Algorithm::bc:
      t.features = b.s;
      t.actions = b.actions;
      t.weights = w;
      return t;
    case Algorithm::cbc:
    case Algorithm::bcpmi:
      t.features = b.s;
      t.actions = b.actions;
      t.labels = b.z_center;
      t.weights = w;
      return t;
    case Algorithm::scbc:
    case Algorithm::sciql:
      t.features = b.s;
      t.actions = b.actions;
      t.labels = b.z;
      t.weights = w;
      return t;
    case Algorithm::sorl: {
      const std::size_t n = b.size();
      const std::size_t k = agent.num_labels();
      t.features = DenseArray({n * k, b.s.cols()});
      t.actions = DenseArray({n * k, b.actions.cols()});
      t.labels.resize(n * k);
      t.weights.resize(n * k);
      const DenseArray c = chi_matrix(*agent.chi, &b.sa, b.z_center);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t z = 0; z < k; ++z) {
          const std::size_t row = i * k + z;
          std::copy(b.s.row(i).begin(), b.s.row(i).end(), t.features.row(row).begin());
          std::copy(b.actions.row(i).begin(), b.actions.row(i).end(), t.actions.row(row).begin());
          t.labels[row] = z;
          t.weights[row] = static_cast<float>(c.at(i, z) / static_cast<double>(k) * w[i]);
        }
      }
      return t;
    }
  }
  return t;
}

}  // namespace sciql::agents
