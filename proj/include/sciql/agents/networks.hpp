#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sciql/env/circle2d.hpp"
#include "sciql/errors.hpp"
#include "sciql/numcore/mlp.hpp"
#include "sciql/numcore/optim.hpp"

namespace sciql::agents {

// Observation features: each history pose (x, y, theta) becomes
// (x / bound, y / bound, cos theta, sin theta).
inline constexpr std::size_t kStateFeatures = 4 * env::kHistory;
inline constexpr std::size_t kStateActionFeatures = kStateFeatures + env::kActionDim;

inline void write_state_features(std::span<const float> obs, std::span<float> out) {
  for (int k = 0; k < env::kHistory; ++k) {
    const float x = obs[3 * k], y = obs[3 * k + 1], th = obs[3 * k + 2];
    out[4 * k] = x / static_cast<float>(env::kBound);
    out[4 * k + 1] = y / static_cast<float>(env::kBound);
    out[4 * k + 2] = std::cos(th);
    out[4 * k + 3] = std::sin(th);
  }
}

/// [B, 12] observations -> [B, 16] features.
inline DenseArray state_features(const DenseArray& obs) {
  if (obs.rank() != 2 || obs.cols() != env::kObsDim) {
    throw std::invalid_argument("state_features: expected [B, " + std::to_string(env::kObsDim) + "] observations");
  }
  DenseArray out({obs.rows(), kStateFeatures});
  for (std::size_t i = 0; i < obs.rows(); ++i) write_state_features(obs.row(i), out.row(i));
  return out;
}

/// Horizontal concatenation [x | y].
inline DenseArray concat_cols(const DenseArray& x, const DenseArray& y) {
  if (x.rows() != y.rows()) throw std::invalid_argument("concat_cols: row counts differ");
  DenseArray out({x.rows(), x.cols() + y.cols()});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    const auto a = x.row(i);
    const auto b = y.row(i);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

struct Network {
  MlpSpec spec;
  ParameterSet params;

  [[nodiscard]] DenseArray forward(const DenseArray& input, std::span<const std::uint32_t> labels = {}) const {
    return mlp_forward(spec, params, input, labels);
  }
};

template <class Rng>
Network make_network(MlpSpec spec, Rng& rng) {
  spec.validate();
  Network n;
  n.spec = std::move(spec);
  n.params = init_mlp(n.spec, rng);
  return n;
}

inline MlpSpec network_spec(std::size_t input_dim, std::size_t output_dim, const std::vector<std::size_t>& hidden,
                            std::size_t num_labels, std::size_t embed_dim, bool layer_norm) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  spec.hidden = hidden;
  spec.use_layer_norm = layer_norm;
  if (num_labels > 0) {
    spec.label_embedding_dim = embed_dim;
    spec.num_labels = num_labels;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Policy: tanh-squashed diagonal Gaussian with a state-independent log-std.

inline constexpr float kLogStdMin = -5.0f;
inline constexpr float kLogStdMax = 2.0f;
/// Actions are pulled inside (-1, 1) by this margin before atanh.
inline constexpr float kActionMargin = 1e-3f;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct GaussianPolicy {
  Network mean;           // pre-squash mean
  ParameterSet log_std;   // entry "log_std" [1, action_dim]

  [[nodiscard]] std::size_t action_dim() const { return mean.spec.output_dim; }
  [[nodiscard]] bool conditioned() const { return mean.spec.conditioned(); }

  /// Deterministic evaluation action tanh(mu), [B, action_dim].
  [[nodiscard]] DenseArray mean_action(const DenseArray& features, std::span<const std::uint32_t> labels = {}) const {
    DenseArray mu = mean.forward(features, labels);
    for (auto& v : mu.data) v = std::tanh(v);
    return mu;
  }

  [[nodiscard]] float clamped_log_std(std::size_t j) const {
    return std::clamp(log_std["log_std"].data[j], kLogStdMin, kLogStdMax);
  }
};

template <class Rng>
GaussianPolicy make_policy(std::size_t input_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden,
                           std::size_t num_labels, std::size_t embed_dim, Rng& rng) {
  GaussianPolicy p;
  p.mean = make_network(network_spec(input_dim, action_dim, hidden, num_labels, embed_dim, false), rng);
  p.log_std.add("log_std", DenseArray({1, action_dim}));
  return p;
}

inline float squash_inverse(float a) {
  const float c = std::clamp(a, -1.0f + kActionMargin, 1.0f - kActionMargin);
  return std::atanh(c);
}

/// log pi(a | s[, z]) per row, including the tanh Jacobian.
inline std::vector<double> log_prob(const GaussianPolicy& policy, const DenseArray& features,
                                    std::span<const std::uint32_t> labels, const DenseArray& actions) {
  const DenseArray mu = policy.mean.forward(features, labels);
  const std::size_t d = policy.action_dim();
  if (actions.rows() != mu.rows() || actions.cols() != d) throw std::invalid_argument("log_prob: action shape mismatch");
  std::vector<double> out(mu.rows(), 0.0);
  for (std::size_t i = 0; i < mu.rows(); ++i) {
    double lp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double ls = policy.clamped_log_std(j);
      const double a = std::clamp(actions.at(i, j), -1.0f + kActionMargin, 1.0f - kActionMargin);
      const double u = std::atanh(a);
      const double z = (u - mu.at(i, j)) / std::exp(ls);
      lp += -0.5 * z * z - ls - kHalfLog2Pi - std::log(1.0 - a * a);
    }
    out[i] = lp;
  }
  return out;
}

struct PolicyGradient {
  double loss = 0.0;
  MlpTape tape;
  ParameterSet mean;     // gradient w.r.t. the mean network
  ParameterSet log_std;  // gradient w.r.t. the log-std entry
};

/// Loss -sum_i w_i log pi(a_i) / B and its gradients.
inline PolicyGradient policy_gradient(const GaussianPolicy& policy, const DenseArray& features,
                                      std::span<const std::uint32_t> labels, const DenseArray& actions,
                                      std::span<const float> weights) {
  const std::size_t b = features.rows();
  const std::size_t d = policy.action_dim();
  if (weights.size() != b || actions.rows() != b || actions.cols() != d) {
    throw std::invalid_argument("policy_step: batch shapes disagree");
  }
  PolicyGradient out;
  out.tape = mlp_forward_tape(policy.mean.spec, policy.mean.params, features, labels);
  DenseArray grad_mu({b, d});
  out.log_std = policy.log_std.zeros_like();
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t j = 0; j < d; ++j) {
    const float raw_ls = policy.log_std["log_std"].data[j];
    const double ls = policy.clamped_log_std(j);
    const double inv_var = std::exp(-2.0 * ls);
    const bool ls_active = raw_ls > kLogStdMin && raw_ls < kLogStdMax;
    double g_ls = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double w = weights[i];
      const double a = std::clamp(actions.at(i, j), -1.0f + kActionMargin, 1.0f - kActionMargin);
      const double diff =
          std::atanh(a) - out.tape.output(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double sq = diff * diff * inv_var;
      out.loss -= w * inv_b * (-0.5 * sq - ls - kHalfLog2Pi - std::log(1.0 - a * a));
      grad_mu.at(i, j) = static_cast<float>(-w * inv_b * diff * inv_var);
      g_ls -= w * inv_b * (sq - 1.0);
    }
    out.log_std["log_std"].data[j] = ls_active ? static_cast<float>(g_ls) : 0.0f;
  }
  if (!std::isfinite(out.loss)) throw NumericError("policy_step: non-finite log-density");
  out.mean = mlp_backward(policy.mean.spec, policy.mean.params, out.tape, grad_mu);
  return out;
}

/// One weighted maximum-likelihood Adam step. Returns the loss before the
/// update.
inline double policy_step(GaussianPolicy& policy, const DenseArray& features, std::span<const std::uint32_t> labels,
                          const DenseArray& actions, std::span<const float> weights, const OptimizerConfig& opt) {
  const auto g = policy_gradient(policy, features, labels, actions, weights);
  adam_step(policy.mean.params, g.mean, opt);
  adam_step(policy.log_std, g.log_std, opt);
  return g.loss;
}

// ---------------------------------------------------------------------------
// Value heads: V(s[, z]), Q(s, a[, z]) and a Polyak-averaged copy of Q.

struct ValueHeads {
  Network v;
  Network q;
  ParameterSet q_target;
  std::int64_t updates = 0;

  [[nodiscard]] bool conditioned() const { return v.spec.conditioned(); }

  /// Q-bar(s,a[,z]) - V(s[,z]) per row.
  [[nodiscard]] std::vector<float> advantage(const DenseArray& s, const DenseArray& sa,
                                             std::span<const std::uint32_t> labels = {}) const {
    if (updates == 0) throw InvalidState("advantage: value heads have not been trained");
    const DenseArray qt = mlp_forward(q.spec, q_target, sa, labels);
    const DenseArray vs = v.forward(s, labels);
    std::vector<float> a(qt.rows());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = qt.data[i] - vs.data[i];
    return a;
  }
};

/// V carries layer norm; Q does not.
template <class Rng>
ValueHeads make_value_heads(std::size_t state_dim, std::size_t state_action_dim, const std::vector<std::size_t>& hidden,
                            std::size_t num_labels, std::size_t embed_dim, Rng& rng) {
  ValueHeads h;
  h.v = make_network(network_spec(state_dim, 1, hidden, num_labels, embed_dim, true), rng);
  h.q = make_network(network_spec(state_action_dim, 1, hidden, num_labels, embed_dim, false), rng);
  h.q_target = h.q.params;
  return h;
}

struct ValueInputs {
  const DenseArray* s;       // [B, state_dim]
  const DenseArray* sa;      // [B, state_action_dim]
  const DenseArray* s_next;  // [B, state_dim]
  std::span<const std::uint32_t> labels;  // empty for unconditioned heads
};

struct ValueLosses {
  double v_loss = 0.0;
  double q_loss = 0.0;
  double mean_advantage = 0.0;
};

/// One expectile/TD update of V and Q followed by a Polyak step of Q-bar.
/// V regresses the kappa-expectile of Q-bar(s,a); Q regresses
/// r + gamma V(s'), always bootstrapping (episodes only truncate).
inline ValueLosses value_step(ValueHeads& heads, const ValueInputs& in, std::span<const float> rewards, double gamma,
                              double kappa, double upsilon, const OptimizerConfig& opt) {
  const std::size_t b = in.s->rows();
  if (rewards.size() != b || in.sa->rows() != b || in.s_next->rows() != b) {
    throw std::invalid_argument("value_step: batch shapes disagree");
  }
  const DenseArray qt = mlp_forward(heads.q.spec, heads.q_target, *in.sa, in.labels);
  const DenseArray v_next = heads.v.forward(*in.s_next, in.labels);
  const auto v_tape = mlp_forward_tape(heads.v.spec, heads.v.params, *in.s, in.labels);
  const auto q_tape = mlp_forward_tape(heads.q.spec, heads.q.params, *in.sa, in.labels);

  ValueLosses out;
  DenseArray gv({b, 1});
  DenseArray gq({b, 1});
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double u = static_cast<double>(qt.data[i]) - v_tape.output(r, 0);
    out.v_loss += expectile_loss(u, kappa) * inv_b;
    out.mean_advantage += u * inv_b;
    gv.data[i] = static_cast<float>(-expectile_loss_grad(u, kappa) * inv_b);
    const double target = rewards[i] + gamma * v_next.data[i];
    const double err = q_tape.output(r, 0) - target;
    out.q_loss += err * err * inv_b;
    gq.data[i] = static_cast<float>(2.0 * err * inv_b);
  }
  if (!std::isfinite(out.v_loss) || !std::isfinite(out.q_loss)) {
    throw NumericError("value_step: non-finite loss (v " + std::to_string(out.v_loss) + ", q " +
                       std::to_string(out.q_loss) + ")");
  }
  adam_step(heads.v.params, mlp_backward(heads.v.spec, heads.v.params, v_tape, gv), opt);
  adam_step(heads.q.params, mlp_backward(heads.q.spec, heads.q.params, q_tape, gq), opt);
  polyak_update(heads.q_target, heads.q.params, upsilon);
  heads.updates += 1;
  return out;
}

}  // namespace sciql::agents
