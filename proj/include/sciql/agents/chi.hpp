#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sciql/agents/config.hpp"
#include "sciql/agents/networks.hpp"

namespace sciql::agents {

inline constexpr double kCriticClamp = 20.0;

/// Estimator of how likely (s, a) centers a z-labeled window. The learned
/// strategies share one network from (s, a) to one logit per label.
struct ChiEstimator {
  ChiStrategy strategy = ChiStrategy::ind;
  std::size_t num_labels = 0;
  std::vector<double> label_prior;  // p_r(z)
  Network net;                      // unused for ind
  double ema_denominator = 0.0;     // running E_marginal[exp T]
  std::int64_t updates = 0;

  [[nodiscard]] bool learned() const { return strategy != ChiStrategy::ind; }
};

template <class Rng>
ChiEstimator make_chi(ChiStrategy strategy, std::vector<double> label_prior, std::size_t input_dim,
                      const std::vector<std::size_t>& hidden, Rng& rng) {
  ChiEstimator c;
  c.strategy = strategy;
  c.num_labels = label_prior.size();
  c.label_prior = std::move(label_prior);
  if (c.num_labels < 1) throw std::invalid_argument("make_chi: needs at least one label");
  if (c.learned()) c.net = make_network(network_spec(input_dim, c.num_labels, hidden, 0, 0, false), rng);
  return c;
}

namespace detail {

inline double log_prior(const ChiEstimator& chi, std::uint32_t z) {
  return std::log(std::max(chi.label_prior.at(z), 1e-12));
}

inline double log_softmax(std::span<const float> logits, std::uint32_t z) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (float v : logits) s += std::exp(v - m);
  return logits[z] - m - std::log(s);
}

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

/// Critic value T(s,a,z) from the logits row.
inline double critic(const ChiEstimator& chi, std::span<const float> logits, std::uint32_t z) {
  switch (chi.strategy) {
    case ChiStrategy::mine: return std::clamp(static_cast<double>(logits[z]), -kCriticClamp, kCriticClamp);
    case ChiStrategy::sigmoid: return log_sigmoid(logits[z]) - log_prior(chi, z);
    case ChiStrategy::softmax: return log_softmax(logits, z) - log_prior(chi, z);
    case ChiStrategy::ind: break;
  }
  throw std::invalid_argument("critic: ind has no critic");
}

/// d T(z) / d logits, accumulated into grad scaled by `scale`.
inline void critic_grad(const ChiEstimator& chi, std::span<const float> logits, std::uint32_t z, double scale,
                        std::span<float> grad) {
  switch (chi.strategy) {
    case ChiStrategy::mine:
      if (std::abs(logits[z]) < kCriticClamp) grad[z] += static_cast<float>(scale);
      return;
    case ChiStrategy::sigmoid:
      grad[z] += static_cast<float>(scale * (1.0 - 1.0 / (1.0 + std::exp(-static_cast<double>(logits[z])))));
      return;
    case ChiStrategy::softmax: {
      const double m = *std::max_element(logits.begin(), logits.end());
      double s = 0.0;
      for (float v : logits) s += std::exp(v - m);
      for (std::size_t j = 0; j < logits.size(); ++j) {
        const double p = std::exp(logits[j] - m) / s;
        grad[j] += static_cast<float>(scale * ((j == z ? 1.0 : 0.0) - p));
      }
      return;
    }
    case ChiStrategy::ind: return;
  }
}

}  // namespace detail

/// chi(s, a, z) per row. ind ignores sa and compares z with z_center.
namespace detail {

inline float chi_value(const ChiEstimator& chi, std::span<const float> logits, std::uint32_t z) {
  switch (chi.strategy) {
    case ChiStrategy::mine: return static_cast<float>(chi.label_prior[z] * std::exp(critic(chi, logits, z)));
    case ChiStrategy::sigmoid: return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(logits[z]))));
    case ChiStrategy::softmax: return static_cast<float>(std::exp(log_softmax(logits, z)));
    case ChiStrategy::ind: break;
  }
  return 0.0f;
}

}  // namespace detail

inline std::vector<float> chi_evaluate(const ChiEstimator& chi, const DenseArray* sa, std::span<const std::uint32_t> z,
                                       std::span<const std::uint32_t> z_center) {
  std::vector<float> out(z.size());
  if (chi.strategy == ChiStrategy::ind) {
    if (z_center.size() != z.size()) throw std::invalid_argument("chi_evaluate: z and z_center lengths differ");
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] == z_center[i] ? 1.0f : 0.0f;
    return out;
  }
  if (sa == nullptr || sa->rows() != z.size()) throw std::invalid_argument("chi_evaluate: needs one (s,a) row per z");
  const DenseArray logits = chi.net.forward(*sa);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] >= chi.num_labels) throw std::invalid_argument("chi_evaluate: label out of range");
    out[i] = detail::chi_value(chi, logits.row(i), z[i]);
  }
  return out;
}

/// chi for every label at once: [rows, num_labels], one forward pass.
inline DenseArray chi_matrix(const ChiEstimator& chi, const DenseArray* sa, std::span<const std::uint32_t> z_center) {
  const std::size_t n = z_center.size();
  DenseArray out({n, chi.num_labels});
  if (chi.strategy == ChiStrategy::ind) {
    for (std::size_t i = 0; i < n; ++i) {
      if (z_center[i] >= chi.num_labels) throw std::invalid_argument("chi_matrix: label out of range");
      out.at(i, z_center[i]) = 1.0f;
    }
    return out;
  }
  if (sa == nullptr || sa->rows() != n) throw std::invalid_argument("chi_matrix: needs one (s,a) row per sample");
  const DenseArray logits = chi.net.forward(*sa);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t z = 0; z < chi.num_labels; ++z) out.at(i, z) = detail::chi_value(chi, logits.row(i), z);
  }
  return out;
}

/// Critic T(s,a,z) per row (learned strategies only).
inline std::vector<double> critic_values(const ChiEstimator& chi, const DenseArray& sa, std::span<const std::uint32_t> z) {
  if (!chi.learned()) throw std::invalid_argument("critic_values: ind has no critic");
  const DenseArray logits = chi.net.forward(sa);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = detail::critic(chi, logits.row(i), z[i]);
  return out;
}

/// Donsker-Varadhan bound E_joint[T] - log E_marginal[exp T] on given
/// samples, without any running average.
inline double dv_bound(const ChiEstimator& chi, const DenseArray& sa, std::span<const std::uint32_t> z_joint,
                       std::span<const std::uint32_t> z_marginal) {
  const auto tj = critic_values(chi, sa, z_joint);
  const auto tm = critic_values(chi, sa, z_marginal);
  double joint = 0.0;
  for (double t : tj) joint += t;
  joint /= static_cast<double>(tj.size());
  const double m = *std::max_element(tm.begin(), tm.end());
  double s = 0.0;
  for (double t : tm) s += std::exp(t - m);
  return joint - (m + std::log(s / static_cast<double>(tm.size())));
}

struct MineStats {
  double bound = 0.0;  // batch estimate of the DV bound
  double loss = 0.0;   // -bound
};

/// One ascent step on E_joint[T] - log E_marginal[exp T]. The joint term
/// pairs each (s,a) with its own label; the marginal term with an
/// independent draw from p_r. The gradient of the log term divides by a
/// running mean of exp T instead of the batch mean.
inline MineStats mine_step(ChiEstimator& chi, const DenseArray& sa, std::span<const std::uint32_t> z_joint,
                           std::span<const std::uint32_t> z_marginal, double ema_rate, const OptimizerConfig& opt) {
  if (!chi.learned()) throw std::invalid_argument("mine_step: ind has nothing to train");
  const std::size_t b = sa.rows();
  if (z_joint.size() != b || z_marginal.size() != b) throw std::invalid_argument("mine_step: batch shapes disagree");
  const auto tape = mlp_forward_tape(chi.net.spec, chi.net.params, sa);
  const DenseArray logits = to_dense(tape.output);
  std::vector<double> tj(b), tm(b);
  double joint = 0.0, marg = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    tj[i] = detail::critic(chi, logits.row(i), z_joint[i]);
    tm[i] = detail::critic(chi, logits.row(i), z_marginal[i]);
    joint += tj[i];
    marg += std::exp(tm[i]);
  }
  joint /= static_cast<double>(b);
  marg /= static_cast<double>(b);
  chi.ema_denominator = chi.updates == 0 ? marg : (1.0 - ema_rate) * chi.ema_denominator + ema_rate * marg;
  MineStats stats;
  stats.bound = joint - std::log(marg);
  stats.loss = -stats.bound;
  if (!std::isfinite(stats.loss)) throw NumericError("mine_step: non-finite bound");

  DenseArray grad({b, chi.num_labels});
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    auto g = grad.row(i);
    detail::critic_grad(chi, logits.row(i), z_joint[i], -inv_b, g);
    detail::critic_grad(chi, logits.row(i), z_marginal[i], inv_b * std::exp(tm[i]) / chi.ema_denominator, g);
  }
  adam_step(chi.net.params, mlp_backward(chi.net.spec, chi.net.params, tape, grad), opt);
  chi.updates += 1;
  return stats;
}

}  // namespace sciql::agents
