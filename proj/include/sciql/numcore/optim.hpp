#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "sciql/errors.hpp"
#include "sciql/numcore/parameter_set.hpp"

namespace sciql {

/// Asymmetric squared loss |kappa - 1{u<0}| * u^2.
inline double expectile_loss(double u, double kappa) {
  if (!(kappa >= 0.5 && kappa < 1.0)) {
    throw std::invalid_argument("expectile_loss: kappa must lie in [0.5, 1)");
  }
  const double weight = u < 0.0 ? 1.0 - kappa : kappa;
  return weight * u * u;
}

/// d/du of expectile_loss.
inline double expectile_loss_grad(double u, double kappa) {
  const double weight = u < 0.0 ? 1.0 - kappa : kappa;
  return 2.0 * weight * u;
}

/// 0.5 * (1 + cos(pi * step / total)); steps past the horizon clamp to 0.
inline double cosine_factor(long long step, long long total) {
  if (total <= 0 || step >= total) return 0.0;
  if (step <= 0) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                               static_cast<double>(total)));
}

struct OptimizerConfig {
  double learning_rate = 3e-3;
  std::pair<double, double> betas{0.9, 0.999};
  double eps = 1e-8;
  bool cosine_decay = false;
  long long total_steps = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("OptimizerConfig: learning_rate must be > 0");
    for (double b : {betas.first, betas.second}) {
      if (!(b >= 0.0 && b < 1.0)) throw std::invalid_argument("OptimizerConfig: betas must be in [0,1)");
    }
  }

  bool operator==(const OptimizerConfig&) const = default;
};

/// One bias-corrected Adam step in place. The learning rate is scaled by
/// cosine_factor(step, total_steps) when cosine decay is on.
inline void adam_step(ParameterSet& params, const ParameterSet& grads, const OptimizerConfig& config) {
  grads.check_matches(params, "adam_step");
  const double lr = config.cosine_decay
                        ? config.learning_rate * cosine_factor(params.step_count, config.total_steps)
                        : config.learning_rate;
  params.step_count += 1;
  const auto t = static_cast<double>(params.step_count);
  const double b1 = config.betas.first;
  const double b2 = config.betas.second;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const auto fb1 = static_cast<float>(b1);
  const auto fb2 = static_cast<float>(b2);
  const auto step_size = static_cast<float>(lr / c1);
  const auto inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const auto eps = static_cast<float>(config.eps);

  for (auto& [name, value] : params.entries) {
    const auto& g = grads.entries.at(name).data;
    auto& m = params.adam_m[name].data;
    auto& v = params.adam_v[name].data;
    if (m.size() != g.size()) m.assign(g.size(), 0.0f);
    if (v.size() != g.size()) v.assign(g.size(), 0.0f);
    auto& w = value.data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
      v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
    }
  }
  if (!params.all_finite()) {
    throw NumericError("adam_step: non-finite parameters after update at step " +
                       std::to_string(params.step_count));
  }
}

/// target <- (1 - upsilon) * target + upsilon * online, elementwise.
inline void polyak_update(ParameterSet& target, const ParameterSet& online, double upsilon) {
  online.check_matches(target, "polyak_update");
  if (!(upsilon >= 0.0 && upsilon <= 1.0)) {
    throw std::invalid_argument("polyak_update: upsilon must lie in [0,1]");
  }
  if (upsilon == 0.0) return;
  const auto u = static_cast<float>(upsilon);
  for (auto& [name, value] : target.entries) {
    const auto& src = online.entries.at(name).data;
    auto& dst = value.data;
    if (upsilon == 1.0) {
      dst = src;
      continue;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (1.0f - u) * dst[i] + u * src[i];
  }
}

}  // namespace sciql
