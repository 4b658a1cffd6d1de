#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sciql::agents {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// a_gate + sigmoid(a_gate) * a_other. The first argument controls how much
/// of the second is admitted.
inline double gated_advantage(double a_gate, double a_other) { return a_gate + sigmoid(a_gate) * a_other; }

/// Running scale of one advantage stream. Mean and variance are tracked as
/// exponential moving averages; normalize() divides by the running standard
/// deviation only, so signs and order within a batch are preserved.
struct AdvantageNormalizer {
  double coefficient = 0.995;
  double mean = 0.0;
  double second = 0.0;
  std::int64_t updates = 0;

  void update(std::span<const float> a) {
    if (a.empty()) return;
    double m = 0.0, s = 0.0;
    for (float v : a) {
      m += v;
      s += static_cast<double>(v) * v;
    }
    m /= static_cast<double>(a.size());
    s /= static_cast<double>(a.size());
    mean = coefficient * mean + (1.0 - coefficient) * m;
    second = coefficient * second + (1.0 - coefficient) * s;
    updates += 1;
  }

  /// Bias-corrected running standard deviation.
  [[nodiscard]] double scale() const {
    if (updates == 0) return 1.0;
    const double correction = 1.0 - std::pow(coefficient, static_cast<double>(updates));
    const double m = mean / correction;
    const double var = std::max(second / correction - m * m, 0.0);
    return std::sqrt(var) + 1e-6;
  }

  [[nodiscard]] std::vector<float> normalize(std::span<const float> a) const {
    const double s = scale();
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<float>(a[i] / s);
    return out;
  }

  bool operator==(const AdvantageNormalizer&) const = default;
};

/// exp(beta * score) clipped to [0, clip].
inline std::vector<float> awr_weights(std::span<const float> scores, double beta, double clip) {
  if (!(clip > 0)) throw std::invalid_argument("awr_weights: clip must be > 0");
  std::vector<float> w(scores.size());
  const double log_clip = std::log(clip);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = beta * scores[i];
    w[i] = static_cast<float>(x >= log_clip ? clip : std::exp(x));
  }
  return w;
}

}  // namespace sciql::agents
