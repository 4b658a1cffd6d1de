#pragma once

// Test-only oracles. Nothing here calls into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sciql/numcore/mlp.hpp"

namespace sciql::test {

inline DenseArray random_array(std::vector<std::size_t> shape, std::mt19937_64& rng, float scale = 1.0f) {
  DenseArray out(std::move(shape));
  std::normal_distribution<float> normal(0.0f, scale);
  for (auto& v : out.data) v = normal(rng);
  return out;
}

/// Empirical kappa-expectile by bisection on the first-order condition
/// sum_i |kappa - 1{y_i < v}| (y_i - v) = 0.
inline double bisection_expectile(const std::vector<double>& ys, double kappa) {
  double lo = *std::min_element(ys.begin(), ys.end());
  double hi = *std::max_element(ys.begin(), ys.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double g = 0.0;
    for (double y : ys) g += (y < mid ? 1.0 - kappa : kappa) * (y - mid);
    (g > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Naive double-precision forward of the MLP family (loops only).
inline std::vector<double> reference_forward(const MlpSpec& spec, const ParameterSet& p,
                                             const std::vector<double>& x, std::uint32_t z) {
  std::vector<double> h = x;
  if (spec.conditioned()) {
    const auto& emb = p["embed"];
    for (std::size_t c = 0; c < *spec.label_embedding_dim; ++c) {
      h.push_back(emb.data[z * *spec.label_embedding_dim + c]);
    }
  }
  auto linear = [&](const std::string& prefix, const std::vector<double>& in) {
    const auto& w = p[prefix + ".w"];
    const auto& b = p[prefix + ".b"];
    const std::size_t out_n = w.shape[0];
    const std::size_t in_n = w.shape[1];
    std::vector<double> out(out_n);
    for (std::size_t i = 0; i < out_n; ++i) {
      double acc = b.data[i];
      for (std::size_t j = 0; j < in_n; ++j) acc += double(w.data[i * in_n + j]) * in[j];
      out[i] = acc;
    }
    return out;
  };
  for (std::size_t k = 0; k < spec.hidden.size(); ++k) {
    const std::string name = "l" + std::to_string(k);
    auto y = linear(name, h);
    if (spec.use_layer_norm) {
      double mean = 0.0;
      for (double v : y) mean += v;
      mean /= double(y.size());
      double var = 0.0;
      for (double v : y) var += (v - mean) * (v - mean);
      var /= double(y.size());
      const double inv = 1.0 / std::sqrt(var + 1e-5);
      const auto& g = p[name + ".ln_g"];
      const auto& b = p[name + ".ln_b"];
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = (y[i] - mean) * inv * g.data[i] + b.data[i];
    }
    for (auto& v : y) v = std::max(0.0, v);
    h = std::move(y);
  }
  return linear("out", h);
}

struct FdResult {
  double max_relative_error = 0.0;
  std::string worst;
};

/// Compares analytic gradients of L = sum(out .* G) with central finite
/// differences (h = 1e-4) of the double-precision reference forward.
inline FdResult finite_difference_check(const MlpSpec& spec, std::mt19937_64& rng) {
  auto params = init_mlp(spec, rng);
  // Non-trivial layer-norm affine parameters and biases.
  for (auto& [name, arr] : params.entries) {
    if (name.ends_with(".b") || name.ends_with("ln_b") || name == "embed") {
      std::normal_distribution<float> n(0.0f, 0.3f);
      for (auto& v : arr.data) v = n(rng);
    }
    if (name.ends_with("ln_g")) {
      std::uniform_real_distribution<float> u(0.5f, 1.5f);
      for (auto& v : arr.data) v = u(rng);
    }
  }
  const std::size_t batch = 3;
  const auto x = random_array({batch, spec.input_dim}, rng);
  const auto g = random_array({batch, spec.output_dim}, rng);
  std::vector<std::uint32_t> labels(batch, 0);
  if (spec.conditioned()) {
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<std::uint32_t>(i % spec.num_labels);
  }
  const auto analytic = mlp_backward(spec, params, x, g,
                                     spec.conditioned() ? std::span<const std::uint32_t>(labels)
                                                        : std::span<const std::uint32_t>());

  auto loss = [&](const ParameterSet& p) {
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      std::vector<double> xr(x.row(r).begin(), x.row(r).end());
      const auto out = reference_forward(spec, p, xr, labels[r]);
      for (std::size_t c = 0; c < out.size(); ++c) total += out[c] * double(g.at(r, c));
    }
    return total;
  };

  FdResult result;
  const double h = 1e-4;
  for (const auto& [name, arr] : params.entries) {
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto plus = params;
      auto minus = params;
      // Divide by the delta actually representable in float storage.
      plus.entries[name].data[i] = static_cast<float>(arr.data[i] + h);
      minus.entries[name].data[i] = static_cast<float>(arr.data[i] - h);
      const double applied = double(plus.entries[name].data[i]) - double(minus.entries[name].data[i]);
      const double fd = (loss(plus) - loss(minus)) / applied;
      const double an = analytic.entries.at(name).data[i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      const double rel = std::abs(fd - an) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(an) +
                       " fd=" + std::to_string(fd);
      }
    }
  }
  return result;
}

}  // namespace sciql::test

namespace sciql::test {

/// Upper chi-square quantile (Wilson-Hilferty), z = 3.09 for alpha = 0.001.
inline double chi2_critical(int df, double z = 3.09) {
  const double k = static_cast<double>(df);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

inline double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected_prob) {
  double n = 0.0;
  for (double o : observed) n += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * expected_prob[i];
    if (e > 0) stat += (observed[i] - e) * (observed[i] - e) / e;
  }
  return stat;
}

}  // namespace sciql::test

namespace sciql::test {

struct TabularTransition {
  int s;
  int a;
  double r;
  int s_next;
};

struct TabularValues {
  std::vector<double> v;  // per state
  std::vector<double> q;  // per transition
};

/// Fixed point of Q(s,a) = r + gamma V(s'), V(s) = kappa-expectile of Q(s, .)
/// over the dataset transitions leaving s (value iteration).
inline TabularValues tabular_iql(const std::vector<TabularTransition>& data, int num_states, double gamma,
                                 double kappa, int iterations = 5000) {
  TabularValues out{std::vector<double>(num_states, 0.0), std::vector<double>(data.size(), 0.0)};
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < data.size(); ++i) out.q[i] = data[i].r + gamma * out.v[data[i].s_next];
    for (int s = 0; s < num_states; ++s) {
      std::vector<double> qs;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].s == s) qs.push_back(out.q[i]);
      }
      if (!qs.empty()) out.v[s] = bisection_expectile(qs, kappa);
    }
  }
  return out;
}

}  // namespace sciql::test
