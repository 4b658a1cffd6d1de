#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sciql/labeling/labeled_dataset.hpp"

namespace sciql::agents {

enum class Algorithm { bc, cbc, scbc, bcpmi, sorl, sciql };

/// SCIQL policy score: style advantage only, style gated before task, or
/// task gated before style.
enum class GawrMode { none, style_first, task_first };

enum class ChiStrategy { ind, mine, sigmoid, softmax };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::bc: return "bc";
    case Algorithm::cbc: return "cbc";
    case Algorithm::scbc: return "scbc";
    case Algorithm::bcpmi: return "bcpmi";
    case Algorithm::sorl: return "sorl";
    case Algorithm::sciql: return "sciql";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::bc, Algorithm::cbc, Algorithm::scbc, Algorithm::bcpmi, Algorithm::sorl, Algorithm::sciql}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected bc, cbc, scbc, bcpmi, sorl or sciql)");
}

inline std::string to_string(GawrMode m) {
  switch (m) {
    case GawrMode::none: return "none";
    case GawrMode::style_first: return "style_first";
    case GawrMode::task_first: return "task_first";
  }
  return "?";
}

inline GawrMode gawr_from_string(const std::string& s) {
  if (s == "none" || s == "lambda") return GawrMode::none;
  if (s == "style_first" || s == "lambda>r") return GawrMode::style_first;
  if (s == "task_first" || s == "r>lambda") return GawrMode::task_first;
  throw std::invalid_argument("unknown gawr mode '" + s + "' (expected none, style_first or task_first)");
}

inline std::string to_string(ChiStrategy c) {
  switch (c) {
    case ChiStrategy::ind: return "ind";
    case ChiStrategy::mine: return "mine";
    case ChiStrategy::sigmoid: return "sigmoid";
    case ChiStrategy::softmax: return "softmax";
  }
  return "?";
}

inline ChiStrategy chi_from_string(const std::string& s) {
  for (auto c : {ChiStrategy::ind, ChiStrategy::mine, ChiStrategy::sigmoid, ChiStrategy::softmax}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown chi strategy '" + s + "' (expected ind, mine, sigmoid or softmax)");
}

struct HyperParams {
  double gamma = 0.99;
  double kappa = 0.7;
  double beta_r = 3.0;
  double beta_lambda = 3.0;
  double beta_r_given_lambda = 3.0;
  double beta_sorl = 3.0;
  double polyak_upsilon = 0.005;
  std::int64_t steps_chi = 100000;
  std::int64_t steps_value = 1000000;
  std::int64_t steps_policy = 1000000;
  std::size_t batch = 256;
  double awr_weight_clip = 100.0;
  double adv_norm_ema = 0.995;
  double learning_rate = 3e-3;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t embed_dim = 16;
  /// Multiplies task rewards before value learning; advantages are
  /// normalized afterwards so the policy sees the same ordering.
  double reward_scale = 0.02;
  /// Step size of the running mean of exp(T) in the MINE denominator.
  double mine_ema_rate = 0.01;
  double divergence_threshold = 1e6;
  std::int64_t log_every = 1000;

  [[nodiscard]] std::int64_t total_steps() const {
    return std::max({steps_policy, steps_value, steps_chi});
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("HyperParams: " + m); };
    if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0,1)");
    if (!(kappa >= 0.5 && kappa < 1.0)) fail("kappa must lie in [0.5,1)");
    if (!(beta_r > 0 && beta_lambda > 0 && beta_r_given_lambda > 0)) fail("betas must be > 0");
    if (!(beta_sorl >= 0)) fail("beta_sorl must be >= 0");
    if (!(polyak_upsilon > 0 && polyak_upsilon <= 1)) fail("polyak_upsilon must lie in (0,1]");
    if (steps_chi < 0 || steps_value < 0 || steps_policy < 1) fail("step counts must be non-negative, steps_policy >= 1");
    if (batch < 1) fail("batch must be >= 1");
    if (!(awr_weight_clip > 0)) fail("awr_weight_clip must be > 0");
    if (!(adv_norm_ema > 0 && adv_norm_ema < 1)) fail("adv_norm_ema must lie in (0,1)");
    if (!(learning_rate > 0)) fail("learning_rate must be > 0");
    if (hidden.empty()) fail("hidden must name at least one layer");
    for (auto h : hidden) {
      if (h < 1) fail("hidden widths must be >= 1");
    }
    if (embed_dim < 1) fail("embed_dim must be >= 1");
    if (!(reward_scale > 0)) fail("reward_scale must be > 0");
    if (!(mine_ema_rate > 0 && mine_ema_rate <= 1)) fail("mine_ema_rate must lie in (0,1]");
    if (log_every < 1) fail("log_every must be >= 1");
  }

  bool operator==(const HyperParams&) const = default;
};

/// Which learner, and with which conditioning.
struct AgentConfig {
  Algorithm algo = Algorithm::sciql;
  GawrMode gawr = GawrMode::none;
  /// Defaults: ind for SCIQL, softmax for SORL, mine for BCPMI.
  std::optional<ChiStrategy> chi;
  /// Defaults: p_c for CBC/BCPMI, p_f for SCBC, p_r for SCIQL.
  std::optional<labeling::StyleSamplingSpec> sampling;

  [[nodiscard]] ChiStrategy resolved_chi() const {
    if (chi) return *chi;
    switch (algo) {
      case Algorithm::sorl: return ChiStrategy::softmax;
      case Algorithm::bcpmi: return ChiStrategy::mine;
      default: return ChiStrategy::ind;
    }
  }

  [[nodiscard]] labeling::StyleSamplingSpec resolved_sampling() const {
    using labeling::SamplingMode;
    switch (algo) {
      case Algorithm::cbc:
      case Algorithm::bcpmi: return {SamplingMode::current};
      case Algorithm::scbc: return {SamplingMode::future};
      case Algorithm::sciql: return sampling ? *sampling : labeling::StyleSamplingSpec{SamplingMode::random};
      case Algorithm::bc:
      case Algorithm::sorl: return {SamplingMode::current};
    }
    return {};
  }

  [[nodiscard]] bool conditioned() const { return algo != Algorithm::bc; }
  [[nodiscard]] bool needs_task_values() const {
    return algo == Algorithm::sorl || (algo == Algorithm::sciql && gawr != GawrMode::none);
  }
  [[nodiscard]] bool needs_style_values() const { return algo == Algorithm::sciql; }
  [[nodiscard]] bool needs_chi() const {
    return algo == Algorithm::sorl || algo == Algorithm::bcpmi || algo == Algorithm::sciql;
  }

  void validate() const {
    if (gawr != GawrMode::none && algo != Algorithm::sciql) {
      throw std::invalid_argument("AgentConfig: gawr applies to sciql only");
    }
    if (algo == Algorithm::bcpmi && resolved_chi() != ChiStrategy::mine) {
      throw std::invalid_argument("AgentConfig: bcpmi weights need the mine critic");
    }
    if (sampling) sampling->validate();
  }
};

// JSON forms. Unknown keys are rejected so typos surface early.

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument(what + ": unknown key '" + key + "'");
  }
}

inline nlohmann::json to_json(const HyperParams& hp) {
  return {{"gamma", hp.gamma},
          {"kappa", hp.kappa},
          {"beta_r", hp.beta_r},
          {"beta_lambda", hp.beta_lambda},
          {"beta_r_given_lambda", hp.beta_r_given_lambda},
          {"beta_sorl", hp.beta_sorl},
          {"polyak_upsilon", hp.polyak_upsilon},
          {"steps_chi", hp.steps_chi},
          {"steps_value", hp.steps_value},
          {"steps_policy", hp.steps_policy},
          {"batch", hp.batch},
          {"awr_weight_clip", hp.awr_weight_clip},
          {"adv_norm_ema", hp.adv_norm_ema},
          {"learning_rate", hp.learning_rate},
          {"hidden", hp.hidden},
          {"embed_dim", hp.embed_dim},
          {"reward_scale", hp.reward_scale},
          {"mine_ema_rate", hp.mine_ema_rate},
          {"divergence_threshold", hp.divergence_threshold},
          {"log_every", hp.log_every}};
}

/// Overlays the keys present in j onto hp.
inline void apply_json(HyperParams& hp, const nlohmann::json& j) {
  reject_unknown_keys(j, {"gamma", "kappa", "beta_r", "beta_lambda", "beta_r_given_lambda", "beta_sorl",
                          "polyak_upsilon", "steps_chi", "steps_value", "steps_policy", "batch", "awr_weight_clip",
                          "adv_norm_ema", "learning_rate", "hidden", "embed_dim", "reward_scale", "mine_ema_rate",
                          "divergence_threshold", "log_every"},
                      "hyperparams");
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  take("gamma", hp.gamma);
  take("kappa", hp.kappa);
  take("beta_r", hp.beta_r);
  take("beta_lambda", hp.beta_lambda);
  take("beta_r_given_lambda", hp.beta_r_given_lambda);
  take("beta_sorl", hp.beta_sorl);
  take("polyak_upsilon", hp.polyak_upsilon);
  take("steps_chi", hp.steps_chi);
  take("steps_value", hp.steps_value);
  take("steps_policy", hp.steps_policy);
  take("batch", hp.batch);
  take("awr_weight_clip", hp.awr_weight_clip);
  take("adv_norm_ema", hp.adv_norm_ema);
  take("learning_rate", hp.learning_rate);
  take("hidden", hp.hidden);
  take("embed_dim", hp.embed_dim);
  take("reward_scale", hp.reward_scale);
  take("mine_ema_rate", hp.mine_ema_rate);
  take("divergence_threshold", hp.divergence_threshold);
  take("log_every", hp.log_every);
}

inline nlohmann::json to_json(const labeling::StyleSamplingSpec& s) {
  return {{"mode", labeling::to_string(s.mode)}, {"mixture_weights", s.mixture_weights}};
}

inline labeling::StyleSamplingSpec sampling_from_json(const nlohmann::json& j) {
  labeling::StyleSamplingSpec s;
  if (j.is_string()) {
    s.mode = labeling::sampling_mode_from_string(j.get<std::string>());
    return s;
  }
  reject_unknown_keys(j, {"mode", "mixture_weights"}, "sampling");
  s.mode = labeling::sampling_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("mixture_weights")) j.at("mixture_weights").get_to(s.mixture_weights);
  return s;
}

inline nlohmann::json to_json(const AgentConfig& c) {
  nlohmann::json j{{"algo", to_string(c.algo)}, {"gawr", to_string(c.gawr)}, {"chi", to_string(c.resolved_chi())}};
  j["sampling"] = to_json(c.resolved_sampling());
  return j;
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"algo", "gawr", "chi", "sampling"}, "agent");
  AgentConfig c;
  if (j.contains("algo")) c.algo = algorithm_from_string(j.at("algo").get<std::string>());
  if (j.contains("gawr")) c.gawr = gawr_from_string(j.at("gawr").get<std::string>());
  if (j.contains("chi")) c.chi = chi_from_string(j.at("chi").get<std::string>());
  if (j.contains("sampling")) c.sampling = sampling_from_json(j.at("sampling"));
  return c;
}

}  // namespace sciql::agents
