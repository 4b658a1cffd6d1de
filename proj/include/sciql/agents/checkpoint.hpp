#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sciql/agents/agent.hpp"
#include "sciql/data/dataset_io.hpp"
#include "sciql/errors.hpp"
#include "sciql/numcore/serialize.hpp"

namespace sciql::agents {

// Checkpoint directory: manifest.json plus one parameter file per network.

inline constexpr const char* kCheckpointFormat = "sciql-agent-v1";

inline nlohmann::json to_json(const MlpSpec& s) {
  nlohmann::json j{{"input_dim", s.input_dim},
                   {"hidden", s.hidden},
                   {"output_dim", s.output_dim},
                   {"layer_norm", s.use_layer_norm},
                   {"num_labels", s.num_labels}};
  j["embed_dim"] = s.label_embedding_dim ? static_cast<long long>(*s.label_embedding_dim) : 0LL;
  return j;
}

inline MlpSpec mlp_spec_from_json(const nlohmann::json& j) {
  MlpSpec s;
  j.at("input_dim").get_to(s.input_dim);
  j.at("hidden").get_to(s.hidden);
  j.at("output_dim").get_to(s.output_dim);
  j.at("layer_norm").get_to(s.use_layer_norm);
  j.at("num_labels").get_to(s.num_labels);
  const auto e = j.at("embed_dim").get<std::size_t>();
  if (e > 0) s.label_embedding_dim = e;
  s.validate();
  return s;
}

inline nlohmann::json to_json(const labeling::StyleCriterion& c) {
  return {{"id", labeling::to_string(c.id)},
          {"window_radius", c.window_radius},
          {"num_labels", c.num_labels},
          {"promptable", c.promptable},
          {"lo", c.lo},
          {"hi", c.hi},
          {"bins", c.bins},
          {"x_lo", c.x_lo},
          {"x_hi", c.x_hi},
          {"x_bins", c.x_bins},
          {"y_split", c.y_split},
          {"threshold", c.threshold},
          {"window", c.window},
          {"fit_window", c.fit_window}};
}

inline labeling::StyleCriterion criterion_from_json(const nlohmann::json& j) {
  labeling::StyleCriterion c;
  c.id = labeling::criterion_from_string(j.at("id").get<std::string>());
  j.at("window_radius").get_to(c.window_radius);
  j.at("num_labels").get_to(c.num_labels);
  j.at("promptable").get_to(c.promptable);
  j.at("lo").get_to(c.lo);
  j.at("hi").get_to(c.hi);
  j.at("bins").get_to(c.bins);
  j.at("x_lo").get_to(c.x_lo);
  j.at("x_hi").get_to(c.x_hi);
  j.at("x_bins").get_to(c.x_bins);
  j.at("y_split").get_to(c.y_split);
  j.at("threshold").get_to(c.threshold);
  j.at("window").get_to(c.window);
  j.at("fit_window").get_to(c.fit_window);
  return c;
}

inline nlohmann::json to_json(const AdvantageNormalizer& n) {
  return {{"coefficient", n.coefficient}, {"mean", n.mean}, {"second", n.second}, {"updates", n.updates}};
}

inline AdvantageNormalizer normalizer_from_json(const nlohmann::json& j) {
  AdvantageNormalizer n;
  j.at("coefficient").get_to(n.coefficient);
  j.at("mean").get_to(n.mean);
  j.at("second").get_to(n.second);
  j.at("updates").get_to(n.updates);
  return n;
}

inline void save_checkpoint(const Agent& agent, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = kCheckpointFormat;
  m["agent"] = to_json(agent.config);
  m["hyperparams"] = to_json(agent.hp);
  m["criterion"] = to_json(agent.criterion);
  m["label_prior"] = agent.label_prior;
  m["dataset"] = data::header_to_json(agent.dataset);
  m["zeta"] = agent.zeta;
  m["step"] = agent.step;
  m["task_norm"] = to_json(agent.task_norm);
  m["style_norm"] = to_json(agent.style_norm);
  nlohmann::json nets = nlohmann::json::object();
  auto put = [&](const std::string& name, const Network& n) {
    nets[name] = {{"spec", to_json(n.spec)}, {"file", name + ".params"}};
    save_params(dir / (name + ".params"), n.params);
  };
  put("policy", agent.policy.mean);
  save_params(dir / "policy_log_std.params", agent.policy.log_std);
  if (agent.task) {
    put("task_v", agent.task->v);
    put("task_q", agent.task->q);
    save_params(dir / "task_q_target.params", agent.task->q_target);
    m["task_updates"] = agent.task->updates;
  }
  if (agent.style) {
    put("style_v", agent.style->v);
    put("style_q", agent.style->q);
    save_params(dir / "style_q_target.params", agent.style->q_target);
    m["style_updates"] = agent.style->updates;
  }
  if (agent.chi) {
    m["chi"] = {{"strategy", to_string(agent.chi->strategy)},
                {"ema_denominator", agent.chi->ema_denominator},
                {"updates", agent.chi->updates}};
    if (agent.chi->learned()) put("chi", agent.chi->net);
  }
  m["networks"] = nets;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

inline Agent load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (m.at("format").get<std::string>() != kCheckpointFormat) {
      throw FormatError("checkpoint: field 'format' is not " + std::string(kCheckpointFormat));
    }
    Agent a;
    a.config = agent_config_from_json(m.at("agent"));
    apply_json(a.hp, m.at("hyperparams"));
    a.criterion = criterion_from_json(m.at("criterion"));
    m.at("label_prior").get_to(a.label_prior);
    a.dataset = data::header_from_json(m.at("dataset"));
    m.at("zeta").get_to(a.zeta);
    m.at("step").get_to(a.step);
    a.task_norm = normalizer_from_json(m.at("task_norm"));
    a.style_norm = normalizer_from_json(m.at("style_norm"));
    const auto& nets = m.at("networks");
    auto get = [&](const std::string& name) {
      Network n;
      n.spec = mlp_spec_from_json(nets.at(name).at("spec"));
      n.params = load_params(dir / nets.at(name).at("file").get<std::string>());
      return n;
    };
    a.policy.mean = get("policy");
    a.policy.log_std = load_params(dir / "policy_log_std.params");
    if (nets.contains("task_v")) {
      ValueHeads h;
      h.v = get("task_v");
      h.q = get("task_q");
      h.q_target = load_params(dir / "task_q_target.params");
      m.at("task_updates").get_to(h.updates);
      a.task = std::move(h);
    }
    if (nets.contains("style_v")) {
      ValueHeads h;
      h.v = get("style_v");
      h.q = get("style_q");
      h.q_target = load_params(dir / "style_q_target.params");
      m.at("style_updates").get_to(h.updates);
      a.style = std::move(h);
    }
    if (m.contains("chi")) {
      ChiEstimator c;
      c.strategy = chi_from_string(m.at("chi").at("strategy").get<std::string>());
      c.label_prior = a.label_prior;
      c.num_labels = a.label_prior.size();
      m.at("chi").at("ema_denominator").get_to(c.ema_denominator);
      m.at("chi").at("updates").get_to(c.updates);
      if (c.learned()) c.net = get("chi");
      a.chi = std::move(c);
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: malformed manifest: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw FormatError("checkpoint: " + std::string(e.what()));
  }
}

}  // namespace sciql::agents
