// sciql: dataset generation, annotation, training, evaluation and sweeps.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 training divergence.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sciql/agents/checkpoint.hpp"
#include "sciql/agents/presets.hpp"
#include "sciql/agents/train.hpp"
#include "sciql/data/dataset_io.hpp"
#include "sciql/env/generate.hpp"
#include "sciql/eval/report.hpp"
#include "sciql/eval/rollout.hpp"
#include "sciql/eval/sweep.hpp"
#include "sciql/labeling/labeled_dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sciql;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_root() {
  const char* env = std::getenv("SCIQL_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

/// First unused <root>/<kind>/run-NNNN.
fs::path fresh_run_dir(const std::string& kind) {
  const fs::path base = output_root() / kind;
  for (int i = 1;; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "run-%04d", i);
    if (!fs::exists(base / name)) return base / name;
  }
}

fs::path prepare_run_dir(const std::string& requested, const std::string& kind) {
  const fs::path dir = requested.empty() ? fresh_run_dir(kind) : fs::path(requested);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    throw UsageError("output directory '" + dir.string() + "' is not empty; choose a fresh --out");
  }
  fs::create_directories(dir);
  return dir;
}

fs::path prepare_file(const std::string& requested, const fs::path& fallback, bool force) {
  const fs::path path = requested.empty() ? fallback : fs::path(requested);
  if (fs::exists(path) && !force) {
    throw UsageError("'" + path.string() + "' exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

std::shared_ptr<data::Dataset> load_dataset(const std::string& path) {
  if (path.empty()) throw UsageError("a dataset path is required (--dataset)");
  if (!fs::exists(path)) throw DataError("dataset '" + path + "' does not exist");
  return std::make_shared<data::Dataset>(data::read_dataset(path));
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw UsageError("cannot parse seed list '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("seed list is empty");
  return out;
}

std::vector<int> parse_labels(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw UsageError("cannot parse label list '" + s + "'");
    }
  }
  return out;
}

void print_histogram(const labeling::LabeledDataset& l, std::ostream& os) {
  os << labeling::to_string(l.criterion.id) << " (" << l.size() << " transitions)\n";
  for (std::size_t z = 0; z < l.histogram.size(); ++z) {
    const double p = static_cast<double>(l.histogram[z]) / static_cast<double>(l.size());
    os << "  label " << z << (l.criterion.is_promptable(static_cast<int>(z)) ? "  " : "* ") << l.histogram[z] << "  "
       << eval::fmt(p) << "  " << std::string(static_cast<std::size_t>(p * 50.0 + 0.5), '#') << '\n';
  }
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string variant = "inplace";
  std::size_t episodes = 200;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

int cmd_generate(const GenerateArgs& a) {
  const auto variant = env::variant_from_string(a.variant);
  const auto path = prepare_file(a.out,
                                 output_root() / "datasets" /
                                     ("circle2d-" + a.variant + "-n" + std::to_string(a.episodes) + "-s" +
                                      std::to_string(a.seed) + ".ds"),
                                 a.force);
  const auto ds = env::generate_dataset(variant, a.episodes, a.seed);
  data::write_dataset(ds, path);
  std::cout << "wrote " << path.string() << " (" << ds.episodes.size() << " episodes, " << ds.transition_count()
            << " transitions; return bounds " << eval::fmt(ds.header.return_bounds.lo) << " .. "
            << eval::fmt(ds.header.return_bounds.hi) << ")\n";
  return 0;
}

// --- annotate / histogram ------------------------------------------------------

struct AnnotateArgs {
  std::string dataset;
  std::string criterion;
  double zeta = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

int cmd_annotate(const AnnotateArgs& a) {
  const auto ds = load_dataset(a.dataset);
  auto labeled = labeling::annotate(ds, labeling::make_criterion(labeling::criterion_from_string(a.criterion)));
  if (a.zeta > 0.0) labeled = labeling::pollute(labeled, a.zeta, a.seed);
  std::string stem = fs::path(a.dataset).stem().string() + "." + a.criterion;
  if (a.zeta > 0.0) stem += ".z" + eval::fmt(a.zeta) + "-s" + std::to_string(a.seed);
  const auto path = prepare_file(a.out, output_root() / "labels" / (stem + ".labels"), a.force);
  labeling::write_sidecar(labeled, path);
  std::cout << "wrote " << path.string() << "\n";
  print_histogram(labeled, std::cout);
  return 0;
}

struct HistogramArgs {
  std::string dataset;
  std::vector<std::string> criteria;
  std::string out;
};

int cmd_histogram(const HistogramArgs& a) {
  const auto ds = load_dataset(a.dataset);
  std::vector<std::string> names = a.criteria;
  if (names.empty()) {
    for (auto id : labeling::kAllCriteria) names.push_back(labeling::to_string(id));
  }
  std::ofstream csv;
  if (!a.out.empty()) {
    const fs::path p(a.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    csv.open(p);
    if (!csv) throw DataError("cannot write '" + a.out + "'");
    csv << "criterion,label,promptable,count,fraction\n";
  }
  for (const auto& name : names) {
    const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::criterion_from_string(name)));
    print_histogram(l, std::cout);
    if (csv.is_open()) {
      for (std::size_t z = 0; z < l.histogram.size(); ++z) {
        csv << name << ',' << z << ',' << (l.criterion.is_promptable(static_cast<int>(z)) ? 1 : 0) << ','
            << l.histogram[z] << ',' << eval::fmt(static_cast<double>(l.histogram[z]) / static_cast<double>(l.size()))
            << '\n';
      }
    }
  }
  return 0;
}

// --- run configuration ----------------------------------------------------------

/// Shared by train and sweep: config file first, then flags on top.
struct RunSettings {
  std::string dataset;
  std::string labels;
  std::string criterion;
  std::string preset = "desk";
  double zeta = 0.0;
  std::uint64_t seed = 0;
  agents::AgentConfig agent;
  json hyper_overrides = json::object();
  agents::HyperParams hp;
  // sweep only
  std::vector<std::uint64_t> seeds{0};
  std::size_t episodes = 5;
  std::size_t workers = 1;
  std::vector<double> zetas{0.0, 0.2, 0.4, 0.6, 0.8, 0.9};
  std::vector<std::string> algos{"sciql", "cbc"};
};

struct RunFlags {
  std::string config;
  std::string dataset, labels, criterion, preset, algo, gawr, chi, sampling, seeds;
  std::optional<double> zeta;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::size_t> episodes, workers, batch;
  std::string hidden;
  std::optional<double> learning_rate;
};

void apply_config_file(RunSettings& s, const json& j, bool sweep) {
  std::set<std::string> known{"dataset", "labels", "criterion", "preset", "zeta", "seed", "agent", "hyperparams"};
  if (sweep) known.insert({"seeds", "episodes", "workers", "zetas", "algos"});
  agents::reject_unknown_keys(j, known, "config");
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  take("dataset", s.dataset);
  take("labels", s.labels);
  take("criterion", s.criterion);
  take("preset", s.preset);
  take("zeta", s.zeta);
  take("seed", s.seed);
  if (j.contains("agent")) s.agent = agents::agent_config_from_json(j.at("agent"));
  if (j.contains("hyperparams")) {
    agents::HyperParams probe;
    agents::apply_json(probe, j.at("hyperparams"));  // rejects unknown keys early
    s.hyper_overrides = j.at("hyperparams");
  }
  take("seeds", s.seeds);
  take("episodes", s.episodes);
  take("workers", s.workers);
  take("zetas", s.zetas);
  take("algos", s.algos);
}

RunSettings resolve_settings(const RunFlags& f, bool sweep) {
  RunSettings s;
  if (!f.config.empty()) apply_config_file(s, read_json_file(f.config), sweep);
  if (!f.dataset.empty()) s.dataset = f.dataset;
  if (!f.labels.empty()) s.labels = f.labels;
  if (!f.criterion.empty()) s.criterion = f.criterion;
  if (!f.preset.empty()) s.preset = f.preset;
  if (!f.algo.empty()) s.agent.algo = agents::algorithm_from_string(f.algo);
  if (!f.gawr.empty()) s.agent.gawr = agents::gawr_from_string(f.gawr);
  if (!f.chi.empty()) s.agent.chi = agents::chi_from_string(f.chi);
  if (!f.sampling.empty()) s.agent.sampling = labeling::StyleSamplingSpec{labeling::sampling_mode_from_string(f.sampling)};
  if (f.zeta) s.zeta = *f.zeta;
  if (f.seed) s.seed = *f.seed;
  if (!f.seeds.empty()) s.seeds = parse_seeds(f.seeds);
  if (f.episodes) s.episodes = *f.episodes;
  if (f.workers) s.workers = *f.workers;
  s.hp = agents::preset(s.preset);
  agents::apply_json(s.hp, s.hyper_overrides);
  if (f.steps) s.hp.steps_chi = s.hp.steps_value = s.hp.steps_policy = *f.steps;
  if (f.batch) s.hp.batch = *f.batch;
  if (f.learning_rate) s.hp.learning_rate = *f.learning_rate;
  if (!f.hidden.empty()) {
    s.hp.hidden.clear();
    for (int h : parse_labels(f.hidden)) {
      if (h < 1) throw UsageError("--hidden widths must be positive");
      s.hp.hidden.push_back(static_cast<std::size_t>(h));
    }
  }
  if (s.hp.log_every > s.hp.total_steps()) s.hp.log_every = std::max<std::int64_t>(1, s.hp.total_steps());
  s.hp.validate();
  s.agent.validate();
  if (s.episodes < 1) throw UsageError("episodes must be >= 1");
  if (!(s.zeta >= 0.0 && s.zeta <= 1.0)) throw UsageError("zeta must lie in [0,1]");
  return s;
}

json materialized(const RunSettings& s, bool sweep) {
  json j{{"dataset", s.dataset},
         {"labels", s.labels},
         {"criterion", s.criterion},
         {"preset", s.preset},
         {"zeta", s.zeta},
         {"seed", s.seed},
         {"agent", agents::to_json(s.agent)},
         {"hyperparams", agents::to_json(s.hp)}};
  if (sweep) {
    j["seeds"] = s.seeds;
    j["episodes"] = s.episodes;
    j["workers"] = s.workers;
    j["zetas"] = s.zetas;
    j["algos"] = s.algos;
  }
  return j;
}

labeling::LabeledDataset load_labels(const RunSettings& s) {
  const auto ds = load_dataset(s.dataset);
  labeling::LabeledDataset l;
  if (!s.labels.empty()) {
    if (!fs::exists(s.labels)) throw DataError("label sidecar '" + s.labels + "' does not exist");
    l = labeling::read_sidecar(s.labels, ds);
    if (!s.criterion.empty() && labeling::to_string(l.criterion.id) != s.criterion) {
      throw UsageError("sidecar criterion " + labeling::to_string(l.criterion.id) + " != requested " + s.criterion);
    }
  } else {
    if (s.criterion.empty()) throw UsageError("either --labels or --criterion is required");
    l = labeling::annotate(ds, labeling::make_criterion(labeling::criterion_from_string(s.criterion)));
  }
  if (s.zeta > 0.0) l = labeling::pollute(l, s.zeta, s.seed);
  return l;
}

void add_run_flags(CLI::App* app, RunFlags& f, bool sweep) {
  app->add_option("--config", f.config, "JSON config; flags override its values");
  app->add_option("--dataset", f.dataset, "Dataset file");
  app->add_option("--criterion", f.criterion, "Criterion to annotate on the fly");
  app->add_option("--preset", f.preset, "Hyperparameter preset: smoke, desk or full");
  app->add_option("--zeta", f.zeta, "Pollute labels with this rate before training");
  app->add_option("--steps", f.steps, "Override every step budget");
  app->add_option("--batch", f.batch, "Batch size");
  app->add_option("--hidden", f.hidden, "Hidden widths, comma separated");
  app->add_option("--lr", f.learning_rate, "Learning rate");
  if (sweep) {
    app->add_option("--seeds", f.seeds, "Training seeds, comma separated");
    app->add_option("--episodes", f.episodes, "Rollouts per label and seed");
    app->add_option("--workers", f.workers, "Concurrent runs");
  } else {
    app->add_option("--labels", f.labels, "Label sidecar from annotate");
    app->add_option("--algo", f.algo, "bc, cbc, scbc, bcpmi, sorl or sciql");
    app->add_option("--gawr", f.gawr, "none, style_first (lambda>r) or task_first (r>lambda)");
    app->add_option("--chi", f.chi, "ind, mine, sigmoid or softmax");
    app->add_option("--sampling", f.sampling, "current, future, random or mixture");
    app->add_option("--seed", f.seed, "Training seed");
  }
}

// --- train -----------------------------------------------------------------------

int cmd_train(const RunFlags& f, const std::string& out, bool quiet) {
  const auto s = resolve_settings(f, false);
  const auto labeled = load_labels(s);
  const auto dir = prepare_run_dir(out, "train");
  write_json(dir / "config.json", materialized(s, false));
  auto on_log = [&](const agents::Agent&, const std::map<std::string, double>& row) {
    if (quiet) return;
    std::cerr << "step " << static_cast<std::int64_t>(row.at("step"));
    for (const char* key : {"policy_loss", "task_q_loss", "style_q_loss", "mine_bound"}) {
      if (row.contains(key)) std::cerr << "  " << key << ' ' << eval::fmt(row.at(key));
    }
    std::cerr << '\n';
  };
  try {
    const auto result = agents::train_agent(s.agent, labeled, s.hp, s.seed, on_log);
    agents::save_checkpoint(result.agent, dir / "checkpoint");
    result.log.write_csv(dir / "train_log.csv");
  } catch (const agents::TrainingDiverged& e) {
    agents::save_checkpoint(e.last_good, dir / "last_good");
    e.log.write_csv(dir / "train_log.csv");
    std::cerr << "training diverged: " << e.what() << "\nlast good snapshot (step " << e.last_good.step
              << ") saved to " << (dir / "last_good").string() << '\n';
    return kExitDiverged;
  }
  std::cout << dir.string() << '\n';
  return 0;
}

// --- eval ------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string labels;
  std::size_t episodes = 10;
  std::string seeds = "0";
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  if (!fs::exists(fs::path(a.checkpoint) / "manifest.json")) {
    throw DataError("'" + a.checkpoint + "' is not a checkpoint directory (no manifest.json)");
  }
  const auto agent = agents::load_checkpoint(a.checkpoint);
  const auto labels = a.labels.empty() ? agent.criterion.promptable : parse_labels(a.labels);
  for (int z : labels) eval::check_promptable(agent.criterion, z);
  const auto seeds = parse_seeds(a.seeds);
  const auto dir = prepare_run_dir(a.out, "eval");
  write_json(dir / "config.json", {{"checkpoint", a.checkpoint},
                                   {"labels", labels},
                                   {"episodes", a.episodes},
                                   {"seeds", seeds},
                                   {"criterion", labeling::to_string(agent.criterion.id)}});
  std::vector<eval::RolloutReport> reports;
  for (auto seed : seeds) {
    auto r = eval::rollout(agent, labels, a.episodes, seed);
    reports.insert(reports.end(), r.begin(), r.end());
  }
  const auto variant = agents::to_string(agent.config.algo);
  eval::write_rollouts_csv(reports, agent.dataset.return_bounds, dir / "rollouts.csv", variant);
  const auto table = eval::aggregate(reports, {agent.criterion});
  eval::write_aggregate_csv(table, agent.dataset.return_bounds, dir / "aggregate.csv", variant);
  std::cout << dir.string() << "\nalignment " << eval::fmt(table.alignment.mean) << " +- "
            << eval::fmt(table.alignment.std) << "  normalized return " << eval::fmt(table.normalized_return.mean)
            << " +- " << eval::fmt(table.normalized_return.std) << '\n';
  return 0;
}

// --- sweep -----------------------------------------------------------------------

std::vector<eval::VariantRun> chi_variants(const RunSettings& s) {
  std::vector<eval::VariantRun> v;
  for (auto algo : {agents::Algorithm::sorl, agents::Algorithm::sciql}) {
    for (auto chi : {agents::ChiStrategy::ind, agents::ChiStrategy::mine, agents::ChiStrategy::sigmoid,
                     agents::ChiStrategy::softmax}) {
      agents::AgentConfig c;
      c.algo = algo;
      c.chi = chi;
      v.push_back({agents::to_string(algo) + "/" + agents::to_string(chi), c, s.hp});
    }
  }
  return v;
}

std::vector<eval::VariantRun> relabel_variants(const RunSettings& s) {
  std::vector<eval::VariantRun> v;
  for (auto mode : {labeling::SamplingMode::current, labeling::SamplingMode::random}) {
    agents::AgentConfig c;
    c.algo = agents::Algorithm::sciql;
    c.sampling = labeling::StyleSamplingSpec{mode};
    v.push_back({std::string("sciql/") + (mode == labeling::SamplingMode::current ? "p_c" : "p_r"), c, s.hp});
  }
  return v;
}

std::vector<eval::VariantRun> pareto_variants(const RunSettings& s) {
  std::vector<eval::VariantRun> v;
  for (double beta : {0.0, 1.0, 3.0}) {
    agents::AgentConfig c;
    c.algo = agents::Algorithm::sorl;
    auto hp = s.hp;
    hp.beta_sorl = beta;
    v.push_back({"sorl/beta=" + eval::fmt(beta), c, hp});
  }
  for (auto g : {agents::GawrMode::none, agents::GawrMode::style_first, agents::GawrMode::task_first}) {
    agents::AgentConfig c;
    c.algo = agents::Algorithm::sciql;
    c.gawr = g;
    const char* name = g == agents::GawrMode::none ? "lambda" : g == agents::GawrMode::style_first ? "lambda>r" : "r>lambda";
    v.push_back({std::string("sciql/") + name, c, s.hp});
  }
  return v;
}

void write_summary(const std::vector<eval::VariantResult>& results, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "variant,alignment_mean,alignment_std,return_mean,return_std\n";
  for (const auto& r : results) {
    out << r.name << ',' << eval::fmt(r.table.alignment.mean) << ',' << eval::fmt(r.table.alignment.std) << ','
        << eval::fmt(r.table.normalized_return.mean) << ',' << eval::fmt(r.table.normalized_return.std) << '\n';
  }
}

int cmd_sweep(const std::string& kind, const RunFlags& f, const std::string& out) {
  static const std::set<std::string> kinds{"chi_strategy", "relabel_dist", "noise", "pareto"};
  if (!kinds.contains(kind)) throw UsageError("unknown sweep kind '" + kind + "' (chi_strategy, relabel_dist, noise, pareto)");
  const auto s = resolve_settings(f, true);
  const auto labeled = load_labels(s);
  const auto dir = prepare_run_dir(out, "sweep-" + kind);
  auto config = materialized(s, true);
  config["kind"] = kind;
  write_json(dir / "config.json", config);
  const auto& bounds = labeled.base->header.return_bounds;

  if (kind == "noise") {
    std::vector<eval::NoiseCurve> curves;
    for (const auto& name : s.algos) {
      agents::AgentConfig c;
      c.algo = agents::algorithm_from_string(name);
      curves.push_back(eval::noise_sweep(name, c, labeled, s.zetas, s.hp, s.seeds, s.episodes, s.workers));
    }
    eval::write_noise_csv(curves, dir / "noise.csv");
    for (const auto& c : curves) {
      for (const auto& p : c.points) {
        std::cout << c.variant << " zeta " << eval::fmt(p.zeta) << " alignment " << eval::fmt(p.alignment.mean)
                  << (p.zeta > c.threshold ? "  (beyond threshold " + eval::fmt(c.threshold) + ")" : "") << '\n';
      }
    }
    std::cout << dir.string() << '\n';
    return 0;
  }

  const auto variants = kind == "chi_strategy" ? chi_variants(s) : kind == "relabel_dist" ? relabel_variants(s)
                                                                                        : pareto_variants(s);
  const auto results = eval::evaluate_variants(variants, labeled, s.seeds, s.episodes, s.workers);
  std::vector<eval::NamedTable> tables;
  for (const auto& r : results) tables.push_back({r.name, r.table});
  eval::write_aggregate_csv(tables, bounds, dir / "aggregate.csv");
  write_summary(results, dir / "summary.csv");
  if (kind == "pareto") {
    eval::HypervolumeGroup sorl{"sorl", {}}, sciql{"sciql", {}};
    for (const auto& r : results) (r.name.starts_with("sorl") ? sorl : sciql).points.push_back(r.pareto_point());
    eval::write_pareto_csv({sorl, sciql}, dir / "pareto.csv");
    std::cout << "hypervolume sorl " << eval::fmt(eval::hypervolume(sorl.points)) << "  sciql "
              << eval::fmt(eval::hypervolume(sciql.points)) << '\n';
  }
  for (const auto& r : results) {
    std::cout << r.name << "  alignment " << eval::fmt(r.table.alignment.mean) << "  return "
              << eval::fmt(r.table.normalized_return.mean) << '\n';
  }
  std::cout << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stylized offline RL on Circle2d: generate, annotate, train, eval, sweep"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a scripted dataset");
  g->add_option("--variant", gen.variant, "inplace or navigate")->check(CLI::IsMember({"inplace", "navigate"}));
  g->add_option("--episodes", gen.episodes, "Number of episodes")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Generation seed");
  g->add_option("--out", gen.out, "Output file (default $SCIQL_OUTPUT_ROOT/datasets/...)");
  g->add_flag("--force", gen.force, "Overwrite an existing file");

  AnnotateArgs ann;
  auto* a = app.add_subcommand("annotate", "Label a dataset with one criterion and write a sidecar");
  a->add_option("--dataset", ann.dataset, "Dataset file")->required();
  a->add_option("--criterion", ann.criterion, "Criterion name")->required();
  a->add_option("--zeta", ann.zeta, "Label pollution rate")->check(CLI::Range(0.0, 1.0));
  a->add_option("--seed", ann.seed, "Pollution seed");
  a->add_option("--out", ann.out, "Sidecar path (default $SCIQL_OUTPUT_ROOT/labels/...)");
  a->add_flag("--force", ann.force, "Overwrite an existing file");

  HistogramArgs hist;
  auto* h = app.add_subcommand("histogram", "Print label histograms of a dataset");
  h->add_option("--dataset", hist.dataset, "Dataset file")->required();
  h->add_option("--criterion", hist.criteria, "Criteria (default: all)");
  h->add_option("--out", hist.out, "Optional CSV output");

  RunFlags train_flags;
  std::string train_out;
  bool quiet = false;
  auto* t = app.add_subcommand("train", "Train an agent");
  add_run_flags(t, train_flags, false);
  t->add_option("--out", train_out, "Fresh run directory (default $SCIQL_OUTPUT_ROOT/train/run-NNNN)");
  t->add_flag("--quiet", quiet, "No progress lines");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Roll out a checkpoint and write CSV reports");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  e->add_option("--labels", ev.labels, "Target labels, comma separated (default: all promptable)");
  e->add_option("--episodes", ev.episodes, "Rollouts per label and seed")->check(CLI::PositiveNumber);
  e->add_option("--seeds", ev.seeds, "Evaluation seeds, comma separated");
  e->add_option("--out", ev.out, "Fresh run directory");

  RunFlags sweep_flags;
  std::string sweep_kind, sweep_out;
  auto* sw = app.add_subcommand("sweep", "Ablation sweeps: chi_strategy, relabel_dist, noise, pareto");
  sw->add_option("kind", sweep_kind, "Sweep kind")->required();
  add_run_flags(sw, sweep_flags, true);
  sw->add_option("--out", sweep_out, "Fresh run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (a->parsed()) return cmd_annotate(ann);
    if (h->parsed()) return cmd_histogram(hist);
    if (t->parsed()) return cmd_train(train_flags, train_out, quiet);
    if (e->parsed()) return cmd_eval(ev);
    if (sw->parsed()) return cmd_sweep(sweep_kind, sweep_flags, sweep_out);
  } catch (const agents::TrainingDiverged& err) {
    std::cerr << "error: training diverged: " << err.what() << '\n';
    return kExitDiverged;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  } catch (const NumericError& err) {
    std::cerr << "error: training diverged: " << err.what() << '\n';
    return kExitDiverged;
  } catch (const json::exception& err) {
    std::cerr << "error: bad config value: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
