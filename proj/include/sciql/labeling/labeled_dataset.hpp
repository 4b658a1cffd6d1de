#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sciql/data/trajectory.hpp"
#include "sciql/errors.hpp"
#include "sciql/labeling/criteria.hpp"
#include "sciql/numcore/manifest_io.hpp"

namespace sciql::labeling {

enum class SamplingMode { current, future, random, mixture };

inline std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::current: return "current";
    case SamplingMode::future: return "future";
    case SamplingMode::random: return "random";
    case SamplingMode::mixture: return "mixture";
  }
  return "?";
}

inline SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "current" || s == "p_c") return SamplingMode::current;
  if (s == "future" || s == "p_f") return SamplingMode::future;
  if (s == "random" || s == "p_r") return SamplingMode::random;
  if (s == "mixture" || s == "p_m") return SamplingMode::mixture;
  throw std::invalid_argument("unknown sampling mode '" + s + "'");
}

struct StyleSamplingSpec {
  SamplingMode mode = SamplingMode::random;
  /// (current, future, random) weights, used in mixture mode.
  std::array<double, 3> mixture_weights{1.0, 0.0, 0.0};

  void validate() const {
    if (mode != SamplingMode::mixture) return;
    double sum = 0.0;
    for (double w : mixture_weights) {
      if (w < 0.0) throw std::invalid_argument("StyleSamplingSpec: negative mixture weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("StyleSamplingSpec: mixture weights must sum to 1");
  }
};

/// Per-transition labels of one criterion over a dataset. Immutable once
/// built; the future distribution is sampled by drawing a uniform step in
/// [t, episode end), which is exactly uniform over the future label multiset.
struct LabeledDataset {
  std::shared_ptr<const data::Dataset> base;
  StyleCriterion criterion;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> offsets;         // episode start indices, plus total
  std::vector<std::uint32_t> episode_end;   // per transition: exclusive end index of its episode
  std::vector<std::size_t> histogram;
  double zeta = 0.0;
  std::uint64_t pollution_seed = 0;

  [[nodiscard]] std::size_t size() const { return labels.size(); }

  void rebuild_index() {
    offsets = base->episode_offsets();
    if (offsets.back() != labels.size()) {
      throw std::invalid_argument("LabeledDataset: label count does not match transition count");
    }
    episode_end.assign(labels.size(), 0);
    for (std::size_t e = 0; e + 1 < offsets.size(); ++e) {
      for (std::size_t i = offsets[e]; i < offsets[e + 1]; ++i) episode_end[i] = static_cast<std::uint32_t>(offsets[e + 1]);
    }
    histogram.assign(static_cast<std::size_t>(criterion.num_labels), 0);
    for (auto z : labels) {
      if (z >= criterion.num_labels) throw std::invalid_argument("LabeledDataset: label out of range");
      histogram[z] += 1;
    }
  }

  /// Empirical label frequencies over the whole dataset.
  [[nodiscard]] std::vector<double> label_distribution() const {
    std::vector<double> p(histogram.size(), 0.0);
    for (std::size_t z = 0; z < p.size(); ++z) p[z] = static_cast<double>(histogram[z]) / static_cast<double>(labels.size());
    return p;
  }
};

inline LabeledDataset annotate(std::shared_ptr<const data::Dataset> dataset, const StyleCriterion& criterion) {
  if (!dataset || dataset->episodes.empty()) throw std::invalid_argument("annotate: dataset is empty");
  LabeledDataset out;
  out.base = std::move(dataset);
  out.criterion = criterion;
  out.labels.reserve(out.base->transition_count());
  for (const auto& ep : out.base->episodes) {
    const auto poses = ep.poses();
    const auto ep_labels = label_episode(poses, criterion);
    out.labels.insert(out.labels.end(), ep_labels.begin(), ep_labels.end());
  }
  out.rebuild_index();
  return out;
}

/// Each label independently replaced, with probability zeta, by a uniform
/// draw over the other num_labels - 1 labels.
inline LabeledDataset pollute(const LabeledDataset& labeled, double zeta, std::uint64_t seed) {
  if (labeled.criterion.num_labels < 2) throw std::invalid_argument("pollute: needs at least two labels");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("pollute: zeta must lie in [0,1]");
  LabeledDataset out = labeled;
  out.zeta = zeta;
  out.pollution_seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, labeled.criterion.num_labels - 2);
  for (auto& z : out.labels) {
    if (unit(rng) < zeta) {
      const int draw = other(rng);
      z = static_cast<std::uint8_t>(draw >= z ? draw + 1 : draw);
    }
  }
  out.rebuild_index();
  return out;
}

template <class Rng>
int sample_style(const LabeledDataset& labeled, std::size_t index, const StyleSamplingSpec& spec, Rng& rng) {
  if (index >= labeled.size()) throw std::invalid_argument("sample_style: transition index out of range");
  SamplingMode mode = spec.mode;
  if (mode == SamplingMode::mixture) {
    std::discrete_distribution<int> pick(spec.mixture_weights.begin(), spec.mixture_weights.end());
    mode = static_cast<SamplingMode>(pick(rng));
  }
  switch (mode) {
    case SamplingMode::current: return labeled.labels[index];
    case SamplingMode::future: {
      std::uniform_int_distribution<std::size_t> step(index, labeled.episode_end[index] - 1);
      return labeled.labels[step(rng)];
    }
    case SamplingMode::random:
    case SamplingMode::mixture: {
      std::uniform_int_distribution<std::size_t> any(0, labeled.size() - 1);
      return labeled.labels[any(rng)];
    }
  }
  return labeled.labels[index];
}

// Label sidecar: key-value manifest (criterion parameters, pollution
// record, dataset identity) followed by one uint8 label per transition.

inline constexpr const char* kSidecarMagic = "sciql-labels 1";

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_sidecar(const LabeledDataset& labeled, const std::filesystem::path& path) {
  const auto& c = labeled.criterion;
  io::ManifestFile file;
  file.set("criterion", to_string(c.id));
  file.set("window_radius", std::to_string(c.window_radius));
  file.set("num_labels", std::to_string(c.num_labels));
  file.set("promptable", join_ints(c.promptable));
  file.set("lo", format_double(c.lo));
  file.set("hi", format_double(c.hi));
  file.set("bins", std::to_string(c.bins));
  file.set("x_lo", format_double(c.x_lo));
  file.set("x_hi", format_double(c.x_hi));
  file.set("x_bins", std::to_string(c.x_bins));
  file.set("y_split", format_double(c.y_split));
  file.set("threshold", format_double(c.threshold));
  file.set("window", std::to_string(c.window));
  file.set("fit_window", std::to_string(c.fit_window));
  file.set("zeta", format_double(labeled.zeta));
  file.set("pollution_seed", std::to_string(labeled.pollution_seed));
  file.set("dataset_env_id", labeled.base->header.env_id);
  file.set("dataset_seed", std::to_string(labeled.base->header.seed));
  file.set("transition_count", std::to_string(labeled.labels.size()));
  std::vector<int> hist(labeled.histogram.begin(), labeled.histogram.end());
  file.set("histogram", join_ints(hist));
  file.blob.assign(labeled.labels.begin(), labeled.labels.end());
  io::write_manifest_file(path, file, kSidecarMagic);
}

inline std::vector<int> parse_ints(const std::string& s, const std::string& field) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw FormatError("sidecar: field '" + field + "' is malformed");
    }
  }
  return out;
}

inline LabeledDataset read_sidecar(const std::filesystem::path& path, std::shared_ptr<const data::Dataset> dataset) {
  const auto file = io::read_manifest_file(path, kSidecarMagic);
  LabeledDataset out;
  out.base = std::move(dataset);
  auto& c = out.criterion;
  try {
    c.id = criterion_from_string(file.get("criterion"));
  } catch (const std::invalid_argument&) {
    throw FormatError("sidecar: field 'criterion' is invalid");
  }
  c.window_radius = static_cast<int>(file.get_int("window_radius"));
  c.num_labels = static_cast<int>(file.get_int("num_labels"));
  c.promptable = parse_ints(file.get("promptable"), "promptable");
  c.lo = file.get_double("lo");
  c.hi = file.get_double("hi");
  c.bins = static_cast<int>(file.get_int("bins"));
  c.x_lo = file.get_double("x_lo");
  c.x_hi = file.get_double("x_hi");
  c.x_bins = static_cast<int>(file.get_int("x_bins"));
  c.y_split = file.get_double("y_split");
  c.threshold = file.get_double("threshold");
  c.window = static_cast<int>(file.get_int("window"));
  c.fit_window = static_cast<int>(file.get_int("fit_window"));
  out.zeta = file.get_double("zeta");
  try {
    out.pollution_seed = std::stoull(file.get("pollution_seed"));
  } catch (const std::exception&) {
    throw FormatError("sidecar: field 'pollution_seed' is malformed");
  }
  const auto count = static_cast<std::size_t>(file.get_int("transition_count"));
  if (file.blob.size() != count) throw FormatError("sidecar: field 'transition_count' does not match blob");
  if (out.base->transition_count() != count) {
    throw FormatError("sidecar: field 'transition_count' does not match the dataset");
  }
  if (file.get("dataset_env_id") != out.base->header.env_id ||
      file.get("dataset_seed") != std::to_string(out.base->header.seed)) {
    throw FormatError("sidecar: field 'dataset_seed' or 'dataset_env_id' does not match the dataset");
  }
  out.labels.assign(file.blob.begin(), file.blob.end());
  try {
    out.rebuild_index();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("sidecar: ") + e.what());
  }
  return out;
}

}  // namespace sciql::labeling
