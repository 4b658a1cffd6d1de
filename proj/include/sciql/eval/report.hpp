#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sciql/eval/metrics.hpp"

namespace sciql::eval {

/// Shortest round-trip-free text for a double; fixed so CSVs are byte stable.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline std::string bounds_comment(const data::ReturnBounds& b) {
  return "# normalized_return = clamp((raw - lo) / (hi - lo), 0, 1) with lo = dataset minimum episode return = " +
         fmt(b.lo) + ", hi = best scripted on-target return = " + fmt(b.hi) + "\n";
}

}  // namespace detail

/// One row per episode.
inline void write_rollouts_csv(const std::vector<RolloutReport>& reports, const data::ReturnBounds& bounds,
                               const std::filesystem::path& path, const std::string& variant = "") {
  auto out = detail::open_csv(path);
  out << detail::bounds_comment(bounds);
  out << "variant,criterion,z,seed,episode,alignment,raw_return,normalized_return\n";
  for (const auto& r : reports) {
    for (std::size_t e = 0; e < r.episodes.size(); ++e) {
      const auto& ep = r.episodes[e];
      out << variant << ',' << labeling::to_string(r.criterion) << ',' << r.z << ',' << r.seed << ',' << e << ','
          << fmt(ep.alignment) << ',' << fmt(ep.raw_return) << ',' << fmt(ep.normalized_return) << '\n';
    }
  }
}

struct NamedTable {
  std::string variant;
  AggregateTable table;
};

/// Per table: cells, then per-criterion rows, then the overall row. Missing
/// cells are written with empty value columns.
inline void write_aggregate_csv(const std::vector<NamedTable>& tables, const data::ReturnBounds& bounds,
                                const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << detail::bounds_comment(bounds);
  out << "variant,level,criterion,z,seeds,missing,alignment_mean,alignment_std,return_mean,return_std\n";
  auto values = [&](const Summary& a, const Summary& r) {
    return fmt(a.mean) + ',' + fmt(a.std) + ',' + fmt(r.mean) + ',' + fmt(r.std);
  };
  for (const auto& [variant, t] : tables) {
    for (const auto& c : t.cells) {
      out << variant << ",cell," << labeling::to_string(c.criterion) << ',' << c.z << ',' << c.seeds << ','
          << (c.missing ? 1 : 0) << ',' << (c.missing ? ",,," : values(c.alignment, c.normalized_return)) << '\n';
    }
    for (const auto& c : t.criteria) {
      out << variant << ",criterion," << labeling::to_string(c.criterion) << ",,," << c.missing_cells << ','
          << values(c.alignment, c.normalized_return) << '\n';
    }
    out << variant << ",overall,,,,," << values(t.alignment, t.normalized_return) << '\n';
  }
}

inline void write_aggregate_csv(const AggregateTable& t, const data::ReturnBounds& bounds,
                                const std::filesystem::path& path, const std::string& variant = "") {
  write_aggregate_csv(std::vector<NamedTable>{{variant, t}}, bounds, path);
}

struct HypervolumeGroup {
  std::string name;
  std::vector<ParetoPoint> points;
};

inline void write_pareto_csv(const std::vector<HypervolumeGroup>& groups, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "# style and task in percent; hypervolume reference point (0,0)\n";
  out << "group,variant,style,task,group_hypervolume\n";
  for (const auto& g : groups) {
    const double hv = hypervolume(g.points);
    for (const auto& p : g.points) out << g.name << ',' << p.variant << ',' << fmt(p.style) << ',' << fmt(p.task) << ',' << fmt(hv) << '\n';
  }
}

struct NoisePoint {
  double zeta = 0.0;
  Summary alignment;
  Summary normalized_return;
};

struct NoiseCurve {
  std::string variant;
  int num_labels = 0;
  double threshold = 0.0;
  std::vector<NoisePoint> points;
};

inline void write_noise_csv(const std::vector<NoiseCurve>& curves, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "variant,zeta,alignment_mean,alignment_std,return_mean,return_std,threshold,beyond_threshold\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << c.variant << ',' << fmt(p.zeta) << ',' << fmt(p.alignment.mean) << ',' << fmt(p.alignment.std) << ','
          << fmt(p.normalized_return.mean) << ',' << fmt(p.normalized_return.std) << ',' << fmt(c.threshold) << ','
          << (p.zeta > c.threshold ? 1 : 0) << '\n';
    }
  }
}

}  // namespace sciql::eval
