#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sciql/data/trajectory.hpp"
#include "sciql/labeling/criteria.hpp"

namespace sciql::eval {

/// Fraction of timesteps whose label equals z.
inline double alignment(std::span<const std::uint8_t> labels, int z) {
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (auto l : labels) hit += l == z;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

/// clamp((raw - lo) / (hi - lo), 0, 1).
inline double normalized_return(double raw, const data::ReturnBounds& b) {
  if (!(b.hi > b.lo)) throw std::invalid_argument("normalized_return: bounds need hi > lo");
  return std::clamp((raw - b.lo) / (b.hi - b.lo), 0.0, 1.0);
}

struct EpisodeResult {
  double alignment = 0.0;
  double raw_return = 0.0;
  double normalized_return = 0.0;
};

struct RolloutReport {
  labeling::CriterionId criterion = labeling::CriterionId::position;
  int z = 0;
  std::uint64_t seed = 0;
  std::vector<EpisodeResult> episodes;

  [[nodiscard]] double mean_alignment() const {
    double s = 0.0;
    for (const auto& e : episodes) s += e.alignment;
    return episodes.empty() ? 0.0 : s / static_cast<double>(episodes.size());
  }
  [[nodiscard]] double mean_normalized_return() const {
    double s = 0.0;
    for (const auto& e : episodes) s += e.normalized_return;
    return episodes.empty() ? 0.0 : s / static_cast<double>(episodes.size());
  }
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // seed-wise dispersion averaged over cells
};

struct CellSummary {
  labeling::CriterionId criterion = labeling::CriterionId::position;
  int z = 0;
  bool missing = false;
  std::size_t seeds = 0;
  Summary alignment;
  Summary normalized_return;
};

struct CriterionSummary {
  labeling::CriterionId criterion = labeling::CriterionId::position;
  std::size_t missing_cells = 0;
  Summary alignment;
  Summary normalized_return;
};

struct AggregateTable {
  std::vector<CellSummary> cells;
  std::vector<CriterionSummary> criteria;
  Summary alignment;  // mean over criteria
  Summary normalized_return;
};

namespace detail {

inline Summary mean_and_std(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return {xs.front(), 0.0};
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(v / static_cast<double>(xs.size()));
  return s;
}

}  // namespace detail

/// Per (criterion, label) cell: mean and population std over seeds of the
/// per-seed mean. Per criterion: the average over its promptable labels of
/// both. Overall: the average over criteria. Promptable labels without a
/// report are listed as missing cells and excluded from the averages.
inline AggregateTable aggregate(const std::vector<RolloutReport>& reports,
                                const std::vector<labeling::StyleCriterion>& criteria) {
  AggregateTable t;
  std::map<std::pair<int, int>, std::vector<const RolloutReport*>> by_cell;
  for (const auto& r : reports) by_cell[{static_cast<int>(r.criterion), r.z}].push_back(&r);
  std::vector<double> crit_al, crit_al_std, crit_ret, crit_ret_std;
  for (const auto& c : criteria) {
    CriterionSummary cs{};
    cs.criterion = c.id;
    std::vector<double> al, al_std, ret, ret_std;
    for (int z : c.promptable) {
      CellSummary cell{};
      cell.criterion = c.id;
      cell.z = z;
      const auto it = by_cell.find({static_cast<int>(c.id), z});
      if (it == by_cell.end()) {
        cell.missing = true;
        cs.missing_cells += 1;
        t.cells.push_back(cell);
        continue;
      }
      std::vector<double> a, r;
      for (const auto* rep : it->second) {
        a.push_back(rep->mean_alignment());
        r.push_back(rep->mean_normalized_return());
      }
      cell.seeds = a.size();
      cell.alignment = detail::mean_and_std(a);
      cell.normalized_return = detail::mean_and_std(r);
      al.push_back(cell.alignment.mean);
      al_std.push_back(cell.alignment.std);
      ret.push_back(cell.normalized_return.mean);
      ret_std.push_back(cell.normalized_return.std);
      t.cells.push_back(cell);
    }
    if (!al.empty()) {
      cs.alignment = {detail::mean_and_std(al).mean, detail::mean_and_std(al_std).mean};
      cs.normalized_return = {detail::mean_and_std(ret).mean, detail::mean_and_std(ret_std).mean};
      crit_al.push_back(cs.alignment.mean);
      crit_al_std.push_back(cs.alignment.std);
      crit_ret.push_back(cs.normalized_return.mean);
      crit_ret_std.push_back(cs.normalized_return.std);
    }
    t.criteria.push_back(cs);
  }
  if (!crit_al.empty()) {
    t.alignment = {detail::mean_and_std(crit_al).mean, detail::mean_and_std(crit_al_std).mean};
    t.normalized_return = {detail::mean_and_std(crit_ret).mean, detail::mean_and_std(crit_ret_std).mean};
  }
  return t;
}

/// Style and task in percent.
struct ParetoPoint {
  double style = 0.0;
  double task = 0.0;
  std::string variant;
};

/// Area of the union of rectangles [ref, p] over the points.
inline double hypervolume(std::vector<ParetoPoint> points, double ref_style = 0.0, double ref_task = 0.0) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.style != b.style ? a.style > b.style : a.task > b.task;
  });
  double area = 0.0;
  double covered = ref_task;
  for (const auto& p : points) {
    if (p.style <= ref_style || p.task <= covered) continue;
    area += (p.style - ref_style) * (p.task - covered);
    covered = p.task;
  }
  return area;
}

/// Pollution level beyond which a wrong label outweighs the true one.
inline double noise_threshold(int num_labels) {
  return static_cast<double>(num_labels - 1) / static_cast<double>(num_labels);
}

}  // namespace sciql::eval
