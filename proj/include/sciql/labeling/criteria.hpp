#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sciql/env/circle2d.hpp"

namespace sciql::labeling {

enum class CriterionId { position, movement_direction, turn_direction, radius_category, speed_category, curvature_noise };

inline constexpr std::array<CriterionId, 6> kAllCriteria{
    CriterionId::position,        CriterionId::movement_direction, CriterionId::turn_direction,
    CriterionId::radius_category, CriterionId::speed_category,     CriterionId::curvature_noise};

inline std::string to_string(CriterionId id) {
  switch (id) {
    case CriterionId::position: return "position";
    case CriterionId::movement_direction: return "movement_direction";
    case CriterionId::turn_direction: return "turn_direction";
    case CriterionId::radius_category: return "radius_category";
    case CriterionId::speed_category: return "speed_category";
    case CriterionId::curvature_noise: return "curvature_noise";
  }
  return "?";
}

inline CriterionId criterion_from_string(const std::string& s) {
  for (auto id : kAllCriteria) {
    if (to_string(id) == s) return id;
  }
  // Short aliases.
  if (s == "radius") return CriterionId::radius_category;
  if (s == "speed") return CriterionId::speed_category;
  if (s == "turn") return CriterionId::turn_direction;
  if (s == "movement") return CriterionId::movement_direction;
  if (s == "noise") return CriterionId::curvature_noise;
  throw std::invalid_argument("unknown criterion '" + s + "'");
}

/// A labeling-function descriptor. Not every field is used by every
/// criterion; unused ones keep their defaults.
///
/// `window_radius` is w for majority-vote criteria: the vote runs over steps
/// [t-w+1, t+w-1], so w = 1 is the point label. `window` and `fit_window`
/// are odd, centered window sizes for the heading/curvature statistics.
struct StyleCriterion {
  CriterionId id = CriterionId::position;
  int window_radius = 1;
  int num_labels = 1;
  std::vector<int> promptable;
  // Uniform binning of the criterion's scalar statistic.
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;
  // Position grid.
  double x_lo = -30.0;
  double x_hi = 30.0;
  int x_bins = 4;
  double y_split = 0.0;
  // Heading statistics.
  double threshold = 0.1;
  int window = 11;
  int fit_window = 51;

  [[nodiscard]] bool is_promptable(int z) const {
    return std::find(promptable.begin(), promptable.end(), z) != promptable.end();
  }

  bool operator==(const StyleCriterion&) const = default;
};

inline StyleCriterion make_criterion(CriterionId id) {
  StyleCriterion c;
  c.id = id;
  switch (id) {
    case CriterionId::position:
      c.num_labels = 8;
      c.promptable = {0, 1, 2, 3, 4, 5, 6, 7};
      break;
    case CriterionId::movement_direction:
      c.num_labels = 9;
      c.promptable = {0, 1, 2, 3, 4, 5, 6, 7};
      c.bins = 8;
      c.threshold = 0.1;  // minimum displacement norm
      break;
    case CriterionId::turn_direction:
      c.num_labels = 3;
      c.promptable = {0, 1};
      c.window = 11;
      c.threshold = 0.1;
      break;
    case CriterionId::radius_category:
      c.num_labels = 4;
      c.promptable = {0, 1, 2};
      c.lo = 2.0;
      c.hi = 11.0;
      c.bins = 3;
      c.window = 11;
      c.fit_window = 51;
      c.threshold = 0.1;
      break;
    case CriterionId::speed_category:
      c.num_labels = 3;
      c.promptable = {0, 1, 2};
      c.lo = env::kMinSpeed;
      c.hi = env::kMaxSpeed;
      c.bins = 3;
      break;
    case CriterionId::curvature_noise:
      c.num_labels = 3;
      c.promptable = {0, 1, 2};
      c.lo = 0.0;
      c.hi = 0.8;
      c.bins = 3;
      c.window = 51;
      break;
  }
  return c;
}

/// Left-to-right uniform bin of v over [lo, hi]; out-of-range values clamp.
inline int uniform_bin(double v, double lo, double hi, int bins) {
  const double u = (v - lo) / (hi - lo) * bins;
  if (!(u >= 0.0)) return 0;
  return std::min(static_cast<int>(u), bins - 1);
}

namespace detail {

struct Range {
  std::size_t begin;
  std::size_t end;  // exclusive
};

/// Centered odd window of `size` around t, truncated to [0, limit).
inline Range centered(std::size_t t, int size, std::size_t limit) {
  const auto half = static_cast<std::size_t>(size / 2);
  const std::size_t b = t >= half ? t - half : 0;
  const std::size_t e = std::min(limit, t + half + 1);
  return {std::min(b, e), e};
}

inline double heading_increment(std::span<const env::Pose> poses, std::size_t k) {
  return env::wrap_angle(poses[k + 1].theta - poses[k].theta);
}

/// Index of the most frequent label; ties go to the smallest index.
inline int majority(std::span<const int> votes, int num_labels) {
  std::vector<int> counts(static_cast<std::size_t>(num_labels), 0);
  for (int v : votes) counts[static_cast<std::size_t>(v)] += 1;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

template <class PointLabel>
int vote(std::size_t t, std::size_t steps, const StyleCriterion& c, PointLabel&& point) {
  const auto w = static_cast<std::size_t>(std::max(c.window_radius, 1));
  const std::size_t b = t + 1 >= w ? t + 1 - w : 0;
  const std::size_t e = std::min(steps, t + w);
  if (e - b <= 1) return point(t);
  std::vector<int> votes;
  votes.reserve(e - b);
  for (std::size_t k = b; k < e; ++k) votes.push_back(point(k));
  return majority(votes, c.num_labels);
}

inline Range steps_of(std::span<const env::Pose> poses) { return {0, poses.empty() ? 0 : poses.size() - 1}; }

}  // namespace detail

// Every labeling function takes the T+1 poses of an episode and a
// transition index t in [0, T).

inline int label_position(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  const std::size_t steps = std::max<std::size_t>(detail::steps_of(poses).end, t + 1);
  return detail::vote(t, steps, c, [&](std::size_t k) {
    const int xb = uniform_bin(poses[k].x, c.x_lo, c.x_hi, c.x_bins);
    const int yb = poses[k].y < c.y_split ? 0 : 1;
    return yb * c.x_bins + xb;
  });
}

inline int label_movement_direction(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  const std::size_t steps = detail::steps_of(poses).end;
  return detail::vote(t, std::max(steps, t + 1), c, [&](std::size_t k) {
    // The final pose has no successor: reuse the previous displacement.
    const std::size_t j = k + 1 < poses.size() ? k : k - 1;
    const double dx = poses[j + 1].x - poses[j].x;
    const double dy = poses[j + 1].y - poses[j].y;
    if (std::hypot(dx, dy) < c.threshold) return c.num_labels - 1;
    return uniform_bin(std::atan2(dy, dx), -env::kPi, env::kPi, c.bins);
  });
}

inline int label_speed_category(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  const std::size_t steps = detail::steps_of(poses).end;
  return detail::vote(t, std::max(steps, t + 1), c, [&](std::size_t k) {
    const std::size_t j = k + 1 < poses.size() ? k : k - 1;
    const double v = std::hypot(poses[j + 1].x - poses[j].x, poses[j + 1].y - poses[j].y);
    return uniform_bin(v, c.lo, c.hi, c.bins);
  });
}

inline double mean_heading_increment(std::span<const env::Pose> poses, std::size_t t, int window, bool absolute) {
  const auto r = detail::centered(t, window, detail::steps_of(poses).end);
  if (r.end <= r.begin) return 0.0;
  double sum = 0.0;
  for (std::size_t k = r.begin; k < r.end; ++k) {
    const double d = detail::heading_increment(poses, k);
    sum += absolute ? std::abs(d) : d;
  }
  return sum / static_cast<double>(r.end - r.begin);
}

/// 0 = right (clockwise), 1 = left (counter-clockwise), 2 = straight.
inline int label_turn_direction(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  const double omega = mean_heading_increment(poses, t, c.window, false);
  if (std::abs(omega) < c.threshold) return 2;
  return omega > 0.0 ? 1 : 0;
}

struct CircleFit {
  double cx;
  double cy;
  double radius;
};

/// Algebraic (Kasa) least-squares circle: minimizes
/// sum (x^2 + y^2 + D x + E y + F)^2. Empty when the points are collinear
/// or fewer than three.
inline std::optional<CircleFit> fit_circle_kasa(std::span<const env::Pose> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  // Centered moments; the system reduces to 2x2 for the center.
  double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
  for (const auto& p : pts) {
    const double u = p.x - mx;
    const double v = p.y - my;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suvv += u * v * v;
    svuu += v * u * u;
  }
  const double det = suu * svv - suv * suv;
  const double scale = (suu + svv) * (suu + svv);
  if (!(scale > 0.0) || std::abs(det) <= 1e-12 * scale) return std::nullopt;
  const double b1 = 0.5 * (suuu + suvv);
  const double b2 = 0.5 * (svvv + svuu);
  const double uc = (b1 * svv - b2 * suv) / det;
  const double vc = (b2 * suu - b1 * suv) / det;
  const double r2 = uc * uc + vc * vc + (suu + svv) / static_cast<double>(n);
  if (!(r2 > 0.0) || !std::isfinite(r2)) return std::nullopt;
  return CircleFit{uc + mx, vc + my, std::sqrt(r2)};
}

/// Curved motion binned by fitted radius; label `bins` means straight.
inline int label_radius_category(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  const int straight = c.bins;
  if (mean_heading_increment(poses, t, c.window, true) < c.threshold) return straight;
  const auto r = detail::centered(t, c.fit_window, poses.size());
  const auto fit = fit_circle_kasa(poses.subspan(r.begin, r.end - r.begin));
  if (!fit) return straight;
  return uniform_bin(fit->radius, c.lo, c.hi, c.bins);
}

/// Population std of heading second differences over a centered window.
inline double heading_second_difference_std(std::span<const env::Pose> poses, std::size_t t, int window) {
  const std::size_t steps = detail::steps_of(poses).end;
  if (steps < 2) return 0.0;
  const auto r = detail::centered(t, window, steps - 1);
  if (r.end <= r.begin) return 0.0;
  const auto n = static_cast<double>(r.end - r.begin);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = r.begin; k < r.end; ++k) {
    const double d2 = detail::heading_increment(poses, k + 1) - detail::heading_increment(poses, k);
    sum += d2;
    sq += d2 * d2;
  }
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sq / n - mean * mean));
}

inline int label_curvature_noise(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  return uniform_bin(heading_second_difference_std(poses, t, c.window), c.lo, c.hi, c.bins);
}

inline int label_at(std::span<const env::Pose> poses, std::size_t t, const StyleCriterion& c) {
  switch (c.id) {
    case CriterionId::position: return label_position(poses, t, c);
    case CriterionId::movement_direction: return label_movement_direction(poses, t, c);
    case CriterionId::turn_direction: return label_turn_direction(poses, t, c);
    case CriterionId::radius_category: return label_radius_category(poses, t, c);
    case CriterionId::speed_category: return label_speed_category(poses, t, c);
    case CriterionId::curvature_noise: return label_curvature_noise(poses, t, c);
  }
  return 0;
}

/// Labels for every transition of one episode (T+1 poses -> T labels).
inline std::vector<std::uint8_t> label_episode(std::span<const env::Pose> poses, const StyleCriterion& c) {
  std::vector<std::uint8_t> out(poses.empty() ? 0 : poses.size() - 1);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = static_cast<std::uint8_t>(label_at(poses, t, c));
  return out;
}

}  // namespace sciql::labeling
