#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "sciql/labeling/labeled_dataset.hpp"
#include "sciql/numcore/dense_array.hpp"

namespace sciql::data {

struct Batch {
  DenseArray s;       // [B, obs_dim]
  DenseArray a;       // [B, action_dim]
  std::vector<float> r;
  DenseArray s_next;  // [B, obs_dim]
  std::vector<std::uint8_t> done;
  std::vector<std::uint32_t> z;         // sampled style
  std::vector<std::uint32_t> z_center;  // label of the transition itself
  std::vector<std::size_t> index;       // flat transition index

  [[nodiscard]] std::size_t size() const { return r.size(); }
};

/// Flat transition index -> (episode, step).
inline std::pair<std::size_t, std::size_t> locate(const labeling::LabeledDataset& labeled, std::size_t i) {
  const auto it = std::upper_bound(labeled.offsets.begin(), labeled.offsets.end(), i);
  const std::size_t episode = static_cast<std::size_t>(it - labeled.offsets.begin()) - 1;
  return {episode, i - labeled.offsets[episode]};
}

/// Uniform-with-replacement transitions; z per spec, z_center always the
/// current label. s_next never crosses an episode boundary: the last step's
/// successor is the stored terminal observation.
template <class Rng>
Batch sample_batch(const labeling::LabeledDataset& labeled, const labeling::StyleSamplingSpec& spec,
                   std::size_t size, Rng& rng) {
  if (size < 1) throw std::invalid_argument("sample_batch: size must be >= 1");
  spec.validate();
  const auto& ds = *labeled.base;
  Batch b;
  b.s = DenseArray({size, env::kObsDim});
  b.a = DenseArray({size, env::kActionDim});
  b.s_next = DenseArray({size, env::kObsDim});
  b.r.resize(size);
  b.done.resize(size);
  b.z.resize(size);
  b.z_center.resize(size);
  b.index.resize(size);
  std::uniform_int_distribution<std::size_t> pick(0, labeled.size() - 1);
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t i = pick(rng);
    const auto [episode, t] = locate(labeled, i);
    const auto& ep = ds.episodes[episode];
    const auto s = ep.observation(t);
    const auto sn = ep.observation(t + 1);
    const auto a = ep.action(t);
    std::copy(s.begin(), s.end(), b.s.row(k).begin());
    std::copy(sn.begin(), sn.end(), b.s_next.row(k).begin());
    std::copy(a.begin(), a.end(), b.a.row(k).begin());
    b.r[k] = ep.rewards[t];
    b.done[k] = t + 1 == ep.length() ? 1 : 0;
    b.z_center[k] = labeled.labels[i];
    b.z[k] = static_cast<std::uint32_t>(labeling::sample_style(labeled, i, spec, rng));
    b.index[k] = i;
  }
  return b;
}

}  // namespace sciql::data
