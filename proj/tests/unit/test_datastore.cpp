#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>

#include "sciql/data/batch.hpp"
#include "sciql/data/dataset_io.hpp"
#include "sciql/env/generate.hpp"
#include "test_support.hpp"

using namespace sciql;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(DatasetIo, RoundTrip) {
  TempDir dir("sciql_test_dataset");
  env::EnvConfig cfg;
  cfg.reward_mode = env::RewardMode::literal_squared;
  const auto ds = env::generate_dataset(env::Variant::navigate, 4, 3, cfg);
  write_dataset(ds, dir.path / "d.bin");
  const auto back = data::read_dataset(dir.path / "d.bin");
  EXPECT_EQ(back.header.env_id, ds.header.env_id);
  EXPECT_EQ(back.header.env, ds.header.env);
  EXPECT_EQ(back.header.seed, ds.header.seed);
  EXPECT_DOUBLE_EQ(back.header.return_bounds.lo, ds.header.return_bounds.lo);
  EXPECT_DOUBLE_EQ(back.header.return_bounds.hi, ds.header.return_bounds.hi);
  ASSERT_EQ(back.episodes.size(), ds.episodes.size());
  for (std::size_t i = 0; i < ds.episodes.size(); ++i) EXPECT_EQ(back.episodes[i], ds.episodes[i]);
}

TEST(DatasetIo, CorruptionIsReported) {
  TempDir dir("sciql_test_dataset_bad");
  const auto ds = env::generate_dataset(env::Variant::inplace, 2, 3);
  const auto path = dir.path / "d.bin";
  write_dataset(ds, path);
  const auto size = std::filesystem::file_size(path);

  std::filesystem::resize_file(path, size - 4);
  EXPECT_THROW(data::read_dataset(path), FormatError);

  write_dataset(ds, path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "xx";
  }
  EXPECT_THROW(data::read_dataset(path), FormatError);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "{\"format\":\"other\"}\n";
  }
  EXPECT_THROW(data::read_dataset(path), FormatError);
  EXPECT_THROW(data::read_dataset(dir.path / "missing.bin"), std::exception);
}

TEST(Batch, TransitionsAreConsistent) {
  auto ds = std::make_shared<data::Dataset>(env::generate_dataset(env::Variant::inplace, 5, 8));
  const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::CriterionId::speed_category));
  std::mt19937_64 rng(1);
  const auto b = data::sample_batch(l, {labeling::SamplingMode::current}, 512, rng);
  ASSERT_EQ(b.size(), 512u);
  EXPECT_EQ(b.s.shape, (std::vector<std::size_t>{512, env::kObsDim}));
  for (std::size_t k = 0; k < b.size(); ++k) {
    const auto [e, t] = data::locate(l, b.index[k]);
    const auto& ep = ds->episodes[e];
    EXPECT_EQ(b.r[k], ep.rewards[t]);
    EXPECT_EQ(b.z[k], b.z_center[k]);
    EXPECT_EQ(b.z_center[k], l.labels[b.index[k]]);
    EXPECT_EQ(b.done[k], t + 1 == ep.length() ? 1 : 0);
    // The successor's older history slots are the current observation shifted.
    const auto s = b.s.row(k);
    const auto sn = b.s_next.row(k);
    for (std::size_t j = 0; j + 3 < env::kObsDim; ++j) EXPECT_EQ(sn[j], s[j + 3]);
  }
}

TEST(Batch, LocateEpisodeBoundaries) {
  auto ds = std::make_shared<data::Dataset>(env::generate_dataset(env::Variant::inplace, 3, 8));
  const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::CriterionId::position));
  EXPECT_EQ(data::locate(l, 0), (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(data::locate(l, 999), (std::pair<std::size_t, std::size_t>{0, 999}));
  EXPECT_EQ(data::locate(l, 1000), (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_EQ(data::locate(l, 2999), (std::pair<std::size_t, std::size_t>{2, 999}));
}

TEST(Batch, RandomStyleFollowsLabelHistogram) {
  auto ds = std::make_shared<data::Dataset>(env::generate_dataset(env::Variant::navigate, 20, 4));
  const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::CriterionId::position));
  std::mt19937_64 rng(2);
  std::vector<double> counts(8, 0.0);
  std::vector<double> index_counts(10, 0.0);
  for (int k = 0; k < 40; ++k) {
    const auto b = data::sample_batch(l, {labeling::SamplingMode::random}, 1000, rng);
    for (auto z : b.z) counts[z] += 1;
    for (auto i : b.index) index_counts[i * 10 / l.size()] += 1;
  }
  auto p = l.label_distribution();
  int df = -1;
  for (double v : p) df += v > 0;
  EXPECT_LT(test::chi2_statistic(counts, p), test::chi2_critical(df));
  EXPECT_LT(test::chi2_statistic(index_counts, std::vector<double>(10, 0.1)), test::chi2_critical(9));
}

TEST(Batch, RejectsEmptySize) {
  auto ds = std::make_shared<data::Dataset>(env::generate_dataset(env::Variant::inplace, 1, 8));
  const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::CriterionId::position));
  std::mt19937_64 rng(2);
  EXPECT_THROW(data::sample_batch(l, {}, 0, rng), std::invalid_argument);
}
