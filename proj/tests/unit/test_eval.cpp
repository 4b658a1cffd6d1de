#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sciql/env/generate.hpp"
#include "sciql/eval/report.hpp"
#include "sciql/eval/rollout.hpp"
#include "sciql/eval/sweep.hpp"

using namespace sciql;
using namespace sciql::eval;
using labeling::CriterionId;

namespace {

std::shared_ptr<data::Dataset> small_dataset() {
  static auto ds = std::make_shared<data::Dataset>(env::generate_dataset(env::Variant::inplace, 6, 11));
  return ds;
}

agents::Agent untrained(CriterionId id, agents::Algorithm algo = agents::Algorithm::cbc, std::uint64_t seed = 1) {
  const auto l = labeling::annotate(small_dataset(), labeling::make_criterion(id));
  agents::AgentConfig c;
  c.algo = algo;
  agents::HyperParams hp;
  hp.hidden = {32, 32};
  return agents::init_agent(c, hp, l, seed);
}

/// Policy whose mean action is the constant raw action a.
void make_constant(agents::GaussianPolicy& p, double turn, double speed) {
  for (auto& v : p.mean.params["out.w"].data) v = 0.0f;
  auto& b = p.mean.params["out.b"].data;
  b[0] = static_cast<float>(std::atanh(turn));
  b[1] = static_cast<float>(std::atanh(speed));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RolloutReport report(CriterionId c, int z, std::uint64_t seed, std::vector<double> al, std::vector<double> ret) {
  RolloutReport r{c, z, seed, {}};
  for (std::size_t i = 0; i < al.size(); ++i) r.episodes.push_back({al[i], 0.0, ret[i]});
  return r;
}

}  // namespace

TEST(Alignment, Examples) {
  const std::vector<std::uint8_t> all{2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(alignment(all, 2), 1.0);
  const std::vector<std::uint8_t> half{2, 0, 2, 1};
  EXPECT_DOUBLE_EQ(alignment(half, 2), 0.5);
  EXPECT_DOUBLE_EQ(alignment(half, 3), 0.0);
}

TEST(Alignment, InvariantToRelabelingOtherLabels) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> lab(0, 4);
  std::vector<std::uint8_t> a(500);
  for (auto& v : a) v = static_cast<std::uint8_t>(lab(rng));
  auto b = a;
  for (auto& v : b) {
    if (v != 2) v = static_cast<std::uint8_t>((v + 1) % 5 == 2 ? 0 : (v + 1) % 5);
  }
  EXPECT_DOUBLE_EQ(alignment(a, 2), alignment(b, 2));
}

TEST(NormalizedReturn, Examples) {
  const data::ReturnBounds b{-200.0, -50.0};
  EXPECT_DOUBLE_EQ(normalized_return(-200.0, b), 0.0);
  EXPECT_DOUBLE_EQ(normalized_return(-50.0, b), 1.0);
  EXPECT_DOUBLE_EQ(normalized_return(-125.0, b), 0.5);
  EXPECT_DOUBLE_EQ(normalized_return(-500.0, b), 0.0);
  EXPECT_DOUBLE_EQ(normalized_return(10.0, b), 1.0);
  EXPECT_THROW(normalized_return(0.0, {1.0, 1.0}), std::invalid_argument);
}

TEST(Aggregate, IdenticalReportsHaveZeroStd) {
  const auto c = labeling::make_criterion(CriterionId::speed_category);
  std::vector<RolloutReport> rs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    for (int z : c.promptable) rs.push_back(report(c.id, z, s, {0.7, 0.9}, {0.2, 0.4}));
  }
  const auto t = aggregate(rs, {c});
  EXPECT_DOUBLE_EQ(t.alignment.std, 0.0);
  EXPECT_DOUBLE_EQ(t.alignment.mean, 0.8);
  EXPECT_NEAR(t.normalized_return.mean, 0.3, 1e-12);
}

TEST(Aggregate, TwoLabelCriterionMean) {
  const auto c = labeling::make_criterion(CriterionId::turn_direction);
  const auto t = aggregate({report(c.id, 0, 0, {0.4}, {0}), report(c.id, 1, 0, {0.8}, {0})}, {c});
  EXPECT_NEAR(t.criteria[0].alignment.mean, 0.6, 1e-12);
  EXPECT_EQ(t.criteria[0].missing_cells, 0u);
}

TEST(Aggregate, MissingCellsAreReported) {
  const auto c = labeling::make_criterion(CriterionId::speed_category);
  const auto t = aggregate({report(c.id, 0, 0, {0.5}, {0.5})}, {c});
  EXPECT_EQ(t.criteria[0].missing_cells, 2u);
  int missing = 0;
  for (const auto& cell : t.cells) missing += cell.missing;
  EXPECT_EQ(missing, 2);
  EXPECT_DOUBLE_EQ(t.alignment.mean, 0.5);
}

TEST(Aggregate, MatchesSpreadsheetReference) {
  // Reference: pivot by (criterion, label, seed) -> per-seed means; cell
  // mean/std over seeds; criterion = average of cells; overall = average of
  // criteria. Written with explicit loops in a different order.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<labeling::StyleCriterion> crits{labeling::make_criterion(CriterionId::speed_category),
                                             labeling::make_criterion(CriterionId::turn_direction)};
  std::vector<RolloutReport> rs;
  std::map<std::tuple<int, int, int>, double> pivot;
  for (const auto& c : crits) {
    for (int z : c.promptable) {
      for (int s = 0; s < 4; ++s) {
        std::vector<double> al;
        for (int e = 0; e < 3; ++e) al.push_back(u(rng));
        rs.push_back(report(c.id, z, s, al, {0, 0, 0}));
        pivot[{static_cast<int>(c.id), z, s}] = (al[0] + al[1] + al[2]) / 3.0;
      }
    }
  }
  double overall = 0.0, overall_std = 0.0;
  for (const auto& c : crits) {
    double cm = 0.0, cs = 0.0;
    for (int z : c.promptable) {
      double m = 0.0;
      for (int s = 0; s < 4; ++s) m += pivot[{static_cast<int>(c.id), z, s}] / 4.0;
      double v = 0.0;
      for (int s = 0; s < 4; ++s) v += std::pow(pivot[{static_cast<int>(c.id), z, s}] - m, 2) / 4.0;
      cm += m / c.promptable.size();
      cs += std::sqrt(v) / c.promptable.size();
    }
    overall += cm / crits.size();
    overall_std += cs / crits.size();
  }
  const auto t = aggregate(rs, crits);
  EXPECT_NEAR(t.alignment.mean, overall, 1e-12);
  EXPECT_NEAR(t.alignment.std, overall_std, 1e-12);
}

TEST(Hypervolume, Examples) {
  EXPECT_DOUBLE_EQ(hypervolume({{100, 100, ""}}), 10000.0);
  EXPECT_DOUBLE_EQ(hypervolume({{50, 50, ""}}), 2500.0);
  EXPECT_DOUBLE_EQ(hypervolume({{80, 20, ""}, {20, 80, ""}}), 2800.0);
  EXPECT_DOUBLE_EQ(hypervolume({}), 0.0);
}

TEST(Hypervolume, MonotoneAndDominatedPointsContributeNothing) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<ParetoPoint> pts;
  double prev = 0.0;
  for (int i = 0; i < 200; ++i) {
    pts.push_back({u(rng), u(rng), ""});
    const double hv = hypervolume(pts);
    EXPECT_GE(hv, prev);
    prev = hv;
  }
  auto with_dominated = pts;
  with_dominated.push_back({pts[0].style * 0.5, pts[0].task * 0.5, ""});
  EXPECT_DOUBLE_EQ(hypervolume(with_dominated), hypervolume(pts));
  // Grid reference: count covered cells of a 0.25 lattice.
  std::vector<ParetoPoint> few{{70, 30, ""}, {40, 60, ""}, {10, 90, ""}, {55, 45, ""}};
  double cells = 0;
  for (double x = 0.125; x < 100; x += 0.25) {
    for (double y = 0.125; y < 100; y += 0.25) {
      for (const auto& p : few) {
        if (x < p.style && y < p.task) {
          cells += 1;
          break;
        }
      }
    }
  }
  EXPECT_NEAR(hypervolume(few), cells * 0.0625, 1e-9);
}

TEST(NoiseThreshold, ThreeLabels) { EXPECT_DOUBLE_EQ(noise_threshold(3), 2.0 / 3.0); }

TEST(Rollout, ScriptedCounterClockwiseCirclerTurnsLeft) {
  auto agent = untrained(CriterionId::turn_direction);
  const auto raw = env::encode_action(0.2, 1.5);
  make_constant(agent.policy, raw[0], raw[1]);
  const auto reports = rollout(agent, {0, 1}, 5, 3);
  EXPECT_GE(reports[1].mean_alignment(), 0.9);
  EXPECT_LE(reports[0].mean_alignment(), 0.1);
  for (const auto& e : reports[1].episodes) {
    EXPECT_GE(e.normalized_return, 0.0);
    EXPECT_LE(e.normalized_return, 1.0);
  }
}

TEST(Rollout, UntrainedConditionedPolicyIsAtChanceOnPosition) {
  // Eight labels partition every timestep, so summing alignment over
  // labels of near-identical trajectories gives 1.
  auto agent = untrained(CriterionId::position);
  const auto t = aggregate(rollout_all(agent, 5, 9), {agent.criterion});
  EXPECT_NEAR(t.alignment.mean, 1.0 / 8.0, 0.1);
}

TEST(Rollout, DeterministicGivenSeed) {
  auto agent = untrained(CriterionId::speed_category, agents::Algorithm::scbc, 4);
  const auto a = rollout_all(agent, 3, 5);
  const auto b = rollout_all(agent, 3, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t e = 0; e < a[i].episodes.size(); ++e) {
      EXPECT_EQ(a[i].episodes[e].alignment, b[i].episodes[e].alignment);
      EXPECT_EQ(a[i].episodes[e].raw_return, b[i].episodes[e].raw_return);
    }
  }
}

TEST(Rollout, NonPromptableLabelListsPromptableSet) {
  auto agent = untrained(CriterionId::turn_direction);
  try {
    rollout(agent, {2}, 1, 0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("promptable: 0,1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(rollout(agent, {0}, 0, 0), std::invalid_argument);
}

TEST(Rollout, UnconditionedBcIgnoresLabel) {
  auto agent = untrained(CriterionId::speed_category, agents::Algorithm::bc);
  const auto r = rollout(agent, {0, 1, 2}, 2, 1);
  double total = 0.0;
  for (const auto& rep : r) total += rep.mean_alignment();
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Reports, CsvsAreStableAndDeclareBounds) {
  const auto dir = std::filesystem::temp_directory_path() / "sciql_eval_csv";
  std::filesystem::remove_all(dir);
  auto agent = untrained(CriterionId::speed_category);
  const auto reps = rollout_all(agent, 2, 1);
  for (int i = 0; i < 2; ++i) {
    write_rollouts_csv(reps, agent.dataset.return_bounds, dir / std::to_string(i) / "rollouts.csv", "cbc");
    write_aggregate_csv(aggregate(reps, {agent.criterion}), agent.dataset.return_bounds,
                        dir / std::to_string(i) / "aggregate.csv", "cbc");
  }
  EXPECT_EQ(slurp(dir / "0" / "rollouts.csv"), slurp(dir / "1" / "rollouts.csv"));
  const auto agg = slurp(dir / "0" / "aggregate.csv");
  EXPECT_EQ(agg.rfind("# normalized_return", 0), 0u);
  EXPECT_NE(agg.find("cbc,overall"), std::string::npos);
  write_pareto_csv({{"sciql", {{80, 20, "lambda"}, {20, 80, "lambda>r"}}}}, dir / "pareto.csv");
  EXPECT_NE(slurp(dir / "pareto.csv").find("sciql,lambda,80,20,2800"), std::string::npos);
  write_noise_csv({{"cbc", 3, 2.0 / 3.0, {{0.0, {0.9, 0}, {0.1, 0}}, {0.9, {0.1, 0}, {0.1, 0}}}}}, dir / "noise.csv");
  const auto noise = slurp(dir / "noise.csv");
  EXPECT_NE(noise.find("cbc,0,0.9,0,0.1,0,0.666666667,0"), std::string::npos) << noise;
  EXPECT_NE(noise.find("cbc,0.9,0.1,0,0.1,0,0.666666667,1"), std::string::npos) << noise;
  std::filesystem::remove_all(dir);
}

TEST(Sweep, NoiseSweepAtZeroMatchesCleanTraining) {
  const auto l = labeling::annotate(small_dataset(), labeling::make_criterion(CriterionId::speed_category));
  agents::AgentConfig c;
  c.algo = agents::Algorithm::cbc;
  agents::HyperParams hp;
  hp.steps_chi = hp.steps_value = hp.steps_policy = 30;
  hp.hidden = {16};
  hp.batch = 32;
  hp.log_every = 10;
  const auto curve = noise_sweep("cbc", c, l, {0.0, 0.5}, hp, {1, 2}, 2);
  EXPECT_DOUBLE_EQ(curve.threshold, 2.0 / 3.0);
  ASSERT_EQ(curve.points.size(), 2u);
  std::vector<RolloutReport> clean;
  for (std::uint64_t s : {1, 2}) {
    auto r = train_and_evaluate(c, l, hp, s, 2);
    clean.insert(clean.end(), r.begin(), r.end());
  }
  EXPECT_DOUBLE_EQ(curve.points[0].alignment.mean, aggregate(clean, {l.criterion}).alignment.mean);
  const auto par = noise_sweep("cbc", c, l, {0.0, 0.5}, hp, {1, 2}, 2, 3);
  EXPECT_DOUBLE_EQ(par.points[1].alignment.mean, curve.points[1].alignment.mean);
  EXPECT_THROW(noise_sweep("x", c, l, {1.5}, hp, {1}, 1), std::invalid_argument);
}
