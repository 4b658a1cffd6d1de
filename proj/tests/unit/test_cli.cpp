#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "sciql/agents/checkpoint.hpp"
#include "sciql/data/dataset_io.hpp"
#include "sciql/labeling/labeled_dataset.hpp"

namespace fs = std::filesystem;
using namespace sciql;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SCIQL_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (pipe && fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("sciql_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  std::string dataset(std::size_t episodes = 5) {
    const auto path = p("d.ds");
    if (!fs::exists(path)) {
      const auto r = run("generate --variant inplace --episodes " + std::to_string(episodes) + " --seed 7 --out " + path);
      EXPECT_EQ(r.code, 0) << r.output;
    }
    return path;
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, GenerateIsReadableAndReproducible) {
  const auto a = run("generate --variant inplace --episodes 50 --seed 7 --out " + p("a.ds"));
  ASSERT_EQ(a.code, 0) << a.output;
  const auto b = run("generate --variant inplace --episodes 50 --seed 7 --out " + p("b.ds"));
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_EQ(slurp(p("a.ds")), slurp(p("b.ds")));
  EXPECT_EQ(data::read_dataset(p("a.ds")).episodes.size(), 50u);
  EXPECT_EQ(run("annotate --dataset " + p("a.ds") + " --criterion speed_category --out " + p("a.labels")).code, 0);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("generate --variant spiral --episodes 5").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("sweep warp --dataset " + dataset() + " --criterion speed_category").code, 1);
  EXPECT_EQ(run("generate --episodes 5 --seed 7 --out " + dataset()).code, 1);  // exists, no --force
}

TEST_F(Cli, OutputRootFromEnvironment) {
  const auto env = "SCIQL_OUTPUT_ROOT=" + p("root") + " ";
  const std::string cmd = env + SCIQL_CLI + " generate --episodes 3 --seed 2 > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "root" / "datasets" / "circle2d-inplace-n3-s2.ds"));
}

TEST_F(Cli, AnnotateIsReproducibleAndRecordsZeta) {
  const auto ds = dataset();
  ASSERT_EQ(run("annotate --dataset " + ds + " --criterion turn_direction --out " + p("a.labels")).code, 0);
  ASSERT_EQ(run("annotate --dataset " + ds + " --criterion turn_direction --out " + p("b.labels")).code, 0);
  EXPECT_EQ(slurp(p("a.labels")), slurp(p("b.labels")));
  const auto r = run("annotate --dataset " + ds + " --criterion turn_direction --zeta 0.2 --seed 3 --out " + p("z.labels"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto base = std::make_shared<data::Dataset>(data::read_dataset(ds));
  const auto l = labeling::read_sidecar(p("z.labels"), base);
  EXPECT_DOUBLE_EQ(l.zeta, 0.2);
  EXPECT_EQ(l.pollution_seed, 3u);
  EXPECT_EQ(run("annotate --dataset " + p("missing.ds") + " --criterion turn_direction").code, 2);
}

TEST_F(Cli, HistogramPopulatesEveryPromptableBin) {
  ASSERT_EQ(run("generate --episodes 100 --seed 1 --out " + p("h.ds")).code, 0);
  const auto r = run("histogram --dataset " + p("h.ds") + " --out " + p("h.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(p("h.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string crit, label, promptable, count;
    std::getline(ss, crit, ',');
    std::getline(ss, label, ',');
    std::getline(ss, promptable, ',');
    std::getline(ss, count, ',');
    if (promptable == "1") { EXPECT_GT(std::stoll(count), 0) << crit << " label " << label; }
    ++rows;
  }
  EXPECT_EQ(rows, 8 + 9 + 3 + 4 + 3 + 3);
}

TEST_F(Cli, SmokeTrainWritesLoadableCheckpointQuickly) {
  const auto ds = dataset();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("train --quiet --preset smoke --dataset " + ds +
                     " --criterion speed_category --algo sciql --gawr style_first --seed 4 --out " + p("run"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_LT(secs, 30.0);
  const auto agent = agents::load_checkpoint(dir / "run" / "checkpoint");
  EXPECT_EQ(agent.step, 1000);
  EXPECT_EQ(agent.config.gawr, agents::GawrMode::style_first);
  const auto cfg = nlohmann::json::parse(slurp(dir / "run" / "config.json"));
  EXPECT_EQ(cfg["agent"]["gawr"], "style_first");
  EXPECT_EQ(cfg["hyperparams"]["steps_policy"], 1000);
  EXPECT_TRUE(fs::exists(dir / "run" / "train_log.csv"));
  // Refuses to reuse a non-empty run directory.
  EXPECT_EQ(run("train --quiet --preset smoke --steps 5 --dataset " + ds + " --criterion speed_category --out " + p("run")).code, 1);
}

TEST_F(Cli, TrainConfigFileWithFlagOverrides) {
  const auto ds = dataset();
  {
    std::ofstream cfg(p("c.json"));
    cfg << R"({"dataset": ")" << ds << R"(", "criterion": "turn_direction", "preset": "smoke",
              "agent": {"algo": "cbc"}, "hyperparams": {"batch": 16, "steps_policy": 20, "steps_value": 20, "steps_chi": 20}})";
  }
  const auto r = run("train --quiet --config " + p("c.json") + " --algo scbc --out " + p("run"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto cfg = nlohmann::json::parse(slurp(dir / "run" / "config.json"));
  EXPECT_EQ(cfg["agent"]["algo"], "scbc");
  EXPECT_EQ(cfg["hyperparams"]["batch"], 16);
  {
    std::ofstream bad(p("bad.json"));
    bad << R"({"dataset": ")" << ds << R"(", "criterion": "turn_direction", "hyperparams": {"gama": 0.9}})";
  }
  const auto b = run("train --config " + p("bad.json") + " --out " + p("bad"));
  EXPECT_EQ(b.code, 1);
  EXPECT_NE(b.output.find("gama"), std::string::npos) << b.output;
  {
    std::ofstream bad(p("bad2.json"));
    bad << R"({"datset": "x"})";
  }
  EXPECT_EQ(run("train --config " + p("bad2.json")).code, 1);
}

TEST_F(Cli, TrainDataErrors) {
  const auto r = run("train --preset smoke --dataset " + p("nope.ds") + " --criterion speed_category --out " + p("run"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("nope.ds"), std::string::npos) << r.output;
  std::ofstream(p("junk.ds")) << "not a dataset";
  EXPECT_EQ(run("train --preset smoke --dataset " + p("junk.ds") + " --criterion speed_category --out " + p("run2")).code, 2);
  EXPECT_EQ(run("train --preset smoke --dataset " + dataset() + " --out " + p("run3")).code, 1);  // no criterion
}

TEST_F(Cli, DivergenceExitsWithCodeThreeAndKeepsSnapshot) {
  const auto ds = dataset();
  {
    std::ofstream cfg(p("c.json"));
    cfg << R"({"hyperparams": {"divergence_threshold": 1e-9, "log_every": 5}})";
  }
  const auto r = run("train --quiet --preset smoke --steps 50 --config " + p("c.json") + " --dataset " + ds +
                     " --criterion speed_category --algo cbc --out " + p("run"));
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_TRUE(fs::exists(dir / "run" / "last_good" / "manifest.json"));
}

TEST_F(Cli, EvalIsDeterministicAndChecksLabels) {
  const auto ds = dataset();
  ASSERT_EQ(run("train --quiet --preset smoke --steps 50 --dataset " + ds + " --criterion turn_direction --algo cbc --out " +
                p("run")).code,
            0);
  const auto ck = p("run/checkpoint");
  ASSERT_EQ(run("eval --checkpoint " + ck + " --episodes 2 --seeds 1,2 --out " + p("e1")).code, 0);
  ASSERT_EQ(run("eval --checkpoint " + ck + " --episodes 2 --seeds 1,2 --out " + p("e2")).code, 0);
  EXPECT_EQ(slurp(dir / "e1" / "rollouts.csv"), slurp(dir / "e2" / "rollouts.csv"));
  EXPECT_EQ(slurp(dir / "e1" / "aggregate.csv"), slurp(dir / "e2" / "aggregate.csv"));
  const auto bad = run("eval --checkpoint " + ck + " --labels 2 --out " + p("e3"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("promptable: 0,1"), std::string::npos) << bad.output;
  EXPECT_EQ(run("eval --checkpoint " + p("nowhere") + " --out " + p("e4")).code, 2);
}

TEST_F(Cli, UntrainedCbcIsAtChanceOnPosition) {
  const auto ds = std::make_shared<data::Dataset>(data::read_dataset(dataset()));
  const auto l = labeling::annotate(ds, labeling::make_criterion(labeling::CriterionId::position));
  agents::AgentConfig c;
  c.algo = agents::Algorithm::cbc;
  agents::HyperParams hp;
  hp.hidden = {64, 64};
  agents::save_checkpoint(agents::init_agent(c, hp, l, 3), dir / "init");
  const auto r = run("eval --checkpoint " + p("init") + " --episodes 5 --seeds 1 --out " + p("e"));
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(dir / "e" / "aggregate.csv");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  // variant,overall,,,,,alignment_mean,...
  std::stringstream ss(last);
  std::string field;
  for (int i = 0; i < 7; ++i) std::getline(ss, field, ',');
  EXPECT_NEAR(std::stod(field), 1.0 / 8.0, 0.1) << last;
}

TEST_F(Cli, SweepsEmitExpectedVariants) {
  const auto ds = dataset(3);
  const std::string common = " --dataset " + ds + " --criterion speed_category --preset smoke --steps 10 --batch 16 --episodes 1 --seeds 1";
  auto r = run("sweep pareto" + common + " --out " + p("pareto"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto pareto = slurp(dir / "pareto" / "pareto.csv");
  for (const char* v : {"sorl/beta=0", "sorl/beta=1", "sorl/beta=3", "sciql/lambda,", "sciql/lambda>r", "sciql/r>lambda"}) {
    EXPECT_NE(pareto.find(v), std::string::npos) << v;
  }
  EXPECT_NE(r.output.find("hypervolume sorl"), std::string::npos);
  r = run("sweep relabel_dist" + common + " --out " + p("relabel"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto relabel = slurp(dir / "relabel" / "summary.csv");
  EXPECT_NE(relabel.find("sciql/p_c"), std::string::npos);
  EXPECT_NE(relabel.find("sciql/p_r"), std::string::npos);
  r = run("sweep chi_strategy" + common + " --out " + p("chi"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto chi = slurp(dir / "chi" / "summary.csv");
  for (const char* a : {"sorl", "sciql"}) {
    for (const char* c : {"ind", "mine", "sigmoid", "softmax"}) {
      EXPECT_NE(chi.find(std::string(a) + "/" + c + ","), std::string::npos) << a << "/" << c;
    }
  }
  {
    std::ofstream cfg(p("noise.json"));
    cfg << R"({"zetas": [0.0, 0.9], "algos": ["cbc"], "workers": 2})";
  }
  r = run("sweep noise --config " + p("noise.json") + common + " --out " + p("noise"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto noise = slurp(dir / "noise" / "noise.csv");
  EXPECT_NE(noise.find("cbc,0.9,"), std::string::npos);
  EXPECT_NE(noise.find(",0.666666667,1"), std::string::npos) << noise;
  EXPECT_TRUE(fs::exists(dir / "noise" / "config.json"));
}
