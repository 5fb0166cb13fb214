// Copyright 2026 The dpopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpopt/harness.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "boost/property_tree/ptree.hpp"
#include "boost/property_tree/xml_parser.hpp"
#include "dpopt/config.h"
#include "dpopt/plot.h"
#include "gtest/gtest.h"

namespace dpopt {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dpopt_" + name)).string();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig QuadraticGd() {
  ExperimentConfig c;
  c.objective = {"quadratic", 5, 4.0};
  c.optimizer = {Method::kSgd, false, 1e9, 0.0, 0.2, 1};
  c.steps = 200;
  c.eval_every = 10;
  return c;
}

TEST(RunTest, NoiselessGradientDescentDecaysGeometrically) {
  absl::StatusOr<Trajectory> t = dpopt::Run(QuadraticGd());
  ASSERT_TRUE(t.ok()) << t.status();
  ASSERT_EQ(t->records.size(), 21u);
  for (size_t i = 1; i < t->records.size(); ++i) {
    EXPECT_LT(t->records[i].grad_norm, t->records[i - 1].grad_norm);
  }
  // lr * L = 0.8, so the slowest mode contracts by 0.8 per step at worst.
  EXPECT_LE(t->records.back().grad_norm,
            std::pow(0.8, 200) * t->records.front().grad_norm * 1.0001);
  EXPECT_EQ(t->records.back().step, 200);
}

TEST(RunTest, MinGradNormIsRunningMinimum) {
  ExperimentConfig c;
  c.objective = {"cosh", 10};
  c.noise = {NoiseKind::kTwoPointRadial, {0.5, 0.0}};
  c.optimizer = {Method::kNsgd, false, 0.1, 1.0, 0.05, 4};
  c.steps = 2000;
  c.eval_every = 1;
  Trajectory t = *dpopt::Run(c);
  double running = INFINITY;
  for (const TrajectoryRecord& r : t.records) {
    running = std::min(running, r.grad_norm);
    EXPECT_EQ(r.min_grad_norm, running);
    EXPECT_EQ(r.cum_seconds, 0.0);
  }
}

TEST(RunTest, SameSeedSameCsvBytes) {
  ExperimentConfig c;
  c.objective = {"logistic", 5, 1, 300, 4};
  c.optimizer = {Method::kNsgd, false, 0.1, 1.0, 0.1, 10};
  c.steps = 500;
  c.seed = 17;
  std::string a = TempPath("traj_a.csv"), b = TempPath("traj_b.csv");
  ASSERT_TRUE(WriteTrajectoryCsv(*dpopt::Run(c), a).ok());
  ASSERT_TRUE(WriteTrajectoryCsv(*dpopt::Run(c), b).ok());
  EXPECT_EQ(ReadFile(a), ReadFile(b));
  c.seed = 18;
  ASSERT_TRUE(WriteTrajectoryCsv(*dpopt::Run(c), b).ok());
  EXPECT_NE(ReadFile(a), ReadFile(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(RunTest, TheoryModeUsesTheoremLr) {
  ExperimentConfig c;
  c.objective = {"cosh", 10};
  c.noise = {NoiseKind::kTwoPointRadial, {0.5, 0.0}};
  c.optimizer = {Method::kSgd, true, 2.0, 1.0, 123.0, 1};
  c.steps = 1000;
  Trajectory t = *dpopt::Run(c);
  TheoryParams theory{{1, 1}, {0.5, 0}, 10};
  EXPECT_DOUBLE_EQ(t.base_lr, *TheoremLrSgd(theory, 2.0, 1.0, 1000));
}

TEST(RunTest, EvalEveryDefault) {
  ExperimentConfig c = QuadraticGd();
  c.eval_every = 0;
  c.steps = 1000;
  EXPECT_EQ(dpopt::Run(c)->records.size(), 201u);
  c.steps = 50;
  EXPECT_EQ(dpopt::Run(c)->records.size(), 51u);
}

TEST(RunTest, RejectsBadConfigs) {
  ExperimentConfig c = QuadraticGd();
  c.steps = 0;
  EXPECT_FALSE(dpopt::Run(c).ok());
  c = QuadraticGd();
  c.objective.kind = "rosenbrock";
  EXPECT_FALSE(dpopt::Run(c).ok());
  c = QuadraticGd();
  c.noise = {NoiseKind::kTwoPointRadial, {0.0, 0.0}};
  EXPECT_FALSE(dpopt::Run(c).ok());
}

TEST(ScheduleTest, StepDecay) {
  Schedule s{Schedule::kStepDecay, {0.5, 0.75}, 0.1};
  EXPECT_DOUBLE_EQ(s.LrAt(1.0, 0, 100), 1.0);
  EXPECT_DOUBLE_EQ(s.LrAt(1.0, 49, 100), 1.0);
  EXPECT_DOUBLE_EQ(s.LrAt(1.0, 50, 100), 0.1);
  EXPECT_NEAR(s.LrAt(1.0, 99, 100), 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(Schedule{}.LrAt(0.3, 99, 100), 0.3);
}

TEST(RateFitTest, ExactPowerLaw) {
  std::vector<std::pair<double, double>> runs;
  for (double t : {1e3, 1e4, 1e5}) runs.push_back({t, std::pow(t, -0.25)});
  EXPECT_NEAR(*RateFit(runs), -0.25, 1e-9);
  runs.clear();
  for (double t : {10.0, 20.0, 40.0, 80.0}) runs.push_back({t, 3 * std::pow(t, 0.7)});
  EXPECT_NEAR(*RateFit(runs), 0.7, 1e-9);
}

TEST(RateFitTest, ConstantInputs) {
  std::vector<std::pair<double, double>> runs = {{1, 2}, {2, 2}, {3, 2}};
  EXPECT_NEAR(*RateFit(runs), 0.0, 1e-15);
}

TEST(RateFitTest, DegenerateInputs) {
  std::vector<std::pair<double, double>> two = {{1, 2}, {2, 2}, {2, 3}};
  EXPECT_FALSE(RateFit(two).ok());
  std::vector<std::pair<double, double>> bad = {{1, 2}, {2, 0}, {3, 2}};
  EXPECT_FALSE(RateFit(bad).ok());
}

TEST(ParallelForTest, IndependentOfWorkerCount) {
  ExperimentConfig c;
  c.objective = {"cosh", 4};
  c.noise = {NoiseKind::kSphericalBounded, {0.3, 0.1}};
  c.optimizer = {Method::kSgd, false, 1.0, 0.5, 0.05, 2};
  c.steps = 300;
  SweepConfig s{c, {0.01, 0.05}, {0.5, 1.0, 2.0}, {0, 1}, 1};
  SweepResult one = *Sweep(s);
  s.jobs = 4;
  SweepResult four = *Sweep(s);
  ASSERT_EQ(one.rows.size(), four.rows.size());
  for (size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].final_metric, four.rows[i].final_metric);
  }
}

TEST(SweepTest, ShapeFinitenessAndCsvRoundTrip) {
  ExperimentConfig c;
  c.objective = {"logistic", 5, 1, 200, 2};
  c.optimizer = {Method::kNsgd, false, 1.0, 1.0, 0.1, 10};
  c.steps = 100;
  SweepConfig s{c, {0.05, 0.2, 0.8}, {0.01, 0.1}, {0, 1, 2}, 2};
  SweepResult r = *Sweep(s);
  ASSERT_EQ(r.metric.size(), 3u);
  for (const auto& row : r.metric) {
    ASSERT_EQ(row.size(), 2u);
    for (double v : row) EXPECT_TRUE(std::isfinite(v));
  }
  ASSERT_EQ(r.rows.size(), 18u);
  std::string path = TempPath("sweep.csv");
  ASSERT_TRUE(WriteSweepCsv(r, path).ok());
  std::vector<SweepRow> back = *ReadSweepCsv(path);
  ASSERT_EQ(back.size(), r.rows.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].lr, r.rows[i].lr);
    EXPECT_EQ(back[i].param_value, r.rows[i].param_value);
    EXPECT_EQ(back[i].seed, r.rows[i].seed);
    EXPECT_EQ(back[i].final_metric, r.rows[i].final_metric);
  }
  std::filesystem::remove(path);
  SweepSpread spread = SpreadAtBestLr(r);
  EXPECT_TRUE(spread.best_lr == 0.05 || spread.best_lr == 0.2 || spread.best_lr == 0.8);
  EXPECT_GE(spread.std_across_params, 0);
}

TEST(SweepTest, EmptyGridIsError) {
  SweepConfig s{QuadraticGd(), {}, {1.0}, {0}, 1};
  EXPECT_FALSE(Sweep(s).ok());
}

TEST(TrajectoryCsvTest, RoundTrip) {
  ExperimentConfig c;
  c.objective = {"cosh", 3};
  c.noise = {NoiseKind::kTwoPointRadial, {0.5, 0.0}};
  c.optimizer = {Method::kNsgd, false, 1.0, 0.3, 0.05, 1};
  c.steps = 1000;
  c.record_time = true;
  Trajectory t = *dpopt::Run(c);
  std::string path = TempPath("roundtrip.csv");
  ASSERT_TRUE(WriteTrajectoryCsv(t, path).ok());
  std::vector<TrajectoryRecord> back = *ReadTrajectoryCsv(path);
  ASSERT_EQ(back.size(), t.records.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].step, t.records[i].step);
    EXPECT_EQ(back[i].loss, t.records[i].loss);
    EXPECT_EQ(back[i].grad_norm, t.records[i].grad_norm);
    EXPECT_EQ(back[i].min_grad_norm, t.records[i].min_grad_norm);
    EXPECT_EQ(back[i].cum_seconds, t.records[i].cum_seconds);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,loss,grad_norm,min_grad_norm,cum_seconds");
  std::filesystem::remove(path);
  EXPECT_FALSE(ReadTrajectoryCsv(TempPath("missing.csv")).ok());
}

TEST(FloorTest, ReturnsPerSeedFloors) {
  FloorConfig f;
  f.steps = 2000;
  f.seeds = {0, 1};
  FloorResult r = *FloorExperiment(f);
  ASSERT_EQ(r.nsgd_per_seed.size(), 2u);
  EXPECT_DOUBLE_EQ(r.nsgd_floor, (r.nsgd_per_seed[0] + r.nsgd_per_seed[1]) / 2);
  EXPECT_GT(r.sgd_floor, 0);
  f.tau0 = 0;
  EXPECT_TRUE(FloorExperiment(f).ok());
}

namespace pt = boost::property_tree;

int CountCells(const pt::ptree& node) {
  int n = 0;
  for (const auto& [name, child] : node) {
    if (name == "rect" && child.get<std::string>("<xmlattr>.class", "") == "cell") ++n;
    n += CountCells(child);
  }
  return n;
}

TEST(PlotTest, HeatmapIsWellFormedXmlWithOneCellPerEntry) {
  std::string path = TempPath("heat.svg");
  std::vector<std::vector<double>> m = {{0.1, 1, 10}, {2, 3, NAN}};
  ASSERT_TRUE(WriteHeatmapSvg(m, {"0.1", "1"}, {"a", "b", "c<&>"},
                              {"title", "c", "lr"}, path)
                  .ok());
  pt::ptree tree;
  ASSERT_NO_THROW(pt::read_xml(path, tree));
  EXPECT_EQ(CountCells(tree), 6);
  std::string body = ReadFile(path);
  EXPECT_NE(body.find("c&lt;&amp;&gt;"), std::string::npos);
  EXPECT_NE(body.find(">lr<"), std::string::npos);
  std::filesystem::remove(path);
  EXPECT_FALSE(WriteHeatmapSvg(m, {"one"}, {"a", "b", "c"}, {}, path).ok());
}

TEST(PlotTest, LineChartIsWellFormedXml) {
  std::string path = TempPath("line.svg");
  Series s{"min grad", {1, 10, 100}, {1, 0.5, 0.25}};
  Series t{"other", {1, 10, 100}, {2, 0, 1}};
  ASSERT_TRUE(WriteLineChartSvg({s, t}, {"rate", "T", "norm"}, true, true, path).ok());
  pt::ptree tree;
  ASSERT_NO_THROW(pt::read_xml(path, tree));
  EXPECT_EQ(tree.get<std::string>("svg.<xmlattr>.xmlns"), "http://www.w3.org/2000/svg");
  std::string body = ReadFile(path);
  EXPECT_NE(body.find(">T<"), std::string::npos);
  EXPECT_NE(body.find(">norm<"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(ConfigTest, ParsesAllSections) {
  FileConfig f = *ParseConfigText(R"(
# comment
objective.kind = logistic
objective.dim = 20
objective.n_terms = 2000
objective.data_seed = 5
noise.kind = two_point
noise.tau0 = 0.5
optimizer.method = sgd
optimizer.theory = false
optimizer.param = 2
optimizer.sigma = 1
optimizer.lr = 0.3
optimizer.batch_size = 50
run.steps = 2000
run.seed = 9
run.eval_every = 20
run.init = 0.5
run.schedule = step
run.milestones = 0.5, 0.75
run.decay_factor = 0.2
sweep.lrs = 0.05,0.1
sweep.params = 1e-4, 1
sweep.seeds = 0,1
)");
  const ExperimentConfig& e = f.experiment;
  EXPECT_EQ(e.objective.kind, "logistic");
  EXPECT_EQ(e.objective.dim, 20);
  EXPECT_EQ(e.objective.n_terms, 2000);
  EXPECT_EQ(e.objective.data_seed, 5u);
  EXPECT_EQ(e.noise.kind, NoiseKind::kTwoPointRadial);
  EXPECT_EQ(e.noise.variance.tau0, 0.5);
  EXPECT_EQ(e.optimizer.method, Method::kSgd);
  EXPECT_FALSE(e.optimizer.theory);
  EXPECT_EQ(e.optimizer.param, 2);
  EXPECT_EQ(e.optimizer.lr, 0.3);
  EXPECT_EQ(e.optimizer.batch_size, 50);
  EXPECT_EQ(e.steps, 2000);
  EXPECT_EQ(e.seed, 9u);
  EXPECT_EQ(e.eval_every, 20);
  EXPECT_EQ(e.init, 0.5);
  EXPECT_EQ(e.schedule.kind, Schedule::kStepDecay);
  EXPECT_EQ(e.schedule.milestones, (std::vector<double>{0.5, 0.75}));
  EXPECT_EQ(e.schedule.factor, 0.2);
  EXPECT_EQ(f.sweep_lrs, (std::vector<double>{0.05, 0.1}));
  EXPECT_EQ(f.sweep_params, (std::vector<double>{1e-4, 1}));
  EXPECT_EQ(f.sweep_seeds, (std::vector<uint64_t>{0, 1}));
}

TEST(ConfigTest, SectionBlocksAreEquivalent) {
  FileConfig f = *ParseConfigText("[objective]\nkind = quadratic\ndim = 3\n");
  EXPECT_EQ(f.experiment.objective.kind, "quadratic");
  EXPECT_EQ(f.experiment.objective.dim, 3);
}

TEST(ConfigTest, Errors) {
  EXPECT_FALSE(ParseConfigText("objective.colour = red\n").ok());
  EXPECT_FALSE(ParseConfigText("noise.kind = gaussian\n").ok());
  EXPECT_FALSE(ParseConfigText("optimizer.method = adam\n").ok());
  EXPECT_FALSE(ParseConfigText("run.steps = many\n").ok());
  EXPECT_FALSE(ParseConfigText("run.steps = 0\n").ok());
  EXPECT_FALSE(ParseConfigText("sweep.lrs = 0.1, x\n").ok());
  EXPECT_FALSE(ParseConfigFile(TempPath("no_such.cfg")).ok());
}

}  // namespace
}  // namespace dpopt
