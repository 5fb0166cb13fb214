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

// dpopt command-line tool. Machine-readable results go to stdout as lines
// starting with "RESULT"; everything else goes to stderr.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 infeasible budget or a
// failed check.

#include <cstdlib>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpopt/accountant.h"
#include "dpopt/bias_lab.h"
#include "dpopt/config.h"
#include "dpopt/harness.h"
#include "dpopt/optimizer.h"
#include "dpopt/oracle.h"
#include "dpopt/plot.h"

namespace dpopt {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFinding = 2;

struct Common {
  std::string config;
  std::string out;
  uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
  int jobs = 1;
  bool verbose = false;
};

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status << "\n";
  switch (status.code()) {
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return kExitFinding;
    default:
      return kExitUsage;
  }
}

void Result(const std::string& line) { std::cout << "RESULT " << line << "\n"; }

// Creates the output directory and refuses to clobber existing results.
absl::StatusOr<std::vector<std::string>> PrepareOutputs(
    const Common& common, const std::vector<std::string>& names) {
  std::filesystem::path dir = common.out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  std::vector<std::string> paths;
  for (const std::string& name : names) {
    std::filesystem::path p = dir / name;
    if (std::filesystem::exists(p) && !common.force) {
      return absl::AlreadyExistsError(
          absl::StrCat(p.string(), " exists; pass --force to overwrite"));
    }
    paths.push_back(p.string());
  }
  return paths;
}

absl::StatusOr<FileConfig> LoadConfig(const Common& common) {
  if (common.config.empty()) {
    return absl::InvalidArgumentError("--config is required");
  }
  absl::StatusOr<FileConfig> config = ParseConfigFile(common.config);
  if (config.ok() && common.seed_set) config->experiment.seed = common.seed;
  return config;
}

std::string Fmt(double v) { return absl::StrFormat("%.6g", v); }

int CmdCalibrate(double eps, double delta, int64_t n, int64_t b, int64_t t,
                 const std::string& accountant) {
  AccountantKind kind = accountant == "numeric" ? AccountantKind::kNumericPoisson
                                                : AccountantKind::kClosedForm;
  AccountantConfig config{n, b, t};
  absl::StatusOr<Calibration> cal =
      CalibrateSigma(PrivacyBudget{eps, delta}, config, kind);
  if (!cal.ok()) return Fail(cal.status());
  std::cerr << absl::StrFormat(
      "sigma = %.4g (epsilon %.4g at Renyi order %g, %s accountant)\n",
      cal->sigma, cal->epsilon, cal->order, accountant);
  Result(absl::StrFormat("calibrate accountant=%s sigma=%.4g order=%g eps=%.6g",
                         accountant, cal->sigma, cal->order, cal->epsilon));
  return kExitOk;
}

int CmdRun(const Common& common) {
  absl::StatusOr<FileConfig> config = LoadConfig(common);
  if (!config.ok()) return Fail(config.status());
  config->experiment.record_time = false;
  absl::StatusOr<std::vector<std::string>> paths =
      PrepareOutputs(common, {"trajectory.csv", "trajectory.svg"});
  if (!paths.ok()) return Fail(paths.status());
  absl::StatusOr<Trajectory> t = Run(config->experiment);
  if (!t.ok()) return Fail(t.status());
  if (absl::Status s = WriteTrajectoryCsv(*t, (*paths)[0]); !s.ok()) {
    return Fail(s);
  }
  Series grad{"grad norm", {}, {}}, best{"min grad norm", {}, {}};
  for (const TrajectoryRecord& r : t->records) {
    double step = static_cast<double>(std::max<int64_t>(r.step, 1));
    grad.x.push_back(step);
    grad.y.push_back(r.grad_norm);
    best.x.push_back(step);
    best.y.push_back(r.min_grad_norm);
  }
  if (absl::Status s = WriteLineChartSvg(
          {grad, best}, {"Gradient norm", "step", "||grad f||"}, true, true,
          (*paths)[1]);
      !s.ok()) {
    return Fail(s);
  }
  std::cerr << absl::StrFormat("lr %.6g, %d evaluations, %.2f s\n", t->base_lr,
                               t->records.size(), t->wall_seconds);
  Result(absl::StrCat("run lr=", Fmt(t->base_lr),
                      " final_min_grad_norm=", Fmt(t->final_min_grad_norm()),
                      " final_loss=", Fmt(t->records.back().loss)));
  return kExitOk;
}

int CmdSweep(const Common& common) {
  absl::StatusOr<FileConfig> config = LoadConfig(common);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<std::vector<std::string>> paths =
      PrepareOutputs(common, {"sweep.csv", "sweep.svg"});
  if (!paths.ok()) return Fail(paths.status());
  SweepConfig sweep{config->experiment, config->sweep_lrs,
                    config->sweep_params, config->sweep_seeds, common.jobs};
  if (common.seed_set) sweep.seeds = {common.seed};
  absl::StatusOr<SweepResult> result = Sweep(sweep);
  if (!result.ok()) return Fail(result.status());
  if (absl::Status s = WriteSweepCsv(*result, (*paths)[0]); !s.ok()) {
    return Fail(s);
  }
  std::vector<std::string> rows, cols;
  for (double lr : result->lrs) rows.push_back(absl::StrFormat("%g", lr));
  for (double p : result->params) cols.push_back(absl::StrFormat("%g", p));
  const bool nsgd = config->experiment.optimizer.method == Method::kNsgd;
  if (absl::Status s = WriteHeatmapSvg(
          result->metric, rows, cols,
          {nsgd ? "DP-NSGD final min grad norm" : "DP-SGD final min grad norm",
           nsgd ? "r" : "c", "learning rate"},
          (*paths)[1]);
      !s.ok()) {
    return Fail(s);
  }
  SweepSpread spread = SpreadAtBestLr(*result);
  bool finite = true;
  for (const SweepRow& r : result->rows) finite = finite && std::isfinite(r.final_metric);
  Result(absl::StrCat("sweep best_lr=", Fmt(spread.best_lr),
                      " std_across_params=", Fmt(spread.std_across_params),
                      " all_finite=", finite ? 1 : 0));
  return finite ? kExitOk : kExitFinding;
}

int CmdBias(const Common& common, int64_t draws) {
  absl::StatusOr<std::vector<std::string>> paths =
      PrepareOutputs(common, {"bias_checks.csv"});
  if (!paths.ok()) return Fail(paths.status());
  std::vector<CheckRow> rows;
  Rng rng = MakeRng(common.seed, 1);

  for (auto [tau0, r] : {std::pair{1.0, 1.0}, {1.0, 2.0}, {0.5, 1.0}}) {
    ToyParams p{tau0, r, 1.0, tau0 * tau0 / (10 * r)};
    absl::StatusOr<double> closed = ToyAClosedForm(p);
    absl::StatusOr<double> exact = ToyAExact(p);
    absl::StatusOr<MonteCarloEstimate> mc = ToyAMonteCarlo(p, draws, rng);
    if (!closed.ok() || !exact.ok() || !mc.ok()) {
      return Fail(!closed.ok() ? closed.status()
                               : (!exact.ok() ? exact.status() : mc.status()));
    }
    std::string params = absl::StrFormat("tau0=%g r=%g s=%g", tau0, r, p.grad_norm);
    rows.push_back({"toy_closed_form_negative", params, *closed, 0, 0, *closed < 0});
    rows.push_back({"toy_exact_vs_closed", params, *exact, 0, *closed,
                    std::abs(*exact - *closed) <= 1e-12});
    rows.push_back({"toy_monte_carlo", params, mc->estimate, mc->std_error,
                    *closed,
                    std::abs(mc->estimate - *closed) <=
                        kStderrAllowance * mc->std_error});
  }

  absl::StatusOr<std::shared_ptr<const Objective>> cosh = MakeCoshObjective(10);
  if (!cosh.ok()) return Fail(cosh.status());
  NoiseModel noise{NoiseKind::kTwoPointRadial, {0.5, 0.0}};
  for (double level : {0.05, 0.2, 1.0, 2.0}) {
    Vector x = Vector::Constant(10, level);
    absl::StatusOr<FirstOrderReport> n =
        FirstOrderCheckNsgd(**cosh, noise, x, 1.0, 0.01, draws, rng);
    absl::StatusOr<FirstOrderReport> s =
        FirstOrderCheckSgd(**cosh, noise, x, 2.0, 0.01, draws, rng);
    if (!n.ok()) return Fail(n.status());
    if (!s.ok()) return Fail(s.status());
    rows.push_back({"first_order_nsgd", absl::StrFormat("r=1 s=%g", n->grad_norm),
                    n->mc_estimate, n->mc_std_error, n->bound, n->passed()});
    rows.push_back({"first_order_sgd", absl::StrFormat("c=2 s=%g", s->grad_norm),
                    s->mc_estimate, s->mc_std_error, s->bound, s->passed()});
  }

  bool all_pass = true;
  for (const CheckRow& row : rows) {
    all_pass = all_pass && row.pass;
    if (common.verbose || !row.pass) {
      std::cerr << absl::StrFormat("%-26s %-28s %s\n", row.check, row.parameters,
                                   row.pass ? "pass" : "FAIL");
    }
  }
  if (absl::Status s = WriteCheckCsv(rows, (*paths)[0]); !s.ok()) return Fail(s);
  Result(absl::StrCat("bias checks=", rows.size(), " all_pass=", all_pass ? 1 : 0));
  return all_pass ? kExitOk : kExitFinding;
}

int CmdVerify(const Common& common, int points, int draws) {
  absl::StatusOr<std::shared_ptr<const Objective>> cosh = MakeCoshObjective(10);
  if (!cosh.ok()) return Fail(cosh.status());
  Rng rng = MakeRng(common.seed, 2);
  bool ok = true;
  for (NoiseKind kind : {NoiseKind::kTwoPointRadial, NoiseKind::kSphericalBounded}) {
    NoiseModel model{kind, {0.5, 0.2}};
    absl::StatusOr<Assumption2Report> report =
        CheckAssumption2(model, **cosh, points, draws, rng);
    const char* name = kind == NoiseKind::kTwoPointRadial ? "two_point" : "spherical";
    if (!report.ok()) {
      std::cerr << name << ": " << report.status() << "\n";
      ok = false;
      continue;
    }
    Result(absl::StrCat("verify noise=", name, " max_ratio=", Fmt(report->max_ratio),
                        " draws=", report->n_checked));
  }
  TheoryParams theory{{1.0, 1.0}, {0.5, 0.0}, 10};
  absl::StatusOr<int64_t> tn = MinIterationsNsgd(theory, 1.0, 1.0);
  absl::StatusOr<int64_t> ts = MinIterationsSgd(theory, 2.0, 1.0);
  if (!tn.ok()) return Fail(tn.status());
  if (!ts.ok()) return Fail(ts.status());
  Result(absl::StrCat("verify t_min_nsgd=", *tn, " t_min_sgd=", *ts));
  return ok ? kExitOk : kExitFinding;
}

int CmdRate(const Common& common, const std::vector<int64_t>& steps,
            int n_seeds, const std::string& method, double param, double tau0) {
  absl::StatusOr<std::vector<std::string>> paths =
      PrepareOutputs(common, {"rate.csv", "rate.svg"});
  if (!paths.ok()) return Fail(paths.status());
  ExperimentConfig base;
  base.objective = {"cosh", 10};
  base.noise = {NoiseKind::kTwoPointRadial, {tau0, 0.0}};
  base.optimizer.method = method == "nsgd" ? Method::kNsgd : Method::kSgd;
  base.optimizer.theory = true;
  base.optimizer.param = param;
  base.optimizer.sigma = 1.0;
  const int n = static_cast<int>(steps.size()) * n_seeds;
  std::vector<double> metric(n);
  absl::Status status = ParallelFor(n, common.jobs, [&](int i) {
    ExperimentConfig run = base;
    run.steps = steps[i / n_seeds];
    run.seed = common.seed + i % n_seeds;
    absl::StatusOr<Trajectory> t = Run(run);
    if (!t.ok()) return t.status();
    metric[i] = t->final_min_grad_norm();
    return absl::OkStatus();
  });
  if (!status.ok()) return Fail(status);
  std::vector<std::pair<double, double>> points;
  Series mean{"seed mean", {}, {}};
  std::string csv = "steps,seed,final_min_grad_norm\n";
  for (size_t k = 0; k < steps.size(); ++k) {
    double total = 0;
    for (int s = 0; s < n_seeds; ++s) {
      double v = metric[k * n_seeds + s];
      total += v;
      absl::StrAppendFormat(&csv, "%d,%d,%.17g\n", steps[k], common.seed + s, v);
    }
    points.emplace_back(static_cast<double>(steps[k]), total / n_seeds);
    mean.x.push_back(static_cast<double>(steps[k]));
    mean.y.push_back(total / n_seeds);
  }
  absl::StatusOr<double> slope = RateFit(points);
  if (!slope.ok()) return Fail(slope.status());
  {
    std::ofstream out((*paths)[0]);
    out << csv;
    if (!out) return Fail(absl::DataLossError("cannot write rate.csv"));
  }
  if (absl::Status s = WriteLineChartSvg({mean}, {"Rate", "T", "min grad norm"},
                                         true, true, (*paths)[1]);
      !s.ok()) {
    return Fail(s);
  }
  Result(absl::StrCat("rate slope=", Fmt(*slope)));
  return kExitOk;
}

int CmdFloor(const Common& common, double tau0, double r, double c,
             int64_t steps, int n_seeds) {
  FloorConfig config;
  config.tau0 = tau0;
  config.r = r;
  config.c = c;
  config.steps = steps;
  config.seeds.clear();
  for (int s = 0; s < n_seeds; ++s) config.seeds.push_back(common.seed + s);
  config.jobs = common.jobs;
  absl::StatusOr<FloorResult> result = FloorExperiment(config);
  if (!result.ok()) return Fail(result.status());
  Result(absl::StrCat("floor nsgd=", Fmt(result->nsgd_floor),
                      " sgd=", Fmt(result->sgd_floor),
                      " ratio=", Fmt(result->nsgd_floor / result->sgd_floor)));
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Differentially private normalized and clipped SGD toolkit"};
  app.require_subcommand(1);
  Common common;
  const char* env_out = std::getenv("DPOPT_OUT");
  common.out = env_out != nullptr ? env_out : "results";
  common.jobs = std::max(1u, std::thread::hardware_concurrency());
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config file");
    sub->add_option("--out", common.out,
                    "Output directory (default $DPOPT_OUT or ./results)");
    sub->add_option_function<uint64_t>(
        "--seed", [&](uint64_t s) { common.seed = s, common.seed_set = true; },
        "Seed override");
    sub->add_flag("--force", common.force, "Overwrite existing result files");
    sub->add_option("--jobs", common.jobs, "Worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", common.verbose, "More diagnostics on stderr");
  };

  double eps = 8, delta = 1e-5;
  int64_t n = 50000, b = 1000, t = 5000;
  std::string accountant = "closed";
  CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate sigma");
  add_common(calibrate);
  calibrate->add_option("--eps", eps, "Target epsilon")->required();
  calibrate->add_option("--delta", delta, "Target delta")->required();
  calibrate->add_option("--n", n, "Data set size N")->required();
  calibrate->add_option("--b", b, "Batch size B")->required();
  calibrate->add_option("--t", t, "Iterations T")->required();
  calibrate->add_option("--accountant", accountant, "closed | numeric")
      ->check(CLI::IsMember({"closed", "numeric"}));

  CLI::App* run = app.add_subcommand("run", "Run one experiment from --config");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "lr x (r|c) sweep from --config");
  add_common(sweep);

  int64_t draws = 100000;
  CLI::App* bias = app.add_subcommand("bias", "Toy-model and first-order checks");
  add_common(bias);
  bias->add_option("--draws", draws, "Monte-Carlo draws per check")
      ->check(CLI::Range(int64_t{2}, int64_t{1} << 40));

  int points = 100, point_draws = 1000;
  CLI::App* verify = app.add_subcommand(
      "verify", "Noise-bound checks and minimum iteration counts");
  add_common(verify);
  verify->add_option("--points", points, "Random points")->check(CLI::PositiveNumber);
  verify->add_option("--draws", point_draws, "Draws per point")
      ->check(CLI::PositiveNumber);

  std::vector<int64_t> rate_steps = {1000, 10000, 100000};
  int n_seeds = 3;
  std::string method = "sgd";
  double param = 2.0, tau0 = 0.5;
  CLI::App* rate = app.add_subcommand("rate", "Theory-mode rate fit on cosh");
  add_common(rate);
  rate->add_option("--steps", rate_steps, "Iteration counts")->delimiter(',');
  rate->add_option("--seeds", n_seeds, "Seeds per T")->check(CLI::PositiveNumber);
  rate->add_option("--method", method, "nsgd | sgd")
      ->check(CLI::IsMember({"nsgd", "sgd"}));
  rate->add_option("--param", param, "r or c");
  rate->add_option("--tau0", tau0, "Two-point noise size");

  double floor_r = 0.05, floor_c = 2.0, floor_tau0 = 0.5;
  int64_t floor_steps = 100000;
  CLI::App* floor = app.add_subcommand("floor", "DP-NSGD vs DP-SGD floor on cosh");
  add_common(floor);
  floor->add_option("--tau0", floor_tau0, "Two-point noise size (0 = none)");
  floor->add_option("--r", floor_r, "DP-NSGD r");
  floor->add_option("--c", floor_c, "DP-SGD c");
  floor->add_option("--t", floor_steps, "Iterations");
  floor->add_option("--seeds", n_seeds, "Seeds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (calibrate->parsed()) return CmdCalibrate(eps, delta, n, b, t, accountant);
  if (run->parsed()) return CmdRun(common);
  if (sweep->parsed()) return CmdSweep(common);
  if (bias->parsed()) return CmdBias(common, draws);
  if (verify->parsed()) return CmdVerify(common, points, point_draws);
  if (rate->parsed()) {
    return CmdRate(common, rate_steps, n_seeds, method, param, tau0);
  }
  if (floor->parsed()) {
    return CmdFloor(common, floor_tau0, floor_r, floor_c, floor_steps, n_seeds);
  }
  return kExitUsage;
}

}  // namespace
}  // namespace dpopt

int main(int argc, char** argv) { return dpopt::Main(argc, argv); }
