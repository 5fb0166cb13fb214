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

// End-to-end experiments: single runs, rate fits, the normalization floor
// comparison and learning-rate sweeps, with CSV persistence.

#ifndef DPOPT_HARNESS_H_
#define DPOPT_HARNESS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpopt/optimizer.h"
#include "dpopt/oracle.h"

namespace dpopt {

struct ObjectiveSpec {
  // "cosh", "quadratic" or "logistic".
  std::string kind = "cosh";
  int dim = 10;
  double condition_number = 10.0;
  int64_t n_terms = 2000;
  uint64_t data_seed = 0;
};

absl::StatusOr<std::shared_ptr<const Objective>> BuildObjective(
    const ObjectiveSpec& spec);

enum class Method { kNsgd, kSgd };

struct OptimizerSpec {
  Method method = Method::kNsgd;
  // Derive lr from the theorem formula instead of using `lr`.
  bool theory = false;
  // r for DP-NSGD, c for DP-SGD.
  double param = 1.0;
  double sigma = 1.0;
  double lr = 0.1;
  int batch_size = 1;
};

struct Schedule {
  enum Kind { kConstant, kStepDecay };
  Kind kind = kConstant;
  // Fractions of the run in (0, 1) after which lr is multiplied by factor.
  std::vector<double> milestones;
  double factor = 0.1;

  double LrAt(double base_lr, int64_t step, int64_t total_steps) const;
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  NoiseModel noise;
  OptimizerSpec optimizer;
  int64_t steps = 1000;
  uint64_t seed = 0;
  // Full-gradient evaluation cadence; 0 means max(1, steps / 200).
  int64_t eval_every = 0;
  // Every coordinate of x0.
  double init = 1.0;
  Schedule schedule;
  // Fill cum_seconds; off by default so output files are reproducible.
  bool record_time = false;
};

absl::Status ValidateExperiment(const ExperimentConfig& config);

struct TrajectoryRecord {
  int64_t step = 0;
  double loss = 0;
  double grad_norm = 0;
  double min_grad_norm = 0;
  double cum_seconds = 0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  Vector final_x;
  double base_lr = 0;
  double wall_seconds = 0;
  double final_min_grad_norm() const {
    return records.empty() ? 0.0 : records.back().min_grad_norm;
  }
};

// Deterministic in config (seed included). Evaluates at step 0, every
// eval_every steps and at the last step.
absl::StatusOr<Trajectory> Run(const ExperimentConfig& config);

// Least-squares slope of log(metric) against log(T). Needs >= 3 distinct T
// and positive values.
absl::StatusOr<double> RateFit(absl::Span<const std::pair<double, double>> runs);

// Runs fn(0..n-1) on up to `jobs` threads. Results must be stored by index.
absl::Status ParallelFor(int n, int jobs,
                         const std::function<absl::Status(int)>& fn);

struct FloorConfig {
  double tau0 = 0.5;
  double r = 0.05;
  double c = 2.0;
  int64_t steps = 100000;
  std::vector<uint64_t> seeds = {0, 1, 2};
  int dim = 10;
  double sigma = 1.0;
  double init = 1.0;
  int jobs = 1;
};

struct FloorResult {
  // Seed means of the final minimum gradient norm.
  double nsgd_floor = 0;
  double sgd_floor = 0;
  std::vector<double> nsgd_per_seed;
  std::vector<double> sgd_per_seed;
};

// Theory-mode DP-NSGD(r) and DP-SGD(c) on cosh with two-point noise of size
// tau0 (no gradient noise at tau0 = 0).
absl::StatusOr<FloorResult> FloorExperiment(const FloorConfig& config);

struct SweepConfig {
  ExperimentConfig base;
  std::vector<double> lrs;
  // r or c values depending on base.optimizer.method.
  std::vector<double> params;
  std::vector<uint64_t> seeds = {0, 1, 2};
  int jobs = 1;
};

struct SweepRow {
  double lr = 0;
  double param_value = 0;
  uint64_t seed = 0;
  double final_metric = 0;
};

struct SweepResult {
  std::vector<double> lrs;
  std::vector<double> params;
  // Seed means, metric[i][j] for lrs[i] and params[j].
  std::vector<std::vector<double>> metric;
  std::vector<SweepRow> rows;
};

absl::StatusOr<SweepResult> Sweep(const SweepConfig& config);

// Standard deviation over the params at the lr with the best mean metric.
struct SweepSpread {
  double best_lr = 0;
  double std_across_params = 0;
};
SweepSpread SpreadAtBestLr(const SweepResult& result);

// step,loss,grad_norm,min_grad_norm,cum_seconds
absl::Status WriteTrajectoryCsv(const Trajectory& trajectory,
                                const std::string& path);
absl::StatusOr<std::vector<TrajectoryRecord>> ReadTrajectoryCsv(
    const std::string& path);

// lr,param_value,seed,final_metric
absl::Status WriteSweepCsv(const SweepResult& result, const std::string& path);
absl::StatusOr<std::vector<SweepRow>> ReadSweepCsv(const std::string& path);

}  // namespace dpopt

#endif  // DPOPT_HARNESS_H_
