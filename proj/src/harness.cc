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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"

namespace dpopt {
namespace {

absl::Status CheckOpen(const std::ofstream& out, const std::string& path) {
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  return absl::OkStatus();
}

absl::Status CheckWritten(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

// Splits a CSV file into rows of fields, checking the header.
absl::StatusOr<std::vector<std::vector<std::string>>> ReadCsv(
    const std::string& path, const std::string& header, size_t n_fields) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    return absl::DataLossError(absl::StrCat(path, ": expected header ", header));
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = absl::StrSplit(line, ',');
    if (fields.size() != n_fields) {
      return absl::DataLossError(absl::StrCat(path, ": malformed row ", line));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

absl::Status ParseField(const std::string& s, double* out) {
  if (!absl::SimpleAtod(s, out)) {
    return absl::DataLossError(absl::StrCat("not a number: ", s));
  }
  return absl::OkStatus();
}

template <typename Int>
absl::Status ParseField(const std::string& s, Int* out) {
  if (!absl::SimpleAtoi(s, out)) {
    return absl::DataLossError(absl::StrCat("not an integer: ", s));
  }
  return absl::OkStatus();
}

double Mean(absl::Span<const double> v) {
  double total = 0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

// Draws the per-sample gradients of one step into `grads`.
absl::Status DrawBatch(const Objective& objective, NoiseSampler& sampler,
                       const Vector& x, int batch, Rng& rng,
                       std::vector<Vector>& grads) {
  grads.resize(batch);
  if (objective.is_finite_sum()) {
    absl::StatusOr<std::vector<int64_t>> idx =
        SampleBatch(objective.num_terms(), batch, rng);
    if (!idx.ok()) return idx.status();
    for (int i = 0; i < batch; ++i) {
      absl::StatusOr<Vector> g = objective.PerSampleGradient(x, (*idx)[i]);
      if (!g.ok()) return g.status();
      grads[i] = *std::move(g);
    }
    return absl::OkStatus();
  }
  const Vector grad = objective.Gradient(x);
  for (int i = 0; i < batch; ++i) {
    absl::StatusOr<Vector> e = sampler.Draw(grad, rng);
    if (!e.ok()) return e.status();
    grads[i] = grad + *e;
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<std::shared_ptr<const Objective>> BuildObjective(
    const ObjectiveSpec& spec) {
  if (spec.kind == "cosh") return MakeCoshObjective(spec.dim);
  if (spec.kind == "quadratic") {
    return MakeQuadraticObjective(spec.dim, spec.condition_number);
  }
  if (spec.kind == "logistic") {
    absl::StatusOr<std::shared_ptr<const LogisticObjective>> obj =
        MakeLogisticObjective(spec.n_terms, spec.dim, spec.data_seed);
    if (!obj.ok()) return obj.status();
    return std::shared_ptr<const Objective>(*std::move(obj));
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown objective kind: ", spec.kind));
}

double Schedule::LrAt(double base_lr, int64_t step, int64_t total_steps) const {
  if (kind == kConstant) return base_lr;
  double lr = base_lr;
  for (double m : milestones) {
    if (static_cast<double>(step) >= m * static_cast<double>(total_steps)) {
      lr *= factor;
    }
  }
  return lr;
}

absl::Status ValidateExperiment(const ExperimentConfig& config) {
  if (config.steps < 1) return absl::InvalidArgumentError("steps must be >= 1");
  if (config.eval_every < 0) {
    return absl::InvalidArgumentError("eval_every must be >= 1 (or 0 for auto)");
  }
  if (absl::Status s = ValidateNoiseModel(config.noise); !s.ok()) return s;
  const OptimizerSpec& o = config.optimizer;
  if (!(o.param > 0)) return absl::InvalidArgumentError("r/c must be positive");
  if (!(o.sigma >= 0)) return absl::InvalidArgumentError("sigma must be >= 0");
  if (o.batch_size < 1) return absl::InvalidArgumentError("batch_size < 1");
  if (!o.theory && !(o.lr > 0)) {
    return absl::InvalidArgumentError("lr must be positive");
  }
  if (o.theory && !(o.sigma > 0)) {
    return absl::InvalidArgumentError("theory mode needs sigma > 0");
  }
  if (config.schedule.kind == Schedule::kStepDecay) {
    if (!(config.schedule.factor > 0)) {
      return absl::InvalidArgumentError("decay factor must be positive");
    }
    for (double m : config.schedule.milestones) {
      if (!(m > 0 && m < 1)) {
        return absl::InvalidArgumentError("milestones must lie in (0, 1)");
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Trajectory> Run(const ExperimentConfig& config) {
  if (absl::Status s = ValidateExperiment(config); !s.ok()) return s;
  absl::StatusOr<std::shared_ptr<const Objective>> built =
      BuildObjective(config.objective);
  if (!built.ok()) return built.status();
  const Objective& objective = **built;
  if (objective.is_finite_sum() &&
      config.optimizer.batch_size > objective.num_terms()) {
    return absl::InvalidArgumentError("batch larger than the data set");
  }
  const OptimizerSpec& o = config.optimizer;
  double base_lr = o.lr;
  if (o.theory) {
    TheoryParams theory{objective.smoothness(), config.noise.variance,
                        objective.dim()};
    if (config.noise.kind == NoiseKind::kNone) theory.variance = {0.0, 0.0};
    absl::StatusOr<double> lr =
        o.method == Method::kNsgd
            ? TheoremLrNsgd(theory, o.param, o.sigma, config.steps)
            : TheoremLrSgd(theory, o.param, o.sigma, config.steps);
    if (!lr.ok()) return lr.status();
    base_lr = *lr;
  }
  const int64_t eval_every = config.eval_every > 0
                                 ? config.eval_every
                                 : std::max<int64_t>(1, config.steps / 200);

  Rng rng = MakeRng(config.seed, 0);
  NoiseSampler sampler(config.noise);
  Trajectory out;
  out.base_lr = base_lr;
  Vector x = Vector::Constant(objective.dim(), config.init);
  std::vector<Vector> grads;
  double min_grad = INFINITY;
  const auto start = std::chrono::steady_clock::now();
  auto record = [&](int64_t step) {
    double grad_norm = objective.Gradient(x).norm();
    min_grad = std::min(min_grad, grad_norm);
    double seconds = 0;
    if (config.record_time) {
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
    }
    out.records.push_back(
        {step, objective.Value(x), grad_norm, min_grad, seconds});
  };
  record(0);
  for (int64_t k = 0; k < config.steps; ++k) {
    if (absl::Status s =
            DrawBatch(objective, sampler, x, o.batch_size, rng, grads);
        !s.ok()) {
      return s;
    }
    const double lr = config.schedule.LrAt(base_lr, k, config.steps);
    absl::StatusOr<Vector> next =
        o.method == Method::kNsgd
            ? DpNsgdStep(x, grads, NsgdConfig{o.param, o.sigma, lr, o.batch_size},
                         rng)
            : DpSgdStep(x, grads, SgdConfig{o.param, o.sigma, lr, o.batch_size},
                        rng);
    if (!next.ok()) return next.status();
    x = *std::move(next);
    const int64_t step = k + 1;
    if (step % eval_every == 0 || step == config.steps) record(step);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  out.final_x = std::move(x);
  return out;
}

absl::StatusOr<double> RateFit(
    absl::Span<const std::pair<double, double>> runs) {
  std::vector<double> ts;
  for (const auto& [t, v] : runs) {
    if (!(t > 0) || !(v > 0) || !std::isfinite(t) || !std::isfinite(v)) {
      return absl::InvalidArgumentError("rate fit needs positive finite inputs");
    }
    if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
  }
  if (ts.size() < 3) {
    return absl::InvalidArgumentError("rate fit needs >= 3 distinct T values");
  }
  const double n = static_cast<double>(runs.size());
  double mx = 0, my = 0;
  for (const auto& [t, v] : runs) {
    mx += std::log(t) / n;
    my += std::log(v) / n;
  }
  double sxy = 0, sxx = 0;
  for (const auto& [t, v] : runs) {
    double dx = std::log(t) - mx;
    sxy += dx * (std::log(v) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

absl::Status ParallelFor(int n, int jobs,
                         const std::function<absl::Status(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  std::atomic<int> next{0};
  std::mutex mu;
  absl::Status first_error;
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      absl::Status s = fn(i);
      if (!s.ok()) {
        std::lock_guard<std::mutex> lock(mu);
        if (first_error.ok()) first_error = s;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  return first_error;
}

absl::StatusOr<FloorResult> FloorExperiment(const FloorConfig& config) {
  if (config.seeds.empty()) return absl::InvalidArgumentError("no seeds");
  if (!(config.tau0 >= 0)) return absl::InvalidArgumentError("tau0 < 0");
  ExperimentConfig base;
  base.objective = {"cosh", config.dim};
  base.noise = config.tau0 > 0
                   ? NoiseModel{NoiseKind::kTwoPointRadial, {config.tau0, 0.0}}
                   : NoiseModel{};
  base.optimizer.theory = true;
  base.optimizer.sigma = config.sigma;
  base.steps = config.steps;
  base.init = config.init;
  const int n_seeds = static_cast<int>(config.seeds.size());
  FloorResult result;
  result.nsgd_per_seed.resize(n_seeds);
  result.sgd_per_seed.resize(n_seeds);
  absl::Status status = ParallelFor(2 * n_seeds, config.jobs, [&](int i) {
    ExperimentConfig run = base;
    const bool nsgd = i < n_seeds;
    const int s = i % n_seeds;
    run.seed = config.seeds[s];
    run.optimizer.method = nsgd ? Method::kNsgd : Method::kSgd;
    run.optimizer.param = nsgd ? config.r : config.c;
    absl::StatusOr<Trajectory> t = Run(run);
    if (!t.ok()) return t.status();
    (nsgd ? result.nsgd_per_seed : result.sgd_per_seed)[s] =
        t->final_min_grad_norm();
    return absl::OkStatus();
  });
  if (!status.ok()) return status;
  result.nsgd_floor = Mean(result.nsgd_per_seed);
  result.sgd_floor = Mean(result.sgd_per_seed);
  return result;
}

absl::StatusOr<SweepResult> Sweep(const SweepConfig& config) {
  if (config.lrs.empty() || config.params.empty() || config.seeds.empty()) {
    return absl::InvalidArgumentError("sweep grids must be nonempty");
  }
  const int n_lr = static_cast<int>(config.lrs.size());
  const int n_param = static_cast<int>(config.params.size());
  const int n_seed = static_cast<int>(config.seeds.size());
  std::vector<double> values(n_lr * n_param * n_seed);
  absl::Status status = ParallelFor(
      static_cast<int>(values.size()), config.jobs, [&](int i) {
        ExperimentConfig run = config.base;
        run.optimizer.theory = false;
        run.optimizer.lr = config.lrs[i / (n_param * n_seed)];
        run.optimizer.param = config.params[(i / n_seed) % n_param];
        run.seed = config.seeds[i % n_seed];
        absl::StatusOr<Trajectory> t = Run(run);
        if (!t.ok()) return t.status();
        values[i] = t->final_min_grad_norm();
        return absl::OkStatus();
      });
  if (!status.ok()) return status;
  SweepResult result;
  result.lrs = config.lrs;
  result.params = config.params;
  result.metric.assign(n_lr, std::vector<double>(n_param));
  for (int a = 0; a < n_lr; ++a) {
    for (int b = 0; b < n_param; ++b) {
      double total = 0;
      for (int s = 0; s < n_seed; ++s) {
        int i = (a * n_param + b) * n_seed + s;
        total += values[i];
        result.rows.push_back(
            {config.lrs[a], config.params[b], config.seeds[s], values[i]});
      }
      result.metric[a][b] = total / n_seed;
    }
  }
  return result;
}

SweepSpread SpreadAtBestLr(const SweepResult& result) {
  SweepSpread spread;
  double best = INFINITY;
  size_t best_row = 0;
  for (size_t a = 0; a < result.metric.size(); ++a) {
    double m = Mean(result.metric[a]);
    if (m < best) {
      best = m;
      best_row = a;
    }
  }
  const std::vector<double>& row = result.metric[best_row];
  const double mean = Mean(row);
  double ss = 0;
  for (double v : row) ss += (v - mean) * (v - mean);
  spread.best_lr = result.lrs[best_row];
  spread.std_across_params =
      row.size() > 1 ? std::sqrt(ss / static_cast<double>(row.size() - 1)) : 0.0;
  return spread;
}

absl::Status WriteTrajectoryCsv(const Trajectory& trajectory,
                                const std::string& path) {
  std::ofstream out(path);
  if (absl::Status s = CheckOpen(out, path); !s.ok()) return s;
  out << "step,loss,grad_norm,min_grad_norm,cum_seconds\n";
  for (const TrajectoryRecord& r : trajectory.records) {
    out << absl::StrFormat("%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.loss,
                           r.grad_norm, r.min_grad_norm, r.cum_seconds);
  }
  return CheckWritten(out, path);
}

absl::StatusOr<std::vector<TrajectoryRecord>> ReadTrajectoryCsv(
    const std::string& path) {
  absl::StatusOr<std::vector<std::vector<std::string>>> rows =
      ReadCsv(path, "step,loss,grad_norm,min_grad_norm,cum_seconds", 5);
  if (!rows.ok()) return rows.status();
  std::vector<TrajectoryRecord> out;
  for (const auto& f : *rows) {
    TrajectoryRecord r;
    for (absl::Status s :
         {ParseField(f[0], &r.step), ParseField(f[1], &r.loss),
          ParseField(f[2], &r.grad_norm), ParseField(f[3], &r.min_grad_norm),
          ParseField(f[4], &r.cum_seconds)}) {
      if (!s.ok()) return s;
    }
    out.push_back(r);
  }
  return out;
}

absl::Status WriteSweepCsv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (absl::Status s = CheckOpen(out, path); !s.ok()) return s;
  out << "lr,param_value,seed,final_metric\n";
  for (const SweepRow& r : result.rows) {
    out << absl::StrFormat("%.17g,%.17g,%d,%.17g\n", r.lr, r.param_value,
                           r.seed, r.final_metric);
  }
  return CheckWritten(out, path);
}

absl::StatusOr<std::vector<SweepRow>> ReadSweepCsv(const std::string& path) {
  absl::StatusOr<std::vector<std::vector<std::string>>> rows =
      ReadCsv(path, "lr,param_value,seed,final_metric", 4);
  if (!rows.ok()) return rows.status();
  std::vector<SweepRow> out;
  for (const auto& f : *rows) {
    SweepRow r;
    for (absl::Status s :
         {ParseField(f[0], &r.lr), ParseField(f[1], &r.param_value),
          ParseField(f[2], &r.seed), ParseField(f[3], &r.final_metric)}) {
      if (!s.ok()) return s;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace dpopt
