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

#include "dpopt/bias_lab.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <type_traits>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "boost/accumulators/accumulators.hpp"
#include "boost/accumulators/statistics/mean.hpp"
#include "boost/accumulators/statistics/stats.hpp"
#include "boost/accumulators/statistics/variance.hpp"

namespace dpopt {
namespace {

namespace acc = boost::accumulators;
using Accumulator =
    acc::accumulator_set<double, acc::stats<acc::tag::mean, acc::tag::variance>>;

// Standard error of the mean from the population variance, floored so that a
// degenerate sample still reports a strictly positive value.
double StdError(const Accumulator& a) {
  const double n = static_cast<double>(acc::count(a));
  if (n < 2) return INFINITY;
  double se = std::sqrt(std::max(acc::variance(a), 0.0) / (n - 1));
  return std::max(se, 1e-15 * std::max(1.0, std::abs(acc::mean(a))));
}

absl::Status CheckDraws(int64_t n_draws) {
  if (n_draws < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least 2 draws, got ", n_draws));
  }
  return absl::OkStatus();
}

template <typename FactorFn>
absl::StatusOr<FirstOrderReport> FirstOrderCheck(const Objective& objective,
                                                 const NoiseModel& noise,
                                                 const Vector& x, double alpha,
                                                 double eta, int64_t n_draws,
                                                 Rng& rng, FactorFn factor) {
  if (absl::Status s = CheckDraws(n_draws); !s.ok()) return s;
  if (absl::Status s = ValidateNoiseModel(noise); !s.ok()) return s;
  NoiseSampler sampler(noise);
  const Vector grad = objective.Gradient(x);
  const double s2 = grad.squaredNorm();
  Accumulator values;
  bool all_one = true;
  for (int64_t k = 0; k < n_draws; ++k) {
    absl::StatusOr<Vector> e = sampler.Draw(grad, rng);
    if (!e.ok()) return e.status();
    Vector g = grad + *e;
    double h = factor(g.norm());
    all_one = all_one && h == 1.0;
    values(eta * h * (grad.dot(g) - alpha * s2));
  }
  FirstOrderReport report;
  report.grad_norm = std::sqrt(s2);
  report.mc_estimate = acc::mean(values);
  report.mc_std_error = StdError(values);
  report.n_draws = n_draws;
  report.all_factors_one = all_one;
  return report;
}

}  // namespace

absl::Status ValidateToy(const ToyParams& p) {
  if (!(p.tau0 > 0) || !(p.r > 0) || !(p.eta > 0)) {
    return absl::InvalidArgumentError("tau0, r and eta must be positive");
  }
  if (!(p.grad_norm > 0 && p.grad_norm < p.tau0 / 2)) {
    return absl::OutOfRangeError(absl::StrCat(
        "toy closed form needs 0 < s < tau0/2, got s = ", p.grad_norm,
        ", tau0 = ", p.tau0));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> ToyAClosedForm(const ToyParams& p) {
  if (absl::Status st = ValidateToy(p); !st.ok()) return st;
  const double s = p.grad_norm;
  const double t = p.tau0;
  const double r = p.r;
  double num = s * s * s + (3 * r + t / 2) * s * s - t * t * s / 2;
  double den = 3 * (r + t + s) * (r + t / 2 - s);
  return p.eta * num / den;
}

absl::StatusOr<double> ToyAExact(const ToyParams& p) {
  if (absl::Status st = ValidateToy(p); !st.ok()) return st;
  const double s = p.grad_norm;
  // Signed lengths of g along u for the two atoms.
  const double up = s + p.tau0;
  const double down = s - p.tau0 / 2;
  return p.eta * (s * up / (p.r + std::abs(up)) / 3.0 +
                  2.0 * s * down / (p.r + std::abs(down)) / 3.0);
}

absl::StatusOr<MonteCarloEstimate> ToyAMonteCarlo(const ToyParams& p,
                                                  int64_t n_draws, Rng& rng) {
  if (absl::Status st = ValidateToy(p); !st.ok()) return st;
  if (absl::Status st = CheckDraws(n_draws); !st.ok()) return st;
  constexpr int kDim = 4;
  const Vector grad = Vector::Constant(kDim, p.grad_norm / std::sqrt(kDim));
  NoiseSampler sampler(
      NoiseModel{NoiseKind::kTwoPointRadial, VarianceParams{p.tau0, 0.0}});
  Accumulator values;
  for (int64_t k = 0; k < n_draws; ++k) {
    absl::StatusOr<Vector> e = sampler.Draw(grad, rng);
    if (!e.ok()) return e.status();
    Vector g = grad + *e;
    values(p.eta * grad.dot(g) / (p.r + g.norm()));
  }
  return MonteCarloEstimate{acc::mean(values), StdError(values), n_draws};
}

double FirstOrderBoundNsgd(const VarianceParams& v, double r, double alpha,
                           double s) {
  const double t0 = v.tau0;
  const double q = 1 - v.tau1;
  if (s >= t0 / q) return (t0 / (r * q + 2 * t0) - alpha / q) * s;
  return (1 - alpha) * q / (r * q + 2 * t0) * s * s -
         4 * t0 * t0 * t0 / (r * (r + t0) * q * q * q);
}

double FirstOrderBoundSgd(const VarianceParams& v, double c, double alpha,
                          double s) {
  const double t0 = v.tau0;
  const double q = 1 - v.tau1;
  if (s >= t0 / q) return (t0 * c / (c * q + 2 * t0) - alpha / q) * s;
  return (1 - alpha) * s * s;
}

absl::StatusOr<FirstOrderReport> FirstOrderCheckNsgd(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    double r, double eta, int64_t n_draws, Rng& rng) {
  if (!(r > noise.variance.tau0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("need r > tau0, got r = ", r));
  }
  const double alpha = Alpha0Nsgd(noise.variance, r);
  absl::StatusOr<FirstOrderReport> report =
      FirstOrderCheck(objective, noise, x, alpha, eta, n_draws, rng,
                      [r](double n) { return NormalizeFactor(n, r); });
  if (!report.ok()) return report;
  report->bound =
      eta * FirstOrderBoundNsgd(noise.variance, r, alpha, report->grad_norm);
  return report;
}

absl::StatusOr<FirstOrderReport> FirstOrderCheckSgd(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    double c, double eta, int64_t n_draws, Rng& rng) {
  const VarianceParams& v = noise.variance;
  if (!(c >= 2 * v.tau0 / (1 - v.tau1))) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need c >= 2 tau0 / (1 - tau1) = ", 2 * v.tau0 / (1 - v.tau1),
        ", got c = ", c));
  }
  const double alpha = Alpha0Sgd(v, c);
  absl::StatusOr<FirstOrderReport> report =
      FirstOrderCheck(objective, noise, x, alpha, eta, n_draws, rng,
                      [c](double n) { return ClipFactor(n, c); });
  if (!report.ok()) return report;
  report->bound = eta * FirstOrderBoundSgd(v, c, alpha, report->grad_norm);
  return report;
}

absl::StatusOr<DescentReport> DescentInequalityCheck(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    const OptimizerConfig& config, int64_t n_draws, Rng& rng) {
  if (absl::Status s = CheckDraws(n_draws); !s.ok()) return s;
  if (absl::Status s = ValidateNoiseModel(noise); !s.ok()) return s;
  const int batch = std::visit([](const auto& c) { return c.batch_size; }, config);
  if (objective.is_finite_sum() && batch > objective.num_terms()) {
    return absl::InvalidArgumentError("batch larger than the data set");
  }
  NoiseSampler sampler(noise);
  const Vector grad = objective.Gradient(x);
  const double fx = objective.Value(x);
  const SmoothnessParams l = objective.smoothness();
  const double half_l = (l.l0 + l.l1 * grad.norm()) / 2;
  Accumulator lhs_acc, rhs_acc, slack_acc;
  std::vector<Vector> grads(batch);
  for (int64_t k = 0; k < n_draws; ++k) {
    if (objective.is_finite_sum()) {
      absl::StatusOr<std::vector<int64_t>> idx =
          SampleBatch(objective.num_terms(), batch, rng);
      if (!idx.ok()) return idx.status();
      for (int i = 0; i < batch; ++i) {
        absl::StatusOr<Vector> g = objective.PerSampleGradient(x, (*idx)[i]);
        if (!g.ok()) return g.status();
        grads[i] = *std::move(g);
      }
    } else {
      for (int i = 0; i < batch; ++i) {
        absl::StatusOr<Vector> e = sampler.Draw(grad, rng);
        if (!e.ok()) return e.status();
        grads[i] = grad + *e;
      }
    }
    absl::StatusOr<Vector> next = std::visit(
        [&](const auto& c) -> absl::StatusOr<Vector> {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, NsgdConfig>) {
            return DpNsgdStep(x, grads, c, rng);
          } else {
            return DpSgdStep(x, grads, c, rng);
          }
        },
        config);
    if (!next.ok()) return next.status();
    Vector delta = *next - x;
    double lhs = objective.Value(*next) - fx;
    // delta = -eta (hg + z), so <grad f, delta> = -eta <grad f, hg + z>.
    double rhs = grad.dot(delta) + half_l * delta.squaredNorm();
    lhs_acc(lhs);
    rhs_acc(rhs);
    slack_acc(rhs - lhs);
  }
  DescentReport report;
  report.lhs = acc::mean(lhs_acc);
  report.rhs = acc::mean(rhs_acc);
  report.slack = acc::mean(slack_acc);
  report.std_error = StdError(slack_acc);
  report.n_draws = n_draws;
  return report;
}

absl::StatusOr<DirectionReport> ExpectedDirection(const Objective& objective,
                                                  const Vector& x,
                                                  FactorMode mode) {
  if (!objective.is_finite_sum()) {
    return absl::FailedPreconditionError(
        absl::StrCat(objective.name(), " is not a finite-sum objective"));
  }
  if (!(mode.param > 0)) {
    return absl::InvalidArgumentError("r or c must be positive");
  }
  Vector direction = Vector::Zero(objective.dim());
  for (int64_t i = 0; i < objective.num_terms(); ++i) {
    absl::StatusOr<Vector> g = objective.PerSampleGradient(x, i);
    if (!g.ok()) return g.status();
    double n = g->norm();
    double h = mode.kind == FactorMode::kNormalize ? NormalizeFactor(n, mode.param)
                                                   : ClipFactor(n, mode.param);
    direction += h * *g;
  }
  direction /= static_cast<double>(objective.num_terms());
  const Vector grad = objective.Gradient(x);
  DirectionReport report;
  report.bias_norm = (direction - grad).norm();
  double denom = direction.norm() * grad.norm();
  report.cosine = denom > 0 ? direction.dot(grad) / denom : 0.0;
  report.direction = std::move(direction);
  return report;
}

absl::Status WriteCheckCsv(const std::vector<CheckRow>& rows,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  out << "check,parameters,estimate,stderr,bound,pass\n";
  for (const CheckRow& row : rows) {
    out << absl::StrFormat("%s,\"%s\",%.17g,%.17g,%.17g,%d\n", row.check,
                           row.parameters, row.estimate, row.std_error,
                           row.bound, row.pass ? 1 : 0);
  }
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

}  // namespace dpopt
