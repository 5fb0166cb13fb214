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

// Monte-Carlo and exact checks of the descent inequality, the first-order
// lower bounds for normalization and clipping, the two-atom toy model, and the
// bias of the processed gradient direction.

#ifndef DPOPT_BIAS_LAB_H_
#define DPOPT_BIAS_LAB_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpopt/optimizer.h"
#include "dpopt/oracle.h"
#include "dpopt/random.h"

namespace dpopt {

// One-sided allowance, in standard errors, for all Monte-Carlo checks.
inline constexpr double kStderrAllowance = 4.0;

struct MonteCarloEstimate {
  double estimate = 0;
  double std_error = 0;
  int64_t n_draws = 0;
};

// Two-atom toy model: e = +tau0 u w.p. 1/3, -(tau0/2) u w.p. 2/3.
struct ToyParams {
  double tau0 = 1;
  double r = 1;
  double eta = 1;
  double grad_norm = 0.1;
};

// Requires 0 < grad_norm < tau0 / 2, where the second atom points against
// the gradient.
absl::Status ValidateToy(const ToyParams& p);

// eta (s^3 + (3r + tau0/2) s^2 - tau0^2 s / 2) / (3 (r + tau0 + s)(r + tau0/2 - s)).
absl::StatusOr<double> ToyAClosedForm(const ToyParams& p);

// eta E[<grad f, g> / (r + ||g||)] summed over the two atoms.
absl::StatusOr<double> ToyAExact(const ToyParams& p);

// Same expectation from n_draws samples of the two-point noise model along a
// fixed direction.
absl::StatusOr<MonteCarloEstimate> ToyAMonteCarlo(const ToyParams& p,
                                                  int64_t n_draws, Rng& rng);

// A(s) at a given alpha:
//   s >= tau0/(1-tau1): (tau0/(r(1-tau1)+2 tau0) - alpha/(1-tau1)) s
//   otherwise:          (1-alpha)(1-tau1)/(r(1-tau1)+2 tau0) s^2
//                       - 4 tau0^3 / (r (r+tau0) (1-tau1)^3)
double FirstOrderBoundNsgd(const VarianceParams& v, double r, double alpha,
                           double s);

// B(s) at a given alpha:
//   s >= tau0/(1-tau1): (tau0 c/(c(1-tau1)+2 tau0) - alpha/(1-tau1)) s
//   otherwise:          (1-alpha) s^2
double FirstOrderBoundSgd(const VarianceParams& v, double c, double alpha,
                          double s);

struct FirstOrderReport {
  double grad_norm = 0;
  // Mean of eta (h <grad f, g> - alpha0 h ||grad f||^2) over the draws.
  double mc_estimate = 0;
  double mc_std_error = 0;
  // eta A(s) or eta B(s).
  double bound = 0;
  int64_t n_draws = 0;
  // Whether every drawn factor was exactly 1 (clipping inactive).
  bool all_factors_one = false;
  bool passed() const {
    return mc_estimate >= bound - kStderrAllowance * mc_std_error;
  }
};

// Single-sample stochastic gradients g = grad f(x) + e drawn from the model.
absl::StatusOr<FirstOrderReport> FirstOrderCheckNsgd(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    double r, double eta, int64_t n_draws, Rng& rng);

// kInvalidArgument when c < 2 tau0 / (1 - tau1).
absl::StatusOr<FirstOrderReport> FirstOrderCheckSgd(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    double c, double eta, int64_t n_draws, Rng& rng);

using OptimizerConfig = std::variant<NsgdConfig, SgdConfig>;

struct DescentReport {
  // Means over draws of f(x+) - f(x) and of the right-hand side
  //   -eta <grad f, hg + z> + (L0 + L1 ||grad f||) / 2 ||x+ - x||^2.
  double lhs = 0;
  double rhs = 0;
  // Mean and standard error of the paired difference rhs - lhs.
  double slack = 0;
  double std_error = 0;
  int64_t n_draws = 0;
  bool passed() const { return slack >= -kStderrAllowance * std_error; }
};

// One full private step per draw from x. Finite sums use a uniform batch of
// per-sample gradients; other objectives use grad f(x) + e per sample. The
// realized z and ||x+ - x||^2 enter the right-hand side, whose expectation is
// -eta E<h grad f, g> + (L0 + L1 ||grad f||)/2 eta^2 (d sigma_z^2 + E||hg||^2).
absl::StatusOr<DescentReport> DescentInequalityCheck(
    const Objective& objective, const NoiseModel& noise, const Vector& x,
    const OptimizerConfig& config, int64_t n_draws, Rng& rng);

struct FactorMode {
  enum Kind { kNormalize, kClip };
  Kind kind = kNormalize;
  // r for normalization, c for clipping.
  double param = 1.0;
};

struct DirectionReport {
  Vector direction;
  double bias_norm = 0;
  double cosine = 0;
};

// (1/N) sum_i h_i grad l_i(x), summed exactly in index order.
absl::StatusOr<DirectionReport> ExpectedDirection(const Objective& objective,
                                                  const Vector& x,
                                                  FactorMode mode);

struct CheckRow {
  std::string check;
  std::string parameters;
  double estimate = 0;
  double std_error = 0;
  double bound = 0;
  bool pass = false;
};

// Columns: check,parameters,estimate,stderr,bound,pass.
absl::Status WriteCheckCsv(const std::vector<CheckRow>& rows,
                           const std::string& path);

}  // namespace dpopt

#endif  // DPOPT_BIAS_LAB_H_
