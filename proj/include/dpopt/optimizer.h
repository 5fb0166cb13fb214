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

// DP-NSGD and DP-SGD updates, theorem learning rates and the step-size
// feasibility conditions behind them.

#ifndef DPOPT_OPTIMIZER_H_
#define DPOPT_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpopt/oracle.h"
#include "dpopt/random.h"

namespace dpopt {

// Problem constants the theory-mode formulas are written in.
struct TheoryParams {
  SmoothnessParams smoothness;
  VarianceParams variance;
  int dim = 1;
};

absl::Status ValidateTheory(const TheoryParams& theory);

struct NsgdConfig {
  double r = 1.0;
  double sigma = 1.0;
  double lr = 0.1;
  int batch_size = 1;
};

struct SgdConfig {
  double c = 1.0;
  double sigma = 1.0;
  double lr = 0.1;
  int batch_size = 1;
};

absl::Status ValidateNsgd(const NsgdConfig& config);
absl::Status ValidateSgd(const SgdConfig& config);

// h = 1 / (r + ||g||).
double NormalizeFactor(double grad_norm, double r);
// min{1, c / ||g||}, equal to 1 at ||g|| = 0.
double ClipFactor(double grad_norm, double c);

// x - lr ((1/B) sum_i h_i g_i + z), z ~ N(0, sigma^2 I). The sum runs in
// index order and z is drawn after it.
absl::StatusOr<Vector> DpNsgdStep(const Vector& x,
                                  absl::Span<const Vector> per_sample_grads,
                                  const NsgdConfig& config, Rng& rng);

// Same with clip factors and z ~ N(0, c^2 sigma^2 I).
absl::StatusOr<Vector> DpSgdStep(const Vector& x,
                                 absl::Span<const Vector> per_sample_grads,
                                 const SgdConfig& config, Rng& rng);

// sqrt(2 / ((L1 (r + tau0) + L0) T d sigma^2)).
absl::StatusOr<double> TheoremLrNsgd(const TheoryParams& theory, double r,
                                     double sigma, int64_t steps);
// sqrt(2 / ((L1 (c + tau0) + L0) T d c^2 sigma^2)).
absl::StatusOr<double> TheoremLrSgd(const TheoryParams& theory, double c,
                                    double sigma, int64_t steps);

// tau0 (1 - tau1) / (2 r (1 - tau1) + 4 tau0), always below 1/4.
double Alpha0Nsgd(const VarianceParams& variance, double r);
// tau0 (1 - tau1) / (c (1 - tau1) + 2 tau0), always below 1/2.
double Alpha0Sgd(const VarianceParams& variance, double c);

// Largest admissible DP-NSGD step at alpha = Alpha0Nsgd:
// min((r - tau0) a / (4 L0), (1 - tau1) a / (4 L1), a / (6 L1 d sigma^2)).
// Terms with a zero constant in the denominator are dropped; +inf if all are.
// kInvalidArgument when r <= tau0.
absl::StatusOr<double> NsgdStepSizeBound(const TheoryParams& theory, double r,
                                         double sigma);
// DP-SGD counterpart at alpha = Alpha0Sgd:
// min(a / (6 L1 d c sigma^2), a (1 - tau1) / (2 L0 (1 - tau1) + 4 L1 tau0),
//     a tau0 (1 - tau1) / (4 c (L0 (1 - tau1) + 2 L1 tau0))).
absl::StatusOr<double> SgdStepSizeBound(const TheoryParams& theory, double c,
                                        double sigma);

absl::StatusOr<bool> NsgdStepSizeHolds(const TheoryParams& theory, double r,
                                       double sigma, double lr);
absl::StatusOr<bool> SgdStepSizeHolds(const TheoryParams& theory, double c,
                                      double sigma, double lr);

// Smallest T for which the theorem learning rate meets the step-size bound.
absl::StatusOr<int64_t> MinIterationsNsgd(const TheoryParams& theory, double r,
                                          double sigma);
absl::StatusOr<int64_t> MinIterationsSgd(const TheoryParams& theory, double c,
                                         double sigma);

// The three closed-form iteration thresholds as printed for DP-NSGD,
// evaluated at alpha = Alpha0Nsgd and reported individually. The middle one
// divides by tau1^2 and is dropped (set to 0) when tau1 = 0.
// kInvalidArgument when r <= tau0 or L1 = 0.
struct NsgdIterationThresholds {
  double smoothness_term = 0;
  double variance_term = 0;
  double noise_term = 0;
  double max() const;
};
absl::StatusOr<NsgdIterationThresholds> PrintedThresholdsNsgd(
    const TheoryParams& theory, double r, double sigma);

// b distinct indices drawn uniformly from [0, n) by a partial Fisher-Yates
// shuffle.
absl::StatusOr<std::vector<int64_t>> SampleBatch(int64_t n, int64_t b,
                                                 Rng& rng);

}  // namespace dpopt

#endif  // DPOPT_OPTIMIZER_H_
