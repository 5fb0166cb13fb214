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

// Objectives with exact values and gradients, per-sample gradient access for
// finite sums, and bounded stochastic-gradient noise models.

#ifndef DPOPT_ORACLE_H_
#define DPOPT_ORACLE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpopt/random.h"

namespace dpopt {

// ||grad f(x) - grad f(y)|| <= (l0 + l1 ||grad f(x)||) ||x - y||.
struct SmoothnessParams {
  double l0 = 0;
  double l1 = 0;
};

// ||g - grad f(x)|| <= tau0 + tau1 ||grad f(x)|| almost surely.
struct VarianceParams {
  double tau0 = 0;
  double tau1 = 0;
};

absl::Status ValidateVariance(const VarianceParams& variance);

// Immutable after construction; safe to share across threads.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual double Value(const Vector& x) const = 0;
  virtual Vector Gradient(const Vector& x) const = 0;
  virtual SmoothnessParams smoothness() const = 0;
  // Lower bound on inf f, used for D_f = f(x0) - f*.
  virtual double f_star_lower_bound() const = 0;

  // Number of summands of a finite-sum objective, 0 otherwise.
  virtual int64_t num_terms() const { return 0; }
  bool is_finite_sum() const { return num_terms() > 0; }

  // Gradient of the index-th summand. kFailedPrecondition unless finite sum.
  virtual absl::StatusOr<Vector> PerSampleGradient(const Vector& x,
                                                   int64_t index) const;
};

// f(x) = sum_j cosh(x_j) - d. Generalized smooth with (l0, l1) = (1, 1).
absl::StatusOr<std::shared_ptr<const Objective>> MakeCoshObjective(int dim);

// f(x) = x^T D x / 2 with D log-spaced on [1, condition_number].
absl::StatusOr<std::shared_ptr<const Objective>> MakeQuadraticObjective(
    int dim, double condition_number);

inline constexpr double kLogisticRidge = 1e-4;
inline constexpr double kLogisticLabelNoise = 0.05;

// Regularized logistic regression on two Gaussian blobs with 5% flipped
// labels. Summand i: log(1 + exp(-y_i a_i^T x)) + kLogisticRidge ||x||^2 / 2.
class LogisticObjective : public Objective {
 public:
  LogisticObjective(Eigen::MatrixXd features, Eigen::VectorXd labels);

  std::string name() const override { return "logistic"; }
  int dim() const override { return static_cast<int>(features_.cols()); }
  double Value(const Vector& x) const override;
  Vector Gradient(const Vector& x) const override;
  SmoothnessParams smoothness() const override { return smoothness_; }
  double f_star_lower_bound() const override { return 0.0; }
  int64_t num_terms() const override { return features_.rows(); }
  absl::StatusOr<Vector> PerSampleGradient(const Vector& x,
                                           int64_t index) const override;

  // One row per sample, labels in {-1, +1}.
  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& labels() const { return labels_; }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd labels_;
  SmoothnessParams smoothness_;
};

absl::StatusOr<std::shared_ptr<const LogisticObjective>> MakeLogisticObjective(
    int64_t n_terms, int dim, uint64_t seed);

// Columns x0..x{d-1},label; one row per sample.
absl::Status WriteDatasetCsv(const LogisticObjective& objective,
                             const std::string& path);

enum class NoiseKind {
  kNone,
  // e = +tau0 u w.p. 1/3 and -(tau0 / 2) u w.p. 2/3, u = grad / ||grad||.
  kTwoPointRadial,
  // Uniform direction, uniform radius on [0, tau0 + tau1 ||grad||], emitted in
  // antithetic pairs.
  kSphericalBounded,
};

struct NoiseModel {
  NoiseKind kind = NoiseKind::kNone;
  VarianceParams variance;
  // Multiplies the emitted radius. Anything other than 1 breaks the declared
  // bound; only used to exercise CheckAssumption2.
  double radius_scale = 1.0;
};

absl::Status ValidateNoiseModel(const NoiseModel& model);

// Draws gradient deviations e with E[e] = 0 and
// ||e|| <= tau0 + tau1 ||grad f(x)||. Holds the pending antithetic half of
// the spherical model, so one sampler per RNG stream.
class NoiseSampler {
 public:
  explicit NoiseSampler(NoiseModel model) : model_(model) {}

  // kInvalidArgument for TwoPointRadial at a zero gradient.
  absl::StatusOr<Vector> Draw(const Vector& grad, Rng& rng);

  const NoiseModel& model() const { return model_; }

 private:
  NoiseModel model_;
  // Direction and radius fraction still owed by the antithetic pair.
  std::optional<std::pair<Vector, double>> pending_;
};

struct Assumption2Report {
  // max over draws of ||e|| / (tau0 + tau1 ||grad f(x)||).
  double max_ratio = 0;
  int64_t n_checked = 0;
};

// Draws n_draws deviations at each of n_points uniform points of
// [-box, box]^d and checks the declared bound on every one. kFailedPrecondition
// naming the offending draw on the first violation.
absl::StatusOr<Assumption2Report> CheckAssumption2(const NoiseModel& model,
                                                   const Objective& objective,
                                                   int n_points, int n_draws,
                                                   Rng& rng, double box = 2.0);

// Empirical (tau0, tau1 = 0) for a finite sum: the largest per-sample
// deviation ||grad l_i(x) - grad f(x)|| over the given points.
absl::StatusOr<VarianceParams> EstimateVarianceParams(
    const Objective& objective, absl::Span<const Vector> points);

}  // namespace dpopt

#endif  // DPOPT_ORACLE_H_
