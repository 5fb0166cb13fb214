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

#include "dpopt/oracle.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace dpopt {
namespace {

// Relative slack for the ||e|| bound; the bound is attained exactly by
// TwoPointRadial, so only rounding should be forgiven.
constexpr double kBoundSlack = 1e-12;

class CoshObjective : public Objective {
 public:
  explicit CoshObjective(int dim) : dim_(dim) {}

  std::string name() const override { return "cosh"; }
  int dim() const override { return dim_; }
  double Value(const Vector& x) const override {
    return x.array().cosh().sum() - dim_;
  }
  Vector Gradient(const Vector& x) const override { return x.array().sinh(); }
  SmoothnessParams smoothness() const override { return {1.0, 1.0}; }
  double f_star_lower_bound() const override { return 0.0; }

 private:
  int dim_;
};

class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(int dim, double condition_number)
      : diag_(dim), condition_number_(condition_number) {
    for (int j = 0; j < dim; ++j) {
      double t = dim == 1 ? 0.0 : static_cast<double>(j) / (dim - 1);
      diag_[j] = std::pow(condition_number, t);
    }
  }

  std::string name() const override { return "quadratic"; }
  int dim() const override { return static_cast<int>(diag_.size()); }
  double Value(const Vector& x) const override {
    return 0.5 * x.dot(diag_.cwiseProduct(x));
  }
  Vector Gradient(const Vector& x) const override {
    return diag_.cwiseProduct(x);
  }
  SmoothnessParams smoothness() const override {
    return {condition_number_, 0.0};
  }
  double f_star_lower_bound() const override { return 0.0; }

 private:
  Vector diag_;
  double condition_number_;
};

// log(1 + exp(t)) without overflow.
double Softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double Sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

absl::Status ValidateVariance(const VarianceParams& variance) {
  if (!(variance.tau0 > 0) || !std::isfinite(variance.tau0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("tau0 must be positive, got ", variance.tau0));
  }
  if (!(variance.tau1 >= 0 && variance.tau1 < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("tau1 must lie in [0, 1), got ", variance.tau1));
  }
  return absl::OkStatus();
}

absl::StatusOr<Vector> Objective::PerSampleGradient(const Vector&,
                                                    int64_t) const {
  return absl::FailedPreconditionError(
      absl::StrCat(name(), " is not a finite-sum objective"));
}

absl::StatusOr<std::shared_ptr<const Objective>> MakeCoshObjective(int dim) {
  if (dim < 1) {
    return absl::InvalidArgumentError(absl::StrCat("dim must be >= 1, got ", dim));
  }
  return std::make_shared<const CoshObjective>(dim);
}

absl::StatusOr<std::shared_ptr<const Objective>> MakeQuadraticObjective(
    int dim, double condition_number) {
  if (dim < 1) {
    return absl::InvalidArgumentError(absl::StrCat("dim must be >= 1, got ", dim));
  }
  if (!(condition_number >= 1) || !std::isfinite(condition_number)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "condition_number must be >= 1, got ", condition_number));
  }
  return std::make_shared<const QuadraticObjective>(dim, condition_number);
}

LogisticObjective::LogisticObjective(Eigen::MatrixXd features,
                                     Eigen::VectorXd labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  // Per-sample Hessian is bounded by ||a_i||^2 / 4 + ridge.
  double max_sq = features_.rowwise().squaredNorm().maxCoeff();
  smoothness_ = {max_sq / 4.0 + kLogisticRidge, 0.0};
}

double LogisticObjective::Value(const Vector& x) const {
  Eigen::VectorXd margins = labels_.cwiseProduct(features_ * x);
  double total = 0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    total += Softplus(-margins[i]);
  }
  return total / static_cast<double>(margins.size()) +
         0.5 * kLogisticRidge * x.squaredNorm();
}

Vector LogisticObjective::Gradient(const Vector& x) const {
  Eigen::VectorXd margins = labels_.cwiseProduct(features_ * x);
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    weights[i] = -labels_[i] * Sigmoid(-margins[i]);
  }
  return features_.transpose() * weights / static_cast<double>(margins.size()) +
         kLogisticRidge * x;
}

absl::StatusOr<Vector> LogisticObjective::PerSampleGradient(
    const Vector& x, int64_t index) const {
  if (index < 0 || index >= num_terms()) {
    return absl::OutOfRangeError(
        absl::StrCat("sample index ", index, " outside [0, ", num_terms(), ")"));
  }
  auto a = features_.row(index);
  double y = labels_[index];
  double margin = y * a.dot(x);
  return Vector(-y * Sigmoid(-margin) * a.transpose() + kLogisticRidge * x);
}

absl::StatusOr<std::shared_ptr<const LogisticObjective>> MakeLogisticObjective(
    int64_t n_terms, int dim, uint64_t seed) {
  if (n_terms < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("n_terms must be >= 2, got ", n_terms));
  }
  if (dim < 1) {
    return absl::InvalidArgumentError(absl::StrCat("dim must be >= 1, got ", dim));
  }
  Rng rng = MakeRng(seed, 0);
  std::bernoulli_distribution positive(0.5);
  std::bernoulli_distribution flip(kLogisticLabelNoise);
  // Blob centers at +-mu with ||mu|| = 2.
  const double center = 2.0 / std::sqrt(static_cast<double>(dim));
  Eigen::MatrixXd features(n_terms, dim);
  Eigen::VectorXd labels(n_terms);
  for (int64_t i = 0; i < n_terms; ++i) {
    double y = positive(rng) ? 1.0 : -1.0;
    Vector a = GaussianVector(dim, 1.0, rng);
    a.array() += y * center;
    features.row(i) = a.transpose();
    labels[i] = flip(rng) ? -y : y;
  }
  return std::make_shared<const LogisticObjective>(std::move(features),
                                                   std::move(labels));
}

absl::Status WriteDatasetCsv(const LogisticObjective& objective,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  const int d = objective.dim();
  for (int j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "label\n";
  const Eigen::MatrixXd& a = objective.features();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < d; ++j) out << absl::StrFormat("%.17g,", a(i, j));
    out << absl::StrFormat("%.0f\n", objective.labels()[i]);
  }
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::Status ValidateNoiseModel(const NoiseModel& model) {
  if (!(model.radius_scale > 0) || !std::isfinite(model.radius_scale)) {
    return absl::InvalidArgumentError("radius_scale must be positive");
  }
  if (model.kind == NoiseKind::kNone) return absl::OkStatus();
  return ValidateVariance(model.variance);
}

absl::StatusOr<Vector> NoiseSampler::Draw(const Vector& grad, Rng& rng) {
  const double grad_norm = grad.norm();
  const double bound =
      model_.variance.tau0 + model_.variance.tau1 * grad_norm;
  Vector e;
  switch (model_.kind) {
    case NoiseKind::kNone:
      return Vector::Zero(grad.size());
    case NoiseKind::kTwoPointRadial: {
      if (!(grad_norm > 0)) {
        return absl::InvalidArgumentError(
            "two-point radial noise is undefined at a zero gradient");
      }
      std::uniform_int_distribution<int> atom(0, 2);
      double scale = atom(rng) == 0 ? model_.variance.tau0
                                    : -0.5 * model_.variance.tau0;
      e = (model_.radius_scale * scale / grad_norm) * grad;
      break;
    }
    case NoiseKind::kSphericalBounded: {
      if (pending_.has_value()) {
        auto [direction, fraction] = std::move(*pending_);
        pending_.reset();
        e = -(model_.radius_scale * fraction * bound) * direction;
      } else {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector direction = UniformDirection(static_cast<int>(grad.size()), rng);
        double fraction = unit(rng);
        e = (model_.radius_scale * fraction * bound) * direction;
        pending_.emplace(std::move(direction), fraction);
      }
      break;
    }
  }
  assert(e.norm() <= model_.radius_scale * bound * (1 + kBoundSlack));
  return e;
}

absl::StatusOr<Assumption2Report> CheckAssumption2(const NoiseModel& model,
                                                   const Objective& objective,
                                                   int n_points, int n_draws,
                                                   Rng& rng, double box) {
  if (absl::Status s = ValidateNoiseModel(model); !s.ok()) return s;
  NoiseSampler sampler(model);
  std::uniform_real_distribution<double> coord(-box, box);
  Assumption2Report report;
  for (int p = 0; p < n_points; ++p) {
    Vector x(objective.dim());
    for (int j = 0; j < x.size(); ++j) x[j] = coord(rng);
    Vector grad = objective.Gradient(x);
    double bound = model.variance.tau0 + model.variance.tau1 * grad.norm();
    for (int k = 0; k < n_draws; ++k) {
      absl::StatusOr<Vector> e = sampler.Draw(grad, rng);
      if (!e.ok()) return e.status();
      double norm = e->norm();
      double ratio = bound > 0 ? norm / bound : (norm > 0 ? INFINITY : 0.0);
      report.max_ratio = std::max(report.max_ratio, ratio);
      ++report.n_checked;
      if (ratio > 1 + kBoundSlack) {
        return absl::FailedPreconditionError(absl::StrFormat(
            "bounded-deviation violation at point %d draw %d: ||e|| = %.17g > "
            "%.17g (ratio %.6f)",
            p, k, norm, bound, ratio));
      }
    }
  }
  return report;
}

absl::StatusOr<VarianceParams> EstimateVarianceParams(
    const Objective& objective, absl::Span<const Vector> points) {
  if (!objective.is_finite_sum()) {
    return absl::FailedPreconditionError(
        absl::StrCat(objective.name(), " is not a finite-sum objective"));
  }
  if (points.empty()) return absl::InvalidArgumentError("no points given");
  double tau0 = 0;
  for (const Vector& x : points) {
    Vector full = objective.Gradient(x);
    for (int64_t i = 0; i < objective.num_terms(); ++i) {
      absl::StatusOr<Vector> g = objective.PerSampleGradient(x, i);
      if (!g.ok()) return g.status();
      tau0 = std::max(tau0, (*g - full).norm());
    }
  }
  return VarianceParams{tau0, 0.0};
}

}  // namespace dpopt
