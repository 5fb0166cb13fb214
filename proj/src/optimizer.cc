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

#include "dpopt/optimizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace dpopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status CheckBatch(const Vector& x,
                        absl::Span<const Vector> per_sample_grads,
                        int batch_size) {
  if (static_cast<int64_t>(per_sample_grads.size()) != batch_size) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch size mismatch: got ", per_sample_grads.size(),
                     " gradients, configured ", batch_size));
  }
  for (const Vector& g : per_sample_grads) {
    if (g.size() != x.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("gradient dimension ", g.size(), " != ", x.size()));
    }
  }
  return absl::OkStatus();
}

// x - lr (mean_i factor(||g_i||) g_i + z), z ~ N(0, noise_std^2 I).
template <typename FactorFn>
Vector PrivateStep(const Vector& x, absl::Span<const Vector> grads,
                   FactorFn factor, double lr, double noise_std, Rng& rng) {
  Vector direction = Vector::Zero(x.size());
  for (const Vector& g : grads) direction += factor(g.norm()) * g;
  direction /= static_cast<double>(grads.size());
  if (noise_std > 0) {
    direction += GaussianVector(static_cast<int>(x.size()), noise_std, rng);
  }
  return x - lr * direction;
}

absl::Status CheckPositive(double value, const char* name) {
  if (!(value > 0) || !std::isfinite(value)) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, " must be positive and finite, got ", value));
  }
  return absl::OkStatus();
}

absl::Status CheckLrInputs(const TheoryParams& theory, double scale,
                           double sigma, int64_t steps) {
  if (absl::Status s = ValidateTheory(theory); !s.ok()) return s;
  if (absl::Status s = CheckPositive(scale, "r/c"); !s.ok()) return s;
  if (absl::Status s = CheckPositive(sigma, "sigma"); !s.ok()) return s;
  if (steps < 1) {
    return absl::InvalidArgumentError(absl::StrCat("steps must be >= 1, got ", steps));
  }
  return absl::OkStatus();
}

// a / b, or +inf when b = 0 so the term drops out of a min.
double Ratio(double a, double b) { return b > 0 ? a / b : kInf; }

// Smallest T >= 1 with lr(T) <= bound, where lr(T) = lr(1) / sqrt(T).
template <typename LrFn>
absl::StatusOr<int64_t> InvertLr(LrFn lr_at, double bound) {
  if (std::isinf(bound)) return 1;
  absl::StatusOr<double> lr1 = lr_at(1);
  if (!lr1.ok()) return lr1.status();
  double estimate = std::ceil((*lr1 / bound) * (*lr1 / bound));
  if (!(estimate < 9e18)) {
    return absl::OutOfRangeError("required iteration count overflows int64");
  }
  int64_t t = std::max<int64_t>(1, static_cast<int64_t>(estimate));
  // Settle rounding in the square root in both directions.
  while (t > 1) {
    absl::StatusOr<double> lr = lr_at(t - 1);
    if (!lr.ok()) return lr.status();
    if (*lr > bound) break;
    --t;
  }
  while (true) {
    absl::StatusOr<double> lr = lr_at(t);
    if (!lr.ok()) return lr.status();
    if (*lr <= bound) return t;
    ++t;
  }
}

}  // namespace

absl::Status ValidateTheory(const TheoryParams& theory) {
  if (!(theory.smoothness.l0 >= 0) || !(theory.smoothness.l1 >= 0)) {
    return absl::InvalidArgumentError("smoothness constants must be >= 0");
  }
  if (theory.smoothness.l0 == 0 && theory.smoothness.l1 == 0) {
    return absl::InvalidArgumentError("L0 and L1 cannot both be zero");
  }
  if (!(theory.variance.tau0 >= 0) ||
      !(theory.variance.tau1 >= 0 && theory.variance.tau1 < 1)) {
    return absl::InvalidArgumentError("need tau0 >= 0 and 0 <= tau1 < 1");
  }
  if (theory.dim < 1) return absl::InvalidArgumentError("dim must be >= 1");
  return absl::OkStatus();
}

absl::Status ValidateNsgd(const NsgdConfig& config) {
  if (absl::Status s = CheckPositive(config.r, "r"); !s.ok()) return s;
  if (!(config.sigma >= 0) || !std::isfinite(config.sigma)) {
    return absl::InvalidArgumentError("sigma must be >= 0");
  }
  if (absl::Status s = CheckPositive(config.lr, "lr"); !s.ok()) return s;
  if (config.batch_size < 1) return absl::InvalidArgumentError("batch_size < 1");
  return absl::OkStatus();
}

absl::Status ValidateSgd(const SgdConfig& config) {
  if (absl::Status s = CheckPositive(config.c, "c"); !s.ok()) return s;
  if (!(config.sigma >= 0) || !std::isfinite(config.sigma)) {
    return absl::InvalidArgumentError("sigma must be >= 0");
  }
  if (absl::Status s = CheckPositive(config.lr, "lr"); !s.ok()) return s;
  if (config.batch_size < 1) return absl::InvalidArgumentError("batch_size < 1");
  return absl::OkStatus();
}

double NormalizeFactor(double grad_norm, double r) {
  return 1.0 / (r + grad_norm);
}

double ClipFactor(double grad_norm, double c) {
  if (grad_norm <= c) return 1.0;
  return c / grad_norm;
}

absl::StatusOr<Vector> DpNsgdStep(const Vector& x,
                                  absl::Span<const Vector> per_sample_grads,
                                  const NsgdConfig& config, Rng& rng) {
  if (absl::Status s = ValidateNsgd(config); !s.ok()) return s;
  if (absl::Status s = CheckBatch(x, per_sample_grads, config.batch_size);
      !s.ok()) {
    return s;
  }
  const double r = config.r;
  return PrivateStep(
      x, per_sample_grads, [r](double n) { return NormalizeFactor(n, r); },
      config.lr, config.sigma, rng);
}

absl::StatusOr<Vector> DpSgdStep(const Vector& x,
                                 absl::Span<const Vector> per_sample_grads,
                                 const SgdConfig& config, Rng& rng) {
  if (absl::Status s = ValidateSgd(config); !s.ok()) return s;
  if (absl::Status s = CheckBatch(x, per_sample_grads, config.batch_size);
      !s.ok()) {
    return s;
  }
  const double c = config.c;
  return PrivateStep(
      x, per_sample_grads, [c](double n) { return ClipFactor(n, c); },
      config.lr, config.c * config.sigma, rng);
}

absl::StatusOr<double> TheoremLrNsgd(const TheoryParams& theory, double r,
                                     double sigma, int64_t steps) {
  if (absl::Status s = CheckLrInputs(theory, r, sigma, steps); !s.ok()) return s;
  const SmoothnessParams& l = theory.smoothness;
  double denom = (l.l1 * (r + theory.variance.tau0) + l.l0) *
                 static_cast<double>(steps) * theory.dim * sigma * sigma;
  return std::sqrt(2.0 / denom);
}

absl::StatusOr<double> TheoremLrSgd(const TheoryParams& theory, double c,
                                    double sigma, int64_t steps) {
  if (absl::Status s = CheckLrInputs(theory, c, sigma, steps); !s.ok()) return s;
  const SmoothnessParams& l = theory.smoothness;
  double denom = (l.l1 * (c + theory.variance.tau0) + l.l0) *
                 static_cast<double>(steps) * theory.dim * c * c * sigma * sigma;
  return std::sqrt(2.0 / denom);
}

double Alpha0Nsgd(const VarianceParams& v, double r) {
  return v.tau0 * (1 - v.tau1) / (2 * r * (1 - v.tau1) + 4 * v.tau0);
}

double Alpha0Sgd(const VarianceParams& v, double c) {
  return v.tau0 * (1 - v.tau1) / (c * (1 - v.tau1) + 2 * v.tau0);
}

absl::StatusOr<double> NsgdStepSizeBound(const TheoryParams& theory, double r,
                                         double sigma) {
  if (absl::Status s = CheckLrInputs(theory, r, sigma, 1); !s.ok()) return s;
  const double tau0 = theory.variance.tau0;
  const double tau1 = theory.variance.tau1;
  if (!(r > tau0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("need r > tau0, got r = ", r, ", tau0 = ", tau0));
  }
  const double a = Alpha0Nsgd(theory.variance, r);
  const double l0 = theory.smoothness.l0;
  const double l1 = theory.smoothness.l1;
  return std::min({Ratio((r - tau0) * a, 4 * l0), Ratio((1 - tau1) * a, 4 * l1),
                   Ratio(a, 6 * l1 * theory.dim * sigma * sigma)});
}

absl::StatusOr<double> SgdStepSizeBound(const TheoryParams& theory, double c,
                                        double sigma) {
  if (absl::Status s = CheckLrInputs(theory, c, sigma, 1); !s.ok()) return s;
  const double tau0 = theory.variance.tau0;
  const double tau1 = theory.variance.tau1;
  if (!(tau0 > 0)) {
    return absl::InvalidArgumentError("the clipped step-size bound needs tau0 > 0");
  }
  const double a = Alpha0Sgd(theory.variance, c);
  const double l0 = theory.smoothness.l0;
  const double l1 = theory.smoothness.l1;
  return std::min(
      {Ratio(a, 6 * l1 * theory.dim * c * sigma * sigma),
       Ratio(a * (1 - tau1), 2 * l0 * (1 - tau1) + 4 * l1 * tau0),
       Ratio(a * tau0 * (1 - tau1), 4 * c * (l0 * (1 - tau1) + 2 * l1 * tau0))});
}

absl::StatusOr<bool> NsgdStepSizeHolds(const TheoryParams& theory, double r,
                                       double sigma, double lr) {
  absl::StatusOr<double> bound = NsgdStepSizeBound(theory, r, sigma);
  if (!bound.ok()) return bound.status();
  return lr <= *bound;
}

absl::StatusOr<bool> SgdStepSizeHolds(const TheoryParams& theory, double c,
                                      double sigma, double lr) {
  absl::StatusOr<double> bound = SgdStepSizeBound(theory, c, sigma);
  if (!bound.ok()) return bound.status();
  return lr <= *bound;
}

absl::StatusOr<int64_t> MinIterationsNsgd(const TheoryParams& theory, double r,
                                          double sigma) {
  absl::StatusOr<double> bound = NsgdStepSizeBound(theory, r, sigma);
  if (!bound.ok()) return bound.status();
  return InvertLr(
      [&](int64_t t) { return TheoremLrNsgd(theory, r, sigma, t); }, *bound);
}

absl::StatusOr<int64_t> MinIterationsSgd(const TheoryParams& theory, double c,
                                         double sigma) {
  absl::StatusOr<double> bound = SgdStepSizeBound(theory, c, sigma);
  if (!bound.ok()) return bound.status();
  return InvertLr(
      [&](int64_t t) { return TheoremLrSgd(theory, c, sigma, t); }, *bound);
}

double NsgdIterationThresholds::max() const {
  return std::max({smoothness_term, variance_term, noise_term});
}

absl::StatusOr<NsgdIterationThresholds> PrintedThresholdsNsgd(
    const TheoryParams& theory, double r, double sigma) {
  if (absl::Status s = CheckLrInputs(theory, r, sigma, 1); !s.ok()) return s;
  const double tau0 = theory.variance.tau0;
  const double tau1 = theory.variance.tau1;
  const double l0 = theory.smoothness.l0;
  const double l1 = theory.smoothness.l1;
  if (!(r > tau0)) {
    return absl::InvalidArgumentError("thresholds degenerate for r <= tau0");
  }
  if (!(l1 > 0)) {
    return absl::InvalidArgumentError("thresholds degenerate for L1 = 0");
  }
  const double a = Alpha0Nsgd(theory.variance, r);
  const double d = theory.dim;
  const double s2 = sigma * sigma;
  NsgdIterationThresholds out;
  out.smoothness_term =
      32 * l0 * l0 / ((r - tau0) * (r - tau0) * a * a * l1 * (r + tau0) * d * s2);
  out.variance_term =
      tau1 > 0 ? 32 * l1 / (tau1 * tau1 * a * a * (r + tau0) * d * s2) : 0.0;
  out.noise_term = 72 * l1 * d / (a * a * (r + tau0));
  return out;
}

absl::StatusOr<std::vector<int64_t>> SampleBatch(int64_t n, int64_t b,
                                                 Rng& rng) {
  if (b < 0 || b > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot draw ", b, " distinct indices from ", n));
  }
  std::vector<int64_t> pool(n);
  std::iota(pool.begin(), pool.end(), int64_t{0});
  for (int64_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<int64_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(b);
  return pool;
}

}  // namespace dpopt
