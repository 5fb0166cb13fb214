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

// Renyi-DP accounting for the subsampled Gaussian mechanism: per-step RDP,
// composition over iterations, conversion to (epsilon, delta)-DP and noise
// multiplier calibration.
//
// Two per-step accountants are provided. The closed-form one uses the
// amplification-by-uniform-subsampling bound 7 gamma^2 alpha / sigma^2, valid
// only for alpha <= (sigma^2 / 2) ln(1 / gamma). The numeric one integrates the
// alpha-th moment of the Poisson-subsampled Gaussian privacy loss and is used
// as a tighter reference. All functions are pure and thread-safe.

#ifndef DPOPT_ACCOUNTANT_H_
#define DPOPT_ACCOUNTANT_H_

#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpopt {

struct PrivacyBudget {
  double epsilon = 0;
  double delta = 0;
};

absl::Status ValidateBudget(const PrivacyBudget& budget);

enum class AccountantKind {
  // 7 gamma^2 alpha / sigma^2 amplification bound, requires B < 0.1 N.
  kClosedForm,
  // Numerically integrated Poisson-subsampled Gaussian moments, B < N.
  kNumericPoisson,
};

struct AccountantConfig {
  int64_t n_samples = 0;
  int64_t batch_size = 0;
  int64_t steps = 0;

  double sampling_ratio() const {
    return static_cast<double>(batch_size) / static_cast<double>(n_samples);
  }
};

absl::Status ValidateConfig(const AccountantConfig& config,
                            AccountantKind kind = AccountantKind::kClosedForm);

// Renyi orders (ascending, all > 1) with the RDP value at each order.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

// 1.25, 1.5, 2, 3, ..., 256.
std::vector<double> DefaultOrders();
// 2, 3, ..., 256; the grid used by the numeric accountant.
std::vector<double> IntegerOrders();

// alpha / (2 sigma^2).
absl::StatusOr<double> GaussianRdp(double order, double sigma);

// Largest order at which SubsampledRdpBound applies.
double MaxValidOrder(double sigma, double gamma);

// 7 gamma^2 alpha / sigma^2. Returns kOutOfRange when
// order > MaxValidOrder(sigma, gamma); callers drop such orders.
absl::StatusOr<double> SubsampledRdpBound(double order, double sigma,
                                          double gamma);

// Per-step curve of the closed-form bound over `orders`, invalid orders
// dropped. May be empty.
absl::StatusOr<RdpCurve> SubsampledBoundCurve(double sigma, double gamma,
                                              const std::vector<double>& orders);

// RDP composes additively: every value is multiplied by `steps`.
absl::StatusOr<RdpCurve> Compose(const RdpCurve& per_step, int64_t steps);

struct DpConversion {
  double epsilon = 0;
  // Order attaining the minimum. NaN if epsilon is infinite.
  double order = 0;
};

// min over orders of value(alpha) + ln(1/delta) / (alpha - 1). Ties go to the
// smaller order.
absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta);

// epsilon spent by `config.steps` subsampled Gaussian steps at noise
// multiplier `sigma`. If no order is valid the result has epsilon = +inf.
absl::StatusOr<DpConversion> EpsAt(
    double sigma, const AccountantConfig& config, double delta,
    AccountantKind kind = AccountantKind::kClosedForm);

struct Calibration {
  double sigma = 0;
  double epsilon = 0;
  double order = 0;
};

inline constexpr double kCalibrationTolerance = 1e-3;
inline constexpr double kMaxNoiseMultiplier = 1e6;

// Smallest sigma (relative tolerance kCalibrationTolerance) whose EpsAt is at
// most budget.epsilon. kFailedPrecondition if even kMaxNoiseMultiplier fails.
absl::StatusOr<Calibration> CalibrateSigma(
    const PrivacyBudget& budget, const AccountantConfig& config,
    AccountantKind kind = AccountantKind::kClosedForm);

// ln E_{z ~ N(0, sigma^2)}[(mu1(z) / mu0(z))^order] / (order - 1) where
// mu0 = N(0, sigma^2) and mu1 = (1 - gamma) N(0, sigma^2) + gamma N(1, sigma^2).
// Evaluated by adaptive Gauss-Kronrod quadrature in log space; kInternal if the
// absolute error estimate exceeds 1e-12 on the peak-normalized integrand.
absl::StatusOr<double> NumericPoissonRdp(int order, double sigma, double gamma);

}  // namespace dpopt

#endif  // DPOPT_ACCOUNTANT_H_
