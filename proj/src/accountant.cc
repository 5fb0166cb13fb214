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

#include "dpopt/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "boost/math/quadrature/gauss_kronrod.hpp"

namespace dpopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Relative error budget of the moment quadrature. At high orders the
// integrand exponent is in the hundreds, so rounding alone is near 1e-10.
constexpr double kQuadratureTolerance = 1e-6;
// Integrand mass below exp(-kNegligibleLog) of the peak is not integrated.
constexpr double kNegligibleLog = 80.0;
// Half-width, in units of sigma, kept around the outermost Gaussian bump.
constexpr double kTailWidth = 12.0;

double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Search the bracket [lo, hi] with eps(lo) > target >= eps(hi) down to the
// calibration tolerance.
template <typename EpsFn>
absl::StatusOr<double> Bisect(EpsFn eps_of, double target, double lo,
                              double hi) {
  while (hi - lo > kCalibrationTolerance * lo) {
    const double mid = 0.5 * (lo + hi);
    absl::StatusOr<double> eps = eps_of(mid);
    if (!eps.ok()) return eps.status();
    if (*eps <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

absl::Status ValidateBudget(const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0) || !std::isfinite(budget.epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ",
                     budget.epsilon));
  }
  if (!(budget.delta > 0 && budget.delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", budget.delta));
  }
  return absl::OkStatus();
}

absl::Status ValidateConfig(const AccountantConfig& config,
                            AccountantKind kind) {
  if (config.n_samples < 1 || config.batch_size < 1 || config.steps < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "n_samples, batch_size and steps must be positive, got N=",
        config.n_samples, " B=", config.batch_size, " T=", config.steps));
  }
  if (kind == AccountantKind::kClosedForm) {
    // B < 0.1 N, in integer arithmetic.
    if (10 * config.batch_size >= config.n_samples) {
      return absl::InvalidArgumentError(absl::StrCat(
          "closed-form accountant requires B < 0.1 N, got B=",
          config.batch_size, " N=", config.n_samples));
    }
  } else if (config.batch_size >= config.n_samples) {
    return absl::InvalidArgumentError(
        absl::StrCat("numeric accountant requires B < N, got B=",
                     config.batch_size, " N=", config.n_samples));
  }
  return absl::OkStatus();
}

std::vector<double> DefaultOrders() {
  std::vector<double> orders = {1.25, 1.5};
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

std::vector<double> IntegerOrders() {
  std::vector<double> orders;
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

absl::StatusOr<double> GaussianRdp(double order, double sigma) {
  if (!(order > 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Renyi order must exceed 1, got ", order));
  }
  if (!(sigma > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive, got ", sigma));
  }
  return order / (2.0 * sigma * sigma);
}

double MaxValidOrder(double sigma, double gamma) {
  return 0.5 * sigma * sigma * std::log(1.0 / gamma);
}

absl::StatusOr<double> SubsampledRdpBound(double order, double sigma,
                                          double gamma) {
  if (!(order > 1) || !(sigma > 0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need order > 1 and sigma > 0, got order=", order, " sigma=", sigma));
  }
  if (!(gamma > 0 && gamma < 0.1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling ratio must lie in (0, 0.1), got ", gamma));
  }
  if (order > MaxValidOrder(sigma, gamma)) {
    return absl::OutOfRangeError(absl::StrCat(
        "order ", order, " exceeds the amplification window ",
        MaxValidOrder(sigma, gamma)));
  }
  return 7.0 * gamma * gamma * order / (sigma * sigma);
}

absl::StatusOr<RdpCurve> SubsampledBoundCurve(
    double sigma, double gamma, const std::vector<double>& orders) {
  RdpCurve curve;
  for (double order : orders) {
    absl::StatusOr<double> value = SubsampledRdpBound(order, sigma, gamma);
    if (value.ok()) {
      curve.orders.push_back(order);
      curve.values.push_back(*value);
    } else if (value.status().code() != absl::StatusCode::kOutOfRange) {
      return value.status();
    }
  }
  return curve;
}

absl::StatusOr<RdpCurve> Compose(const RdpCurve& per_step, int64_t steps) {
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("steps must be at least 1, got ", steps));
  }
  RdpCurve composed = per_step;
  for (double& v : composed.values) v *= static_cast<double>(steps);
  return composed;
}

absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta) {
  if (curve.orders.empty()) {
    return absl::InvalidArgumentError("cannot convert an empty RDP curve");
  }
  if (curve.orders.size() != curve.values.size()) {
    return absl::InvalidArgumentError("RDP curve orders and values differ in size");
  }
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  const double log_inv_delta = std::log(1.0 / delta);
  DpConversion best{kInf, kNaN};
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    const double order = curve.orders[i];
    if (!(order > 1)) {
      return absl::InvalidArgumentError(
          absl::StrCat("Renyi order must exceed 1, got ", order));
    }
    const double eps = curve.values[i] + log_inv_delta / (order - 1.0);
    if (eps < best.epsilon ||
        (eps == best.epsilon && std::isfinite(eps) && order < best.order)) {
      best = {eps, order};
    }
  }
  return best;
}

absl::StatusOr<DpConversion> EpsAt(double sigma, const AccountantConfig& config,
                                   double delta, AccountantKind kind) {
  if (absl::Status s = ValidateConfig(config, kind); !s.ok()) return s;
  if (!(sigma > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive, got ", sigma));
  }
  const double gamma = config.sampling_ratio();
  RdpCurve per_step;
  if (kind == AccountantKind::kClosedForm) {
    absl::StatusOr<RdpCurve> curve =
        SubsampledBoundCurve(sigma, gamma, DefaultOrders());
    if (!curve.ok()) return curve.status();
    per_step = *std::move(curve);
  } else {
    for (double order : IntegerOrders()) {
      absl::StatusOr<double> value =
          NumericPoissonRdp(static_cast<int>(order), sigma, gamma);
      if (!value.ok()) return value.status();
      per_step.orders.push_back(order);
      per_step.values.push_back(*value);
    }
  }
  if (per_step.orders.empty()) return DpConversion{kInf, kNaN};
  absl::StatusOr<RdpCurve> composed = Compose(per_step, config.steps);
  if (!composed.ok()) return composed.status();
  return RdpToDp(*composed, delta);
}

absl::StatusOr<Calibration> CalibrateSigma(const PrivacyBudget& budget,
                                           const AccountantConfig& config,
                                           AccountantKind kind) {
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;
  if (absl::Status s = ValidateConfig(config, kind); !s.ok()) return s;

  auto eps_of = [&](double sigma) -> absl::StatusOr<double> {
    absl::StatusOr<DpConversion> conv = EpsAt(sigma, config, budget.delta, kind);
    if (!conv.ok()) return conv.status();
    return conv->epsilon;
  };

  // Geometric bracketing from sigma = 1, then bisection.
  constexpr double kMinNoiseMultiplier = 1e-3;
  double lo = 1.0;
  double hi = 1.0;
  absl::StatusOr<double> eps = eps_of(hi);
  if (!eps.ok()) return eps.status();
  if (*eps <= budget.epsilon) {
    while (true) {
      lo = hi / 2;
      if (lo < kMinNoiseMultiplier) break;
      eps = eps_of(lo);
      if (!eps.ok()) return eps.status();
      if (*eps > budget.epsilon) break;
      hi = lo;
    }
  } else {
    while (*eps > budget.epsilon) {
      lo = hi;
      if (hi >= kMaxNoiseMultiplier) {
        return absl::FailedPreconditionError(absl::StrCat(
            "no noise multiplier up to ", kMaxNoiseMultiplier,
            " reaches epsilon=", budget.epsilon, " at delta=", budget.delta));
      }
      hi = std::min(2 * hi, kMaxNoiseMultiplier);
      eps = eps_of(hi);
      if (!eps.ok()) return eps.status();
    }
  }

  absl::StatusOr<double> sigma = Bisect(eps_of, budget.epsilon, lo, hi);
  if (!sigma.ok()) return sigma.status();
  absl::StatusOr<DpConversion> conv = EpsAt(*sigma, config, budget.delta, kind);
  if (!conv.ok()) return conv.status();
  return Calibration{*sigma, conv->epsilon, conv->order};
}

absl::StatusOr<double> NumericPoissonRdp(int order, double sigma,
                                         double gamma) {
  if (order < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("numeric accountant needs an integer order >= 2, got ",
                     order));
  }
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive, got ", sigma));
  }
  if (!(gamma > 0 && gamma <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling ratio must lie in (0, 1], got ", gamma));
  }

  const double alpha = order;
  const double var = sigma * sigma;
  const double log_keep = gamma < 1 ? std::log1p(-gamma) : -kInf;
  const double log_gamma = std::log(gamma);
  const double log_norm = -0.5 * std::log(2.0 * M_PI * var);
  // log of phi_sigma(z) * (mu1(z) / mu0(z))^alpha.
  auto log_integrand = [&](double z) {
    const double log_ratio =
        LogAddExp(log_keep, log_gamma + (2.0 * z - 1.0) / (2.0 * var));
    return log_norm - z * z / (2.0 * var) + alpha * log_ratio;
  };

  // The integrand is a positive mixture of N(k, sigma^2) bumps, k = 0..order,
  // so all mass lies in [-kTailWidth sigma, order + kTailWidth sigma].
  const double z_lo = -kTailWidth * sigma;
  const double z_hi = alpha + kTailWidth * sigma;
  const double seg_width = 2.0 * sigma;
  const int n_seg = static_cast<int>(std::ceil((z_hi - z_lo) / seg_width));
  constexpr int kScanPerSegment = 8;

  std::vector<double> seg_max(n_seg, -kInf);
  double shift = -kInf;
  for (int s = 0; s < n_seg; ++s) {
    for (int j = 0; j <= kScanPerSegment; ++j) {
      const double z = z_lo + seg_width * (s + static_cast<double>(j) / kScanPerSegment);
      seg_max[s] = std::max(seg_max[s], log_integrand(z));
    }
    shift = std::max(shift, seg_max[s]);
  }

  auto scaled = [&](double z) { return std::exp(log_integrand(z) - shift); };
  using Integrator = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0;
  double total_error = 0;
  for (int s = 0; s < n_seg; ++s) {
    // A bump of width sigma peaking inside a segment of width 2 sigma shows up
    // within a factor e^{1/2} on the scan grid, so this cut is conservative.
    if (seg_max[s] < shift - kNegligibleLog) continue;
    const double a = z_lo + seg_width * s;
    double error = 0;
    total += Integrator::integrate(scaled, a, a + seg_width, 15,
                                   1e-10, &error);
    total_error += error;
  }
  if (!(total > 0) || !std::isfinite(total) ||
      total_error > kQuadratureTolerance * total) {
    return absl::InternalError(absl::StrCat(
        "moment quadrature did not converge: order=", order, " sigma=", sigma,
        " gamma=", gamma, " error=", total_error));
  }
  return (shift + std::log(total)) / (alpha - 1.0);
}

}  // namespace dpopt
