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

#include <cmath>
#include <limits>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "reference_oracles.h"

namespace dpopt {
namespace {

using ::testing::DoubleNear;

constexpr double kLn1e5 = 11.512925464970229;

TEST(GaussianRdpTest, Formula) {
  EXPECT_DOUBLE_EQ(*GaussianRdp(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(*GaussianRdp(4, 2), 0.5);
  EXPECT_LT(*GaussianRdp(2, 1e6), 1e-9);
}

TEST(GaussianRdpTest, DomainErrors) {
  EXPECT_EQ(GaussianRdp(1, 1).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GaussianRdp(0.5, 1).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GaussianRdp(2, 0).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GaussianRdp(2, -1).status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(SubsampledRdpBoundTest, Formula) {
  EXPECT_NEAR(*SubsampledRdpBound(2, 2, 0.02), 0.0014, 1e-15);
}

TEST(SubsampledRdpBoundTest, ValidityWindow) {
  EXPECT_NEAR(MaxValidOrder(2, 0.02), 2 * std::log(50.0), 1e-12);
  EXPECT_TRUE(SubsampledRdpBound(7.8, 2, 0.02).ok());
  absl::StatusOr<double> out = SubsampledRdpBound(20, 2, 0.02);
  EXPECT_EQ(out.status().code(), absl::StatusCode::kOutOfRange);
}

TEST(SubsampledRdpBoundTest, GammaDomain) {
  EXPECT_EQ(SubsampledRdpBound(1.1, 10, 0.1).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(SubsampledRdpBound(1.1, 10, 0.0).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(SubsampledRdpBoundTest, ExactlyLinearInOrder) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sigma(1, 20), gamma(1e-4, 0.099);
  for (int i = 0; i < 1000; ++i) {
    double s = sigma(rng), g = gamma(rng);
    double hi = std::min(MaxValidOrder(s, g), 256.0);
    if (hi <= 1.5) continue;
    double a = 1.0 + (hi - 1.0) / 3, b = 1.0 + 2 * (hi - 1.0) / 3;
    double va = *SubsampledRdpBound(a, s, g), vb = *SubsampledRdpBound(b, s, g);
    EXPECT_NEAR(va / a, vb / b, 1e-15 * va / a);
    double ga = *GaussianRdp(a, s), gb = *GaussianRdp(b, s);
    EXPECT_NEAR(ga / a, gb / b, 1e-15 * ga / a);
  }
}

TEST(SubsampledRdpBoundTest, BelowGaussianForSmallGamma) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sigma(0.5, 50), gamma(1e-6, 0.0999);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    double s = sigma(rng), g = gamma(rng);
    ASSERT_LT(g, 1 / std::sqrt(14.0));
    double a = 1.0 + 0.5 * (MaxValidOrder(s, g) - 1.0);
    if (a <= 1) continue;
    EXPECT_LT(*SubsampledRdpBound(a, s, g), *GaussianRdp(a, s));
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(ComposeTest, ScalesValues) {
  RdpCurve c{{2, 3}, {0.25, 0.5}};
  RdpCurve one = *Compose(c, 1);
  EXPECT_EQ(one.values, c.values);
  RdpCurve many = *Compose(c, 1000);
  EXPECT_EQ(many.orders, c.orders);
  EXPECT_DOUBLE_EQ(many.values[0], 250);
  EXPECT_DOUBLE_EQ(many.values[1], 500);
}

TEST(ComposeTest, Associative) {
  RdpCurve c{{2, 5, 9}, {0.013, 0.071, 0.33}};
  RdpCurve nested = *Compose(*Compose(c, 3), 5);
  RdpCurve flat = *Compose(c, 15);
  for (size_t i = 0; i < c.values.size(); ++i) {
    EXPECT_NEAR(nested.values[i], flat.values[i], 1e-15 * flat.values[i]);
  }
}

TEST(ComposeTest, RejectsNonPositiveSteps) {
  EXPECT_FALSE(Compose(RdpCurve{{2}, {1}}, 0).ok());
}

TEST(RdpToDpTest, SingleOrder) {
  DpConversion c = *RdpToDp(RdpCurve{{2}, {1.0}}, std::exp(-1.0));
  EXPECT_DOUBLE_EQ(c.epsilon, 2.0);
  EXPECT_EQ(c.order, 2);
}

TEST(RdpToDpTest, DominatedOrderNeverWins) {
  // Order 3 has the smaller RDP value and the smaller conversion term.
  RdpCurve curve{{2, 3}, {0.9, 0.5}};
  DpConversion c = *RdpToDp(curve, 1e-3);
  EXPECT_EQ(c.order, 3);
  EXPECT_NEAR(c.epsilon, 0.5 + std::log(1e3) / 2, 1e-12);
}

TEST(RdpToDpTest, TiesGoToSmallerOrder) {
  // 1 + ln(1/d)/1 == v3 + ln(1/d)/2 with v3 = 1 + ln(1/d)/2.
  const double delta = std::exp(-2.0);
  RdpCurve curve{{2, 3}, {1.0, 2.0}};
  DpConversion c = *RdpToDp(curve, delta);
  EXPECT_EQ(c.order, 2);
  EXPECT_DOUBLE_EQ(c.epsilon, 3.0);
}

TEST(RdpToDpTest, EmptyCurveIsError) {
  EXPECT_FALSE(RdpToDp(RdpCurve{}, 1e-5).ok());
}

// Composed closed-form bound at sigma = 1.2, gamma = 0.02, T = 5000,
// delta = 1e-5 on the integer grid 2..256. Frozen from a 40-digit evaluation
// of the same minimization; only order 2 lies in the validity window.
constexpr double kClosedFormEps = 30.957369909414675;

TEST(RdpToDpTest, FrozenIntegerGridValue) {
  RdpCurve per_step = *SubsampledBoundCurve(1.2, 0.02, IntegerOrders());
  ASSERT_EQ(per_step.orders.size(), 1u);
  DpConversion c = *RdpToDp(*Compose(per_step, 5000), 1e-5);
  EXPECT_NEAR(c.epsilon, kClosedFormEps, 1e-12);
  EXPECT_EQ(c.order, 2);

  // Independent scalar sweep of the same objective over the same grid.
  double best = std::numeric_limits<double>::infinity();
  for (int a = 2; a <= 256; ++a) {
    if (a > 1.44 / 2 * std::log(50.0)) continue;
    best = std::min(best, 5000 * 7 * 0.0004 * a / 1.44 + kLn1e5 / (a - 1));
  }
  EXPECT_NEAR(c.epsilon, best, 1e-12);
}

AccountantConfig PaperConfig() { return AccountantConfig{50000, 1000, 5000}; }

TEST(EpsAtTest, ClosedFormBaseline) {
  DpConversion c = *EpsAt(1.2, PaperConfig(), 1e-5);
  EXPECT_NEAR(c.epsilon, kClosedFormEps, 1e-12);
  EXPECT_EQ(c.order, 2);
  // Looser than the tight accountant's 8 at this sigma.
  EXPECT_GT(c.epsilon, 8);
}

// With negligible RDP the conversion term log(1/delta)/(alpha-1) at the
// largest order dominates.
TEST(EpsAtTest, HugeSigmaSpendsAlmostNothing) {
  const double floor = std::log(1e5) / (DefaultOrders().back() - 1);
  DpConversion a = *EpsAt(1e4, PaperConfig(), 1e-5);
  DpConversion b = *EpsAt(1e4, AccountantConfig{1000, 10, 100000}, 1e-5);
  EXPECT_GE(a.epsilon, floor);
  EXPECT_LT(a.epsilon, floor + 1e-3);
  EXPECT_LT(b.epsilon, floor + 1e-3);
  EXPECT_EQ(a.order, DefaultOrders().back());
}

TEST(EpsAtTest, NoValidOrderGivesInfinity) {
  DpConversion c = *EpsAt(0.1, PaperConfig(), 1e-5);
  EXPECT_TRUE(std::isinf(c.epsilon));
  EXPECT_TRUE(std::isnan(c.order));
}

TEST(EpsAtTest, StrictlyDecreasingWhenSigmaDoubles) {
  double prev = EpsAt(1.2, PaperConfig(), 1e-5)->epsilon;
  for (double s = 2.4; s < 1e4; s *= 2) {
    double e = EpsAt(s, PaperConfig(), 1e-5)->epsilon;
    EXPECT_LT(e, prev) << "sigma " << s;
    prev = e;
  }
}

TEST(EpsAtTest, RejectsLargeBatch) {
  EXPECT_FALSE(EpsAt(2, AccountantConfig{1000, 100, 10}, 1e-5).ok());
  EXPECT_FALSE(EpsAt(2, AccountantConfig{1000, 0, 10}, 1e-5).ok());
  EXPECT_FALSE(EpsAt(2, AccountantConfig{1000, 10, 0}, 1e-5).ok());
  EXPECT_TRUE(EpsAt(2, AccountantConfig{1000, 99, 10}, 1e-5).ok());
}

TEST(EpsAtTest, MonotoneFuzz) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int64_t> n_dist(1000, 100000);
  std::uniform_real_distribution<double> frac(0.001, 0.0999), log_sigma(-1, 3);
  std::uniform_int_distribution<int64_t> t_dist(1, 20000);
  for (int i = 0; i < 1000; ++i) {
    int64_t n = n_dist(rng);
    int64_t b = std::max<int64_t>(1, static_cast<int64_t>(frac(rng) * n));
    int64_t t = t_dist(rng);
    double s = std::pow(10.0, log_sigma(rng));
    AccountantConfig c{n, b, t};
    double base = EpsAt(s, c, 1e-5)->epsilon;
    EXPECT_LE(EpsAt(s * 1.3, c, 1e-5)->epsilon, base);
    EXPECT_GE(EpsAt(s, AccountantConfig{n, b, t + 1 + t / 2}, 1e-5)->epsilon,
              base);
    if (10 * (b + 1) < n) {
      EXPECT_GE(EpsAt(s, AccountantConfig{n, b + 1, t}, 1e-5)->epsilon, base);
    }
  }
}

TEST(CalibrateSigmaTest, RoundTrip) {
  for (double eps : {0.5, 2.0, 4.0, 8.0}) {
    PrivacyBudget budget{eps, 1e-5};
    Calibration cal = *CalibrateSigma(budget, PaperConfig());
    EXPECT_LE(EpsAt(cal.sigma, PaperConfig(), 1e-5)->epsilon, eps);
    EXPECT_GT(EpsAt(cal.sigma * (1 - 10 * kCalibrationTolerance), PaperConfig(),
                    1e-5)
                  ->epsilon,
              eps);
    EXPECT_DOUBLE_EQ(cal.epsilon, EpsAt(cal.sigma, PaperConfig(), 1e-5)->epsilon);
  }
}

TEST(CalibrateSigmaTest, AtLeastPaperSigmaAtEps8) {
  Calibration cal = *CalibrateSigma({8, 1e-5}, PaperConfig());
  EXPECT_GE(cal.sigma, 1.2);
}

TEST(CalibrateSigmaTest, DoublingStepsScalesSigmaBySqrt2) {
  // Large T and small epsilon keep the 7 gamma^2 alpha / sigma^2 term binding.
  for (int64_t t : {20000, 100000}) {
    AccountantConfig c{50000, 1000, t};
    AccountantConfig c2{50000, 1000, 2 * t};
    double s1 = CalibrateSigma({1.0, 1e-5}, c)->sigma;
    double s2 = CalibrateSigma({1.0, 1e-5}, c2)->sigma;
    EXPECT_THAT(s2 / s1, DoubleNear(std::sqrt(2.0), 0.05 * std::sqrt(2.0)))
        << "T = " << t;
  }
}

TEST(CalibrateSigmaTest, InfeasibleBudget) {
  absl::StatusOr<Calibration> cal =
      CalibrateSigma({1e-9, 1e-5}, AccountantConfig{50000, 4999, 1000000000});
  EXPECT_EQ(cal.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(CalibrateSigmaTest, RejectsInvalidInputs) {
  EXPECT_FALSE(CalibrateSigma({0, 1e-5}, PaperConfig()).ok());
  EXPECT_FALSE(CalibrateSigma({1, 0}, PaperConfig()).ok());
  EXPECT_FALSE(CalibrateSigma({1, 1}, PaperConfig()).ok());
  EXPECT_FALSE(CalibrateSigma({1, 1e-5}, AccountantConfig{1000, 100, 10}).ok());
}

TEST(NumericPoissonRdpTest, FullSamplingIsGaussian) {
  EXPECT_NEAR(*NumericPoissonRdp(2, 1.0, 1.0), 1.0, 1e-6);
  EXPECT_NEAR(*NumericPoissonRdp(5, 2.0, 1.0), *GaussianRdp(5, 2.0), 1e-6);
}

TEST(NumericPoissonRdpTest, VanishingSamplingRate) {
  EXPECT_LT(*NumericPoissonRdp(2, 1.0, 1e-8), 1e-12);
  EXPECT_LT(*NumericPoissonRdp(32, 1.0, 1e-8), 1e-9);
}

TEST(NumericPoissonRdpTest, Errors) {
  EXPECT_FALSE(NumericPoissonRdp(1, 1.0, 0.1).ok());
  EXPECT_FALSE(NumericPoissonRdp(2, 0.0, 0.1).ok());
  EXPECT_FALSE(NumericPoissonRdp(2, 1.0, 0.0).ok());
  EXPECT_FALSE(NumericPoissonRdp(2, 1.0, 1.5).ok());
}

// ln(1 + gamma^2 (exp(1/sigma^2) - 1)) at sigma = 1.2, gamma = 0.02, frozen
// from a 40-digit evaluation of the binomial expansion.
constexpr double kPoissonRdpOrder2 = 4.0095809011654673e-4;

TEST(NumericPoissonRdpTest, FrozenOrder2Value) {
  EXPECT_NEAR(*NumericPoissonRdp(2, 1.2, 0.02), kPoissonRdpOrder2,
              1e-9 * kPoissonRdpOrder2);
}

TEST(NumericPoissonRdpTest, AgreesWithMonteCarloMoment) {
  testing::McMoment mc = testing::MonteCarloMoment(2, 1.2, 0.02, 10000000, 99);
  double moment = std::exp(*NumericPoissonRdp(2, 1.2, 0.02));
  EXPECT_NEAR(moment, mc.mean, 4 * mc.std_error);
  EXPECT_NEAR(std::exp(kPoissonRdpOrder2), mc.mean, 4 * mc.std_error);
}

TEST(NumericPoissonRdpTest, AgreesWithBinomialExpansion) {
  for (int a : {2, 3, 8, 32, 128, 256}) {
    for (auto [s, g] : {std::pair{1.2, 0.02}, {3.6, 0.02}, {0.8, 0.05},
                        {5.0, 0.001}, {2.0, 0.5}, {1.0, 1.0}}) {
      double expected =
          static_cast<double>(testing::BinomialLogMoment(a, s, g) / (a - 1));
      double got = *NumericPoissonRdp(a, s, g);
      EXPECT_NEAR(got, expected, 1e-9 * std::max(1e-6, std::abs(expected)))
          << "order " << a << " sigma " << s << " gamma " << g;
    }
  }
}

TEST(NumericPoissonRdpTest, MonotoneInGammaAndOrderFuzz) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sigma(0.6, 8), gamma(1e-4, 0.9);
  std::uniform_int_distribution<int> order(2, 200);
  for (int i = 0; i < 200; ++i) {
    double s = sigma(rng), g = gamma(rng);
    int a = order(rng);
    double base = *NumericPoissonRdp(a, s, g);
    EXPECT_GE(*NumericPoissonRdp(a, s, std::min(1.0, g * 1.1)), base * (1 - 1e-12));
    EXPECT_GE(*NumericPoissonRdp(a + 1, s, g), base * (1 - 1e-12));
  }
}

TEST(NumericAccountantTest, TighterThanClosedForm) {
  for (double eps : {2.0, 4.0, 8.0}) {
    double closed = CalibrateSigma({eps, 1e-5}, PaperConfig())->sigma;
    double numeric = CalibrateSigma({eps, 1e-5}, PaperConfig(),
                                    AccountantKind::kNumericPoisson)
                         ->sigma;
    EXPECT_GE(closed, numeric) << "eps " << eps;
  }
}

TEST(NumericAccountantTest, AllowsLargeBatch) {
  EXPECT_TRUE(EpsAt(2, AccountantConfig{1000, 500, 10}, 1e-5,
                    AccountantKind::kNumericPoisson)
                  .ok());
  EXPECT_FALSE(EpsAt(2, AccountantConfig{1000, 1000, 10}, 1e-5,
                     AccountantKind::kNumericPoisson)
                   .ok());
}

}  // namespace
}  // namespace dpopt
