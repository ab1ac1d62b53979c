// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ksched/curvature.hpp"
#include "ksched/selection.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>

namespace ksched {
namespace {

// Direct-enumeration curvature used as an independent reference: every
// gain is a difference of traces of explicitly inverted Fisher matrices.
std::vector<double> curvature_by_traces(const Matrix& p, const RowMatrix& h, const Vector& r) {
  const int n = static_cast<int>(h.rows());
  auto f = [&](std::uint32_t mask) { return oracle::f_direct(p, h, r, oracle::mask_to_set(mask)); };
  std::vector<double> fv(1u << n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) fv[mask] = f(mask);
  std::vector<double> best(n - 1, 0.0);
  for (std::uint32_t t = 0; t < (1u << n); ++t) {
    for (std::uint32_t s = 0; s < (1u << n); ++s) {
      if ((s & t) != s || s == t) continue;
      for (int i = 0; i < n; ++i) {
        if (t & (1u << i)) continue;
        const double gs = fv[s | (1u << i)] - fv[s];
        const double gt = fv[t | (1u << i)] - fv[t];
        const int l = std::popcount(t) - std::popcount(s);
        best[l - 1] = std::max(best[l - 1], gt / gs);
      }
    }
  }
  return best;
}

TEST(CurvatureBruteforce, OrthogonalRowsAreModular) {
  const Matrix p = Matrix::Identity(4, 4);
  const RowMatrix h = RowMatrix::Identity(4, 4);
  const Vector r = (Vector(4) << 0.1, 0.5, 1.0, 2.0).finished();
  const CurvatureReport rep = curvature_bruteforce(p, h, r);
  ASSERT_EQ(rep.curvatures.size(), 3u);
  for (double c : rep.curvatures) EXPECT_NEAR(c, 1.0, 1e-12);
  EXPECT_NEAR(rep.c, 1.0, 1e-12);
}

TEST(CurvatureBruteforce, RepeatedDirectionHasDiminishingReturns) {
  const Matrix p = Matrix::Identity(2, 2);
  RowMatrix h(3, 2);
  h.rowwise() = Eigen::RowVector2d(0.6, 0.8);
  const Vector r = Vector::Constant(3, 0.5);
  const CurvatureReport rep = curvature_bruteforce(p, h, r);
  const std::vector<double> ref = curvature_by_traces(p, h, r);
  for (std::size_t l = 0; l < rep.curvatures.size(); ++l) {
    EXPECT_LT(rep.curvatures[l], 1.0);
    EXPECT_NEAR(rep.curvatures[l], ref[l], 1e-9);
  }
}

TEST(CurvatureBruteforce, MatchesTraceEnumerationAndIsOrderInvariant) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix p = oracle::random_spd(3, rng);
    const RowMatrix h = oracle::random_rows(8, 3, rng, 1.0 / std::sqrt(3.0));
    const Vector r = oracle::random_variances(8, rng);
    const CurvatureReport a = curvature_bruteforce(p, h, r);
    const CurvatureReport b = curvature_bruteforce(p, h, r, BruteforceOptions{12, true});
    EXPECT_EQ(a.curvatures, b.curvatures);
    EXPECT_TRUE(std::isfinite(a.c_max));
    const std::vector<double> ref = curvature_by_traces(p, h, r);
    for (std::size_t l = 0; l < ref.size(); ++l) EXPECT_LT(oracle::rel_err(a.curvatures[l], ref[l]), 1e-7);
    for (double c : a.curvatures) {
      EXPECT_GT(c, 0.0);
      EXPECT_LE(c, a.c_max);
    }
  }
}

TEST(CurvatureBruteforce, ZeroRowsAreFlaggedAndSkipped) {
  Rng rng(2);
  const Matrix p = oracle::random_spd(3, rng);
  RowMatrix h = oracle::random_rows(5, 3, rng);
  h.row(2).setZero();
  const Vector r = oracle::random_variances(5, rng);
  const CurvatureReport rep = curvature_bruteforce(p, h, r);
  EXPECT_EQ(rep.zero_rows, IndexList{2});
  EXPECT_TRUE(std::isfinite(rep.c_max));
}

TEST(CurvatureBruteforce, CapIsEnforced) {
  Rng rng(3);
  const Matrix p = Matrix::Identity(2, 2);
  const RowMatrix h = oracle::random_rows(13, 2, rng);
  const Vector r = Vector::Ones(13);
  EXPECT_THROW(curvature_bruteforce(p, h, r), CapExceededError);
  EXPECT_NO_THROW(curvature_bruteforce(p, h, r, BruteforceOptions{13, false}));
}

TEST(CurvatureBound, ArithmeticExample) {
  const Matrix p = 2.0 * Matrix::Identity(2, 2);
  RowMatrix h = RowMatrix::Zero(2, 2);
  h(0, 0) = 1.0;
  const Vector r = Vector::Ones(2);
  const CurvatureBound b = curvature_bound(p, StepRows(h, r), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.bound, 6.0);
  EXPECT_THROW(curvature_bound(p, StepRows(h, r), 1.0, 2.0), ParameterError);
  EXPECT_THROW(curvature_bound(p, StepRows(h, r), 1.0, 0.0), ParameterError);
  EXPECT_THROW(curvature_bound(p, StepRows(h, r), 0.5, 1.0), ParameterError);
}

TEST(CurvatureBound, SubmodularLimit) {
  const Matrix p = Matrix::Identity(2, 2);
  RowMatrix h = RowMatrix::Zero(2, 2);
  h(0, 0) = 1e-7;
  const Vector r = Vector::Ones(2);
  const CurvatureBound b = curvature_bound(p, StepRows(h, r), 1e-14, 1.0 - 1e-12);
  EXPECT_TRUE(b.condition_holds);
  EXPECT_NEAR(b.bound, 1.0, 1e-9);
}

TEST(CurvatureBound, HoldsOnScaledDownInstances) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix p = oracle::random_spd(3, rng, 0.5, 2.0);
    const RowMatrix h = oracle::random_rows(7, 3, rng, 0.2);
    const Vector r = oracle::random_variances(7, rng, 0.5, 1.0);
    const StepRows rows(h, r);
    const double phi = tightest_phi(p, rows);
    const CurvatureBound b = curvature_bound(p, rows, max_row_norm_sq(rows), phi);
    EXPECT_TRUE(b.condition_holds);
    EXPECT_LE(curvature_bruteforce(p, rows).c_max, b.bound);
  }
}

TEST(PhiProbabilistic, ArithmeticExample) {
  const Vector r = Vector::Ones(5);
  const PhiEstimate est = phi_probabilistic(100, 4, 0.01, 1.0, r, 1.0, 10.0);
  EXPECT_NEAR(est.phi, 1.0 / 12.0, 1e-15);
  EXPECT_THROW(phi_probabilistic(100, 4, 1.0, 1.0, r, 1.0, 10.0), ParameterError);
  EXPECT_THROW(phi_probabilistic(100, 4, 0.01, 1.0, r, 1.0, 0.0), ParameterError);
}

TEST(PhiProbabilistic, LargeDeviationLimit) {
  const Vector r = Vector::Ones(3);
  double previous = -std::numeric_limits<double>::infinity();
  for (double q : {1.0, 10.0, 100.0, 1e4, 1e6}) {
    const double p = phi_probabilistic(2000, 20, 0.05, 0.2, r, 1.0, q).p_success;
    EXPECT_GE(p, previous);
    previous = p;
  }
  EXPECT_NEAR(previous, 1.0, 1e-12);
}

TEST(PhiProbabilistic, BernsteinTailAgainstMonteCarlo) {
  // Rows uniform on {+-a}^m have covariance a^2 I and squared norm m a^2.
  // Bernoulli rows keep the norm bound exact, which a Gaussian tail lacks.
  const int m = 20;
  const int n = 2000;
  const double a2 = 1.0 / (4.0 * m);
  const double sigma_h2 = a2;
  const double C = m * a2 * 1.0000001;
  const double q = 10.0;
  const Vector r = Vector::Ones(1);
  const double p = phi_probabilistic(n, m, sigma_h2, C, r, 1.0, q).p_success;
  Rng rng(5);
  const int draws = 400;
  int hits = 0;
  const double a = std::sqrt(a2);
  for (int d = 0; d < draws; ++d) {
    RowMatrix h(n, m);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.coin() ? a : -a;
    const Matrix dev = h.transpose() * h - n * sigma_h2 * Matrix::Identity(m, m);
    if (lambda_max(dev) <= q) ++hits;
  }
  EXPECT_GE(static_cast<double>(hits) / draws, p);
}

TEST(ConditionNumberBound, ArithmeticExample) {
  const auto b = condition_number_bound(Matrix::Identity(4, 4), 1.0, 4, 4, 3.0);
  EXPECT_TRUE(b.premise_holds);
  EXPECT_DOUBLE_EQ(b.bound, 27.0);
  Matrix skewed = Matrix::Identity(2, 2);
  skewed(0, 0) = 1e6;
  EXPECT_FALSE(condition_number_bound(skewed, 1.0, 2, 2, 3.0).premise_holds);
  EXPECT_THROW(condition_number_bound(skewed, 1.0, 2, 2, 1.0), ParameterError);
}

TEST(ConditionNumberBound, HoldsWhenPremiseHolds) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const int m = 3;
    const int n = 8;
    const Matrix p = oracle::random_spd(m, rng, 0.8, 1.2);
    const RowMatrix h = oracle::random_rows(n, m, rng, 1.0 / std::sqrt(m));
    const Vector r = Vector::Ones(n);
    const auto b = condition_number_bound(p, 1.0, n, m, 8.0);
    ASSERT_TRUE(b.premise_holds);
    EXPECT_LE(curvature_bruteforce(p, h, r).c_max, b.bound);
  }
}

TEST(ApproxFactor, ClassicalLimit) {
  const auto a = approx_factor(1.0, std::exp(-200.0), 400, 200);
  EXPECT_NEAR(a.alpha, 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_NEAR(a.alpha_greedy, 0.6321205588, 1e-10);
}

TEST(ApproxFactor, HandEvaluatedExample) {
  const auto a = approx_factor(1.0, 0.5, 100, 10);
  EXPECT_EQ(a.s, 7);
  const double beta = 1.0 + (7.0 / 200.0 - 1.0 / 186.0);
  EXPECT_DOUBLE_EQ(a.beta, beta);
  EXPECT_NEAR(a.beta, 1.0296, 1e-4);
  EXPECT_NEAR(a.alpha, 1.0 - std::exp(-1.0) - std::pow(0.5, beta), 1e-15);
  EXPECT_LE(a.alpha, a.alpha_greedy);
}

TEST(ApproxFactor, DegenerateClamp) {
  // Large c only shrinks alpha towards 0 from above; an epsilon near 1 is
  // what drives the closed form negative.
  const auto flat = approx_factor(1e9, 0.9, 100, 10);
  EXPECT_GT(flat.alpha, 0.0);
  EXPECT_LT(flat.alpha, 1e-9);
  EXPECT_FALSE(flat.degenerate);
  const auto a = approx_factor(1.0, 0.99, 100, 10);
  EXPECT_EQ(a.alpha, 0.0);
  EXPECT_TRUE(a.degenerate);
  EXPECT_THROW(approx_factor(0.5, 0.5, 100, 10), ParameterError);
  EXPECT_THROW(approx_factor(1.0, 1.0, 100, 10), ParameterError);
  EXPECT_EQ(sampling_beta(10, 10), 1.0);
}

TEST(MseBound, Endpoints) {
  EXPECT_EQ(mse_bound(1.0, 0.3, 2.0), 0.3);
  EXPECT_EQ(mse_bound(0.0, 0.3, 2.0), 2.0);
}

TEST(MseBound, RandomizedGreedyMeanRespectsBound) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix p = oracle::random_spd(3, rng);
    const RowMatrix h = oracle::random_rows(10, 3, rng, 1.0 / std::sqrt(3.0));
    const Vector r = oracle::random_variances(10, rng);
    const StepRows rows(h, r);
    const double c = curvature_bruteforce(p, rows).c;
    const double mse_opt = exhaustive_select(p, rows, 3).mse;
    const auto a = approx_factor(c, 0.5, 10, 3);
    double mean = 0.0;
    Rng draw(trial);
    for (int d = 0; d < 500; ++d) mean += randomized_greedy_select(p, rows, 3, SamplingConfig{0.5}, draw).mse;
    mean /= 500.0;
    EXPECT_LE(mean, mse_bound(a.alpha, mse_opt, p.trace()));
  }
}

TEST(AggregatedCurvature, Basics) {
  EXPECT_EQ(aggregated_curvature({2.0, 3.0}, 1), 1.0);
  EXPECT_EQ(aggregated_curvature({1.0, 1.0, 1.0}, 4), 1.0);
  EXPECT_DOUBLE_EQ(aggregated_curvature({2.0, 3.0}, 3), 2.0);
  EXPECT_THROW(aggregated_curvature({2.0, 3.0}, 0), ParameterError);
  EXPECT_THROW(aggregated_curvature({2.0, 3.0}, 4), ParameterError);
}

TEST(AggregatedCurvature, SupermodularityGapInequality) {
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 7;
    const Matrix p = oracle::random_spd(3, rng);
    const RowMatrix h = oracle::random_rows(n, 3, rng, 1.0 / std::sqrt(3.0));
    const Vector r = oracle::random_variances(n, rng);
    const CurvatureReport rep = curvature_bruteforce(p, h, r);
    for (double cr : rep.aggregated) EXPECT_LE(cr, rep.c + 1e-12);
    for (std::uint32_t t = 0; t < (1u << n); ++t) {
      const double ft = oracle::f_direct(p, h, r, oracle::mask_to_set(t));
      for (std::uint32_t s = t;; s = (s - 1) & t) {
        const IndexList ss = oracle::mask_to_set(s);
        const double fs = oracle::f_direct(p, h, r, ss);
        const int diff = std::popcount(t) - std::popcount(s);
        if (diff > 0) {
          double sum = 0.0;
          for (int j : oracle::mask_to_set(t & ~s)) {
            IndexList sj = ss;
            sj.push_back(j);
            sum += oracle::f_direct(p, h, r, sj) - fs;
          }
          EXPECT_LE(ft - fs, aggregated_curvature(rep.curvatures, diff) * sum + 1e-10);
        }
        if (s == 0) break;
      }
    }
  }
}

TEST(Weyl, SmallestFisherEigenvalueGrowsAlongGreedyChain) {
  Rng rng(9);
  const Matrix p = oracle::random_spd(4, rng);
  const RowMatrix h = oracle::random_rows(30, 4, rng);
  const Vector r = oracle::random_variances(30, rng);
  const SelectionResult g = greedy_select(p, h, r, 12);
  double previous = lambda_min(spd_inverse(p, "P"));
  IndexList chain;
  for (int j : g.selected) {
    chain.push_back(j);
    const double now = lambda_min(oracle::fisher(p, h, r, chain));
    EXPECT_GE(now, previous * (1.0 - 1e-12));
    previous = now;
  }
}

TEST(GainRatio, PerDrawFactorHoldsOnSmallInstances) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix p = oracle::random_spd(3, rng);
    const RowMatrix h = oracle::random_rows(10, 3, rng, 1.0 / std::sqrt(3.0));
    const Vector r = oracle::random_variances(10, rng);
    const StepRows rows(h, r);
    const double c = curvature_bruteforce(p, rows).c;
    const double f_opt = exhaustive_select(p, rows, 3).f_final;
    Rng draw(trial);
    for (int d = 0; d < 20; ++d) {
      const auto res = randomized_greedy_select(p, rows, 3, SamplingConfig{0.3, true}, draw);
      const double ell = *std::min_element(res.gain_ratio_trace.begin(), res.gain_ratio_trace.end());
      EXPECT_GE(res.f_final, per_draw_factor(ell, c) * f_opt - 1e-12);
    }
  }
}

TEST(GainRatio, TailProbabilityIsAProbability) {
  const double p = gain_ratio_tail_probability(10, 0.5, 0.5, 0.2);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  EXPECT_LT(gain_ratio_tail_probability(100, 0.5, 0.5, 0.2), p);
}

}  // namespace
}  // namespace ksched
