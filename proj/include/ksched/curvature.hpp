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

//
// Curvature diagnostics for the MSE objective.
//
// The element-wise curvature at gap l is
//
//   C_l = max over S < T, i not in T, |T \ S| = l of  f_i(T) / f_i(S)
//
// and C_max = max_l C_l. f is submodular iff C_max <= 1. This header
// computes C_l by enumeration for small n, evaluates the analytic upper
// bounds in terms of the spectrum of P_pred and H_k, and turns a curvature
// value into approximation factors for greedy and randomized greedy.
//

#pragma once

#include "ksched/common.hpp"
#include "ksched/objective.hpp"
#include "ksched/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ksched {

struct CurvatureReport {
  // curvatures[l - 1] = C_l for l = 1..n-1.
  std::vector<double> curvatures;
  double c_max = 0.0;
  // aggregated[r - 1] = C(r) for r = 1..n.
  std::vector<double> aggregated;
  // Sensors with h_i = 0 are left out of the max (their gains are 0/0).
  IndexList zero_rows;

  double bound_phic = std::numeric_limits<double>::quiet_NaN();
  bool condition_holds = false;
  double phi = std::numeric_limits<double>::quiet_NaN();
  double p_success = std::numeric_limits<double>::quiet_NaN();

  double c = 1.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double alpha_greedy = std::numeric_limits<double>::quiet_NaN();
};

struct BruteforceOptions {
  // Enumeration touches n 3^{n-1} triples and 2^n inverse Fisher matrices.
  int max_n = 12;
  // Visit the sets T in ascending instead of descending mask order. The
  // maxima do not depend on it.
  bool reverse_order = false;
};

// C(r) = (1/r)(1 + sum_{l=1}^{r-1} C_l); C(1) = 1.
inline double aggregated_curvature(const std::vector<double>& curvatures, int r) {
  if (r < 1 || r > static_cast<int>(curvatures.size()) + 1) {
    throw ParameterError("aggregated curvature needs 1 <= r <= len(C_l) + 1");
  }
  double sum = 1.0;
  for (int l = 1; l < r; ++l) sum += curvatures[static_cast<std::size_t>(l - 1)];
  return sum / r;
}

// Marginal gains f_i(S) for every S subset of [n] and i not in S, with
// F_S^{-1} obtained by dense inversion of the Fisher matrix of each subset.
// gains[mask * n + i]; entries for i in mask are left at 0.
inline std::vector<double> subset_gain_table(const Matrix& p_pred, StepRows rows) {
  const int n = rows.n();
  const std::uint32_t subsets = 1u << n;
  const Matrix p_inv = spd_inverse(p_pred, "P_pred");
  std::vector<Matrix> fisher(subsets);
  fisher[0] = p_inv;
  std::vector<double> gains(static_cast<std::size_t>(subsets) * static_cast<std::size_t>(n), 0.0);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    if (mask != 0) {
      const int low = std::countr_zero(mask);
      const auto h = rows.row(low);
      fisher[mask] = fisher[mask & (mask - 1)];
      fisher[mask].noalias() += (h / rows.variance(low)) * h.transpose();
    }
    const Matrix f_inv = spd_inverse(fisher[mask], "Fisher matrix");
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) continue;
      const auto h = rows.row(i);
      const Vector v = f_inv * h;
      gains[static_cast<std::size_t>(mask) * n + i] = v.squaredNorm() / (rows.variance(i) + h.dot(v));
    }
  }
  return gains;
}

inline CurvatureReport curvature_bruteforce(const Matrix& p_pred, StepRows rows, BruteforceOptions opts = {}) {
  const int n = rows.n();
  if (n > opts.max_n) {
    throw CapExceededError("curvature enumeration for n = " + std::to_string(n) + " exceeds max_n = " +
                               std::to_string(opts.max_n),
                           static_cast<double>(n) * std::pow(3.0, n - 1));
  }
  CurvatureReport report;
  for (Index i = 0; i < n; ++i)
    if (rows.row(i).squaredNorm() == 0.0) report.zero_rows.push_back(i);

  const std::vector<double> gains = subset_gain_table(p_pred, rows);
  std::vector<double> best(static_cast<std::size_t>(std::max(n - 1, 0)), 0.0);
  const std::uint32_t full = (1u << n) - 1;

  auto visit = [&](int i, std::uint32_t t_mask) {
    const double gain_t = gains[static_cast<std::size_t>(t_mask) * n + i];
    const int t_size = std::popcount(t_mask);
    // Proper submasks of T, including the empty set.
    std::uint32_t s_mask = t_mask;
    do {
      s_mask = (s_mask - 1) & t_mask;
      const double gain_s = gains[static_cast<std::size_t>(s_mask) * n + i];
      const int l = t_size - std::popcount(s_mask);
      double& slot = best[static_cast<std::size_t>(l - 1)];
      slot = std::max(slot, gain_t / gain_s);
    } while (s_mask != 0);
  };

  for (int i = 0; i < n; ++i) {
    if (std::find(report.zero_rows.begin(), report.zero_rows.end(), i) != report.zero_rows.end()) continue;
    const std::uint32_t universe = full & ~(1u << i);
    if (!opts.reverse_order) {
      for (std::uint32_t t = universe;; t = (t - 1) & universe) {
        if (t != 0) visit(i, t);
        if (t == 0) break;
      }
    } else {
      // Ascending submask enumeration of the universe.
      std::uint32_t t = 0;
      do {
        t = (t - universe) & universe;
        if (t != 0) visit(i, t);
      } while (t != 0);
    }
  }

  report.curvatures = best;
  report.c_max = best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());
  report.c = std::max(report.c_max, 1.0);
  for (int r = 1; r <= std::max(n, 1); ++r) {
    if (r <= static_cast<int>(best.size()) + 1) report.aggregated.push_back(aggregated_curvature(best, r));
  }
  return report;
}

inline CurvatureReport curvature_bruteforce(const Matrix& p_pred, const RowMatrix& h, const Vector& r_diag,
                                            BruteforceOptions opts = {}) {
  return curvature_bruteforce(p_pred, StepRows(h, r_diag), opts);
}

// ---------------------------------------------------------------------------
// Deterministic spectral bound.

struct CurvatureBound {
  bool condition_holds = false;
  double bound = 0.0;
};

inline double max_row_norm_sq(StepRows rows) {
  double c = 0.0;
  for (Index j = 0; j < rows.n(); ++j) c = std::max(c, rows.row(j).squaredNorm());
  return c;
}

inline double gram_lambda_max(StepRows rows) {
  const Matrix gram = rows.H->transpose() * (*rows.H);
  return lambda_max(gram);
}

// Condition: lambda_max(H^T H) <= (1/phi - 1/lambda_min(P)) min_j sigma_j^2.
// Bound:     max_j lambda_max(P)^2 (sigma_j^2 + lambda_max(P) C) / (phi^2 (sigma_j^2 + phi C)).
// When the condition holds, C_max <= bound.
inline CurvatureBound curvature_bound(const Matrix& p_pred, StepRows rows, double row_norm_bound, double phi) {
  const Vector ev = symmetric_eigenvalues(p_pred);
  const double lmin = ev(0);
  const double lmax = ev(ev.size() - 1);
  if (!(phi > 0.0) || !(phi < lmin)) throw ParameterError("phi must lie in (0, lambda_min(P_pred))");
  if (row_norm_bound < max_row_norm_sq(rows) * (1.0 - 1e-12)) {
    throw ParameterError("C must bound every squared row norm");
  }
  const Vector& r = *rows.r_diag;
  const double min_var = r.minCoeff();
  CurvatureBound out;
  const double lhs = gram_lambda_max(rows);
  const double rhs = (1.0 / phi - 1.0 / lmin) * min_var;
  out.condition_holds = lhs <= rhs * (1.0 + 1e-12);
  const double C = row_norm_bound;
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double v = lmax * lmax * (r(j) + lmax * C) / (phi * phi * (r(j) + phi * C));
    out.bound = std::max(out.bound, v);
  }
  return out;
}

// Largest phi for which the condition above holds; gives the tightest bound.
inline double tightest_phi(const Matrix& p_pred, StepRows rows) {
  const double lmin = lambda_min(p_pred);
  const double min_var = rows.r_diag->minCoeff();
  return 1.0 / (1.0 / lmin + gram_lambda_max(rows) / min_var);
}

// ---------------------------------------------------------------------------
// Probabilistic phi for i.i.d. rows with covariance sigma_h^2 I and
// ||h||^2 <= C.

struct PhiEstimate {
  double phi = 0.0;
  // Lower bound on the probability that lambda_max(F_[n]) <= 1/phi; may be
  // non-positive (vacuous) for small q.
  double p_success = 0.0;
};

inline PhiEstimate phi_probabilistic(int n, int m, double sigma_h2, double row_norm_bound, const Vector& r_diag,
                                     double lambda_min_p, double q) {
  if (!(sigma_h2 > 0.0) || !(sigma_h2 < row_norm_bound)) {
    throw ParameterError("phi_probabilistic requires 0 < sigma_h^2 < C");
  }
  if (!(q > 0.0)) throw ParameterError("q must be positive");
  PhiEstimate out;
  out.phi = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < r_diag.size(); ++j) {
    out.phi = std::min(out.phi, 1.0 / (1.0 / lambda_min_p + (n * sigma_h2 + q) / r_diag(j)));
  }
  const double exponent = -(q * q / 2.0) / ((row_norm_bound - sigma_h2) * (n * sigma_h2 + q / 3.0));
  out.p_success = 1.0 - m * std::exp(exponent);
  return out;
}

inline PhiEstimate phi_probabilistic(int n, int m, double sigma_h2, double row_norm_bound, const Vector& r_diag,
                                     const Matrix& p_pred, double q) {
  return phi_probabilistic(n, m, sigma_h2, row_norm_bound, r_diag, lambda_min(p_pred), q);
}

// ---------------------------------------------------------------------------
// Condition-number form: if Delta >= kappa + c1 (n/m) SNR then, with high
// probability, C_max <= Delta^3.

struct ConditionNumberBound {
  bool premise_holds = false;
  double bound = 0.0;
  double kappa = 0.0;
  double snr = 0.0;
};

inline ConditionNumberBound condition_number_bound(const Matrix& p_pred, double sigma2, int n, int m, double delta,
                                                   double c1 = 2.0) {
  if (!(delta > 1.0)) throw ParameterError("Delta must exceed 1");
  if (!(c1 > 1.0)) throw ParameterError("c1 must exceed 1");
  const Vector ev = symmetric_eigenvalues(p_pred);
  ConditionNumberBound out;
  out.kappa = ev(ev.size() - 1) / ev(0);
  out.snr = ev(ev.size() - 1) / sigma2;
  out.premise_holds = delta >= out.kappa + c1 * (static_cast<double>(n) / m) * out.snr;
  out.bound = delta * delta * delta;
  return out;
}

// ---------------------------------------------------------------------------
// Approximation factors.

// beta = 1 + max{0, s/(2n) - 1/(2(n - s))}, and 1 when s = n.
inline double sampling_beta(int n, int s) {
  if (s >= n) return 1.0;
  return 1.0 + std::max(0.0, s / (2.0 * n) - 1.0 / (2.0 * (n - s)));
}

struct ApproxFactor {
  double alpha = 0.0;
  double alpha_greedy = 0.0;
  double beta = 1.0;
  int s = 0;
  // alpha came out negative and was clamped to 0: the guarantee is vacuous.
  bool degenerate = false;
};

// alpha = 1 - e^{-1/c} - epsilon^beta / c (randomized greedy, in
// expectation), alpha_greedy = 1 - e^{-1/c}.
inline ApproxFactor approx_factor(double c, double epsilon, int n, int K) {
  if (!(c >= 1.0)) throw ParameterError("c must be >= 1 (pass max(C_max, 1))");
  if (K < 1 || K > n) throw ParameterError("K must satisfy 1 <= K <= n");
  SamplingConfig{epsilon}.validate(K);
  ApproxFactor out;
  out.s = nominal_sample_size(n, K, epsilon);
  out.beta = sampling_beta(n, out.s);
  out.alpha_greedy = 1.0 - std::exp(-1.0 / c);
  out.alpha = out.alpha_greedy - std::pow(epsilon, out.beta) / c;
  if (out.alpha < 0.0) {
    out.alpha = 0.0;
    out.degenerate = true;
  }
  return out;
}

// E[MSE] <= alpha MSE_opt + (1 - alpha) Tr(P_pred).
inline double mse_bound(double alpha, double mse_opt, double trace_p_pred) {
  return alpha * mse_opt + (1.0 - alpha) * trace_p_pred;
}

// Lower bound (1 - epsilon^beta) r / K on the probability that a sample of
// size s = ceil((n/K) ln(1/epsilon)) hits at least one of r remaining
// optimal sensors (r <= K).
inline double hit_probability_bound(int n, int K, double epsilon, int remaining_optimal) {
  const int s = nominal_sample_size(n, K, epsilon);
  const double beta = sampling_beta(n, s);
  return (1.0 - std::pow(epsilon, beta)) / K * remaining_optimal;
}

// Per-run guarantee from the smallest observed gain ratio:
// f(S) >= (1 - e^{-ell_min / c}) f(O).
inline double per_draw_factor(double ell_min, double c) { return 1.0 - std::exp(-ell_min / c); }

// Bernstein tail for sum_i eta_i < (1 - q) sum_i mu_i with mu_i >= mu_min and
// eta_i >= ell_min. Reported as a diagnostic; its independence premise cannot
// be checked from one run.
inline double gain_ratio_tail_probability(int K, double q, double mu_min, double ell_min) {
  const double num = K * (1.0 - q) * (1.0 - q) * mu_min * mu_min;
  const double den = (1.0 - q) * mu_min / 3.0 + 0.25 * (1.0 - ell_min) * (1.0 - ell_min);
  return std::exp(-num / den);
}

// Fills everything that the spectrum and (optionally) an epsilon determine.
inline CurvatureReport curvature_report(const Matrix& p_pred, StepRows rows, int K, double epsilon,
                                        BruteforceOptions opts = {}) {
  CurvatureReport report = curvature_bruteforce(p_pred, rows, opts);
  const double C = max_row_norm_sq(rows);
  if (C > 0.0) {
    report.phi = tightest_phi(p_pred, rows);
    const CurvatureBound b = curvature_bound(p_pred, rows, C, report.phi);
    report.condition_holds = b.condition_holds;
    report.bound_phic = b.bound;
  }
  const ApproxFactor a = approx_factor(report.c, epsilon, rows.n(), K);
  report.alpha = a.alpha;
  report.alpha_greedy = a.alpha_greedy;
  return report;
}

}  // namespace ksched
