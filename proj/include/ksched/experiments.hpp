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

// Monte Carlo experiment runners: tracking comparison, budget sweep,
// repeated-selection histogram and dimension scaling. Each returns a
// long-format record table, a summary and a list of named checks.

#ifndef KSCHED_EXPERIMENTS_HPP_
#define KSCHED_EXPERIMENTS_HPP_

#include "ksched/kalman.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace ksched {

enum class ExperimentKind { kTracking, kBudgetSweep, kHistogram, kScaling, kUav };

inline std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTracking: return "tracking";
    case ExperimentKind::kBudgetSweep: return "budget-sweep";
    case ExperimentKind::kHistogram: return "histogram";
    case ExperimentKind::kScaling: return "scaling";
    case ExperimentKind::kUav: return "uav";
  }
  return "unknown";
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kTracking;
  int m = 50;
  int n = 400;
  int K = 55;
  int horizon = 10;
  double q_var = 0.05;
  double r_var = 0.05;
  MeasurementGeneratorSpec generator{GeneratorKind::kGaussianIid};
  std::vector<double> epsilons{0.001};
  // Budget sweep.
  std::vector<int> budgets;
  // Scaling: m = base_m * gamma, etc. for gamma in `gammas`.
  std::vector<int> gammas;
  int trials = 100;
  // Policy kinds; randomized expands into one policy per epsilon.
  std::vector<PolicyKind> policies{PolicyKind::kGreedy, PolicyKind::kRandomized, PolicyKind::kRandom};
  std::uint64_t seed = 1;
  // 0 means KSCHED_WORKERS, then the hardware concurrency.
  int workers = 0;

  void validate() const {
    if (trials < 1) throw ParameterError("trial count must be >= 1");
    if (policies.empty()) throw ParameterError("policy list is empty");
    for (int g : gammas)
      if (g < 1) throw ParameterError("gamma values must be >= 1");
    for (double e : epsilons)
      if (!(e > 0.0 && e < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  }
};

inline std::vector<int> default_budgets() { return {55, 65, 75, 85, 95, 105, 115}; }

inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::kTracking: break;
    case ExperimentKind::kBudgetSweep:
      cfg.budgets = default_budgets();
      cfg.trials = 30;
      break;
    case ExperimentKind::kHistogram:
      cfg.K = 60;
      cfg.trials = 100;
      cfg.epsilons = {0.1, 0.01, 0.001};
      cfg.policies = {PolicyKind::kGreedy, PolicyKind::kRandomized};
      break;
    case ExperimentKind::kScaling:
      cfg.m = 20;
      cfg.n = 200;
      cfg.K = 25;
      cfg.gammas = {1, 2, 4, 8};
      cfg.epsilons = {0.1, 0.01, 0.001};
      cfg.trials = 3;
      cfg.policies = {PolicyKind::kGreedy, PolicyKind::kRandomized};
      break;
    case ExperimentKind::kUav: break;
  }
  return cfg;
}

// One row of the long-format table.
struct Record {
  std::string experiment;
  std::string policy;
  // NaN for policies without an epsilon.
  double eps = std::numeric_limits<double>::quiet_NaN();
  int gamma = 1;
  int trial = 0;
  int step = 0;
  int K = 0;
  double mse = 0.0;
  double f_value = 0.0;
  std::int64_t gain_evals = 0;
  double select_time_s = 0.0;
  double sq_error = 0.0;
};

struct SummaryRow {
  std::string policy;
  double eps = std::numeric_limits<double>::quiet_NaN();
  int gamma = 1;
  int K = 0;
  int step = 0;
  int count = 0;
  double mse_mean = 0.0;
  double mse_se = 0.0;
  double sq_error_mean = 0.0;
  double time_mean = 0.0;
  double time_se = 0.0;
  double gain_evals_mean = 0.0;
};

struct Check {
  std::string name;
  bool passed = false;
  // Wall-time checks; only enforced when asked for.
  bool perf = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<Record> records;
  std::vector<SummaryRow> summary;
  std::vector<Check> checks;
  nlohmann::json config;

  bool ok(bool assert_perf) const {
    return std::all_of(checks.begin(), checks.end(),
                       [&](const Check& c) { return c.passed || (c.perf && !assert_perf); });
  }
  const Check* find_check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Statistics and small helpers.

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline bool same_eps(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KSCHED_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) on up to `workers` threads. The first
// exception is rethrown after all workers stop.
inline void parallel_for(int count, int workers, const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Expands policy kinds into concrete specs, one randomized spec per epsilon.
inline std::vector<PolicySpec> expand_policies(const std::vector<PolicyKind>& kinds,
                                               const std::vector<double>& epsilons) {
  std::vector<PolicySpec> out;
  for (PolicyKind kind : kinds) {
    if (kind == PolicyKind::kRandomized) {
      for (double e : epsilons) out.push_back(PolicySpec{kind, e});
    } else {
      out.push_back(PolicySpec{kind});
    }
  }
  return out;
}

inline double policy_eps(const PolicySpec& p) {
  return p.kind == PolicyKind::kRandomized ? p.epsilon : std::numeric_limits<double>::quiet_NaN();
}

// Selection randomness is keyed by policy so adding a policy leaves the
// streams of the others untouched.
inline std::uint64_t policy_seed(std::uint64_t trial_seed, const PolicySpec& p) {
  std::uint64_t eps_bits = 0;
  if (p.kind == PolicyKind::kRandomized) std::memcpy(&eps_bits, &p.epsilon, sizeof(eps_bits));
  return derive_seed(trial_seed, p.name(), eps_bits);
}

// Groups records by (policy, eps, gamma, K, step).
inline std::vector<SummaryRow> summarize(const std::vector<Record>& records) {
  struct Acc {
    SummaryRow row;
    std::vector<double> mse, sq, time, evals;
  };
  std::vector<Acc> groups;
  for (const Record& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Acc& a) {
      return a.row.policy == r.policy && same_eps(a.row.eps, r.eps) && a.row.gamma == r.gamma && a.row.K == r.K &&
             a.row.step == r.step;
    });
    if (it == groups.end()) {
      Acc acc;
      acc.row.policy = r.policy;
      acc.row.eps = r.eps;
      acc.row.gamma = r.gamma;
      acc.row.K = r.K;
      acc.row.step = r.step;
      groups.push_back(std::move(acc));
      it = std::prev(groups.end());
    }
    it->mse.push_back(r.mse);
    it->sq.push_back(r.sq_error);
    it->time.push_back(r.select_time_s);
    it->evals.push_back(static_cast<double>(r.gain_evals));
  }
  std::vector<SummaryRow> out;
  for (Acc& a : groups) {
    const MeanSe mse = mean_se(a.mse);
    const MeanSe t = mean_se(a.time);
    a.row.count = static_cast<int>(a.mse.size());
    a.row.mse_mean = mse.mean;
    a.row.mse_se = mse.se;
    a.row.sq_error_mean = mean_se(a.sq).mean;
    a.row.time_mean = t.mean;
    a.row.time_se = t.se;
    a.row.gain_evals_mean = mean_se(a.evals).mean;
    out.push_back(a.row);
  }
  return out;
}

inline const SummaryRow* find_summary(const std::vector<SummaryRow>& rows, const std::string& policy, double eps,
                                      int K, int step, int gamma = 1) {
  for (const auto& r : rows)
    if (r.policy == policy && same_eps(r.eps, eps) && r.K == K && r.step == step && r.gamma == gamma) return &r;
  return nullptr;
}

// Values of `field` for one group, ordered by trial.
inline std::vector<double> column(const std::vector<Record>& records, const std::string& policy, double eps, int K,
                                  int step, double Record::*field, int gamma = 1) {
  std::vector<std::pair<int, double>> v;
  for (const auto& r : records)
    if (r.policy == policy && same_eps(r.eps, eps) && r.K == K && r.step == step && r.gamma == gamma)
      v.emplace_back(r.trial, r.*field);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (const auto& p : v) out.push_back(p.second);
  return out;
}

inline std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = to_string(cfg.kind);
  j["m"] = cfg.m;
  j["n"] = cfg.n;
  j["K"] = cfg.K;
  j["horizon"] = cfg.horizon;
  j["q_var"] = cfg.q_var;
  j["r_var"] = cfg.r_var;
  j["generator"] = to_string(cfg.generator.kind);
  j["epsilons"] = cfg.epsilons;
  j["budgets"] = cfg.budgets;
  j["gammas"] = cfg.gammas;
  j["trials"] = cfg.trials;
  std::vector<std::string> names;
  for (PolicyKind k : cfg.policies) names.push_back(PolicySpec{k}.name());
  j["policies"] = names;
  j["seed"] = cfg.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Tracking: every policy filters the same world over the horizon.

// Runs all policies over `trials` trials at budget K and returns records in
// (trial, policy, step) order.
inline std::vector<Record> tracking_records(const ExperimentConfig& cfg, const std::string& experiment, int m, int n,
                                            int K, int gamma = 1) {
  const std::vector<PolicySpec> policies = expand_policies(cfg.policies, cfg.epsilons);
  std::vector<std::vector<Record>> per_trial(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, resolve_workers(cfg.workers), [&](int t) {
    const std::uint64_t base = gamma == 1 ? cfg.seed : derive_seed(cfg.seed, "gamma", static_cast<std::uint64_t>(gamma));
    const std::uint64_t instance_seed = derive_seed(base, "instance", static_cast<std::uint64_t>(t));
    const std::uint64_t trial_seed = derive_seed(base, "trial", static_cast<std::uint64_t>(t));
    const ProblemInstance inst =
        generate_instance(cfg.generator, m, n, K, cfg.horizon, cfg.q_var, cfg.r_var, instance_seed);
    const Trajectory world = simulate_world(inst, trial_seed);
    auto& out = per_trial[static_cast<std::size_t>(t)];
    for (const PolicySpec& policy : policies) {
      for (const StepRecord& s : run_filter(inst, world, policy, policy_seed(trial_seed, policy))) {
        Record r;
        r.experiment = experiment;
        r.policy = policy.name();
        r.eps = policy_eps(policy);
        r.gamma = gamma;
        r.trial = t;
        r.step = s.k;
        r.K = K;
        r.mse = s.mse;
        r.f_value = s.f_value;
        r.gain_evals = s.gain_evals;
        r.select_time_s = s.select_time_s;
        r.sq_error = s.sq_error;
        out.push_back(std::move(r));
      }
    }
  });
  std::vector<Record> records;
  for (auto& v : per_trial) records.insert(records.end(), v.begin(), v.end());
  return records;
}

// Sum of per-step selection times of one trial, per policy.
inline std::vector<double> trial_times(const std::vector<Record>& records, const std::string& policy, double eps,
                                       int K, int gamma = 1) {
  std::map<int, double> by_trial;
  for (const auto& r : records)
    if (r.policy == policy && same_eps(r.eps, eps) && r.K == K && r.gamma == gamma) by_trial[r.trial] += r.select_time_s;
  std::vector<double> out;
  for (const auto& [t, v] : by_trial) out.push_back(v);
  return out;
}

inline ExperimentReport run_tracking(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "tracking";
  rep.config = config_to_json(cfg);
  rep.records = tracking_records(cfg, rep.experiment, cfg.m, cfg.n, cfg.K);
  rep.summary = summarize(rep.records);

  const int last = cfg.horizon - 1;
  const auto has = [&](PolicyKind k) {
    return std::find(cfg.policies.begin(), cfg.policies.end(), k) != cfg.policies.end();
  };
  if (has(PolicyKind::kGreedy) && has(PolicyKind::kRandomized)) {
    const auto* g = find_summary(rep.summary, "greedy", std::numeric_limits<double>::quiet_NaN(), cfg.K, last);
    const double g_time = mean_se(trial_times(rep.records, "greedy", std::numeric_limits<double>::quiet_NaN(), cfg.K)).mean;
    for (double eps : cfg.epsilons) {
      const auto* rg = find_summary(rep.summary, "randomized", eps, cfg.K, last);
      const std::string tag = "[eps=" + format_double(eps) + "]";
      // Paired difference of final-step MSE; its standard error gives the
      // Monte Carlo slack for "greedy <= randomized".
      const auto a = column(rep.records, "randomized", eps, cfg.K, last, &Record::mse);
      const auto b = column(rep.records, "greedy", std::numeric_limits<double>::quiet_NaN(), cfg.K, last, &Record::mse);
      std::vector<double> diff(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
      const MeanSe d = mean_se(diff);
      rep.checks.push_back({"greedy_mse_le_randomized" + tag, d.mean >= -3.0 * d.se, false,
                            fmt("mean diff %.6g (se %.3g)", d.mean, d.se)});
      rep.checks.push_back({"randomized_mse_within_10pct" + tag, rg->mse_mean <= 1.10 * g->mse_mean, false,
                            fmt("randomized %.6g vs greedy %.6g", rg->mse_mean, g->mse_mean)});
      const double r_time = mean_se(trial_times(rep.records, "randomized", eps, cfg.K)).mean;
      const double ratio = g_time / r_time;
      rep.checks.push_back({"time_ratio_ge_1.5" + tag, ratio >= 1.5, true, fmt("greedy/randomized time %.3f", ratio)});
      if (has(PolicyKind::kRandom)) {
        const auto* rn = find_summary(rep.summary, "random", std::numeric_limits<double>::quiet_NaN(), cfg.K, last);
        rep.checks.push_back({"randomized_mse_lt_random" + tag, rg->mse_mean < rn->mse_mean, false,
                              fmt("randomized %.6g vs random %.6g", rg->mse_mean, rn->mse_mean)});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Budget sweep: tracking at each K, final-step means per policy.

inline ExperimentReport run_budget_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.budgets.empty()) throw ParameterError("budget sweep needs at least one K");
  ExperimentReport rep;
  rep.experiment = "budget-sweep";
  rep.config = config_to_json(cfg);
  for (int K : cfg.budgets) {
    if (K < 1 || K > cfg.n) throw ParameterError("budget out of range");
    auto part = tracking_records(cfg, rep.experiment, cfg.m, cfg.n, K);
    rep.records.insert(rep.records.end(), part.begin(), part.end());
  }
  rep.summary = summarize(rep.records);
  const int last = cfg.horizon - 1;
  const auto policies = expand_policies(cfg.policies, cfg.epsilons);
  for (const PolicySpec& p : policies) {
    const std::string tag = "[" + p.name() + (p.kind == PolicyKind::kRandomized ? " eps=" + format_double(p.epsilon) : "") + "]";
    bool monotone = true;
    std::string detail;
    for (std::size_t i = 1; i < cfg.budgets.size(); ++i) {
      const auto* lo = find_summary(rep.summary, p.name(), policy_eps(p), cfg.budgets[i - 1], last);
      const auto* hi = find_summary(rep.summary, p.name(), policy_eps(p), cfg.budgets[i], last);
      const double slack = 3.0 * std::hypot(lo->mse_se, hi->mse_se);
      if (hi->mse_mean > lo->mse_mean + slack) monotone = false;
      detail += format_double(lo->mse_mean) + (i + 1 == cfg.budgets.size() ? " " + format_double(hi->mse_mean) : " ");
    }
    rep.checks.push_back({"mse_nonincreasing_in_K" + tag, monotone, false, detail});
  }
  // Gap to greedy shrinks from the smallest to the largest budget.
  if (cfg.budgets.size() > 1 &&
      std::find(cfg.policies.begin(), cfg.policies.end(), PolicyKind::kGreedy) != cfg.policies.end()) {
    const int k_lo = cfg.budgets.front();
    const int k_hi = cfg.budgets.back();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const PolicySpec& p : policies) {
      if (p.kind == PolicyKind::kGreedy) continue;
      auto gap = [&](int K) {
        const auto a = column(rep.records, p.name(), policy_eps(p), K, last, &Record::mse);
        const auto b = column(rep.records, "greedy", nan, K, last, &Record::mse);
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        return mean_se(d);
      };
      const MeanSe g_lo = gap(k_lo);
      const MeanSe g_hi = gap(k_hi);
      const std::string tag = "[" + p.name() + (p.kind == PolicyKind::kRandomized ? " eps=" + format_double(p.epsilon) : "") + "]";
      rep.checks.push_back({"gap_to_greedy_shrinks" + tag,
                            std::abs(g_hi.mean) <= std::abs(g_lo.mean) + 3.0 * std::hypot(g_lo.se, g_hi.se), false,
                            fmt("gap %.6g at smallest K, %.6g at largest K", g_lo.mean, g_hi.mean)});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Histogram: one fixed step problem, repeated randomized selections.

inline ExperimentReport run_histogram(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "histogram";
  rep.config = config_to_json(cfg);
  const ProblemInstance inst = generate_instance(cfg.generator, cfg.m, cfg.n, cfg.K, 1, cfg.q_var, cfg.r_var,
                                                 derive_seed(cfg.seed, "instance"));
  const Matrix p = step_prior(inst, 0);
  const StepRows rows(inst.rows(0), inst.r_diag);
  auto make_record = [&](const std::string& policy, double eps, int trial, const SelectionResult& sel) {
    Record r;
    r.experiment = rep.experiment;
    r.policy = policy;
    r.eps = eps;
    r.trial = trial;
    r.K = cfg.K;
    r.mse = sel.mse;
    r.f_value = sel.f_final;
    r.gain_evals = sel.gain_evals;
    r.select_time_s = sel.wall_time;
    r.sq_error = std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  const SelectionResult greedy = greedy_select(p, rows, cfg.K);
  rep.records.push_back(make_record("greedy", std::numeric_limits<double>::quiet_NaN(), 0, greedy));
  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    const double eps = cfg.epsilons[e];
    std::vector<Record> part(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, resolve_workers(cfg.workers), [&](int t) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &eps, sizeof(bits));
      Rng rng(derive_seed(derive_seed(cfg.seed, "histogram", bits), "run", static_cast<std::uint64_t>(t)));
      part[static_cast<std::size_t>(t)] =
          make_record("randomized", eps, t, randomized_greedy_select(p, rows, cfg.K, SamplingConfig{eps}, rng));
    });
    rep.records.insert(rep.records.end(), part.begin(), part.end());
  }
  rep.summary = summarize(rep.records);

  // Sort epsilons from large to small and require the distance to greedy
  // to shrink (within 3 sigma) at each step.
  std::vector<double> eps_sorted = cfg.epsilons;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());
  bool trend = true;
  std::string detail;
  for (std::size_t i = 0; i < eps_sorted.size(); ++i) {
    const auto* s = find_summary(rep.summary, "randomized", eps_sorted[i], cfg.K, 0);
    detail += "eps=" + format_double(eps_sorted[i]) + ": |mean-greedy|=" + format_double(std::abs(s->mse_mean - greedy.mse)) + " ";
    if (i == 0) continue;
    const auto* prev = find_summary(rep.summary, "randomized", eps_sorted[i - 1], cfg.K, 0);
    const double slack = 3.0 * std::hypot(s->mse_se, prev->mse_se);
    if (std::abs(s->mse_mean - greedy.mse) > std::abs(prev->mse_mean - greedy.mse) + slack) trend = false;
  }
  rep.checks.push_back({"mse_approaches_greedy_as_eps_decreases", trend, false, detail});
  return rep;
}

// ---------------------------------------------------------------------------
// Scaling: the tracking protocol at m, n, K multiplied by gamma. Times are
// per-trial totals of per-step selection times; MSE is the final step's.

inline ExperimentReport run_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.gammas.empty()) throw ParameterError("scaling needs at least one gamma");
  ExperimentReport rep;
  rep.experiment = "scaling";
  rep.config = config_to_json(cfg);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ExperimentConfig run = cfg;
  run.policies = {PolicyKind::kGreedy, PolicyKind::kRandomized};
  for (int gamma : cfg.gammas) {
    auto part = tracking_records(run, rep.experiment, cfg.m * gamma, cfg.n * gamma, cfg.K * gamma, gamma);
    rep.records.insert(rep.records.end(), part.begin(), part.end());
  }
  rep.summary = summarize(rep.records);
  const int last = cfg.horizon - 1;

  for (double eps : cfg.epsilons) {
    const std::string tag = "[eps=" + format_double(eps) + "]";
    std::vector<double> ratios;
    bool counts_ok = true;
    bool gap_ok = true;
    std::string ratio_detail, gap_detail;
    for (int gamma : cfg.gammas) {
      const int n = cfg.n * gamma;
      const int K = cfg.K * gamma;
      const double ratio = mean_se(trial_times(rep.records, "greedy", nan, K, gamma)).mean /
                           mean_se(trial_times(rep.records, "randomized", eps, K, gamma)).mean;
      ratios.push_back(ratio);
      ratio_detail += fmt("%.3f ", ratio);
      for (const auto& r : rep.records) {
        if (r.gamma != gamma) continue;
        if (r.policy == "greedy") counts_ok = counts_ok && r.gain_evals == greedy_eval_count(n, K);
        if (r.policy == "randomized" && same_eps(r.eps, eps))
          counts_ok = counts_ok && r.gain_evals == randomized_eval_count(n, K, eps);
      }
      const auto* g = find_summary(rep.summary, "greedy", nan, K, last, gamma);
      const auto* rg = find_summary(rep.summary, "randomized", eps, K, last, gamma);
      const double gap = std::abs(rg->mse_mean - g->mse_mean) / g->mse_mean;
      gap_detail += fmt("%.4f ", gap);
      gap_ok = gap_ok && gap <= 0.05;
    }
    bool increasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] > ratios[i - 1];
    rep.checks.push_back({"time_ratio_increasing_in_gamma" + tag, increasing, true, ratio_detail});
    rep.checks.push_back({"eval_counts_match_closed_forms" + tag, counts_ok, false, ""});
    if (std::abs(eps - 0.001) < 1e-15) {
      rep.checks.push_back({"mse_gap_le_5pct" + tag, gap_ok, false, gap_detail});
      const auto it = std::find(cfg.gammas.begin(), cfg.gammas.end(), 8);
      if (it != cfg.gammas.end()) {
        const double r8 = ratios[static_cast<std::size_t>(it - cfg.gammas.begin())];
        rep.checks.push_back({"speedup_ge_3_at_gamma8" + tag, r8 >= 3.0, true, fmt("%.3f", r8)});
      }
    }
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::kTracking: return run_tracking(cfg);
    case ExperimentKind::kBudgetSweep: return run_budget_sweep(cfg);
    case ExperimentKind::kHistogram: return run_histogram(cfg);
    case ExperimentKind::kScaling: return run_scaling(cfg);
    case ExperimentKind::kUav: break;
  }
  throw ParameterError("use run_uav_experiment for the uav scenario");
}

// ---------------------------------------------------------------------------
// Writers.

inline const char* kCsvHeader =
    "experiment,policy,eps,gamma,trial,step,K,mse,f_value,gain_evals,select_time_s,sq_error";

inline std::string csv_row(const Record& r) {
  std::ostringstream os;
  os << r.experiment << ',' << r.policy << ',' << format_double(r.eps) << ',' << r.gamma << ',' << r.trial << ','
     << r.step << ',' << r.K << ',' << format_double(r.mse) << ',' << format_double(r.f_value) << ',' << r.gain_evals
     << ',' << format_double(r.select_time_s) << ',' << format_double(r.sq_error);
  return os.str();
}

inline void write_csv(const std::vector<Record>& records, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) os << csv_row(r) << '\n';
}

inline nlohmann::json nullable(double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); }

inline nlohmann::json summary_to_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["experiment"] = rep.experiment;
  j["config"] = rep.config;
  j["summary"] = nlohmann::json::array();
  for (const auto& s : rep.summary) {
    j["summary"].push_back({{"policy", s.policy},
                            {"eps", nullable(s.eps)},
                            {"gamma", s.gamma},
                            {"K", s.K},
                            {"step", s.step},
                            {"count", s.count},
                            {"mse_mean", s.mse_mean},
                            {"mse_se", s.mse_se},
                            {"sq_error_mean", nullable(s.sq_error_mean)},
                            {"select_time_mean_s", s.time_mean},
                            {"select_time_se_s", s.time_se},
                            {"gain_evals_mean", s.gain_evals_mean}});
  }
  j["checks"] = nlohmann::json::array();
  for (const auto& c : rep.checks)
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"perf", c.perf}, {"detail", c.detail}});
  return j;
}

// Writes <dir>/<experiment>.csv and <dir>/<experiment>_summary.json.
inline void write_report(const ExperimentReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (rep.experiment + ".csv"));
  write_csv(rep.records, csv);
  std::ofstream js(dir / (rep.experiment + "_summary.json"));
  js << summary_to_json(rep).dump(2) << '\n';
  if (!csv || !js) throw std::runtime_error("failed to write report to " + dir.string());
}

}  // namespace ksched

#endif  // KSCHED_EXPERIMENTS_HPP_
