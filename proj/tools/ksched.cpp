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

// ksched: instance generation, experiments, curvature diagnostics and
// selection-file scoring.
//
// Exit codes: 0 success, 1 a check failed, 2 bad arguments, 3 bad input file.

#include "ksched/curvature.hpp"
#include "ksched/experiments.hpp"
#include "ksched/selection_file.hpp"
#include "ksched/uav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ksched;

struct CommonFlags {
  int m = 0;
  int n = 0;
  int k = 0;
  int horizon = 0;
  std::vector<double> eps;
  int trials = 0;
  int gamma_max = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string policies;
  bool assert_perf = false;
  int workers = 0;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--m", f.m, "state dimension");
  app->add_option("--n", f.n, "number of sensors");
  app->add_option("--k", f.k, "sensor budget K");
  app->add_option("--horizon", f.horizon, "time steps per trial");
  app->add_option("--eps", f.eps, "epsilon values for randomized greedy")->delimiter(',');
  app->add_option("--trials", f.trials, "Monte Carlo trials");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--policies", f.policies, "comma-separated: greedy,randomized,random,exhaustive,all");
  app->add_flag("--assert-perf", f.assert_perf, "fail on wall-time checks too");
  app->add_option("--workers", f.workers, "parallel trials (default: KSCHED_WORKERS or all cores)");
}

std::vector<PolicyKind> parse_policies(const std::string& list) {
  std::vector<PolicyKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(policy_kind_from_string(item));
  return out;
}

void apply(const CommonFlags& f, ExperimentConfig& cfg) {
  if (f.m) cfg.m = f.m;
  if (f.n) cfg.n = f.n;
  if (f.k) cfg.K = f.k;
  if (f.horizon) cfg.horizon = f.horizon;
  if (!f.eps.empty()) cfg.epsilons = f.eps;
  if (f.trials) cfg.trials = f.trials;
  if (f.gamma_max) {
    cfg.gammas.clear();
    for (int g = 1; g <= f.gamma_max; g *= 2) cfg.gammas.push_back(g);
  }
  cfg.seed = f.seed;
  if (!f.policies.empty()) cfg.policies = parse_policies(f.policies);
  cfg.workers = f.workers;
}

int report_checks(const std::vector<Check>& checks, bool assert_perf) {
  int failed = 0;
  for (const auto& c : checks) {
    const char* status = c.passed ? "PASS" : (c.perf && !assert_perf ? "SKIP" : "FAIL");
    if (!c.passed && !(c.perf && !assert_perf)) ++failed;
    std::printf("%s %s%s %s\n", status, c.name.c_str(), c.perf ? " (perf)" : "", c.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}

int run_experiment_command(ExperimentKind kind, const CommonFlags& f) {
  ExperimentConfig cfg = default_config(kind);
  apply(f, cfg);
  if (kind == ExperimentKind::kBudgetSweep && f.k) cfg.budgets = {f.k};
  const ExperimentReport rep = run_experiment(cfg);
  write_report(rep, f.out.empty() ? "results" : f.out);
  return report_checks(rep.checks, f.assert_perf);
}

void print_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(out);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted sensor selection for Kalman filtering"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, sweep_f, hist_f, scale_f, uav_f;
  std::string generator = "gaussian";
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  add_common(gen, gen_f);
  gen->add_option("--generator", generator, "gaussian or bernoulli");
  auto* run = app.add_subcommand("run", "tracking comparison over the horizon");
  add_common(run, run_f);
  auto* sweep = app.add_subcommand("sweep", "budget sweep over K = 55..115");
  add_common(sweep, sweep_f);
  auto* hist = app.add_subcommand("hist", "repeated randomized selections on one step");
  add_common(hist, hist_f);
  auto* scale = app.add_subcommand("scale", "selection time and MSE as dimensions grow");
  add_common(scale, scale_f);
  scale->add_option("--gamma-max", scale_f.gamma_max, "largest gamma (powers of two up to it)");

  std::string curv_instance;
  int curv_step = 0;
  CommonFlags curv_f;
  auto* curv = app.add_subcommand("curv", "brute-force curvature and bounds for one step");
  add_common(curv, curv_f);
  curv->add_option("--instance", curv_instance, "instance file (default: generate one)");
  curv->add_option("--step", curv_step, "time step");

  std::string uav_config;
  bool uav_calibrate = false;
  auto* uav = app.add_subcommand("uav", "UAV multi-object tracking scenario");
  add_common(uav, uav_f);
  uav->add_option("--config", uav_config, "scenario config file");
  uav->add_flag("--calibrate", uav_calibrate, "print the detection radius for ~600 measurements and exit");

  std::string score_instance, score_selection_path, score_out;
  auto* score = app.add_subcommand("score", "score a selection file against an instance");
  score->add_option("--instance", score_instance, "instance file")->required();
  score->add_option("--selection", score_selection_path, "selection file")->required();
  score->add_option("--out", score_out, "write the score here instead of stdout");

  std::string select_instance, select_out, select_policy = "greedy";
  int select_step = 0;
  double select_eps = 0.001;
  std::uint64_t select_seed = 1;
  auto* select = app.add_subcommand("select", "write a selection file for one step");
  select->add_option("--instance", select_instance, "instance file")->required();
  select->add_option("--step", select_step, "time step");
  select->add_option("--policy", select_policy, "selection policy");
  select->add_option("--eps", select_eps, "epsilon for randomized greedy");
  select->add_option("--seed", select_seed, "seed for randomized policies");
  select->add_option("--out", select_out, "selection file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const int m = gen_f.m ? gen_f.m : 50;
      const int n = gen_f.n ? gen_f.n : 400;
      const int K = gen_f.k ? gen_f.k : 55;
      const int T = gen_f.horizon ? gen_f.horizon : 10;
      const std::string kind = generator == "gaussian"    ? "gaussian-iid"
                               : generator == "bernoulli" ? "bernoulli-centered"
                                                          : generator;
      const MeasurementGeneratorSpec spec{generator_kind_from_string(kind)};
      const ProblemInstance inst = generate_instance(spec, m, n, K, T, 0.05, 0.05, gen_f.seed);
      save_instance(inst, gen_f.out.empty() ? "instance.json" : gen_f.out);
      return 0;
    }
    if (*run) return run_experiment_command(ExperimentKind::kTracking, run_f);
    if (*sweep) return run_experiment_command(ExperimentKind::kBudgetSweep, sweep_f);
    if (*hist) return run_experiment_command(ExperimentKind::kHistogram, hist_f);
    if (*scale) return run_experiment_command(ExperimentKind::kScaling, scale_f);
    if (*curv) {
      ProblemInstance inst;
      if (!curv_instance.empty()) {
        inst = load_instance(curv_instance);
      } else {
        inst = generate_instance({GeneratorKind::kGaussianIid}, curv_f.m ? curv_f.m : 3, curv_f.n ? curv_f.n : 10,
                                 curv_f.k ? curv_f.k : 3, std::max(curv_step + 1, 1), 0.05, 0.05, curv_f.seed);
      }
      const double eps = curv_f.eps.empty() ? 0.1 : curv_f.eps.front();
      const Matrix p = step_prior(inst, curv_step);
      const StepRows rows(inst.rows(curv_step), inst.r_diag);
      const CurvatureReport rep = curvature_report(p, rows, inst.K, eps);
      nlohmann::json j;
      j["step"] = curv_step;
      j["C_l"] = rep.curvatures;
      j["C_max"] = rep.c_max;
      j["C_of_r"] = rep.aggregated;
      j["zero_rows"] = rep.zero_rows;
      j["c"] = rep.c;
      j["phi"] = nullable(rep.phi);
      j["bound_phic"] = nullable(rep.bound_phic);
      j["condition_holds"] = rep.condition_holds;
      j["alpha"] = rep.alpha;
      j["alpha_greedy"] = rep.alpha_greedy;
      j["eps"] = eps;
      print_json(j, curv_f.out);
      return 0;
    }
    if (*uav) {
      UavConfig cfg;
      if (!uav_config.empty()) {
        std::ifstream is(uav_config);
        if (!is) throw ParseError("<document>", "cannot open " + uav_config);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::parse_error& e) {
          throw ParseError("<document>", e.what());
        }
        cfg = uav_config_from_json(j);
      }
      if (uav_calibrate) {
        std::printf("%.4f\n", calibrate_detection_radius(cfg, 600.0, 200, uav_f.seed));
        return 0;
      }
      if (uav_f.k) cfg.K = uav_f.k;
      if (uav_f.horizon) cfg.horizon = uav_f.horizon;
      if (!uav_f.eps.empty()) cfg.epsilons = uav_f.eps;
      if (uav_f.trials) cfg.trials = uav_f.trials;
      if (!uav_f.policies.empty()) cfg.policies = parse_policies(uav_f.policies);
      cfg.seed = uav_f.seed;
      cfg.workers = uav_f.workers;
      const UavReport rep = run_uav_experiment(cfg);
      write_uav_report(rep, uav_f.out.empty() ? "results" : uav_f.out);
      return report_checks(rep.report.checks, uav_f.assert_perf);
    }
    if (*score) {
      const ProblemInstance inst = load_instance(score_instance);
      const SelectionScore s = score_selection(inst, load_selection(score_selection_path));
      print_json(score_to_json(s), score_out);
      return 0;
    }
    if (*select) {
      const ProblemInstance inst = load_instance(select_instance);
      const Matrix p = step_prior(inst, select_step);
      Rng rng(select_seed);
      const SelectionResult sel = select_sensors(PolicySpec{policy_kind_from_string(select_policy), select_eps}, p,
                                                 StepRows(inst.rows(select_step), inst.r_diag), inst.K, rng);
      save_selection(SelectionFile{select_step, inst.K, sel.selected, select_policy}, select_out);
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "ksched: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "ksched: %s\n", e.what());
    return 3;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "ksched: %s\n", e.what());
    return 2;
  } catch (const CapExceededError& e) {
    std::fprintf(stderr, "ksched: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ksched: %s\n", e.what());
    return 1;
  }
  return 0;
}
