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

// Multi-object tracking by a UAV patrol with range/bearing radars.
//
// UAVs fly one shared boustrophedon path over the area (lanes parallel to
// the y axis, spaced width / num_uavs apart), back and forth, each starting
// at its own phase along the path. Objects take a step of fixed length in
// a freshly drawn direction every time step and reflect off the borders.
// Every UAV within the detection radius of an object returns a range and a
// bearing. The scheduler picks K of these scalar measurements per step and
// an EKF on the stacked 2-D object positions consumes them.

#ifndef KSCHED_UAV_HPP_
#define KSCHED_UAV_HPP_

#include "ksched/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace ksched {

using Vec2 = Eigen::Vector2d;

// Radius giving about 600 measurements per step for the default geometry;
// produced by calibrate_detection_radius() and frozen.
inline constexpr double kDefaultDetectionRadius = 5.44;

enum class FilterMode {
  // One gain-form update on the stacked state with all selected rows.
  kJoint,
  // Independent updates per object; identical result up to rounding.
  kPerObject,
};

struct UavConfig {
  int num_objects = 20;
  int num_uavs = 20;
  double width = 5.0;
  double height = 10.0;
  double object_speed = 0.2;
  double uav_speed = 0.5;
  double sigma_r2 = 0.05;
  double sigma_theta2 = 0.05;
  double q_var = 0.05;
  // Initial belief: mean drawn around the truth with this variance, and
  // covariance p0 I.
  double p0 = 0.1;
  double detection_radius = kDefaultDetectionRadius;
  int K = 100;
  int horizon = 20;
  int trials = 3;
  std::vector<double> epsilons{0.1, 0.01, 0.001};
  std::vector<PolicyKind> policies{PolicyKind::kGreedy, PolicyKind::kRandomized, PolicyKind::kAll};
  std::uint64_t seed = 1;
  FilterMode filter = FilterMode::kJoint;
  int workers = 0;

  int state_dim() const { return 2 * num_objects; }
  // Length of the patrol path: all lanes plus the hops between them.
  double path_length() const { return num_uavs * height + (num_uavs - 1) * lane_spacing(); }
  double lane_spacing() const { return width / num_uavs; }

  void validate() const {
    if (num_objects < 1 || num_uavs < 1) throw ParameterError("need at least one object and one UAV");
    if (!(width > 0.0) || !(height > 0.0)) throw ParameterError("area must be positive");
    if (object_speed < 0.0 || uav_speed < 0.0) throw ParameterError("speeds must be non-negative");
    if (!(sigma_r2 > 0.0) || !(sigma_theta2 > 0.0)) throw ParameterError("noise variances must be positive");
    if (!(q_var > 0.0) || !(p0 > 0.0)) throw ParameterError("q_var and p0 must be positive");
    if (!(detection_radius > 0.0)) throw ParameterError("detection radius must be positive");
    if (K < 1) throw ParameterError("K must be >= 1");
    if (horizon < 1 || trials < 1) throw ParameterError("horizon and trials must be >= 1");
    if (policies.empty()) throw ParameterError("policy list is empty");
  }
};

inline nlohmann::json uav_config_to_json(const UavConfig& c) {
  std::vector<std::string> names;
  for (PolicyKind k : c.policies) names.push_back(PolicySpec{k}.name());
  return {{"num_objects", c.num_objects},
          {"num_uavs", c.num_uavs},
          {"width", c.width},
          {"height", c.height},
          {"object_speed", c.object_speed},
          {"uav_speed", c.uav_speed},
          {"sigma_r2", c.sigma_r2},
          {"sigma_theta2", c.sigma_theta2},
          {"q_var", c.q_var},
          {"p0", c.p0},
          {"detection_radius", c.detection_radius},
          {"K", c.K},
          {"horizon", c.horizon},
          {"trials", c.trials},
          {"epsilons", c.epsilons},
          {"policies", names},
          {"seed", c.seed},
          {"filter", c.filter == FilterMode::kJoint ? "joint" : "per-object"}};
}

// Missing keys keep their defaults.
inline UavConfig uav_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("<document>", "scenario config must be a JSON object");
  UavConfig c;
  auto get = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(key, e.what());
    }
  };
  get("num_objects", c.num_objects);
  get("num_uavs", c.num_uavs);
  get("width", c.width);
  get("height", c.height);
  get("object_speed", c.object_speed);
  get("uav_speed", c.uav_speed);
  get("sigma_r2", c.sigma_r2);
  get("sigma_theta2", c.sigma_theta2);
  get("q_var", c.q_var);
  get("p0", c.p0);
  get("detection_radius", c.detection_radius);
  get("K", c.K);
  get("horizon", c.horizon);
  get("trials", c.trials);
  get("epsilons", c.epsilons);
  get("seed", c.seed);
  if (j.contains("policies")) {
    std::vector<std::string> names;
    get("policies", names);
    c.policies.clear();
    for (const auto& n : names) c.policies.push_back(policy_kind_from_string(n));
  }
  if (j.contains("filter")) {
    std::string f;
    get("filter", f);
    if (f == "joint") c.filter = FilterMode::kJoint;
    else if (f == "per-object") c.filter = FilterMode::kPerObject;
    else throw ParseError("filter", "expected 'joint' or 'per-object'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// World.

struct WorldState {
  std::vector<Vec2> objects;
  std::vector<Vec2> uavs;
  int k = 0;
};

// Position at arc length s along the path, which is walked forwards and then
// backwards with period twice its length.
inline Vec2 patrol_point(const UavConfig& c, double s) {
  const double len = c.path_length();
  s = std::fmod(s, 2.0 * len);
  if (s < 0.0) s += 2.0 * len;
  if (s > len) s = 2.0 * len - s;
  const double seg = c.height + c.lane_spacing();
  int lane = static_cast<int>(s / seg);
  double along = s - lane * seg;
  if (lane >= c.num_uavs) {
    lane = c.num_uavs - 1;
    along = c.height;
  }
  const double x0 = (lane + 0.5) * c.lane_spacing();
  const bool up = lane % 2 == 0;
  if (along <= c.height) return Vec2(x0, up ? along : c.height - along);
  // Hop to the next lane along the top or bottom edge.
  return Vec2(x0 + (along - c.height), up ? c.height : 0.0);
}

inline Vec2 uav_position(const UavConfig& c, int u, int k) {
  const double phase = u * c.path_length() / c.num_uavs;
  return patrol_point(c, phase + k * c.uav_speed);
}

// Moves by speed * (cos h, sin h) and reflects off the rectangle borders.
inline Vec2 move_object(const Vec2& p, double heading, double speed, double width, double height) {
  Vec2 q = p + speed * Vec2(std::cos(heading), std::sin(heading));
  auto reflect = [](double v, double hi) {
    for (int i = 0; i < 8 && (v < 0.0 || v > hi); ++i) v = v < 0.0 ? -v : 2.0 * hi - v;
    return std::clamp(v, 0.0, hi);
  };
  return Vec2(reflect(q.x(), width), reflect(q.y(), height));
}

inline WorldState initial_world(const UavConfig& c, Rng& rng) {
  WorldState w;
  for (int i = 0; i < c.num_objects; ++i) w.objects.emplace_back(rng.uniform(0.0, c.width), rng.uniform(0.0, c.height));
  for (int u = 0; u < c.num_uavs; ++u) w.uavs.push_back(uav_position(c, u, 0));
  return w;
}

inline WorldState step_world(const UavConfig& c, const WorldState& w, Rng& rng) {
  WorldState next;
  next.k = w.k + 1;
  for (const Vec2& p : w.objects) {
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    next.objects.push_back(move_object(p, heading, c.object_speed, c.width, c.height));
  }
  for (int u = 0; u < c.num_uavs; ++u) next.uavs.push_back(uav_position(c, u, next.k));
  return next;
}

// ---------------------------------------------------------------------------
// Radar.

struct RadarMeasurement {
  int uav = 0;
  int object = 0;
  double range = 0.0;
  double bearing = 0.0;
  double var_r = 0.0;
  double var_theta = 0.0;
};

// Wraps into (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

// Noise-free (range, bearing) of `x` seen from `sensor`. Bearing is 0 when
// the two coincide.
inline Vec2 radar_model(const Vec2& x, const Vec2& sensor) {
  const Vec2 d = x - sensor;
  return Vec2(d.norm(), std::atan2(d.y(), d.x()));
}

// Rows: range then bearing, derivatives with respect to x. Returns false
// when the predicted range is below 1e-6 and the linearization is singular.
inline bool radar_jacobian(const Vec2& x, const Vec2& sensor, Eigen::Matrix2d& jac) {
  const Vec2 d = x - sensor;
  const double r = d.norm();
  if (r < 1e-6) return false;
  jac << d.x() / r, d.y() / r, -d.y() / (r * r), d.x() / (r * r);
  return true;
}

inline std::vector<RadarMeasurement> sense(const UavConfig& c, const WorldState& w, Rng& rng) {
  std::vector<RadarMeasurement> out;
  const double sr = std::sqrt(c.sigma_r2);
  const double st = std::sqrt(c.sigma_theta2);
  for (int u = 0; u < static_cast<int>(w.uavs.size()); ++u) {
    for (int o = 0; o < static_cast<int>(w.objects.size()); ++o) {
      const Vec2 truth = radar_model(w.objects[o], w.uavs[u]);
      if (truth(0) > c.detection_radius) continue;
      RadarMeasurement m;
      m.uav = u;
      m.object = o;
      m.range = truth(0) + sr * rng.normal();
      m.bearing = wrap_angle(truth(1) + st * rng.normal());
      m.var_r = c.sigma_r2;
      m.var_theta = c.sigma_theta2;
      out.push_back(m);
    }
  }
  return out;
}

// Mean scalar measurement count per step over `steps` steps of the default
// trajectory, and a bisection on the radius to hit `target`.
inline double mean_measurement_count(UavConfig c, int steps, std::uint64_t seed) {
  Rng rng(seed);
  WorldState w = initial_world(c, rng);
  double total = 0.0;
  for (int k = 0; k < steps; ++k) {
    total += 2.0 * static_cast<double>(sense(c, w, rng).size());
    w = step_world(c, w, rng);
  }
  return total / steps;
}

inline double calibrate_detection_radius(UavConfig c, double target, int steps, std::uint64_t seed) {
  double lo = 0.0;
  double hi = std::hypot(c.width, c.height);
  for (int it = 0; it < 40; ++it) {
    c.detection_radius = 0.5 * (lo + hi);
    if (mean_measurement_count(c, steps, seed) < target) lo = c.detection_radius;
    else hi = c.detection_radius;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// EKF over the stacked object positions.

struct Belief {
  Vector mean;
  Matrix cov;
};

// Linearized candidate rows for one step; rows 2i and 2i+1 are the range
// and bearing of the i-th accepted measurement.
struct CandidateSet {
  RowMatrix H;
  Vector r;
  // y - h(x_pred), bearing wrapped.
  Vector innovation;
  std::vector<int> object;
  int rejected = 0;
};

inline CandidateSet build_candidates(const Belief& pred, const std::vector<RadarMeasurement>& meas,
                                     const std::vector<Vec2>& uavs) {
  const int dim = static_cast<int>(pred.mean.size());
  std::vector<const RadarMeasurement*> kept;
  std::vector<Eigen::Matrix2d> jacs;
  for (const auto& m : meas) {
    Eigen::Matrix2d jac;
    if (!radar_jacobian(pred.mean.segment<2>(2 * m.object), uavs[static_cast<std::size_t>(m.uav)], jac)) continue;
    kept.push_back(&m);
    jacs.push_back(jac);
  }
  CandidateSet c;
  c.rejected = static_cast<int>(meas.size() - kept.size());
  const int rows = 2 * static_cast<int>(kept.size());
  c.H = RowMatrix::Zero(rows, dim);
  c.r.resize(rows);
  c.innovation.resize(rows);
  for (int i = 0; i < static_cast<int>(kept.size()); ++i) {
    const RadarMeasurement& m = *kept[static_cast<std::size_t>(i)];
    const Vec2 h = radar_model(pred.mean.segment<2>(2 * m.object), uavs[static_cast<std::size_t>(m.uav)]);
    c.H.block<2, 2>(2 * i, 2 * m.object) = jacs[static_cast<std::size_t>(i)];
    c.r(2 * i) = m.var_r;
    c.r(2 * i + 1) = m.var_theta;
    c.innovation(2 * i) = m.range - h(0);
    c.innovation(2 * i + 1) = wrap_angle(m.bearing - h(1));
    c.object.push_back(m.object);
    c.object.push_back(m.object);
  }
  return c;
}

// Gain-form update with the Joseph covariance form on the given rows.
inline void gain_update(Vector& mean, Matrix& cov, const RowMatrix& h, const Vector& r, const Vector& innovation) {
  if (h.rows() == 0) return;
  const Matrix ph = cov * h.transpose();
  Matrix s = h * ph;
  s.diagonal() += r;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw InternalError("innovation covariance is not positive definite");
  const Matrix gain = llt.solve(ph.transpose()).transpose();
  mean += gain * innovation;
  Matrix ikh = Matrix::Identity(cov.rows(), cov.cols()) - gain * h;
  Matrix next = ikh * cov * ikh.transpose() + gain * r.asDiagonal() * gain.transpose();
  symmetrize(next);
  cov = std::move(next);
}

inline void ekf_update(Belief& b, const CandidateSet& c, const IndexList& selected, FilterMode mode) {
  if (selected.empty()) return;
  if (mode == FilterMode::kJoint) {
    const int k = static_cast<int>(selected.size());
    RowMatrix h(k, c.H.cols());
    Vector r(k), nu(k);
    for (int i = 0; i < k; ++i) {
      h.row(i) = c.H.row(selected[static_cast<std::size_t>(i)]);
      r(i) = c.r(selected[static_cast<std::size_t>(i)]);
      nu(i) = c.innovation(selected[static_cast<std::size_t>(i)]);
    }
    gain_update(b.mean, b.cov, h, r, nu);
    return;
  }
  const int objects = static_cast<int>(b.mean.size() / 2);
  for (int o = 0; o < objects; ++o) {
    std::vector<int> rows;
    for (int j : selected)
      if (c.object[static_cast<std::size_t>(j)] == o) rows.push_back(j);
    if (rows.empty()) continue;
    const int k = static_cast<int>(rows.size());
    RowMatrix h(k, 2);
    Vector r(k), nu(k);
    for (int i = 0; i < k; ++i) {
      h.row(i) = c.H.block<1, 2>(rows[static_cast<std::size_t>(i)], 2 * o);
      r(i) = c.r(rows[static_cast<std::size_t>(i)]);
      nu(i) = c.innovation(rows[static_cast<std::size_t>(i)]);
    }
    Vector mean = b.mean.segment<2>(2 * o);
    Matrix cov = b.cov.block<2, 2>(2 * o, 2 * o);
    gain_update(mean, cov, h, r, nu);
    b.mean.segment<2>(2 * o) = mean;
    b.cov.block<2, 2>(2 * o, 2 * o) = cov;
  }
}

struct EkfStepResult {
  IndexList selected;
  int candidates = 0;
  int rejected = 0;
  std::int64_t gain_evals = 0;
  double f_value = 0.0;
  double select_time_s = 0.0;
  // Linearization plus update.
  double filter_time_s = 0.0;
};

// Predict (random walk), linearize every measurement about the prediction,
// select K rows (or all of them) and update.
inline EkfStepResult ekf_step(const UavConfig& c, Belief& b, const std::vector<RadarMeasurement>& meas,
                              const std::vector<Vec2>& uavs, const PolicySpec& policy, Rng& rng) {
  EkfStepResult out;
  b.cov.diagonal().array() += c.q_var;
  Stopwatch lin;
  const CandidateSet cand = build_candidates(b, meas, uavs);
  double filter_time = lin.seconds();
  out.candidates = static_cast<int>(cand.H.rows());
  out.rejected = cand.rejected;
  const int K = std::min(c.K, out.candidates);
  if (policy.kind == PolicyKind::kAll) {
    out.selected.resize(static_cast<std::size_t>(out.candidates));
    std::iota(out.selected.begin(), out.selected.end(), 0);
  } else if (K > 0) {
    // The budget can exceed what randomized sampling accepts when few
    // candidates are in range; fall back to the smallest legal epsilon.
    PolicySpec p = policy;
    if (p.kind == PolicyKind::kRandomized) p.epsilon = std::max(p.epsilon, std::exp(-static_cast<double>(K)));
    const SelectionResult sel = select_sensors(p, b.cov, StepRows(cand.H, cand.r), K, rng);
    out.selected = sel.selected;
    out.gain_evals = sel.gain_evals;
    out.f_value = sel.f_final;
    out.select_time_s = sel.wall_time;
  }
  Stopwatch upd;
  ekf_update(b, cand, out.selected, c.filter);
  out.filter_time_s = filter_time + upd.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// Experiment.

struct UavObjectRecord {
  Record base;
  int object_id = 0;
  double true_x = 0.0;
  double true_y = 0.0;
  double est_x = 0.0;
  double est_y = 0.0;
};

struct UavPolicySummary {
  std::string policy;
  double eps = std::numeric_limits<double>::quiet_NaN();
  double mse_mean = 0.0;
  double mse_se = 0.0;
  double select_time_s = 0.0;
  double filter_time_s = 0.0;
  double combined_time_s = 0.0;
  double measurements_per_step = 0.0;
  double min_cov_eigenvalue = 0.0;
};

struct UavReport {
  ExperimentReport report;
  std::vector<UavObjectRecord> objects;
  std::vector<UavPolicySummary> policies;
  UavConfig config;
};

inline Belief initial_belief(const UavConfig& c, const WorldState& w, Rng& rng) {
  Belief b;
  b.mean.resize(c.state_dim());
  for (int o = 0; o < c.num_objects; ++o) {
    b.mean(2 * o) = w.objects[static_cast<std::size_t>(o)].x() + std::sqrt(c.p0) * rng.normal();
    b.mean(2 * o + 1) = w.objects[static_cast<std::size_t>(o)].y() + std::sqrt(c.p0) * rng.normal();
  }
  b.cov = c.p0 * Matrix::Identity(c.state_dim(), c.state_dim());
  return b;
}

inline UavReport run_uav_experiment(const UavConfig& c) {
  c.validate();
  UavReport out;
  out.config = c;
  out.report.experiment = "uav";
  out.report.config = uav_config_to_json(c);
  const std::vector<PolicySpec> policies = expand_policies(c.policies, c.epsilons);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  struct TrialResult {
    std::vector<UavObjectRecord> rows;
    // Per policy: sum of select and filter times, measurement count, min
    // covariance eigenvalue seen.
    std::vector<double> select_time, filter_time, meas, min_eig;
  };
  std::vector<TrialResult> trials(static_cast<std::size_t>(c.trials));
  parallel_for(c.trials, resolve_workers(c.workers), [&](int t) {
    const std::uint64_t trial_seed = derive_seed(c.seed, "trial", static_cast<std::uint64_t>(t));
    // Ground truth and radar returns are shared by all policies.
    std::vector<WorldState> worlds;
    std::vector<std::vector<RadarMeasurement>> returns;
    Rng init(derive_seed(trial_seed, "world"));
    worlds.push_back(initial_world(c, init));
    for (int k = 0; k < c.horizon; ++k) {
      if (k > 0) {
        Rng step(derive_seed(trial_seed, "move", static_cast<std::uint64_t>(k)));
        worlds.push_back(step_world(c, worlds.back(), step));
      }
      Rng radar(derive_seed(trial_seed, "radar", static_cast<std::uint64_t>(k)));
      returns.push_back(sense(c, worlds.back(), radar));
    }
    TrialResult& tr = trials[static_cast<std::size_t>(t)];
    for (const PolicySpec& policy : policies) {
      Rng belief_rng(derive_seed(trial_seed, "belief"));
      Belief b = initial_belief(c, worlds.front(), belief_rng);
      double sel_time = 0.0, filt_time = 0.0, meas = 0.0;
      double min_eig = std::numeric_limits<double>::infinity();
      for (int k = 0; k < c.horizon; ++k) {
        const WorldState& w = worlds[static_cast<std::size_t>(k)];
        Rng rng(derive_seed(policy_seed(trial_seed, policy), "select", static_cast<std::uint64_t>(k)));
        const EkfStepResult step = ekf_step(c, b, returns[static_cast<std::size_t>(k)], w.uavs, policy, rng);
        sel_time += step.select_time_s;
        filt_time += step.filter_time_s;
        meas += step.candidates;
        min_eig = std::min(min_eig, lambda_min(b.cov));
        double mse = 0.0;
        std::vector<double> errs;
        for (int o = 0; o < c.num_objects; ++o) {
          const double e = (b.mean.segment<2>(2 * o) - w.objects[static_cast<std::size_t>(o)]).squaredNorm();
          errs.push_back(e);
          mse += e;
        }
        mse /= c.num_objects;
        for (int o = 0; o < c.num_objects; ++o) {
          UavObjectRecord row;
          row.base.experiment = "uav";
          row.base.policy = policy.name();
          row.base.eps = policy_eps(policy);
          row.base.trial = t;
          row.base.step = k;
          row.base.K = c.K;
          row.base.mse = mse;
          row.base.f_value = step.f_value;
          row.base.gain_evals = step.gain_evals;
          row.base.select_time_s = step.select_time_s;
          row.base.sq_error = errs[static_cast<std::size_t>(o)];
          row.object_id = o;
          row.true_x = w.objects[static_cast<std::size_t>(o)].x();
          row.true_y = w.objects[static_cast<std::size_t>(o)].y();
          row.est_x = b.mean(2 * o);
          row.est_y = b.mean(2 * o + 1);
          tr.rows.push_back(row);
        }
      }
      tr.select_time.push_back(sel_time);
      tr.filter_time.push_back(filt_time);
      tr.meas.push_back(meas / c.horizon);
      tr.min_eig.push_back(min_eig);
    }
  });

  for (const auto& tr : trials) out.objects.insert(out.objects.end(), tr.rows.begin(), tr.rows.end());
  for (const auto& row : out.objects)
    if (row.object_id == 0) out.report.records.push_back(row.base);
  out.report.summary = summarize(out.report.records);

  for (std::size_t p = 0; p < policies.size(); ++p) {
    UavPolicySummary s;
    s.policy = policies[p].name();
    s.eps = policy_eps(policies[p]);
    std::vector<double> per_trial;
    for (int t = 0; t < c.trials; ++t) {
      double acc = 0.0;
      int cnt = 0;
      for (const auto& r : out.report.records) {
        if (r.trial == t && r.policy == s.policy && same_eps(r.eps, s.eps)) {
          acc += r.mse;
          ++cnt;
        }
      }
      per_trial.push_back(acc / cnt);
      const auto& tr = trials[static_cast<std::size_t>(t)];
      s.select_time_s += tr.select_time[p] / c.trials;
      s.filter_time_s += tr.filter_time[p] / c.trials;
      s.measurements_per_step += tr.meas[p] / c.trials;
      s.min_cov_eigenvalue = t == 0 ? tr.min_eig[p] : std::min(s.min_cov_eigenvalue, tr.min_eig[p]);
    }
    const MeanSe m = mean_se(per_trial);
    s.mse_mean = m.mean;
    s.mse_se = m.se;
    s.combined_time_s = s.select_time_s + s.filter_time_s;
    out.policies.push_back(s);
  }

  auto find = [&](const std::string& name, double eps) -> const UavPolicySummary* {
    for (const auto& s : out.policies)
      if (s.policy == name && same_eps(s.eps, eps)) return &s;
    return nullptr;
  };
  auto& checks = out.report.checks;
  bool spd = true;
  for (const auto& s : out.policies) spd = spd && s.min_cov_eigenvalue > 0.0;
  checks.push_back({"covariances_spd", spd, false, ""});
  const UavPolicySummary* all = find("all", nan);
  const UavPolicySummary* greedy = find("greedy", nan);
  for (double eps : c.epsilons) {
    const UavPolicySummary* rg = find("randomized", eps);
    if (!rg) continue;
    const std::string tag = "[eps=" + format_double(eps) + "]";
    if (all) {
      checks.push_back({"randomized_mse_within_15pct_of_all" + tag, rg->mse_mean <= 1.15 * all->mse_mean, false,
                        fmt("randomized %.5g vs all %.5g (ratio %.3f)", rg->mse_mean, all->mse_mean,
                            rg->mse_mean / all->mse_mean)});
      checks.push_back({"randomized_faster_than_all" + tag, rg->combined_time_s < all->combined_time_s, true,
                        fmt("%.4g s vs %.4g s", rg->combined_time_s, all->combined_time_s)});
    }
  }
  if (all && greedy) {
    checks.push_back({"all_faster_than_greedy", all->combined_time_s < greedy->combined_time_s, true,
                      fmt("%.4g s vs %.4g s", all->combined_time_s, greedy->combined_time_s)});
  }
  return out;
}

inline void write_uav_report(const UavReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "uav.csv");
  csv << kCsvHeader << ",object_id,true_x,true_y,est_x,est_y\n";
  for (const auto& r : rep.objects) {
    csv << csv_row(r.base) << ',' << r.object_id << ',' << format_double(r.true_x) << ','
        << format_double(r.true_y) << ',' << format_double(r.est_x) << ',' << format_double(r.est_y) << '\n';
  }
  nlohmann::json j = summary_to_json(rep.report);
  j["policies"] = nlohmann::json::array();
  for (const auto& s : rep.policies) {
    j["policies"].push_back({{"policy", s.policy},
                             {"eps", nullable(s.eps)},
                             {"mse_mean", s.mse_mean},
                             {"mse_se", s.mse_se},
                             {"select_time_s", s.select_time_s},
                             {"filter_time_s", s.filter_time_s},
                             {"combined_time_s", s.combined_time_s},
                             {"measurements_per_step", s.measurements_per_step},
                             {"min_cov_eigenvalue", s.min_cov_eigenvalue}});
  }
  std::ofstream js(dir / "uav_summary.json");
  js << j.dump(2) << '\n';
  if (!csv || !js) throw std::runtime_error("failed to write report to " + dir.string());
}

}  // namespace ksched

#endif  // KSCHED_UAV_HPP_
