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

#include "ksched/uav.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

namespace ksched {
namespace {

UavConfig small_config() {
  UavConfig c;
  c.K = 20;
  c.horizon = 4;
  c.trials = 2;
  c.epsilons = {0.1};
  c.workers = 1;
  c.seed = 7;
  return c;
}

TEST(World, UavsStartAtTheirPhaseOnThePatrolPath) {
  const UavConfig c;
  EXPECT_NEAR(c.lane_spacing(), 0.25, 1e-15);
  const Vec2 first = uav_position(c, 0, 0);
  EXPECT_NEAR(first.x(), 0.125, 1e-12);
  EXPECT_NEAR(first.y(), 0.0, 1e-12);
  // Phase L/U along the path from the first UAV.
  const Vec2 second = uav_position(c, 1, 0);
  EXPECT_TRUE(second.isApprox(patrol_point(c, c.path_length() / c.num_uavs)));
  std::set<std::pair<double, double>> distinct;
  for (int u = 0; u < c.num_uavs; ++u) {
    const Vec2 p = uav_position(c, u, 0);
    EXPECT_GE(p.x(), 0.0);
    EXPECT_LE(p.x(), c.width);
    EXPECT_GE(p.y(), 0.0);
    EXPECT_LE(p.y(), c.height);
    distinct.insert({p.x(), p.y()});
  }
  EXPECT_EQ(distinct.size(), static_cast<std::size_t>(c.num_uavs));
}

TEST(World, PatrolPathIsContinuousAndPeriodic) {
  const UavConfig c;
  const double len = c.path_length();
  for (double s = 0.0; s < 2.0 * len; s += 0.01)
    EXPECT_LE((patrol_point(c, s + 0.01) - patrol_point(c, s)).norm(), 0.01 + 1e-9) << s;
  EXPECT_TRUE(patrol_point(c, 0.3).isApprox(patrol_point(c, 0.3 + 2.0 * len)));
  // The far end of the path is the last lane's end.
  EXPECT_NEAR(patrol_point(c, len).x(), c.width - 0.5 * c.lane_spacing(), 1e-12);
}

TEST(World, ObjectMovesBySpeedAlongHeading) {
  const Vec2 p = move_object(Vec2(2.5, 5.0), 0.0, 0.2, 5.0, 10.0);
  EXPECT_NEAR(p.x(), 2.7, 1e-15);
  EXPECT_NEAR(p.y(), 5.0, 1e-15);
  // Reflection off the right wall.
  const Vec2 q = move_object(Vec2(4.9, 5.0), 0.0, 0.2, 5.0, 10.0);
  EXPECT_NEAR(q.x(), 4.9, 1e-12);
}

TEST(World, ObjectsStayInsideTheAreaForTenThousandSteps) {
  const UavConfig c;
  Rng rng(11);
  WorldState w = initial_world(c, rng);
  for (int k = 0; k < 10000; ++k) {
    w = step_world(c, w, rng);
    for (const Vec2& p : w.objects) {
      ASSERT_GE(p.x(), 0.0);
      ASSERT_LE(p.x(), c.width);
      ASSERT_GE(p.y(), 0.0);
      ASSERT_LE(p.y(), c.height);
    }
    for (const Vec2& p : w.uavs) {
      ASSERT_GE(p.x(), 0.0);
      ASSERT_LE(p.x(), c.width);
    }
  }
  EXPECT_EQ(w.k, 10000);
}

TEST(Radar, CoLocatedGivesZeroRangeAndBearing) {
  const Vec2 z = radar_model(Vec2(1.0, 2.0), Vec2(1.0, 2.0));
  EXPECT_EQ(z(0), 0.0);
  EXPECT_EQ(z(1), 0.0);
  Eigen::Matrix2d jac;
  EXPECT_FALSE(radar_jacobian(Vec2(1.0, 2.0), Vec2(1.0, 2.0 + 1e-7), jac));
}

TEST(Radar, WrapAngleRange) {
  EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(-0.5 - 2.0 * std::numbers::pi), -0.5, 1e-12);
}

TEST(Radar, GatingByDetectionRadius) {
  UavConfig c;
  c.num_objects = 2;
  c.num_uavs = 1;
  WorldState w;
  w.uavs = {Vec2(0.0, 0.0)};
  w.objects = {Vec2(1.0, 1.0), Vec2(4.0, 9.0)};
  c.detection_radius = 2.0;
  Rng rng(3);
  const auto meas = sense(c, w, rng);
  ASSERT_EQ(meas.size(), 1u);
  EXPECT_EQ(meas[0].object, 0);
  Rng rng2(4);
  WorldState full = initial_world(UavConfig{}, rng2);
  const UavConfig d;
  for (const auto& m : sense(d, full, rng2))
    EXPECT_LE((full.objects[static_cast<std::size_t>(m.object)] - full.uavs[static_cast<std::size_t>(m.uav)]).norm(),
              d.detection_radius);
}

TEST(Radar, DefaultGeometryGivesAboutSixHundredMeasurements) {
  const UavConfig c;
  const double count = mean_measurement_count(c, 100, 2024);
  EXPECT_GE(count, 500.0);
  EXPECT_LE(count, 700.0);
}

TEST(Radar, JacobianMatchesCentralDifferences) {
  Rng rng(5);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Vec2 x(rng.uniform(0.0, 5.0), rng.uniform(0.0, 10.0));
    const Vec2 s(rng.uniform(0.0, 5.0), rng.uniform(0.0, 10.0));
    if ((x - s).norm() < 0.1) continue;
    // Keep the bearing away from the branch cut at +-pi.
    if (std::abs(radar_model(x, s)(1)) > 3.0) continue;
    Eigen::Matrix2d jac;
    ASSERT_TRUE(radar_jacobian(x, s, jac));
    for (int d = 0; d < 2; ++d) {
      Vec2 e = Vec2::Zero();
      e(d) = h;
      const Vec2 fd = (radar_model(x + e, s) - radar_model(x - e, s)) / (2.0 * h);
      EXPECT_LE((fd - jac.col(d)).cwiseAbs().maxCoeff(), 1e-6);
    }
    ++checked;
  }
  EXPECT_GT(checked, 400);
}

TEST(Ekf, SingularLinearizationIsRejected) {
  UavConfig c;
  c.num_objects = 1;
  c.num_uavs = 1;
  Belief b{Vector::Constant(2, 1.0), Matrix::Identity(2, 2)};
  RadarMeasurement m;
  m.range = 0.5;
  m.var_r = m.var_theta = 0.05;
  const CandidateSet cand = build_candidates(b, {m}, {Vec2(1.0, 1.0)});
  EXPECT_EQ(cand.rejected, 1);
  EXPECT_EQ(cand.H.rows(), 0);
}

TEST(Ekf, NoCandidatesMeansPredictOnly) {
  UavConfig c;
  c.num_objects = 3;
  Rng rng(1);
  Belief b{Vector::Constant(6, 2.0), 0.3 * Matrix::Identity(6, 6)};
  const Belief before = b;
  const EkfStepResult r = ekf_step(c, b, {}, {Vec2(0.0, 0.0)}, PolicySpec{PolicyKind::kGreedy}, rng);
  EXPECT_EQ(r.candidates, 0);
  EXPECT_TRUE(r.selected.empty());
  EXPECT_EQ(b.mean, before.mean);
  EXPECT_TRUE(b.cov.isApprox(before.cov + c.q_var * Matrix::Identity(6, 6), 1e-15));
}

TEST(Ekf, JointAndPerObjectUpdatesAgree) {
  UavConfig c;
  Rng rng(9);
  const WorldState w = initial_world(c, rng);
  const auto meas = sense(c, w, rng);
  Rng brng(10);
  Belief b = initial_belief(c, w, brng);
  b.cov.diagonal().array() += c.q_var;
  const CandidateSet cand = build_candidates(b, meas, w.uavs);
  const SelectionResult sel = greedy_select(b.cov, StepRows(cand.H, cand.r), 100);
  Belief joint = b, split = b;
  ekf_update(joint, cand, sel.selected, FilterMode::kJoint);
  ekf_update(split, cand, sel.selected, FilterMode::kPerObject);
  EXPECT_LE((joint.mean - split.mean).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((joint.cov - split.cov).cwiseAbs().maxCoeff(), 1e-10);
  // The posterior trace matches the selection objective's prediction.
  EXPECT_NEAR(joint.cov.trace(), sel.mse, 1e-8 * sel.mse);
}

TEST(Ekf, NoiselessStaticObjectsAreLocalized) {
  UavConfig c;
  c.object_speed = 0.0;
  c.sigma_r2 = c.sigma_theta2 = 1e-14;
  c.q_var = 1e-14;
  Rng rng(21);
  WorldState w = initial_world(c, rng);
  Rng brng(22);
  Belief b = initial_belief(c, w, brng);
  std::vector<int> seen(static_cast<std::size_t>(c.num_objects), 0);
  for (int k = 0; k < 5; ++k) {
    const auto meas = sense(c, w, rng);
    for (const auto& m : meas) seen[static_cast<std::size_t>(m.object)] = 1;
    ekf_step(c, b, meas, w.uavs, PolicySpec{PolicyKind::kAll}, rng);
    w = step_world(c, w, rng);
  }
  int checked = 0;
  for (int o = 0; o < c.num_objects; ++o) {
    if (!seen[static_cast<std::size_t>(o)]) continue;
    EXPECT_LE((b.mean.segment<2>(2 * o) - w.objects[static_cast<std::size_t>(o)]).norm(), 1e-3) << o;
    ++checked;
  }
  EXPECT_GE(checked, c.num_objects - 2);
}

TEST(Experiment, SmallestEpsilonMatchesGreedy) {
  UavConfig c = small_config();
  c.epsilons = {std::exp(-static_cast<double>(c.K))};
  c.policies = {PolicyKind::kGreedy, PolicyKind::kRandomized};
  const UavReport rep = run_uav_experiment(c);
  const std::size_t half = rep.objects.size();
  std::vector<const UavObjectRecord*> greedy, randomized;
  for (const auto& r : rep.objects) (r.base.policy == "greedy" ? greedy : randomized).push_back(&r);
  ASSERT_EQ(greedy.size(), randomized.size());
  ASSERT_EQ(greedy.size() * 2, half);
  for (std::size_t i = 0; i < greedy.size(); ++i) {
    EXPECT_EQ(greedy[i]->est_x, randomized[i]->est_x);
    EXPECT_EQ(greedy[i]->est_y, randomized[i]->est_y);
  }
}

TEST(Experiment, SeededRepeatIsIdentical) {
  const UavConfig c = small_config();
  const UavReport a = run_uav_experiment(c);
  const UavReport b = run_uav_experiment(c);
  ASSERT_EQ(a.objects.size(), b.objects.size());
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    EXPECT_EQ(a.objects[i].est_x, b.objects[i].est_x);
    EXPECT_EQ(a.objects[i].base.mse, b.objects[i].base.mse);
    EXPECT_EQ(a.objects[i].true_y, b.objects[i].true_y);
  }
}

TEST(Experiment, RowsAndChecks) {
  const UavConfig c = small_config();
  const UavReport rep = run_uav_experiment(c);
  // greedy, randomized(0.1), all.
  EXPECT_EQ(rep.objects.size(), static_cast<std::size_t>(3 * c.trials * c.horizon * c.num_objects));
  const Check* spd = rep.report.find_check("covariances_spd");
  ASSERT_NE(spd, nullptr);
  EXPECT_TRUE(spd->passed);
  for (const auto& p : rep.policies) {
    EXPECT_GT(p.min_cov_eigenvalue, 0.0);
    EXPECT_GT(p.measurements_per_step, 400.0);
  }
  // All measurements never track worse than a budgeted subset on average.
  double all = 0.0, greedy = 0.0;
  for (const auto& p : rep.policies) {
    if (p.policy == "all") all = p.mse_mean;
    if (p.policy == "greedy") greedy = p.mse_mean;
  }
  EXPECT_LT(all, greedy);
}

TEST(Experiment, PerObjectFilterMatchesJoint) {
  UavConfig c = small_config();
  c.trials = 1;
  const UavReport joint = run_uav_experiment(c);
  c.filter = FilterMode::kPerObject;
  const UavReport split = run_uav_experiment(c);
  ASSERT_EQ(joint.objects.size(), split.objects.size());
  for (std::size_t i = 0; i < joint.objects.size(); ++i)
    EXPECT_NEAR(joint.objects[i].est_x, split.objects[i].est_x, 1e-8);
}

TEST(Config, JsonRoundTrip) {
  UavConfig c;
  c.K = 42;
  c.epsilons = {0.2, 0.05};
  c.policies = {PolicyKind::kAll};
  c.filter = FilterMode::kPerObject;
  c.seed = 99;
  const UavConfig back = uav_config_from_json(uav_config_to_json(c));
  EXPECT_EQ(uav_config_to_json(back), uav_config_to_json(c));
  EXPECT_EQ(back.detection_radius, kDefaultDetectionRadius);
}

TEST(Config, BadFieldsAreNamed) {
  try {
    uav_config_from_json({{"filter", "banana"}});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "filter");
  }
  try {
    uav_config_from_json({{"K", "many"}});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "K");
  }
  EXPECT_THROW(uav_config_from_json({{"K", 0}}), ParameterError);
}

}  // namespace
}  // namespace ksched
