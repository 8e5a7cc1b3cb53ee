#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "support.hpp"

using namespace finsler_cloak;
using fc_test::Rng;

namespace {

std::vector<FanRun> run_fans(const MetricField& F, const ShieldScenario& s, std::vector<Heading> headings) {
  std::vector<FanRun> runs;
  for (Heading h : headings) {
    const RayFan fan = RayFan::uniform(21, 1.8, h);
    runs.push_back({fan, trace_fan(F, fan, s)});
  }
  return runs;
}

// Closest approach of a straight virtual ray after the point expansion:
// a line at distance b maps to radius R1 + b (R2 - R1) / R2 inside the device.
double ideal_closest_approach(double b, double R1, double R2) {
  b = std::abs(b);
  return b >= R2 ? b : R1 + b * (R2 - R1) / R2;
}

}  // namespace

TEST(RayFan, UniformLayout) {
  const RayFan fan = RayFan::uniform(4, 2.0, Heading::leftward, 0.5);
  EXPECT_EQ(fan.impact_parameters, (std::vector<double>{-1.5, -0.5, 0.5, 1.5}));
  EXPECT_EQ(fan.heading, Heading::leftward);
  const RayFan def = RayFan::uniform(21, 1.8, Heading::rightward);
  ASSERT_EQ(def.impact_parameters.size(), 21u);
  EXPECT_NEAR(def.impact_parameters.front(), -1.8 + 0.25 * 3.6 / 21, 1e-15);
  for (double b : def.impact_parameters) {
    EXPECT_GE(b, -1.8);
    EXPECT_LE(b, 1.8);
    EXPECT_GT(std::abs(b), 0.04);  // no ray on the axis
  }
  EXPECT_THROW(RayFan::uniform(0, 1.0, Heading::leftward), DomainError);
  EXPECT_THROW(RayFan::uniform(3, -1.0, Heading::leftward), DomainError);
  EXPECT_THROW(RayFan::uniform(3, 1.0, Heading::leftward, 1.5), DomainError);
  EXPECT_STREQ(to_string(Heading::leftward), "leftward");
}

TEST(ShieldScenario, ValidationAndLaunch) {
  ShieldScenario s;
  EXPECT_NO_THROW(s.validate());
  s.R2 = 0.5;
  EXPECT_THROW(build_asymmetric_shield(s), DomainError);
  s = {};
  s.launch_distance = 1.5;
  EXPECT_THROW(s.validate(), DomainError);
  s = {};
  s.tol_block = -1;
  EXPECT_THROW(s.validate(), DomainError);

  RayFan fan{{0.3, -0.7}, Heading::leftward};
  const RayState l = launch_state(fan, 1, 4.0);
  EXPECT_EQ(l.position, vec2(4.0, -0.7));
  EXPECT_EQ(l.velocity, vec2(-1.0, 0.0));
  fan.heading = Heading::rightward;
  EXPECT_EQ(launch_state(fan, 0, 4.0).position, vec2(-4.0, 0.3));
  EXPECT_THROW(trace_fan(flat_metric(2), RayFan{}, ShieldScenario{}), DomainError);
}

TEST(BuildShield, WeightZeroIsFlat) {
  ShieldScenario s;
  s.weight.profile = WeightProfile::zero;
  const MetricField F = build_asymmetric_shield(s).field();
  Rng rng(51);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = rng.point2(0.0, 5.0);
    const Vec y = rng.direction2();
    EXPECT_EQ(eval_metric(F, x, y), y.norm());
  }
}

TEST(BuildShield, DefaultWeightProbes) {
  const ShieldScenario s;
  const BlendedShieldMetric m = build_asymmetric_shield(s);
  const MetricField F = m.field();
  const MetricField cloak = cloak_field({s.R1, s.R2});
  for (const Vec& x : {vec2(1.5, 0.0), vec2(0.0, 1.2), vec2(-1.1, -1.1), vec2(3.0, 0.5)}) {
    EXPECT_EQ(eval_metric(F, x, vec2(-1, 0)), 1.0) << to_string(x);
    EXPECT_EQ(eval_metric(F, x, vec2(-0.5, 0.4)), vec2(-0.5, 0.4).norm());
    EXPECT_EQ(eval_metric(F, x, vec2(1, 0)), eval_metric(cloak, x, vec2(1, 0))) << to_string(x);
    EXPECT_EQ(eval_metric(F, x, vec2(0.7, -0.5)), eval_metric(cloak, x, vec2(0.7, -0.5)));
  }
  // Inside the shield rightward light sees the cosh transform.
  const Vec inside = vec2(-0.4, 0.3);
  EXPECT_DOUBLE_EQ(eval_metric(F, inside, vec2(1, 0)),
                   std::sqrt(vec2(1, 0).dot(regime_metric_L2({s.r0, s.alpha_clamp}, inside) * vec2(1, 0))));
}

TEST(MinDistance, RefinesBetweenSamples) {
  Trajectory t;
  for (int i = 0; i <= 4; ++i) t.samples.push_back({double(i), vec2(-2.0 + i * 0.9, 0.3), vec2(0.9, 0.0)});
  EXPECT_NEAR(min_distance_to_center(t), 0.3, 1e-9);
  Trajectory single;
  single.samples.push_back({0.0, vec2(3, 4), vec2(1, 0)});
  EXPECT_DOUBLE_EQ(min_distance_to_center(single), 5.0);
  EXPECT_THROW(min_distance_to_center(Trajectory{}), DomainError);
}

TEST(AnalyzeShielding, VerdictsNeedCompleteCrossings) {
  const ShieldScenario s;
  const RayFan fan{{0.5}, Heading::leftward};
  Trajectory t;
  t.samples.push_back({0.0, vec2(4.0, 0.5), vec2(-1, 0)});
  t.samples.push_back({8.0, vec2(-4.0, 0.5), vec2(-1, 0)});
  t.termination = Termination::left_domain;
  const std::vector<FanRun> ok{{fan, {t}}};
  EXPECT_TRUE(*analyze_shielding(ok, s).pass_straight);
  EXPECT_FALSE(analyze_shielding(ok, s).blocked.has_value());
  t.termination = Termination::max_steps;
  const std::vector<FanRun> stalled{{fan, {t}}};
  EXPECT_FALSE(*analyze_shielding(stalled, s).pass_straight);
  const std::vector<FanRun> mismatch{{fan, {}}};
  EXPECT_THROW(analyze_shielding(mismatch, s), DomainError);
}

TEST(FlatControl, StraightSymmetricAndUnblocked) {
  ShieldScenario s;
  s.weight.profile = WeightProfile::zero;
  const MetricField F = build_asymmetric_shield(s).field();
  const auto runs = run_fans(F, s, {Heading::leftward, Heading::rightward});
  const ShieldReport r = analyze_shielding(runs, s);
  ASSERT_EQ(r.rays.size(), 42u);
  EXPECT_TRUE(*r.pass_straight);
  EXPECT_FALSE(*r.blocked);
  for (std::size_t k = 0; k < 21; ++k) {
    const RayReport& left = r.rays[k];
    const RayReport& right = r.rays[21 + k];
    EXPECT_EQ(left.ray_id, int(k));
    EXPECT_EQ(right.ray_id, int(21 + k));
    EXPECT_LE(right.lateral_offset, 1e-9);
    EXPECT_LE(right.direction_deviation, 1e-9);
    // Mirror image x -> -x maps one fan onto the other.
    EXPECT_NEAR(left.min_distance_to_center, right.min_distance_to_center, 1e-9);
    EXPECT_NEAR(left.min_distance_to_center, std::abs(left.impact_parameter), 1e-9);
    EXPECT_EQ(left.terminated, Termination::left_domain);
  }
}

TEST(ConventionalCloak, RightwardFanCircumventsShield) {
  const ShieldScenario s;
  const MetricField F = cloak_field({s.R1, s.R2});
  const auto runs = run_fans(F, s, {Heading::rightward});
  const ShieldReport r = analyze_shielding(runs, s);
  EXPECT_TRUE(*r.blocked);

  std::vector<const RayReport*> by_offset;
  for (const RayReport& ray : r.rays) {
    EXPECT_EQ(ray.terminated, Termination::left_domain);
    EXPECT_GE(ray.min_distance_to_center, s.R1 * (1.0 - 1e-3)) << ray.impact_parameter;
    EXPECT_NEAR(ray.min_distance_to_center, ideal_closest_approach(ray.impact_parameter, s.R1, s.R2), 1e-4)
        << ray.impact_parameter;
    EXPECT_LE(ray.lateral_offset, 5e-3) << ray.impact_parameter;
    EXPECT_LE(ray.direction_deviation, 5e-3) << ray.impact_parameter;
    by_offset.push_back(&ray);
  }
  std::sort(by_offset.begin(), by_offset.end(), [](const RayReport* a, const RayReport* b) {
    return std::abs(a->impact_parameter) < std::abs(b->impact_parameter);
  });
  for (std::size_t i = 1; i < by_offset.size(); ++i) {
    EXPECT_GE(by_offset[i]->min_distance_to_center, by_offset[i - 1]->min_distance_to_center - 1e-9);
  }
}

class AsymmetricShield : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    field_ = new MetricField(build_asymmetric_shield(scenario_).field());
    runs_ = new std::vector<FanRun>(run_fans(*field_, scenario_, {Heading::leftward, Heading::rightward}));
    report_ = new ShieldReport(analyze_shielding(*runs_, scenario_));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete runs_;
    delete field_;
  }
  static inline const ShieldScenario scenario_{};
  static inline MetricField* field_ = nullptr;
  static inline std::vector<FanRun>* runs_ = nullptr;
  static inline ShieldReport* report_ = nullptr;
};

TEST_F(AsymmetricShield, HeadlineVerdicts) {
  ASSERT_EQ(report_->rays.size(), 42u);
  EXPECT_TRUE(*report_->pass_straight);
  EXPECT_TRUE(*report_->blocked);
}

TEST_F(AsymmetricShield, LeftwardRaysAreExactlyStraight) {
  for (const RayReport& r : report_->rays) {
    if (r.heading != Heading::leftward) continue;
    EXPECT_EQ(r.terminated, Termination::left_domain);
    EXPECT_LE(r.lateral_offset, 1e-6);
    EXPECT_LE(r.direction_deviation, 1e-6);
    EXPECT_NEAR(r.min_distance_to_center, std::abs(r.impact_parameter), 1e-9);
  }
}

TEST_F(AsymmetricShield, RightwardRaysAvoidShieldAndRecover) {
  for (const RayReport& r : report_->rays) {
    if (r.heading != Heading::rightward) continue;
    EXPECT_EQ(r.terminated, Termination::left_domain);
    EXPECT_GE(r.min_distance_to_center, scenario_.R1 * (1.0 - scenario_.tol_block)) << r.impact_parameter;
    EXPECT_LE(r.lateral_offset, 5e-3) << r.impact_parameter;
  }
}

TEST_F(AsymmetricShield, RightwardRayDoesNotRetrace) {
  // b = -0.9 crosses the annulus, so the reversed ray travels leftward
  // through flat space instead of back along its detour.
  const Trajectory& forward = (*runs_)[1].trajectories[5];
  EXPECT_DOUBLE_EQ((*runs_)[1].fan.impact_parameters[5], -0.9);
  EXPECT_GT(retrace_miss(*field_, forward, scenario_), 1e-2);
  // A ray outside the device is flat both ways and retraces.
  const auto outer = trace_fan(*field_, RayFan{{2.5}, Heading::rightward}, scenario_);
  EXPECT_LT(retrace_miss(*field_, outer[0], scenario_), 1e-5);
}

TEST(AsymmetricShieldInstrumented, LeftwardRaysNeverLeaveThePlateau) {
  const ShieldScenario s;
  const BlendedShieldMetric m = build_asymmetric_shield(s);
  const MetricField base = m.field();
  auto off_plateau = std::make_shared<std::atomic<long>>(0);
  auto evaluations = std::make_shared<std::atomic<long>>(0);
  const MetricField counted(2, "counted", base.interface_radii(),
                            [m, base, off_plateau, evaluations](int region, const Vec& x, const Vec& y) {
                              ++*evaluations;
                              if (m.weight_at(y) != 0.0) ++*off_plateau;
                              return base.in_region(region, x, y);
                            });
  const RayFan fan = RayFan::uniform(21, 1.8, Heading::leftward);
  const auto trajectories = trace_fan(counted, fan, s);
  EXPECT_GT(evaluations->load(), 1000000);
  EXPECT_EQ(off_plateau->load(), 0);

  // The counter does see rightward evaluations.
  const RayFan probe{{2.5}, Heading::rightward};
  trace_fan(counted, probe, s);
  EXPECT_GT(off_plateau->load(), 0);
}
