#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gen.hpp"
#include "ni_swarm/control.hpp"
#include "ni_swarm/error.hpp"
#include "ni_swarm/experiments.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/vehicle.hpp"

using namespace ni_swarm;
using lti::RationalTF;

TEST(SniFirstOrder, Unit) {
  const auto r = control::sni_first_order(1.0, 1.0, 1.0);
  EXPECT_EQ(r.tf, RationalTF({1.0}, {1.0, 1.0}));
  EXPECT_EQ(r.controller.K, 1.0);
  EXPECT_EQ(r.controller.tau, 1.0);
}

TEST(SniFirstOrder, DerivedGainAndTimeConstant) {
  const auto r = control::sni_first_order(2.0, 4.0, std::sqrt(2.0));
  EXPECT_NEAR(r.controller.K, 1.0, 1e-15);
  EXPECT_NEAR(r.controller.tau, 2.0, 1e-15);
  EXPECT_EQ(r.tf, RationalTF({2.0}, {4.0, 2.0000000000000004}));
}

TEST(SniFirstOrder, ExperimentController) {
  const auto r = control::sni_first_order(-0.35295, 1.0, 1.0);
  EXPECT_EQ(r.tf, RationalTF({-0.35295}, {1.0, 1.0}));
  EXPECT_EQ(*control::controller_preset("sni-exp"), r.tf);
}

TEST(SniFirstOrder, RejectsNonPositive) {
  EXPECT_THROW(control::sni_first_order(1.0, 0.0, 1.0), ModelError);
  EXPECT_THROW(control::sni_first_order(1.0, 1.0, -1.0), ModelError);
}

TEST(SniFirstOrder, OddPartVanishesOnlyAtOrigin) {
  for (double delta : {-1.0, -0.35295, 0.5, 3.0}) {
    const auto r = control::sni_first_order(delta, 1.7, 0.8);
    const auto check = control::check_odd_part(r.controller);
    EXPECT_TRUE(check.zero_only_at_origin) << delta;
    EXPECT_LT(check.max_formula_error, 1e-12) << delta;
  }
}

TEST(SniFirstOrder, Property_NegativeDeltaComplementIsSni) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng r = gen::stream(41, k);
    const double delta = -r.uniform(0.1, 5.0);
    const double a = r.uniform(0.1, 10.0);
    const double w = r.uniform(0.3, 3.0);
    const auto c = control::sni_first_order(delta, a, w);
    EXPECT_TRUE(ni::is_sni(-c.tf).is_sni) << "case " << k;
    EXPECT_TRUE(ni::is_sni(c.tf).sign_complement_sni) << "case " << k;
  }
}

TEST(PidTf, SimulatedPid) {
  const RationalTF tf = -control::pid_tf({.kp = 0.3162, .ki = 0.0021, .kd = 0.135, .filter_pole = {}});
  EXPECT_EQ(tf, RationalTF({-0.135, -0.3162, -0.0021}, {1.0, 0.0}));
  EXPECT_EQ(*control::controller_preset("pid-sim"), tf);
}

TEST(PidTf, ProportionalOnly) {
  const RationalTF tf = control::pid_tf({.kp = 1.0, .ki = 0.0, .kd = 0.0, .filter_pole = {}});
  EXPECT_EQ(tf, RationalTF({1.0, 0.0}, {1.0, 0.0}));
  EXPECT_EQ(*lti::dc_gain(tf), 1.0);
}

TEST(PidTf, FilteredX) {
  const RationalTF tf = -control::pid_tf({.kp = 0.0031, .ki = 0.000064, .kd = 0.028, .filter_pole = 0.055});
  EXPECT_EQ(tf, RationalTF({-0.028, -0.0031, -0.000064}, {1.0, 0.055, 0.0}));
  EXPECT_EQ(*control::controller_preset("pidf-x"), tf);
}

TEST(PidTf, ExperimentPresetsDiffer) {
  EXPECT_NE(*control::controller_preset("pid-sim"), *control::controller_preset("pid-exp"));
  EXPECT_EQ(*control::controller_preset("pid-exp"), RationalTF({-0.138, -0.3172, -0.0021}, {1.0, 0.0}));
  EXPECT_FALSE(control::controller_preset("nope").has_value());
}

TEST(TwoLoop, ZeroErrorZeroCommand) {
  auto outer = lti::discretize(*control::controller_preset("sni-sim"), 0.01);
  auto plant = lti::discretize(uav_plants().first, 0.01);
  const auto out = control::two_loop_tick(0.0, 0.0, outer, plant);
  EXPECT_EQ(out.vel_sp, 0.0);
  EXPECT_EQ(out.pos, 0.0);
}

TEST(TwoLoop, SummingJunctionAddsSetpointAndMeasurement) {
  // Static outer gain -1: vel_sp = -(pos_sp + pos).
  auto outer = lti::discretize(RationalTF::gain(-1.0), 0.01);
  auto plant = lti::discretize(RationalTF::gain(0.0), 0.01);
  EXPECT_EQ(control::two_loop_tick(-0.5, 0.2, outer, plant).vel_sp, 0.3);
}

TEST(TwoLoop, SniStepOvershootInBand) {
  const auto [px, py] = uav_plants();
  const auto sni = *control::controller_preset("sni-sim");
  const auto x = sim::run_step(sni, px, 0.5, 300.0);
  const auto y = sim::run_step(sni, py, 0.5, 300.0);
  EXPECT_GE(x.po, 6.0);
  EXPECT_LE(x.po, 26.0);
  EXPECT_GE(y.po, 2.0);
  EXPECT_LE(y.po, 22.0);
}

TEST(TwoLoop, PidfAtLeastFiveTimesSlowerToReference) {
  const auto [px, py] = uav_plants();
  const auto sni = *control::controller_preset("sni-sim");
  const auto sx = sim::run_step(sni, px, 0.5, 300.0);
  const auto fx = sim::run_step(*control::controller_preset("pidf-x"), px, 0.5, 300.0);
  ASSERT_TRUE(sx.t_reach && fx.t_reach);
  EXPECT_GE(*fx.t_reach, 5.0 * *sx.t_reach);
}

TEST(TwoLoop, ShippedPairingsPassScalarDcCheck) {
  const auto [px, py] = uav_plants();
  for (const char* c : {"sni-sim", "sni-exp"}) {
    EXPECT_TRUE(ni::interconnect_stable(px, *control::controller_preset(c))) << c;
    EXPECT_TRUE(ni::interconnect_stable(py, *control::controller_preset(c))) << c;
  }
}

TEST(TvGains, Examples) {
  const std::vector<double> d{1.0};
  EXPECT_NEAR(control::tv_gains(d, 5.0, std::vector<double>{2.0})[0], 0.1, 1e-15);
  EXPECT_EQ(control::tv_gains(d, 5.0, std::vector<double>{0.0})[0], control::kTvGainMax);
  EXPECT_EQ(control::tv_gains(std::vector<double>{-1.0}, 5.0, std::vector<double>{0.0})[0], -control::kTvGainMax);
  EXPECT_EQ(control::tv_gains(std::vector<double>{0.0}, 5.0, std::vector<double>{0.7})[0], 0.0);
  EXPECT_NEAR(control::tv_gains(d, 5.0, std::vector<double>{1.0})[0], 0.2, 1e-15);
  EXPECT_THROW(control::tv_gains(d, 0.0, d), ModelError);
}

TEST(TvGains, Property_BoundedAndSigned) {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Rng r = gen::stream(42, k);
    const double dis = r.uniform(-3.0, 3.0);
    const double e = r.uniform() < 0.1 ? 0.0 : r.uniform(-3.0, 3.0) * std::pow(10.0, r.uniform(-5.0, 0.0));
    const double t = r.uniform(0.1, 300.0);
    const double g = control::tv_gains(std::vector<double>{dis}, t, std::vector<double>{e})[0];
    EXPECT_LE(std::abs(g), control::kTvGainMax) << "case " << k;
    const double sign_e = e < 0.0 ? -1.0 : 1.0;
    if (dis != 0.0) EXPECT_EQ(std::signbit(g), std::signbit(dis * sign_e)) << "case " << k;
  }
}

TEST(Blend, DegenerateWeights) {
  const Vec2 f{1.0, -2.0};
  const Vec2 rep{3.0, 4.0};
  EXPECT_EQ(control::blend_priorities(f, rep, {1.0, 0.0, 1.0, 0.0}, -0.1), -0.1 * f);
  EXPECT_EQ(control::blend_priorities(f, rep, {0.0, 1.0, 0.0, 1.0}, -0.1), -0.1 * rep);
}

TEST(Blend, HalfAndHalf) {
  const Vec2 v = control::blend_priorities({2.0, 2.0}, {4.0, 4.0}, {}, -0.1);
  EXPECT_NEAR(v.x, -0.3, 1e-15);
  EXPECT_NEAR(v.y, -0.3, 1e-15);
}

TEST(Blend, Property_LinearInEachTerm) {
  for (std::uint64_t k = 0; k < 300; ++k) {
    Rng r = gen::stream(43, k);
    const double a = r.uniform();
    const double b = r.uniform();
    const control::TaskWeights w{a, 1.0 - a, b, 1.0 - b};
    const double kc = r.uniform(-1.0, 1.0);
    const Vec2 f1{r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)};
    const Vec2 f2{r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)};
    const Vec2 rp{r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)};
    const double s = r.uniform(-2.0, 2.0);
    const Vec2 lhs = control::blend_priorities(f1 + s * f2, rp, w, kc);
    const Vec2 rhs = control::blend_priorities(f1, rp, w, kc) + s * control::blend_priorities(f2, {}, w, kc);
    EXPECT_NEAR(lhs.x, rhs.x, 1e-14) << "case " << k;
    EXPECT_NEAR(lhs.y, rhs.y, 1e-14) << "case " << k;
  }
}

TEST(Weights, Validation) {
  EXPECT_NO_THROW(control::validate(control::TaskWeights{}));
  EXPECT_THROW(control::validate({0.6, 0.6, 0.5, 0.5}), ModelError);
  EXPECT_THROW(control::validate({1.5, -0.5, 0.5, 0.5}), ModelError);
}

TEST(Metrics, OvershootTable) {
  EXPECT_NEAR(control::metrics_po(0.58, 0.5), 16.0, 1e-12);
  EXPECT_NEAR(control::metrics_po(0.56, 0.5), 12.0, 1e-12);
  EXPECT_NEAR(control::metrics_po(0.55, 0.5), 10.0, 1e-12);
  EXPECT_EQ(control::metrics_po(0.5, 0.5), 0.0);
  EXPECT_EQ(control::metrics_po(0.4, 0.5), 0.0);
  EXPECT_THROW(control::metrics_po(1.0, 0.0), ModelError);
}

TEST(Metrics, Rmse) {
  EXPECT_EQ(control::metrics_rmse(std::vector<double>(5, 0.0)), 0.0);
  EXPECT_NEAR(control::metrics_rmse(std::vector<double>(7, 0.1)), 0.1, 1e-16);
  EXPECT_NEAR(control::metrics_rmse(std::vector<double>{3.0, 4.0}), std::sqrt(12.5), 1e-15);
  EXPECT_THROW(control::metrics_rmse(std::vector<double>{}), ModelError);
}
