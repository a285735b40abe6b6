#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "gen.hpp"
#include "ni_swarm/control.hpp"
#include "ni_swarm/error.hpp"
#include "ni_swarm/formation.hpp"
#include "ni_swarm/presets.hpp"
#include "ni_swarm/vehicle.hpp"

using namespace ni_swarm;
using formation::FormationGains;
using formation::Snapshot;

namespace {

const roles::FormationSpec kTriangle{{{0.0, 0.0}, {-1.0, 0.5}, {-1.0, -0.5}}, "triangle"};

roles::IdAssignment identity(std::size_t n) {
  roles::IdAssignment a;
  for (std::size_t i = 0; i < n; ++i) a.ids.push_back(static_cast<int>(i) + 1);
  return a;
}

FormationGains loose(double vmax = 1e9) {
  FormationGains g;
  g.vmax = vmax;
  return g;
}

}  // namespace

TEST(FormationStep, ZeroErrorZeroCommand) {
  Snapshot s;
  s.positions = {{2.0, 1.0}, {1.0, 1.5}, {1.0, 0.5}};
  s.ids = identity(3);
  s.reference = {2.0, 1.0};
  const auto out = formation::formation_step(s, kTriangle, {}, {});
  for (Vec2 v : out.vel_sp) EXPECT_EQ(v, Vec2{});
  EXPECT_EQ(out.mode, formation::Mode::formation);
}

TEST(FormationStep, LeaderMovesTowardReference) {
  Snapshot s;
  s.positions = {{0.0, 0.0}};
  s.ids = identity(1);
  s.reference = {1.0, 0.0};
  const roles::FormationSpec solo{{{0.0, 0.0}}, "solo"};
  const auto out = formation::formation_step(s, solo, loose(), {});
  EXPECT_NEAR(out.vel_sp[0].x, 0.1, 1e-15);
  EXPECT_EQ(out.vel_sp[0].y, 0.0);
  EXPECT_EQ(out.gains_used[0], -0.1);
}

TEST(FormationStep, FollowerCorrectsOffsetError) {
  Snapshot s;
  s.positions = {{0.0, 0.0}, {-1.0, 1.0}, {-1.0, -0.5}};
  s.ids = identity(3);
  const auto out = formation::formation_step(s, kTriangle, loose(), {});
  // Follower 2 sits 0.5 above its slot.
  EXPECT_EQ(out.vel_sp[1].x, 0.0);
  EXPECT_NEAR(out.vel_sp[1].y, -0.05, 1e-15);
  EXPECT_EQ(out.vel_sp[2], Vec2{});
}

TEST(FormationStep, SingleRobotMatchesCascadeJunction) {
  // One robot is just the leader loop: kr*(pos_sp + pos) with pos_sp = -ref.
  auto outer = lti::discretize(lti::RationalTF::gain(-0.1), 0.01);
  auto plant = lti::discretize(lti::RationalTF::gain(0.0), 0.01);
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng r = gen::stream(71, k);
    Snapshot s;
    s.positions = {{r.uniform(-3.0, 3.0), 0.0}};
    s.ids = identity(1);
    s.reference = {r.uniform(-3.0, 3.0), 0.0};
    const auto out = formation::formation_step(s, {{{0.0, 0.0}}, "solo"}, loose(), {});
    const auto ref = control::two_loop_tick(-s.reference.x, s.positions[0].x, outer, plant);
    EXPECT_NEAR(out.vel_sp[0].x, ref.vel_sp, 1e-15) << "case " << k;
  }
}

TEST(FormationStep, TriangleConverges) {
  Snapshot s;
  s.positions = {{0.0, 0.0}, {-3.0, 2.0}, {1.0, -2.0}};
  s.ids = identity(3);
  s.reference = {2.0, 1.0};
  const FormationGains g;
  const double dt = 0.01;
  for (int t = 0; t < 60000; ++t) {
    const auto out = formation::formation_step(s, kTriangle, g, {});
    for (std::size_t i = 0; i < 3; ++i) s.positions[i] += dt * out.vel_sp[i];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const Vec2 goal = s.reference + kTriangle.offsets[i];
    EXPECT_LT(distance(s.positions[i], goal), 1e-3) << i;
  }
}

TEST(FormationStep, Property_FollowersReachConsensusOnLeader) {
  for (std::uint64_t k = 0; k < 30; ++k) {
    Rng r = gen::stream(72, k);
    const std::size_t n = 2 + gen::index(r, 5);
    Snapshot s;
    s.positions = gen::points(r, n, 3.0);
    s.ids = identity(n);
    s.reference = s.positions[0];
    roles::FormationSpec spec;
    spec.offsets.assign(n, Vec2{});
    for (int t = 0; t < 20000; ++t) {
      const auto out = formation::formation_step(s, spec, loose(), {});
      for (std::size_t i = 0; i < n; ++i) s.positions[i] += 0.01 * out.vel_sp[i];
    }
    for (std::size_t i = 1; i < n; ++i)
      EXPECT_LT(distance(s.positions[i], s.positions[0]), 1e-4) << "case " << k << " robot " << i;
  }
}

TEST(FormationStep, Property_CommandsSaturated) {
  for (std::uint64_t k = 0; k < 300; ++k) {
    Rng r = gen::stream(73, k);
    Snapshot s;
    s.positions = gen::points(r, 3, 10.0);
    s.ids = identity(3);
    s.reference = {r.uniform(-10.0, 10.0), r.uniform(-10.0, 10.0)};
    FormationGains g;
    g.vmax = r.uniform(0.005, 0.1);
    const auto out = formation::formation_step(s, kTriangle, g, {});
    for (Vec2 v : out.vel_sp) EXPECT_LE(v.norm(), g.vmax * (1.0 + 1e-12)) << "case " << k;
  }
}

TEST(FormationStep, Property_RobotOrderDoesNotMatter) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng r = gen::stream(74, k);
    Snapshot s;
    s.positions = gen::points(r, 3, 4.0);
    s.ids = identity(3);
    s.reference = {r.uniform(-4.0, 4.0), r.uniform(-4.0, 4.0)};
    s.avoid_vel = {{}, {r.uniform(-0.01, 0.01), 0.0}, {}};
    std::vector<std::size_t> perm(3);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t j = 0; j < k % 6; ++j) std::next_permutation(perm.begin(), perm.end());
    Snapshot p = s;
    for (std::size_t i = 0; i < 3; ++i) {
      p.positions[i] = s.positions[perm[i]];
      p.ids.ids[i] = s.ids.ids[perm[i]];
      p.avoid_vel[i] = s.avoid_vel[perm[i]];
    }
    const auto a = formation::formation_step(s, kTriangle, {}, {});
    const auto b = formation::formation_step(p, kTriangle, {}, {});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(b.vel_sp[i], a.vel_sp[perm[i]]) << "case " << k;
  }
}

TEST(FormationStep, FailsafeHoldsThenStops) {
  Snapshot s;
  s.positions = {{0.0, 0.0}, {-2.0, 0.5}};
  s.ids = identity(2);
  const roles::FormationSpec pair{{{0.0, 0.0}, {-1.0, 0.5}}, "pair"};
  formation::Failsafe fs;
  const auto first = formation::formation_step(s, pair, {}, {}, &fs);
  ASSERT_NE(first.vel_sp[1], Vec2{});
  s.rel_to_leader = {std::nullopt, std::nullopt};
  for (int t = 1; t <= formation::Failsafe::kHoldTicks; ++t) {
    const auto out = formation::formation_step(s, pair, {}, {}, &fs);
    EXPECT_TRUE(out.sensing_lost[1]);
    EXPECT_EQ(out.vel_sp[1], first.vel_sp[1]) << t;
  }
  EXPECT_EQ(formation::formation_step(s, pair, {}, {}, &fs).vel_sp[1], Vec2{});
}

TEST(FormationStep, SizeMismatchRejected) {
  Snapshot s;
  s.positions = {{0.0, 0.0}, {1.0, 0.0}};
  s.ids = identity(1);
  EXPECT_THROW(formation::formation_step(s, kTriangle, {}, {}), ModelError);
}

TEST(BlendCommand, AxisWeights) {
  const Vec2 v = formation::blend_command({0.2, -0.4}, {0.1, 0.1}, {0.25, 0.75, 1.0, 0.0});
  EXPECT_NEAR(v.x, 0.125, 1e-15);
  EXPECT_NEAR(v.y, -0.4, 1e-15);
}

TEST(Saturate, Property_ClampsNormKeepsDirection) {
  for (std::uint64_t k = 0; k < 500; ++k) {
    Rng r = gen::stream(75, k);
    const Vec2 v{r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)};
    const double vmax = r.uniform(0.01, 1.0);
    const Vec2 s = formation::saturate(v, vmax);
    EXPECT_LE(s.norm(), vmax * (1.0 + 1e-12));
    EXPECT_NEAR(v.cross(s), 0.0, 1e-15);
    EXPECT_GE(v.dot(s), 0.0);
    if (v.norm() <= vmax) EXPECT_EQ(s, v);
  }
}

TEST(TransitionStep, UnitDisplacementGivesGainPointTwo) {
  const std::vector<Vec2> pos{{0.0, 0.0}};
  const std::vector<Vec2> tgt{{1.0, 0.0}};
  const std::vector<Vec2> dis{{1.0, 0.0}};
  const auto out = formation::transition_step(pos, tgt, dis, 5.0, 1.0, {}, {});
  EXPECT_NEAR(out.vel_sp[0].x, 0.2, 1e-15);
  EXPECT_EQ(out.vel_sp[0].y, 0.0);
  EXPECT_EQ(out.mode, formation::Mode::queue);
}

TEST(TransitionStep, OvershootIsPulledBack) {
  const std::vector<Vec2> pos{{1.5, 0.0}};
  const std::vector<Vec2> tgt{{1.0, 0.0}};
  const std::vector<Vec2> dis{{1.0, 0.0}};
  EXPECT_LT(formation::transition_step(pos, tgt, dis, 5.0, 1.0, {}, {}).vel_sp[0].x, 0.0);
}

TEST(TransitionStep, Property_ReachesTargetsNearDesiredTime) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    Rng r = gen::stream(76, k);
    const auto start = gen::points(r, 3, 2.0);
    const auto tgt = gen::points(r, 3, 2.0);
    std::vector<Vec2> dis(3);
    for (std::size_t i = 0; i < 3; ++i) dis[i] = tgt[i] - start[i];
    auto pos = start;
    const double t_des = 10.0;
    for (int t = 0; t < 2000; ++t) {
      const auto out = formation::transition_step(pos, tgt, dis, t_des, 1.0, {}, {});
      for (std::size_t i = 0; i < 3; ++i) pos[i] += 0.01 * out.vel_sp[i];
    }
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(distance(pos[i], tgt[i]), 0.02) << "case " << k;
  }
}

TEST(ProtocolStability, UavTriangleWithSniController) {
  const auto [px, py] = uav_plants();
  const std::vector<lti::RationalTF> plants{px, py};
  const std::vector<lti::RationalTF> ctrl{*control::controller_preset("sni-sim")};
  const auto r = formation::check_protocol_stability(identity(3), roles::TopologyMode::formation, ctrl, plants,
                                                     presets::repulsion_plant());
  EXPECT_TRUE(r.plants_sni);
  EXPECT_TRUE(r.controllers_sni_complement);
  EXPECT_TRUE(r.repulsion_ok);
  EXPECT_FALSE(r.repulsion.is_ni);
  EXPECT_NEAR(r.m0, 144.55555555555557, 1e-11);
  EXPECT_EQ(r.n0, -1.0);
  EXPECT_NEAR(r.lambda_max, 3.0, 1e-12);
  EXPECT_TRUE(r.dc_test.stable);
  EXPECT_TRUE(r.pass());
}

TEST(ProtocolStability, UgvPlantsFailBlockTest) {
  const auto [ps, pw] = ugv_plants();
  const std::vector<lti::RationalTF> plants{ps, pw};
  const std::vector<lti::RationalTF> ctrl{*control::controller_preset("sni-sim")};
  const auto r = formation::check_protocol_stability(identity(3), roles::TopologyMode::queue, ctrl, plants,
                                                     presets::repulsion_plant());
  EXPECT_FALSE(r.plants_sni);
  EXPECT_FALSE(r.pass());
}

TEST(ProtocolStability, PositiveDcLoopGainFails) {
  const std::vector<lti::RationalTF> plants{lti::RationalTF({1.0}, {1.0, 1.0})};
  const std::vector<lti::RationalTF> ctrl{lti::RationalTF({2.0}, {1.0, 1.0})};
  const auto r = formation::check_protocol_stability(identity(4), roles::TopologyMode::formation, ctrl, plants,
                                                     presets::repulsion_plant());
  EXPECT_FALSE(r.dc_test.stable);
  EXPECT_FALSE(r.pass());
}
