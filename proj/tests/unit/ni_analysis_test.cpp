#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <vector>

#include "gen.hpp"
#include "ni_swarm/control.hpp"
#include "ni_swarm/error.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/presets.hpp"
#include "ni_swarm/vehicle.hpp"

using namespace ni_swarm;
using lti::RationalTF;

namespace {

Eigen::MatrixXd incidence(int n, const std::vector<std::array<int, 2>>& edges) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    q(edges[e][0], static_cast<Eigen::Index>(e)) = 1.0;
    q(edges[e][1], static_cast<Eigen::Index>(e)) = -1.0;
  }
  return q;
}

Eigen::MatrixXd path3() { return incidence(3, {{0, 1}, {1, 2}}); }

// Degree minus adjacency, largest eigenvalue from Eigen's self-adjoint solver.
double oracle_lambda_max(int n, const std::vector<std::array<int, 2>>& edges) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    l(e[0], e[1]) -= 1.0;
    l(e[1], e[0]) -= 1.0;
    l(e[0], e[0]) += 1.0;
    l(e[1], e[1]) += 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

TEST(IsSni, FirstOrderPositive) {
  const auto r = ni::is_sni(RationalTF({1.0}, {1.0, 1.0}));
  EXPECT_TRUE(r.is_sni);
  EXPECT_TRUE(r.poles_stable);
  EXPECT_GT(r.margin, 0.0);
  EXPECT_FALSE(r.sign_complement_sni);
}

TEST(IsSni, FirstOrderNegativeFailsLiteralTest) {
  const auto r = ni::is_sni(RationalTF({-1.0}, {1.0, 1.0}));
  EXPECT_FALSE(r.is_sni);
  EXPECT_EQ(r.reason, ni::Reason::negative_margin);
  EXPECT_TRUE(r.sign_complement_sni);
}

TEST(IsSni, UavXPlant) { EXPECT_TRUE(ni::is_sni(uav_plants().first).is_sni); }

TEST(IsSni, MarginMatchesClosedFormForFirstOrder) {
  // -2 Im 1/(1 + jw) = 2w/(1 + w^2); on a grid starting at 1e-4 the minimum is at the low end.
  const auto& g = lti::FreqGrid::default_grid();
  const auto r = ni::is_sni(RationalTF({1.0}, {1.0, 1.0}), g);
  const double lo = g.omegas().front();
  const double hi = g.omegas().back();
  const double expect = std::min(2.0 * lo / (1.0 + lo * lo), 2.0 * hi / (1.0 + hi * hi));
  EXPECT_NEAR(r.margin, expect, 1e-15);
}

TEST(IsSni, InvariantReportImpliesPositiveMargin) {
  for (const auto& name : presets::model_preset_names()) {
    const auto p = presets::model_preset(name);
    if (!p->tf.is_proper()) continue;
    const auto r = ni::is_sni(p->tf);
    if (r.is_sni) {
      EXPECT_GT(r.margin, 0.0) << name;
      EXPECT_TRUE(r.poles_stable) << name;
    }
  }
}

TEST(IsSni, ImaginaryAxisPoleIsAFlagNotAThrow) {
  ni::SniReport r;
  EXPECT_NO_THROW(r = ni::is_sni(RationalTF({1.0}, {1.0, 0.0, 1.0})));
  EXPECT_FALSE(r.is_sni);
  EXPECT_EQ(r.reason, ni::Reason::imaginary_axis_pole);
  EXPECT_EQ(ni::is_sni(RationalTF({1.0}, {1.0, -1.0})).reason, ni::Reason::unstable_pole);
}

// (b1 s + b0)/(s^2 + a1 s + a0) with positive coefficients has
// -Im P(jw) = w (b0 a1 - b1 a0 + b1 w^2) / |den|^2, so the sign on every
// w > 0 is positive iff b0 a1 - b1 a0 >= 0. Each row was checked by hand.
TEST(IsSni, Property_TwentyHandCheckedSecondOrderCases) {
  struct Case {
    double b1, b0, a1, a0;
    bool sni;
  };
  const std::array<Case, 20> cases{{
      {1.0, 10.0, 5.0, 2.0, true},         // 50 - 2
      {3.31, 195.26, 174.66, 3.12, true},  // UAV x
      {3.31, 26.02, 25.71, 0.18, true},    // UAV y
      {1.0, 1.0, 2.0, 1.0, true},          // 2 - 1
      {0.5, 4.0, 3.0, 2.0, true},          // 12 - 1
      {2.0, 5.0, 1.0, 1.0, true},          // 5 - 2
      {1.0, 3.0, 1.0, 2.0, true},          // 3 - 2
      {0.1, 1.0, 0.5, 4.0, true},          // 0.5 - 0.4
      {4.0, 9.0, 6.0, 5.0, true},          // 54 - 20
      {1.0, 100.0, 10.0, 50.0, true},      // 1000 - 50
      {1.0, 1.0, 1.0, 2.0, false},         // 1 - 2
      {5.0, 1.0, 2.0, 1.0, false},         // 2 - 5
      {2.0, 3.0, 1.0, 4.0, false},         // 3 - 8
      {1.0, 0.5, 0.5, 1.0, false},         // 0.25 - 1
      {3.0, 2.0, 4.0, 3.0, false},         // 8 - 9
      {1.0, 2.0, 0.1, 5.0, false},         // 0.2 - 5
      {10.0, 1.0, 1.0, 1.0, false},        // 1 - 10
      {0.5, 1.0, 1.0, 3.0, false},         // 1 - 1.5
      {2.0, 1.0, 10.0, 6.0, false},        // 10 - 12
      {1.0, 4.0, 2.0, 9.0, false},         // 8 - 9
  }};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& c = cases[i];
    const bool symbolic = c.b0 * c.a1 - c.b1 * c.a0 > 0.0;
    ASSERT_EQ(symbolic, c.sni) << "table row " << i;
    EXPECT_EQ(ni::is_sni(RationalTF({c.b1, c.b0}, {1.0, c.a1, c.a0})).is_sni, c.sni) << "row " << i;
  }
}

TEST(IsSni, Property_PositiveScalingKeepsVerdict) {
  const auto& grid = lti::FreqGrid::logspace(1e-3, 1e4, 400);
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng r = gen::stream(21, k);
    const double a0 = r.uniform(0.1, 5.0);
    const double a1 = r.uniform(0.1, 5.0);
    const RationalTF tf({r.uniform(0.1, 3.0), r.uniform(0.1, 3.0)}, {1.0, a1, a0});
    const double c = std::pow(10.0, r.uniform(-3.0, 3.0));
    const auto base = ni::is_sni(tf, grid);
    const auto scaled = ni::is_sni(tf.scaled(c), grid);
    EXPECT_EQ(base.is_sni, scaled.is_sni) << "case " << k;
    EXPECT_NEAR(scaled.margin, c * base.margin, 1e-9 * std::abs(c * base.margin) + 1e-300) << "case " << k;
  }
}

TEST(IsNi, RepulsionPlantTakesOriginPath) {
  const auto r = ni::is_ni(presets::repulsion_plant(-0.1, 1.0));
  EXPECT_TRUE(r.origin_pole);
  // -0.1/(jw) = 0.1j/w: the literal imaginary part has the wrong sign.
  EXPECT_FALSE(r.is_ni);
  EXPECT_TRUE(r.sign_complement_ni);
  const auto pos = ni::is_ni(presets::repulsion_plant(0.1, 1.0));
  EXPECT_TRUE(pos.origin_pole);
  EXPECT_TRUE(pos.is_ni);
}

TEST(IsNi, StableFirstOrderAndUnstable) {
  EXPECT_TRUE(ni::is_ni(RationalTF({1.0}, {1.0, 1.0})).is_ni);
  const auto u = ni::is_ni(RationalTF({1.0}, {1.0, -1.0}));
  EXPECT_FALSE(u.is_ni);
  EXPECT_EQ(u.reason, ni::Reason::unstable_pole);
}

TEST(IsNi, StructuralRejections) {
  EXPECT_EQ(ni::is_ni(RationalTF({1.0}, {1.0, 0.0, 0.0})).reason, ni::Reason::repeated_origin_pole);
  EXPECT_EQ(ni::is_ni(RationalTF({1.0, 1.0}, {1.0, 0.0})).reason, ni::Reason::not_strictly_proper);
}

TEST(Laplacian, PathThree) {
  Eigen::MatrixXd expect(3, 3);
  expect << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ(ni::laplacian_from_incidence(path3()), expect);
}

TEST(Laplacian, SingleEdgeAndEmpty) {
  Eigen::MatrixXd expect(2, 2);
  expect << 1, -1, -1, 1;
  EXPECT_EQ(ni::laplacian_from_incidence(incidence(2, {{0, 1}})), expect);
  EXPECT_EQ(ni::laplacian_from_incidence(Eigen::MatrixXd::Zero(3, 0)), Eigen::MatrixXd::Zero(3, 3));
}

TEST(Laplacian, MalformedIncidenceRejected) {
  Eigen::MatrixXd bad(2, 1);
  bad << 1, 1;
  EXPECT_THROW(ni::laplacian_from_incidence(bad), ModelError);
  Eigen::MatrixXd dup = incidence(2, {{0, 1}, {1, 0}});
  EXPECT_THROW(ni::laplacian_from_incidence(dup), ModelError);
}

TEST(MaxEigenvalue, Examples) {
  EXPECT_NEAR(ni::max_eigenvalue(ni::laplacian_from_incidence(path3())), 3.0, 3e-9);
  EXPECT_NEAR(ni::max_eigenvalue(Eigen::MatrixXd::Identity(2, 2)), 1.0, 1e-9);
  EXPECT_EQ(ni::max_eigenvalue(Eigen::MatrixXd::Zero(3, 3)), 0.0);
  Eigen::MatrixXd ns(2, 2);
  ns << 1, 2, 3, 4;
  EXPECT_THROW(ni::max_eigenvalue(ns), ModelError);
}

TEST(MaxEigenvalue, Property_AllGraphsUpToFiveNodesMatchOracle) {
  int graphs = 0;
  for (int n = 1; n <= 5; ++n) {
    std::vector<std::array<int, 2>> all;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) all.push_back({i, j});
    const unsigned subsets = 1u << all.size();
    for (unsigned mask = 0; mask < subsets; ++mask) {
      std::vector<std::array<int, 2>> edges;
      for (std::size_t e = 0; e < all.size(); ++e)
        if (mask & (1u << e)) edges.push_back(all[e]);
      const double got = ni::max_eigenvalue(ni::laplacian_from_incidence(incidence(n, edges)));
      const double want = oracle_lambda_max(n, edges);
      ASSERT_NEAR(got, want, 1e-9 * std::max(1.0, want)) << "n=" << n << " mask=" << mask;
      ++graphs;
    }
  }
  EXPECT_EQ(graphs, 1 + 2 + 8 + 64 + 1024);
}

TEST(FormationStable, Examples) {
  const auto a = ni::formation_stable(47.34, -1.0, path3());
  EXPECT_TRUE(a.stable);
  EXPECT_NEAR(a.margin, 1.0 / 3.0 + 47.34, 1e-8);
  EXPECT_FALSE(ni::formation_stable(47.34, 0.01, path3()).stable);
  EXPECT_TRUE(ni::formation_stable(0.0, 0.0, path3()).stable);
}

TEST(FormationStable, EdgelessIsVacuous) {
  const auto v = ni::formation_stable(5.0, 5.0, Eigen::MatrixXd::Zero(1, 0));
  EXPECT_TRUE(v.stable);
  EXPECT_TRUE(v.vacuous);
  EXPECT_TRUE(std::isinf(v.margin));
}

TEST(FormationStable, Property_MarginDecreasesWithControllerGain) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng r = gen::stream(22, k);
    const double m0 = r.uniform(0.01, 100.0);
    double n0 = r.uniform(-5.0, 5.0);
    double prev = ni::formation_stable(m0, n0, path3()).margin;
    for (int s = 0; s < 5; ++s) {
      n0 += r.uniform(0.001, 1.0);
      const double next = ni::formation_stable(m0, n0, path3()).margin;
      EXPECT_LT(next, prev) << "case " << k;
      prev = next;
    }
  }
}

TEST(InterconnectStable, Examples) {
  EXPECT_TRUE(ni::interconnect_stable(RationalTF::gain(0.5), RationalTF::gain(1.0)));
  EXPECT_FALSE(ni::interconnect_stable(RationalTF::gain(1.0), RationalTF::gain(1.0)));
  EXPECT_TRUE(ni::interconnect_stable(ugv_plants().first, *control::controller_preset("sni-sim")));
  EXPECT_THROW(ni::interconnect_stable(presets::repulsion_plant(), RationalTF::gain(1.0)), ModelError);
}

TEST(BlockSni, Examples) {
  const auto [x, y] = uav_plants();
  const std::vector<RationalTF> uav{x, y};
  EXPECT_TRUE(ni::block_sni(uav));
  const std::vector<RationalTF> mixed{RationalTF({1.0}, {1.0, 1.0}), RationalTF({1.0}, {1.0, -1.0})};
  EXPECT_FALSE(ni::block_sni(mixed));
  EXPECT_THROW(ni::block_sni(std::vector<RationalTF>{}), ModelError);
}

TEST(BlockSni, Property_SingletonEqualsIsSni) {
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng r = gen::stream(23, k);
    const RationalTF tf({r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)}, {1.0, r.uniform(-1.0, 5.0), r.uniform(-1.0, 5.0)});
    const std::vector<RationalTF> one{tf};
    EXPECT_EQ(ni::block_sni(one), ni::is_sni(tf).is_sni) << "case " << k;
  }
}

TEST(PositiveFeedback, RepulsionWithComplementControllerIsStable) {
  // -0.1/s closed with +1/(s+1): -0.1(s+1)/(s^2 + s + 0.1), stable.
  const auto r = ni::positive_feedback_sni(presets::repulsion_plant(), RationalTF({1.0}, {1.0, 1.0}));
  EXPECT_TRUE(r.poles_stable);
  EXPECT_TRUE(r.sign_complement_sni);
  // With the negative-gain controller the loop has a positive real pole.
  const auto neg = ni::positive_feedback_sni(presets::repulsion_plant(), *control::controller_preset("sni-sim"));
  EXPECT_EQ(neg.reason, ni::Reason::unstable_pole);
}
