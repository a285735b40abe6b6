#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <tuple>
#include <vector>

#include "gen.hpp"
#include "ni_swarm/error.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/roles.hpp"

using namespace ni_swarm;
using roles::IdAssignment;

namespace {

// Independent oracle: rank by (distance, index) pairs.
std::vector<int> rank_by(const std::vector<Vec2>& pts, Vec2 m) {
  std::vector<std::tuple<double, std::size_t>> key;
  for (std::size_t i = 0; i < pts.size(); ++i) key.emplace_back(distance(pts[i], m), i);
  std::sort(key.begin(), key.end());
  std::vector<int> ids(pts.size());
  for (std::size_t r = 0; r < key.size(); ++r) ids[std::get<1>(key[r])] = static_cast<int>(r) + 1;
  return ids;
}

IdAssignment identity(std::size_t n) {
  IdAssignment a;
  for (std::size_t i = 0; i < n; ++i) a.ids.push_back(static_cast<int>(i) + 1);
  return a;
}

}  // namespace

TEST(AssignIds, NearestToDestinationLeads) {
  const std::vector<Vec2> p{{0.0, 0.0}, {5.0, 0.0}, {1.0, 0.0}};
  const auto a = roles::assign_ids(p, {6.0, 0.0});
  EXPECT_EQ(a.ids, (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(a.leader(), 1u);
  EXPECT_TRUE(a.is_bijection());
  EXPECT_EQ(a.source, roles::IdSource::destination_rule);
}

TEST(AssignIds, FollowersOrderedByDistanceToLeader) {
  const std::vector<Vec2> p{{3.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}, {0.0, -2.0}};
  const auto a = roles::assign_ids(p, {-1.0, 0.0});
  EXPECT_EQ(a.ids, (std::vector<int>{4, 1, 2, 3}));
}

TEST(AssignIds, TiesGoToLowerIndex) {
  const std::vector<Vec2> p{{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}};
  const auto a = roles::assign_ids(p, {0.0, 0.0});
  EXPECT_EQ(a.ids, (std::vector<int>{1, 3, 2}));
}

TEST(AssignIds, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(roles::assign_ids(std::vector<Vec2>{}, {}), ModelError);
  EXPECT_THROW(roles::assign_ids(std::vector<Vec2>{{NAN, 0.0}}, {}), ModelError);
}

TEST(AssignIds, Property_TranslationInvariant) {
  for (std::uint64_t k = 0; k < 300; ++k) {
    Rng r = gen::stream(51, k);
    const std::size_t n = 1 + gen::index(r, 8);
    auto p = gen::points(r, n, 5.0);
    const Vec2 dest{r.uniform(-10.0, 10.0), r.uniform(-10.0, 10.0)};
    // Power-of-two shift keeps every coordinate exactly representable.
    const Vec2 shift{static_cast<double>(gen::index(r, 64)) - 32.0, static_cast<double>(gen::index(r, 64)) - 32.0};
    auto q = p;
    for (auto& v : q) v += shift;
    const auto a = roles::assign_ids(p, dest);
    const auto b = roles::assign_ids(q, dest + shift);
    EXPECT_TRUE(a.is_bijection()) << "case " << k;
    EXPECT_EQ(a.leader(), b.leader()) << "case " << k;
  }
}

TEST(RequeueIds, OrderFollowsGapDistance) {
  // Role 1 is furthest from the gap, so the queue reshuffles.
  const std::vector<Vec2> p{{-3.0, 0.0}, {-1.0, 0.0}, {-2.0, 0.0}};
  const auto a = roles::requeue_ids(p, {0.0, 0.0});
  EXPECT_EQ(a.ids, (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(a.source, roles::IdSource::queue_rule);
}

TEST(RequeueIds, Property_MatchesSortOracle) {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Rng r = gen::stream(52, k);
    const std::size_t n = 1 + gen::index(r, 9);
    const bool lattice = k % 2 == 0;
    const auto p = lattice ? gen::lattice_points(r, n, 3) : gen::points(r, n, 4.0);
    const Vec2 m = lattice ? Vec2{0.0, 0.0} : Vec2{r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)};
    EXPECT_EQ(roles::requeue_ids(p, m).ids, rank_by(p, m)) << "case " << k;
  }
}

TEST(DesiredOffset, LooksUpByRole) {
  const roles::FormationSpec spec{{{0.0, 0.0}, {-1.0, 0.5}, {-1.0, -0.5}}, "triangle"};
  EXPECT_EQ(roles::desired_offset(spec, 1), (Vec2{0.0, 0.0}));
  EXPECT_EQ(roles::desired_offset(spec, 3), (Vec2{-1.0, -0.5}));
  EXPECT_THROW(roles::desired_offset(spec, 0), ModelError);
  EXPECT_THROW(roles::desired_offset(spec, 4), ModelError);
}

TEST(QueueFlag, Examples) {
  using roles::Side;
  EXPECT_EQ(roles::queue_flag(0.5, Side::front, 0), 1);
  EXPECT_EQ(roles::queue_flag(1.5, Side::front, 0), 0);
  EXPECT_EQ(roles::queue_flag(0.5, Side::behind, 1), 1);
  EXPECT_EQ(roles::queue_flag(1.5, Side::behind, 1), 0);
  EXPECT_EQ(roles::queue_flag(1.0, Side::front, 0), 0);
  EXPECT_EQ(roles::queue_flag(1.0, Side::behind, 1), 1);
}

TEST(QueueFlag, OneActivationOneDeactivationPerPass) {
  const Vec2 m{0.0, 0.0};
  const Vec2 dir{1.0, 0.0};
  int flag = 0;
  int up = 0;
  int down = 0;
  for (int i = 0; i <= 1000; ++i) {
    const Vec2 p{-5.0 + 0.01 * i, 0.2};
    const int next = roles::queue_flag(distance(p, m), roles::side_of(p, m, dir), flag);
    up += flag == 0 && next == 1;
    down += flag == 1 && next == 0;
    flag = next;
  }
  EXPECT_EQ(up, 1);
  EXPECT_EQ(down, 1);
  EXPECT_EQ(flag, 0);
}

TEST(SideOf, Examples) {
  EXPECT_EQ(roles::side_of({-1.0, 3.0}, {0.0, 0.0}, {1.0, 0.0}), roles::Side::front);
  EXPECT_EQ(roles::side_of({0.0, 3.0}, {0.0, 0.0}, {1.0, 0.0}), roles::Side::front);
  EXPECT_EQ(roles::side_of({0.1, 0.0}, {0.0, 0.0}, {1.0, 0.0}), roles::Side::behind);
}

TEST(LineTargets, ChainOnTargets) {
  const auto t = roles::line_targets(identity(3), {1.0, 1.0}, 0.5, {2.0, 0.0});
  EXPECT_EQ(t, (std::vector<Vec2>{{1.0, 1.0}, {0.5, 1.0}, {0.0, 1.0}}));
}

TEST(LineTargets, ChainOnPoses) {
  IdAssignment ids;
  ids.ids = {2, 1};
  const std::vector<Vec2> poses{{-3.0, 0.0}, {-1.0, 0.4}};
  const auto t = roles::line_targets(ids, {0.0, 0.0}, 0.6, {1.0, 0.0}, std::span<const Vec2>(poses));
  EXPECT_EQ(t[1], (Vec2{0.0, 0.0}));
  EXPECT_NEAR(t[0].x, -1.6, 1e-15);
  EXPECT_EQ(t[0].y, 0.4);
}

TEST(LineTargets, Rejections) {
  EXPECT_THROW(roles::line_targets(identity(2), {}, 0.0, {1.0, 0.0}), ModelError);
  const std::vector<Vec2> one{{0.0, 0.0}};
  EXPECT_THROW(roles::line_targets(identity(2), {}, 0.5, {1.0, 0.0}, std::span<const Vec2>(one)), ModelError);
}

TEST(BuildTopology, StarAndPathOnThree) {
  const auto star = roles::build_topology(identity(3), roles::TopologyMode::formation);
  const auto path = roles::build_topology(identity(3), roles::TopologyMode::queue);
  Eigen::MatrixXd expected_star(3, 2);
  expected_star << -1, -1, 1, 0, 0, 1;
  Eigen::MatrixXd expected_path(3, 2);
  expected_path << -1, 0, 1, -1, 0, 1;
  EXPECT_EQ(star.qi, expected_star);
  EXPECT_EQ(path.qi, expected_path);
  EXPECT_NEAR(ni::max_eigenvalue(ni::laplacian_from_incidence(star.qi)), 3.0, 1e-12);
  EXPECT_NEAR(ni::max_eigenvalue(ni::laplacian_from_incidence(path.qi)), 3.0, 1e-12);
  EXPECT_EQ(star.qr, (Eigen::RowVector3d{1.0, 0.0, 0.0}));
}

TEST(BuildTopology, SingleRobotHasNoEdges) {
  const auto t = roles::build_topology(identity(1), roles::TopologyMode::formation);
  EXPECT_EQ(t.qi.cols(), 0);
  EXPECT_EQ(t.qr.size(), 1);
}

TEST(BuildTopology, RejectsNonBijection) {
  IdAssignment a;
  a.ids = {1, 1, 2};
  EXPECT_THROW(roles::build_topology(a, roles::TopologyMode::queue), ModelError);
}

TEST(BuildTopology, Property_ConnectedTree) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng r = gen::stream(53, k);
    const std::size_t n = 2 + gen::index(r, 8);
    const auto p = gen::points(r, n, 3.0);
    const auto ids = roles::assign_ids(p, {5.0, 0.0});
    const auto mode = k % 2 == 0 ? roles::TopologyMode::formation : roles::TopologyMode::queue;
    const auto t = roles::build_topology(ids, mode);
    ASSERT_EQ(t.qi.cols(), static_cast<Eigen::Index>(n - 1));
    const Eigen::MatrixXd l = t.qi * t.qi.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-10) << "case " << k;
    EXPECT_GT(es.eigenvalues()(1), 1e-9) << "case " << k;
    // Every column is a signed edge; qc marks its follower end.
    for (Eigen::Index e = 0; e < t.qi.cols(); ++e) {
      EXPECT_EQ(t.qi.col(e).sum(), 0.0);
      EXPECT_EQ(t.qc.col(e).sum(), 1.0);
      EXPECT_EQ((t.qc.col(e).array() * t.qi.col(e).array()).sum(), 1.0);
    }
  }
}
