#include "ni_swarm/roles.hpp"

#include <algorithm>
#include <numeric>

#include "ni_swarm/error.hpp"

namespace ni_swarm::roles {

std::size_t IdAssignment::robot_with(int id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw ModelError("role " + std::to_string(id) + " not assigned");
  return static_cast<std::size_t>(it - ids.begin());
}

bool IdAssignment::is_bijection() const {
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i) + 1) return false;
  return true;
}

namespace {

// Robot indices ordered by distance to p; stable so ties keep index order.
std::vector<std::size_t> order_by_distance(std::span<const Vec2> positions, Vec2 p) {
  std::vector<double> d(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!positions[i].finite()) throw ModelError("non-finite robot position");
    d[i] = distance(positions[i], p);
  }
  std::vector<std::size_t> idx(positions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  return idx;
}

}  // namespace

IdAssignment assign_ids(std::span<const Vec2> positions, Vec2 destination) {
  if (positions.empty()) throw ModelError("assign_ids needs at least one robot");
  const std::size_t leader = order_by_distance(positions, destination).front();
  IdAssignment out;
  out.ids.assign(positions.size(), 0);
  out.ids[leader] = 1;
  int next = 2;
  for (std::size_t i : order_by_distance(positions, positions[leader])) {
    if (i == leader) continue;
    out.ids[i] = next++;
  }
  return out;
}

IdAssignment requeue_ids(std::span<const Vec2> positions, Vec2 m) {
  if (positions.empty()) throw ModelError("requeue_ids needs at least one robot");
  IdAssignment out;
  out.source = IdSource::queue_rule;
  out.ids.assign(positions.size(), 0);
  int next = 1;
  for (std::size_t i : order_by_distance(positions, m)) out.ids[i] = next++;
  return out;
}

Vec2 desired_offset(const FormationSpec& spec, int id) {
  if (id < 1 || static_cast<std::size_t>(id) > spec.offsets.size())
    throw ModelError("role " + std::to_string(id) + " outside the formation spec");
  return spec.offsets[static_cast<std::size_t>(id - 1)];
}

Side side_of(Vec2 p, Vec2 m, Vec2 travel_dir) {
  return (p - m).dot(travel_dir) <= 0.0 ? Side::front : Side::behind;
}

int queue_flag(double dist_to_m, Side side, int prev, double threshold) {
  if (side == Side::front && dist_to_m < threshold) return 1;
  if (side == Side::behind && dist_to_m > threshold) return 0;
  return prev;
}

std::vector<Vec2> line_targets(const IdAssignment& ids, Vec2 m, double spacing, Vec2 travel_dir,
                               std::optional<std::span<const Vec2>> poses) {
  if (!(spacing > 0.0)) throw ModelError("line spacing must be positive");
  const std::size_t n = ids.ids.size();
  if (poses && poses->size() != n) throw ModelError("line_targets: pose count mismatch");
  const Vec2 dir = normalized(travel_dir);
  std::vector<Vec2> targets(n);
  Vec2 ahead_target = m;
  for (int role = 1; role <= static_cast<int>(n); ++role) {
    const std::size_t r = ids.robot_with(role);
    if (role == 1) {
      targets[r] = m;
    } else {
      const std::size_t prev = ids.robot_with(role - 1);
      const Vec2 anchor = poses ? (*poses)[prev] : ahead_target;
      targets[r] = anchor - spacing * dir;
    }
    ahead_target = targets[r];
  }
  return targets;
}

Topology build_topology(const IdAssignment& ids, TopologyMode mode) {
  if (!ids.is_bijection()) throw ModelError("build_topology needs a bijective assignment");
  const auto n = static_cast<Eigen::Index>(ids.ids.size());
  const Eigen::Index l = n - 1;
  Topology t;
  t.qi = Eigen::MatrixXd::Zero(n, l);
  t.qc = Eigen::MatrixXd::Zero(n, l);
  t.qr = Eigen::RowVectorXd::Zero(n);
  const auto leader = static_cast<Eigen::Index>(ids.leader());
  t.qr(leader) = 1.0;
  for (int role = 2; role <= static_cast<int>(n); ++role) {
    const Eigen::Index e = role - 2;
    const auto follower = static_cast<Eigen::Index>(ids.robot_with(role));
    const auto anchor = mode == TopologyMode::formation ? leader
                                                        : static_cast<Eigen::Index>(ids.robot_with(role - 1));
    t.qi(follower, e) = 1.0;
    t.qi(anchor, e) = -1.0;
    t.qc(follower, e) = 1.0;
  }
  return t;
}

}  // namespace ni_swarm::roles
