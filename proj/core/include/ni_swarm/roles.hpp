#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ni_swarm/geometry.hpp"

namespace ni_swarm::roles {

enum class IdSource { destination_rule, queue_rule };

/// ids[i] is the role number of robot i; 1 is the leader.
struct IdAssignment {
  std::vector<int> ids;
  IdSource source = IdSource::destination_rule;

  /// Robot index holding role `id`.
  [[nodiscard]] std::size_t robot_with(int id) const;
  [[nodiscard]] std::size_t leader() const { return robot_with(1); }
  [[nodiscard]] bool is_bijection() const;
  friend bool operator==(const IdAssignment&, const IdAssignment&) = default;
};

/// offsets[k] belongs to role k+1; offsets[0] must be (0, 0).
struct FormationSpec {
  std::vector<Vec2> offsets;
  std::string shape_name;
};

/// Leader = nearest to the destination; followers numbered 2..n by distance
/// to the leader. Ties go to the lower robot index.
IdAssignment assign_ids(std::span<const Vec2> positions, Vec2 destination);

/// Roles 1..n by distance to the gap midpoint.
IdAssignment requeue_ids(std::span<const Vec2> positions, Vec2 m);

Vec2 desired_offset(const FormationSpec& spec, int id);

enum class Side { front, behind };

/// Which side of `m` a point is on relative to the travel direction.
/// Front is the approach side (not yet past m).
Side side_of(Vec2 p, Vec2 m, Vec2 travel_dir);

/// 1 within 1 m in front of m, 0 beyond 1 m behind it, otherwise `prev`.
int queue_flag(double dist_to_m, Side side, int prev, double threshold = 1.0);

/// Line slots. Role 1 targets m; role k targets the pose of role k-1 minus
/// spacing * travel_dir. Without `poses` the chain is anchored on the
/// targets themselves.
std::vector<Vec2> line_targets(const IdAssignment& ids, Vec2 m, double spacing, Vec2 travel_dir,
                               std::optional<std::span<const Vec2>> poses = std::nullopt);

enum class TopologyMode { formation, queue };

struct Topology {
  Eigen::MatrixXd qi;  // n x l incidence
  Eigen::MatrixXd qc;  // n x l, routes each edge controller to its follower end
  Eigen::RowVectorXd qr;  // selects the leader
};

/// Star around the leader for formations, chain by role for queues.
Topology build_topology(const IdAssignment& ids, TopologyMode mode);

}  // namespace ni_swarm::roles
