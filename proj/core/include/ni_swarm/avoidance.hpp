#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ni_swarm/geometry.hpp"
#include "ni_swarm/rng.hpp"

namespace ni_swarm::avoid {

struct ObstacleCircle {
  Vec2 center;
  double radius = 0.35;
};

/// One simple piece of a sensed obstacle.
struct ObstaclePart {
  Vec2 centroid;
  double area = 0.0;
  std::vector<Vec2> samples;
};

/// Part for a simple polygon: centroid is the vertex mean, area from the
/// shoelace formula, samples are the vertices.
ObstaclePart polygon_part(std::span<const Vec2> vertices);

inline constexpr double kCircleClearance = 0.05;

/// Area-weighted center of the parts; radius covers every sample plus
/// `clearance`, capped at `fov_max`.
ObstacleCircle obstacle_circle(std::span<const ObstaclePart> parts, double fov_max,
                               double clearance = kCircleClearance);

Vec2 gap_midpoint(const ObstacleCircle& c1, const ObstacleCircle& c2);

/// Free width between two circles (negative when they intersect).
double gap_width(const ObstacleCircle& c1, const ObstacleCircle& c2);

/// r1 + r2 - |c1 - c2|, floored at 0.
double overlap(Vec2 c1, double r1, Vec2 c2, double r2);

/// Per-robot repulsive velocity state.
struct RepulsionAccumulator {
  Vec2 v;
};

struct RepulsionParams {
  double k_r = -0.1;   // N/m; only the magnitude sets the force
  double mass = 1.0;   // kg
  double fmax = 6.0;   // N
  double decay_tau = 1.0;  // s; accumulator decay once the overlap clears
};

struct RepulsionResult {
  double overlap = 0.0;
  Vec2 force;
  Vec2 vel_cmd;  // velocity increment applied to the accumulator this tick
};

/// Force on the yielding robot at `c_yield`, pushed away from `c_other`
/// along the center line (+x when the centers coincide). Integrates
/// force/mass into `acc`; without overlap the accumulator decays instead.
RepulsionResult repulsion(Vec2 c_yield, double r1, Vec2 c_other, double r2, const RepulsionParams& p,
                          double dt, RepulsionAccumulator& acc);

/// Mean position.
Vec2 uav_center(std::span<const Vec2> positions);

/// True when the open segment a-b passes through the circle.
bool segment_blocked(Vec2 a, Vec2 b, const ObstacleCircle& c);

struct RelativeMeasurement {
  Vec2 rel;  // peer minus requester
  bool uav_sourced = false;
};

/// Relative position of `peer` seen from `requester`. An obstacle on the
/// line of sight switches to the aerial view (truth plus Gaussian noise);
/// without a UAV that throws SensingLostError.
RelativeMeasurement fallback_relative_position(Vec2 requester, Vec2 peer,
                                               std::span<const ObstacleCircle> obstacles, bool uav_available,
                                               double noise_std, Rng& rng);

struct FovParams {
  double half_angle = 0.7853981633974483;  // 90 degree cone
  double range = 3.0;
};

/// Indices of obstacles whose nearest point lies inside the sensing cone.
std::vector<std::size_t> sense_obstacles(Vec2 pos, double heading, std::span<const ObstacleCircle> obstacles,
                                         const FovParams& fov = {});

struct Gap {
  std::size_t a = 0;
  std::size_t b = 0;
  Vec2 m;
  double width = 0.0;
  Vec2 normal;  // unit, pointing toward the destination side
};

/// Narrow passage ahead of `centroid`: a pair of circles whose free width is
/// in (min_width, formation_width) and whose connecting segment crosses no
/// other circle. Among the candidates ahead of the centroid the nearest wins.
std::optional<Gap> find_gap(Vec2 centroid, Vec2 destination, std::span<const ObstacleCircle> obstacles,
                            std::span<const std::size_t> candidates, double formation_width,
                            double min_width = 0.2);

}  // namespace ni_swarm::avoid
