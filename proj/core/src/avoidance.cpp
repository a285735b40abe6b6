#include "ni_swarm/avoidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ni_swarm/error.hpp"

namespace ni_swarm::avoid {

ObstaclePart polygon_part(std::span<const Vec2> vertices) {
  if (vertices.size() < 3) throw ModelError("polygon needs at least three vertices");
  ObstaclePart part;
  double twice_area = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec2 a = vertices[i];
    const Vec2 b = vertices[(i + 1) % vertices.size()];
    twice_area += a.cross(b);
    part.centroid += a;
  }
  part.centroid = part.centroid / static_cast<double>(vertices.size());
  part.area = 0.5 * std::abs(twice_area);
  part.samples.assign(vertices.begin(), vertices.end());
  return part;
}

// The literal rule adds the largest sensed coordinate to the centroid; read
// here as a radius that covers the sensed extent.
ObstacleCircle obstacle_circle(std::span<const ObstaclePart> parts, double fov_max, double clearance) {
  if (parts.empty()) throw ModelError("obstacle_circle needs at least one part");
  double total = 0.0;
  Vec2 acc;
  for (const auto& p : parts) {
    if (!(p.area >= 0.0)) throw ModelError("part area must be non-negative");
    acc += p.area * p.centroid;
    total += p.area;
  }
  if (!(total > 0.0)) throw ModelError("obstacle parts have zero total area");
  ObstacleCircle c;
  c.center = acc / total;
  double r = 0.0;
  for (const auto& p : parts)
    for (Vec2 s : p.samples) r = std::max(r, distance(c.center, s));
  c.radius = std::min(r + clearance, fov_max);
  return c;
}

Vec2 gap_midpoint(const ObstacleCircle& c1, const ObstacleCircle& c2) {
  if (c1.center == c2.center) throw ModelError("gap_midpoint: coincident centers");
  return 0.5 * (c1.center + c2.center);
}

double gap_width(const ObstacleCircle& c1, const ObstacleCircle& c2) {
  return distance(c1.center, c2.center) - c1.radius - c2.radius;
}

double overlap(Vec2 c1, double r1, Vec2 c2, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw ModelError("radii must be positive");
  return std::max(0.0, r1 + r2 - distance(c1, c2));
}

RepulsionResult repulsion(Vec2 c_yield, double r1, Vec2 c_other, double r2, const RepulsionParams& p,
                          double dt, RepulsionAccumulator& acc) {
  if (!(p.mass > 0.0)) throw ModelError("mass must be positive");
  RepulsionResult out;
  out.overlap = overlap(c_yield, r1, c_other, r2);
  if (out.overlap <= 0.0) {
    if (p.decay_tau > 0.0) acc.v *= std::exp(-dt / p.decay_tau);
    else acc.v = {};
    return out;
  }
  const Vec2 dir = normalized(c_yield - c_other, {1.0, 0.0});
  const double mag = std::min(std::abs(p.k_r) * out.overlap, p.fmax);
  out.force = mag * dir;
  out.vel_cmd = (dt / p.mass) * out.force;
  acc.v += out.vel_cmd;
  return out;
}

Vec2 uav_center(std::span<const Vec2> positions) {
  if (positions.empty()) throw ModelError("uav_center of an empty formation");
  Vec2 acc;
  for (Vec2 p : positions) acc += p;
  return acc / static_cast<double>(positions.size());
}

bool segment_blocked(Vec2 a, Vec2 b, const ObstacleCircle& c) {
  return point_segment_distance(c.center, a, b) < c.radius;
}

RelativeMeasurement fallback_relative_position(Vec2 requester, Vec2 peer, std::span<const ObstacleCircle> obstacles,
                                               bool uav_available, double noise_std, Rng& rng) {
  const bool occluded = std::any_of(obstacles.begin(), obstacles.end(),
                                    [&](const ObstacleCircle& c) { return segment_blocked(requester, peer, c); });
  RelativeMeasurement m{peer - requester, false};
  if (!occluded) return m;
  if (!uav_available) throw SensingLostError("line of sight blocked and no UAV available");
  m.uav_sourced = true;
  if (noise_std > 0.0) {
    m.rel.x += rng.normal(0.0, noise_std);
    m.rel.y += rng.normal(0.0, noise_std);
  }
  return m;
}

std::vector<std::size_t> sense_obstacles(Vec2 pos, double heading, std::span<const ObstacleCircle> obstacles,
                                         const FovParams& fov) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Vec2 d = obstacles[i].center - pos;
    const double dist = d.norm();
    if (dist - obstacles[i].radius > fov.range) continue;
    if (dist <= obstacles[i].radius) {
      out.push_back(i);
      continue;
    }
    // Widen the cone by the angular half-size of the circle.
    const double spread = std::asin(std::min(1.0, obstacles[i].radius / dist));
    const double bearing = angle_diff(std::atan2(d.y, d.x), heading);
    if (std::abs(bearing) <= fov.half_angle + spread) out.push_back(i);
  }
  return out;
}

std::optional<Gap> find_gap(Vec2 centroid, Vec2 destination, std::span<const ObstacleCircle> obstacles,
                            std::span<const std::size_t> candidates, double formation_width, double min_width) {
  std::optional<Gap> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const ObstacleCircle& c1 = obstacles[candidates[i]];
      const ObstacleCircle& c2 = obstacles[candidates[j]];
      if (c1.center == c2.center) continue;
      const double w = gap_width(c1, c2);
      if (!(w > min_width && w < formation_width)) continue;
      bool clear = true;
      for (std::size_t k = 0; k < obstacles.size() && clear; ++k) {
        if (k == candidates[i] || k == candidates[j]) continue;
        if (segment_blocked(c1.center, c2.center, obstacles[k])) clear = false;
      }
      if (!clear) continue;
      const Vec2 m = gap_midpoint(c1, c2);
      const Vec2 axis = c2.center - c1.center;
      Vec2 normal = normalized({-axis.y, axis.x});
      if (normal.dot(destination - m) < 0.0) normal = -normal;
      // Ahead: the centroid has not yet crossed the gap line.
      if ((m - centroid).dot(normal) <= 0.0) continue;
      const double d = distance(centroid, m);
      if (d < best_dist) {
        best_dist = d;
        best = Gap{candidates[i], candidates[j], m, w, normal};
      }
    }
  }
  return best;
}

}  // namespace ni_swarm::avoid
