#pragma once

#include <utility>

#include "ni_swarm/geometry.hpp"
#include "ni_swarm/lti.hpp"
#include "ni_swarm/rng.hpp"

namespace ni_swarm {

enum class VehicleKind { uav, ugv };

struct RobotState {
  Vec2 pos;
  Vec2 vel;
  double yaw = 0.0;  // (-pi, pi]
  int id = 0;        // role number, 1 = leader; 0 = unassigned
  double radius = 0.46;
  VehicleKind kind = VehicleKind::ugv;
};

/// Additive velocity disturbance.
///
/// `bias` is rotated by `direction` before it is applied. With `washout` > 0
/// the bias decays as exp(-(t - onset)/washout), which stands in for the
/// integral action of the inner attitude loop that is not simulated.
struct WindModel {
  Vec2 bias;
  double gust_std = 0.0;
  double onset = 0.0;
  double direction = 0.0;
  double washout = 0.0;
  bool enabled = false;
};

/// Identified UAV velocity-setpoint to position maps, x then y.
std::pair<lti::RationalTF, lti::RationalTF> uav_plants();

/// Identified UGV maps: speed setpoint to travelled distance, yaw-rate
/// setpoint to yaw.
std::pair<lti::RationalTF, lti::RationalTF> ugv_plants();

/// G(s)(s + p)/s where -p is the slowest real pole of G. The identified UGV
/// maps have a slow pole that caps how far the leaky model can travel, so
/// pose propagation uses this variant; G(0)*p becomes the steady velocity gain.
lti::RationalTF integrating_variant(const lti::RationalTF& g);

struct YawSpeed {
  double yaw_sp = 0.0;
  double speed_sp = 0.0;
};

/// Heading and magnitude of a planar velocity command. The zero vector keeps
/// `held_yaw`.
YawSpeed yaw_speed_from_velocity(Vec2 v, double held_yaw);

/// Adds the wind bias and a Gaussian gust to `v` once t >= onset.
Vec2 apply_wind(Vec2 v, const WindModel& wind, double t, Rng& rng);

struct UgvParams {
  double vmax = 0.02;                 // m/s
  double corner_threshold = 1.0471975511965976;  // 60 degrees
  double yaw_gain = 15.0;             // yaw-rate setpoint per radian of error
};

/// Discretized UGV speed and yaw loops plus pose integration.
class UgvDrive {
 public:
  explicit UgvDrive(UgvParams params = {}, double dt = lti::kDefaultDt);

  /// One tick toward the planar velocity command.
  RobotState tick(const RobotState& state, Vec2 vel_cmd);

  [[nodiscard]] bool rotating_in_place() const { return rotating_; }
  [[nodiscard]] double last_speed() const { return last_speed_; }
  [[nodiscard]] const UgvParams& params() const { return params_; }
  [[nodiscard]] double dt() const { return dt_; }
  void reset();

 private:
  UgvParams params_;
  double dt_;
  lti::DiscreteLTI speed_;
  lti::DiscreteLTI yaw_;
  double held_yaw_ = 0.0;
  bool yaw_initialized_ = false;
  double prev_distance_ = 0.0;
  double prev_yaw_out_ = 0.0;
  double prev_err_ = 0.0;
  double last_speed_ = 0.0;
  bool rotating_ = false;
};

/// Discretized UAV x/y loops; the plant output is position relative to the
/// take-off point.
class UavDrive {
 public:
  explicit UavDrive(Vec2 origin = {}, double dt = lti::kDefaultDt);

  /// Steps both axes with vel_sp plus wind. `t` is the time at the start of
  /// the tick.
  RobotState tick(const RobotState& state, Vec2 vel_sp, const WindModel& wind, double t, Rng& rng);

  [[nodiscard]] double dt() const { return dt_; }
  void reset();

 private:
  Vec2 origin_;
  double dt_;
  lti::DiscreteLTI x_;
  lti::DiscreteLTI y_;
};

}  // namespace ni_swarm
