#include "ni_swarm/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ni_swarm/error.hpp"

namespace ni_swarm {

using lti::RationalTF;

std::pair<RationalTF, RationalTF> uav_plants() {
  return {RationalTF({3.31, 195.26}, {1.0, 174.66, 3.12}),
          RationalTF({3.31, 26.02}, {1.0, 25.71, 0.18})};
}

std::pair<RationalTF, RationalTF> ugv_plants() {
  return {RationalTF({-0.15, 112.9, 4320.5, 1847912.3}, {1.0, 186.9, 58740.0, 1969445.0, 39036.5}),
          RationalTF({17.25, -1018.48, 65838.57}, {1.0, 1401.1, 560049.64, 68857.54})};
}

RationalTF integrating_variant(const RationalTF& g) {
  double slow = std::numeric_limits<double>::infinity();
  for (const auto& p : lti::poles(g)) {
    if (p.imag() == 0.0 && p.real() < 0.0 && -p.real() < slow) slow = -p.real();
  }
  if (!std::isfinite(slow)) throw ModelError("integrating_variant needs a stable real pole");
  // Synthetic division of den by (s + slow).
  const lti::Coeffs& den = g.den();
  lti::Coeffs q(den.size() - 1);
  double carry = 0.0;
  for (std::size_t i = 0; i + 1 < den.size(); ++i) {
    carry = den[i] - slow * carry;
    q[i] = carry;
  }
  q.push_back(0.0);  // times s
  return RationalTF(g.num(), std::move(q));
}

YawSpeed yaw_speed_from_velocity(Vec2 v, double held_yaw) {
  if (!v.finite()) throw ModelError("non-finite velocity command");
  if (v.x == 0.0 && v.y == 0.0) return {held_yaw, 0.0};
  return {std::atan2(v.y, v.x), std::hypot(v.x, v.y)};
}

Vec2 apply_wind(Vec2 v, const WindModel& wind, double t, Rng& rng) {
  if (!wind.enabled || t < wind.onset) return v;
  const double c = std::cos(wind.direction);
  const double s = std::sin(wind.direction);
  Vec2 b{c * wind.bias.x - s * wind.bias.y, s * wind.bias.x + c * wind.bias.y};
  if (wind.washout > 0.0) b *= std::exp(-(t - wind.onset) / wind.washout);
  Vec2 out = v + b;
  if (wind.gust_std > 0.0) {
    out.x += rng.normal(0.0, wind.gust_std);
    out.y += rng.normal(0.0, wind.gust_std);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFlipBand = 0.75 * kPi;

lti::DiscreteLTI ugv_speed_loop(double dt) { return lti::discretize(integrating_variant(ugv_plants().first), dt); }
lti::DiscreteLTI ugv_yaw_loop(double dt) { return lti::discretize(integrating_variant(ugv_plants().second), dt); }

}  // namespace

UgvDrive::UgvDrive(UgvParams params, double dt)
    : params_(params), dt_(dt), speed_(ugv_speed_loop(dt)), yaw_(ugv_yaw_loop(dt)) {
  if (!(params_.vmax > 0.0)) throw ModelError("vmax must be positive");
}

void UgvDrive::reset() {
  speed_.reset();
  yaw_.reset();
  yaw_initialized_ = false;
  prev_distance_ = 0.0;
  prev_yaw_out_ = 0.0;
  prev_err_ = 0.0;
  last_speed_ = 0.0;
  rotating_ = false;
}

RobotState UgvDrive::tick(const RobotState& state, Vec2 vel_cmd) {
  if (!vel_cmd.finite()) throw ModelError("non-finite UGV command");
  if (!yaw_initialized_) {
    held_yaw_ = state.yaw;
    yaw_initialized_ = true;
  }
  const YawSpeed ys = yaw_speed_from_velocity(vel_cmd, held_yaw_);
  held_yaw_ = ys.yaw_sp;
  const double speed_sp = std::min(ys.speed_sp, params_.vmax);

  double err = angle_diff(ys.yaw_sp, state.yaw);
  // Near a half turn the wrapped error flips sign every time the heading
  // overshoots; keep turning the way we already were.
  if (std::abs(err) > kFlipBand && err * prev_err_ < 0.0) err += err < 0.0 ? 2.0 * kPi : -2.0 * kPi;
  prev_err_ = err;
  const double yaw_out = yaw_.step(params_.yaw_gain * err);
  const double dyaw = yaw_out - prev_yaw_out_;
  prev_yaw_out_ = yaw_out;

  RobotState next = state;
  next.yaw = wrap_angle(state.yaw + dyaw);

  double dd = 0.0;
  rotating_ = std::abs(err) > params_.corner_threshold;
  if (rotating_) {
    speed_.reset();
    prev_distance_ = 0.0;
  } else {
    const double d = speed_.step(speed_sp);
    dd = d - prev_distance_;
    prev_distance_ = d;
    const double cap = params_.vmax * dt_;
    dd = std::clamp(dd, -cap, cap);
  }
  const Vec2 heading{std::cos(next.yaw), std::sin(next.yaw)};
  next.pos += dd * heading;
  next.vel = (dd / dt_) * heading;
  last_speed_ = dd / dt_;
  return next;
}

// ---------------------------------------------------------------------------

UavDrive::UavDrive(Vec2 origin, double dt)
    : origin_(origin),
      dt_(dt),
      x_(lti::discretize(uav_plants().first, dt)),
      y_(lti::discretize(uav_plants().second, dt)) {}

void UavDrive::reset() {
  x_.reset();
  y_.reset();
}

RobotState UavDrive::tick(const RobotState& state, Vec2 vel_sp, const WindModel& wind, double t, Rng& rng) {
  const Vec2 u = apply_wind(vel_sp, wind, t, rng);
  RobotState next = state;
  const Vec2 pos{origin_.x + x_.step(u.x), origin_.y + y_.step(u.y)};
  next.vel = (pos - state.pos) / dt_;
  next.pos = pos;
  return next;
}

}  // namespace ni_swarm
