#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ni_swarm/geometry.hpp"
#include "ni_swarm/lti.hpp"

namespace ni_swarm::control {

/// First-order SNI controller delta/(a s + omega^2) = K/(tau s + 1).
struct SniController {
  double delta = 0.0;
  double a = 1.0;
  double omega = 1.0;
  double K = 0.0;
  double tau = 1.0;
};

struct SniFirstOrder {
  SniController controller;
  lti::RationalTF tf;
};

SniFirstOrder sni_first_order(double delta, double a, double omega);

/// Numeric check of the odd part M(s) - M(-s) = 2 a delta s / (a^2 s^2 - omega^4).
struct OddPartCheck {
  bool zero_only_at_origin = false;  // the numerator has the single root s = 0
  double max_formula_error = 0.0;    // closed form vs direct evaluation, real-axis samples
};

OddPartCheck check_odd_part(const SniController& c);

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  std::optional<double> filter_pole;  // PIDF: denominator s^2 + filter_pole*s
};

/// (kd s^2 + kp s + ki)/s, or over s^2 + filter_pole*s.
lti::RationalTF pid_tf(const PidGains& g);

/// Named outer-loop controllers. Names: sni-sim, sni-exp, pid-sim, pid-exp,
/// pidf-x, pidf-y, pi-exp.
std::optional<lti::RationalTF> controller_preset(std::string_view name);
std::vector<std::string> controller_preset_names();

struct TwoLoopOutput {
  double vel_sp = 0.0;
  double pos = 0.0;  // plant output after the tick
};

/// One tick of the cascade on one axis. The junction sums (e = pos_sp + pos),
/// so callers pass the negated reference and a negative-gain controller.
/// `disturbance` is added to the velocity setpoint before the plant.
TwoLoopOutput two_loop_tick(double pos_sp, double pos, lti::DiscreteLTI& outer, lti::DiscreteLTI& plant,
                            double disturbance = 0.0);

inline constexpr double kTvEpsilon = 1e-3;
inline constexpr double kTvGainMax = 10.0;

/// Per-component k = disNO / (t_des * e), with |e| floored at eps (sign kept,
/// sign(0) = +1) and |k| clamped to k_max.
std::vector<double> tv_gains(std::span<const double> dis_no, double t_des, std::span<const double> errors,
                             double eps = kTvEpsilon, double k_max = kTvGainMax);

struct TaskWeights {
  double ax1 = 0.5;
  double ax2 = 0.5;
  double ay1 = 0.5;
  double ay2 = 0.5;
};

/// Throws ModelError unless every weight is in [0, 1] and each axis pair sums to 1.
void validate(const TaskWeights& w);

/// kc * (a1 * formation + a2 * repulse), per axis.
Vec2 blend_priorities(Vec2 formation_term, Vec2 repulse_term, const TaskWeights& w, double kc);

/// Percent overshoot, 0 when the peak does not exceed the reference.
double metrics_po(double peak, double ref);

double metrics_rmse(std::span<const double> errors);

}  // namespace ni_swarm::control
