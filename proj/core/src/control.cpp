#include "ni_swarm/control.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ni_swarm/error.hpp"

namespace ni_swarm::control {

using lti::RationalTF;

SniFirstOrder sni_first_order(double delta, double a, double omega) {
  if (!(a > 0.0) || !(omega > 0.0)) throw ModelError("SNI controller needs a > 0 and omega > 0");
  if (!std::isfinite(delta) || !std::isfinite(a) || !std::isfinite(omega))
    throw ModelError("SNI controller parameters must be finite");
  const double w2 = omega * omega;
  SniController c{delta, a, omega, delta / w2, a / w2};
  return {c, RationalTF({delta}, {a, w2})};
}

OddPartCheck check_odd_part(const SniController& c) {
  const double w2 = c.omega * c.omega;
  // delta*(w2 - a s) - delta*(a s + w2), over (a s + w2)(w2 - a s).
  const lti::Coeffs num = lti::poly_add(lti::Coeffs{-c.delta * c.a, c.delta * w2},
                                        lti::Coeffs{-c.delta * c.a, -c.delta * w2});
  OddPartCheck out;
  const auto r = lti::roots(num);
  out.zero_only_at_origin = c.delta != 0.0 && r.size() == 1 && std::abs(r[0]) == 0.0;

  const RationalTF m({c.delta}, {c.a, w2});
  constexpr std::array<double, 6> samples{-3.0, -0.7, 0.1, 0.45, 2.0, 11.0};
  for (double s : samples) {
    const double denom = c.a * c.a * s * s - w2 * w2;
    if (std::abs(denom) < 1e-9) continue;
    const double direct = m.eval({s, 0.0}).real() - m.eval({-s, 0.0}).real();
    const double closed = 2.0 * c.a * c.delta * s / denom;
    out.max_formula_error = std::max(out.max_formula_error, std::abs(direct - closed));
  }
  return out;
}

RationalTF pid_tf(const PidGains& g) {
  if (!std::isfinite(g.kp) || !std::isfinite(g.ki) || !std::isfinite(g.kd))
    throw ModelError("PID gains must be finite");
  lti::Coeffs den{1.0, 0.0};
  if (g.filter_pole) {
    if (!std::isfinite(*g.filter_pole)) throw ModelError("PID filter pole must be finite");
    den = {1.0, *g.filter_pole, 0.0};
  }
  return RationalTF({g.kd, g.kp, g.ki}, std::move(den));
}

std::optional<RationalTF> controller_preset(std::string_view name) {
  if (name == "sni-sim") return sni_first_order(-1.0, 1.0, 1.0).tf;
  if (name == "sni-exp") return sni_first_order(-0.35295, 1.0, 1.0).tf;
  if (name == "pid-sim") return -pid_tf({.kp = 0.3162, .ki = 0.0021, .kd = 0.135, .filter_pole = {}});
  if (name == "pid-exp") return -pid_tf({.kp = 0.3172, .ki = 0.0021, .kd = 0.138, .filter_pole = {}});
  if (name == "pidf-x") return -pid_tf({.kp = 0.0031, .ki = 0.000064, .kd = 0.028, .filter_pole = 0.055});
  if (name == "pidf-y") return -pid_tf({.kp = 0.0611, .ki = 0.002, .kd = 0.26, .filter_pole = 0.469});
  if (name == "pi-exp") return -pid_tf({.kp = 0.1374, .ki = 0.0021, .kd = 0.0, .filter_pole = {}});
  return std::nullopt;
}

std::vector<std::string> controller_preset_names() {
  return {"sni-sim", "sni-exp", "pid-sim", "pid-exp", "pidf-x", "pidf-y", "pi-exp"};
}

TwoLoopOutput two_loop_tick(double pos_sp, double pos, lti::DiscreteLTI& outer, lti::DiscreteLTI& plant,
                            double disturbance) {
  TwoLoopOutput out;
  out.vel_sp = outer.step(pos_sp + pos);
  out.pos = plant.step(out.vel_sp + disturbance);
  return out;
}

std::vector<double> tv_gains(std::span<const double> dis_no, double t_des, std::span<const double> errors,
                             double eps, double k_max) {
  if (!(t_des > 0.0)) throw ModelError("t_des must be positive");
  if (dis_no.size() != errors.size()) throw ModelError("tv_gains: size mismatch");
  std::vector<double> k(dis_no.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double e = errors[i];
    const double sign = e < 0.0 ? -1.0 : 1.0;
    const double denom = t_des * sign * std::max(std::abs(e), eps);
    k[i] = std::clamp(dis_no[i] / denom, -k_max, k_max);
  }
  return k;
}

void validate(const TaskWeights& w) {
  for (double v : {w.ax1, w.ax2, w.ay1, w.ay2}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ModelError("task weights must lie in [0, 1]");
  }
  if (std::abs(w.ax1 + w.ax2 - 1.0) > 1e-9 || std::abs(w.ay1 + w.ay2 - 1.0) > 1e-9)
    throw ModelError("task weights must sum to 1 per axis");
}

Vec2 blend_priorities(Vec2 formation_term, Vec2 repulse_term, const TaskWeights& w, double kc) {
  return {kc * (w.ax1 * formation_term.x + w.ax2 * repulse_term.x),
          kc * (w.ay1 * formation_term.y + w.ay2 * repulse_term.y)};
}

double metrics_po(double peak, double ref) {
  if (ref == 0.0) throw ModelError("overshoot needs a nonzero reference");
  return std::max(0.0, 100.0 * (peak - ref) / ref);
}

double metrics_rmse(std::span<const double> errors) {
  if (errors.empty()) throw ModelError("rmse of an empty sequence");
  double acc = 0.0;
  for (double e : errors) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

}  // namespace ni_swarm::control
