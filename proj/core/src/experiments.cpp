#include "ni_swarm/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ni_swarm/control.hpp"
#include "ni_swarm/error.hpp"

namespace ni_swarm::sim {

StepResult run_step(const lti::RationalTF& controller, const lti::RationalTF& plant, double ref, double duration,
                    double dt, AxisRun* trace) {
  if (ref == 0.0) throw ModelError("step height must be nonzero");
  auto outer = lti::discretize(controller, dt);
  auto inner = lti::discretize(plant, dt);
  StepResult r;
  double pos = 0.0;
  double sq = 0.0;
  const auto steps = static_cast<long>(std::llround(duration / dt));
  for (long k = 1; k <= steps; ++k) {
    pos = control::two_loop_tick(-ref, pos, outer, inner).pos;
    const double t = static_cast<double>(k) * dt;
    r.peak = std::max(r.peak, pos);
    if (!r.t_reach && pos >= ref) r.t_reach = t;
    sq += (pos - ref) * (pos - ref);
    if (trace) {
      trace->t.push_back(t);
      trace->pos.push_back(pos);
      trace->ref.push_back(ref);
    }
  }
  r.final_value = pos;
  r.po = control::metrics_po(r.peak, ref);
  r.rmse = steps > 0 ? std::sqrt(sq / static_cast<double>(steps)) : 0.0;
  return r;
}

std::vector<HoverResult> run_hover(const lti::RationalTF& cx, const lti::RationalTF& cy, const HoverSetup& h,
                                   double dt) {
  const auto [px, py] = uav_plants();
  std::array<lti::DiscreteLTI, 2> outer{lti::discretize(cx, dt), lti::discretize(cy, dt)};
  std::array<lti::DiscreteLTI, 2> inner{lti::discretize(px, dt), lti::discretize(py, dt)};
  WindModel wind;
  wind.enabled = true;
  wind.bias = {h.bias, 0.0};
  wind.direction = h.direction;
  wind.onset = h.onset;
  wind.washout = h.washout;
  wind.gust_std = h.gust_std;

  std::vector<HoverResult> out(2);
  const double band = h.band_fraction * std::abs(h.hover);
  std::array<double, 2> pos{0.0, 0.0};
  std::array<double, 2> last_outside{-1.0, -1.0};
  std::array<double, 2> sq{0.0, 0.0};
  long after_samples = 0;
  const auto steps = static_cast<long>(std::llround((h.onset + h.after) / dt));
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    Rng rng = Rng::split(h.seed, static_cast<std::uint64_t>(k), 0);
    const Vec2 d = apply_wind({}, wind, t, rng);
    const std::array<double, 2> dist{d.x, d.y};
    if (t < h.onset && t + dt >= h.onset) {
      for (int a = 0; a < 2; ++a) out[a].offset_before = std::abs(pos[a] - h.hover);
    }
    for (int a = 0; a < 2; ++a) pos[a] = control::two_loop_tick(-h.hover, pos[a], outer[a], inner[a], dist[a]).pos;
    const double t_next = t + dt;
    if (t_next > h.onset) {
      ++after_samples;
      for (int a = 0; a < 2; ++a) {
        const double dev = std::abs(pos[a] - h.hover);
        out[a].max_deviation = std::max(out[a].max_deviation, dev);
        sq[a] += dev * dev;
        if (dev > band) last_outside[a] = t_next;
      }
    }
  }
  for (int a = 0; a < 2; ++a) {
    out[a].rmse = after_samples > 0 ? std::sqrt(sq[a] / static_cast<double>(after_samples)) : 0.0;
    const double end = h.onset + h.after;
    if (last_outside[a] < 0.0) out[a].recovery = 0.0;
    else if (last_outside[a] < end - dt / 2) out[a].recovery = last_outside[a] + dt - h.onset;
  }
  return out;
}

CircleResult run_circle(const lti::RationalTF& cx, const lti::RationalTF& cy, double rc, double w, Vec2 center,
                        double duration, double window, double dt) {
  const auto [px, py] = uav_plants();
  auto ox = lti::discretize(cx, dt);
  auto oy = lti::discretize(cy, dt);
  auto ix = lti::discretize(px, dt);
  auto iy = lti::discretize(py, dt);
  // Start on the circle at t = 0.
  const double x0 = center.x + rc;
  const double y0 = center.y;
  double x = 0.0;
  double y = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  long samples = 0;
  const auto steps = static_cast<long>(std::llround(duration / dt));
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double rx = center.x + rc * std::cos(w * t) - x0;
    const double ry = center.y + rc * std::sin(w * t) - y0;
    x = control::two_loop_tick(-rx, x, ox, ix).pos;
    y = control::two_loop_tick(-ry, y, oy, iy).pos;
    const double tn = t + dt;
    if (tn > duration - window) {
      const double ex = x - (center.x + rc * std::cos(w * tn) - x0);
      const double ey = y - (center.y + rc * std::sin(w * tn) - y0);
      sx += ex * ex;
      sy += ey * ey;
      ++samples;
    }
  }
  CircleResult r;
  if (samples > 0) {
    r.rmse_x = std::sqrt(sx / static_cast<double>(samples));
    r.rmse_y = std::sqrt(sy / static_cast<double>(samples));
  }
  return r;
}

std::optional<lti::RationalTF> axis_controller(std::string_view name, int axis) {
  if (name == "pidf") return control::controller_preset(axis == 0 ? "pidf-x" : "pidf-y");
  if (name == "sni") return control::controller_preset("sni-sim");
  return control::controller_preset(name);
}

std::vector<CompareRow> compare(std::string_view scenario, std::string_view controller) {
  const auto cx = axis_controller(controller, 0);
  const auto cy = axis_controller(controller, 1);
  if (!cx || !cy) throw ModelError("unknown controller: " + std::string(controller));
  if (!cx->is_proper() || !cy->is_proper())
    throw ModelError("controller " + std::string(controller) + " is improper and cannot be simulated");
  const auto [px, py] = uav_plants();
  std::vector<CompareRow> rows;
  const std::string name(controller);
  if (scenario == "step") {
    const auto sx = run_step(*cx, px, 0.5, 300.0);
    const auto sy = run_step(*cy, py, 0.5, 300.0);
    rows.push_back({name, "x", sx.po, sx.rmse, sx.t_reach});
    rows.push_back({name, "y", sy.po, sy.rmse, sy.t_reach});
  } else if (scenario == "hover") {
    const auto h = run_hover(*cx, *cy, HoverSetup{});
    rows.push_back({name, "x", 0.0, h[0].rmse, h[0].recovery});
    rows.push_back({name, "y", 0.0, h[1].rmse, h[1].recovery});
  } else if (scenario == "circle") {
    const auto c = run_circle(*cx, *cy);
    rows.push_back({name, "x", 0.0, c.rmse_x, std::nullopt});
    rows.push_back({name, "y", 0.0, c.rmse_y, std::nullopt});
  } else {
    throw ModelError("unknown compare scenario: " + std::string(scenario));
  }
  return rows;
}

}  // namespace ni_swarm::sim
