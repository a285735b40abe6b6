#include "ni_swarm/presets.hpp"

#include "ni_swarm/control.hpp"
#include "ni_swarm/vehicle.hpp"

namespace ni_swarm::presets {

using lti::RationalTF;

RationalTF repulsion_plant(double k_r, double mass) { return RationalTF({k_r}, {mass, 0.0}); }

std::optional<ModelPreset> model_preset(std::string_view name) {
  const auto [ux, uy] = uav_plants();
  const auto [us, uw] = ugv_plants();
  if (name == "uav-x") return ModelPreset{"uav-x", ux, true, false, false, "UAV x velocity loop"};
  if (name == "uav-y") return ModelPreset{"uav-y", uy, true, false, false, "UAV y velocity loop"};
  if (name == "ugv-speed") return ModelPreset{"ugv-speed", us, true, false, false, "UGV speed to distance"};
  if (name == "ugv-yaw") return ModelPreset{"ugv-yaw", uw, true, false, false, "UGV yaw rate to yaw"};
  if (name == "repulsion")
    return ModelPreset{"repulsion", repulsion_plant(), false, false, true, "k_r/(m s), k_r = -0.1, m = 1"};
  for (const auto& c : control::controller_preset_names()) {
    if (name != c) continue;
    const bool sni = c.rfind("sni", 0) == 0;
    return ModelPreset{c, *control::controller_preset(c), false, sni, false, "outer-loop controller"};
  }
  return std::nullopt;
}

std::vector<std::string> model_preset_names() {
  std::vector<std::string> out{"uav-x", "uav-y", "ugv-speed", "ugv-yaw", "repulsion"};
  for (auto& c : control::controller_preset_names()) out.push_back(c);
  return out;
}

sim::ScenarioConfig case1_6ugv(std::uint64_t seed) {
  sim::ScenarioConfig c;
  c.name = "case1_6ugv";
  c.seed = seed;
  c.duration = 2500.0;
  c.stop_on_arrival = true;
  c.n_robots = 6;
  c.init_half_width = 1.6;
  c.init_velocity = sim::InitVelocity::literal;
  c.radius = 0.46;
  c.mass = 1.0;
  c.gains = {-0.1, -0.1, 0.02};
  c.k_r = -0.1;
  c.fmax = 6.0;
  c.destination = {3.0, 4.5};
  c.waypoints = {{3.0, 0.0}};
  c.formation.shape_name = "v";
  c.formation.offsets = {{0.0, 0.0}, {-1.2, -0.6}, {1.2, -0.6}, {-2.4, -1.2}, {2.4, -1.2}, {-3.6, -1.8}};
  // Two rows of boxes along y = 2 with a 0.5 m gap centered on x = 3.
  for (double x : {1.7, 2.4, 3.6, 4.3}) c.obstacles.push_back({{x, 2.0}, 0.35});
  c.line_spacing = 1.0;
  c.t_des = 200.0;
  c.uav_enabled = true;
  return c;
}

sim::ScenarioConfig exp_3ugv(std::uint64_t seed) {
  sim::ScenarioConfig c;
  c.name = "exp_3ugv";
  c.seed = seed;
  c.duration = 3000.0;
  c.n_robots = 3;
  c.init_velocity = sim::InitVelocity::literal;
  c.radius = 0.90;
  c.mass = 12.0;
  c.gains = {-0.0028, -0.0028, 0.12};
  c.k_r = -0.225;
  c.fmax = 6.0;
  c.destination = {-1.0, 1.7};
  c.formation.shape_name = "line-abreast";
  c.formation.offsets = {{0.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0}};
  c.assembly = false;
  // Nominal slots sit closer than the combined safety radii.
  c.repulsion_mode = sim::RepulsionMode::avoidance_only;
  return c;
}

std::vector<sim::ScenarioConfig> crossing_scenarios() {
  sim::ScenarioConfig base = exp_3ugv();
  base.duration = 3500.0;
  base.stop_on_arrival = true;
  base.repulsion_mode = sim::RepulsionMode::always;
  base.formation.offsets = {{0.0, 0.0}, {2.0, 0.0}, {-2.0, 0.0}};
  base.fixed_ids = {1, 2, 3};
  base.uav_enabled = false;

  std::vector<sim::ScenarioConfig> out;
  {
    sim::ScenarioConfig c = base;
    c.name = "crossing_swap";
    c.initial_positions = {{-1.0, -0.5}, {-3.5, 1.0}, {1.5, 1.0}};
    out.push_back(c);
  }
  {
    sim::ScenarioConfig c = base;
    c.name = "crossing_headon";
    c.initial_positions = {{-1.0, 1.7}, {-4.5, 1.7}, {2.5, 1.7}};
    out.push_back(c);
  }
  {
    sim::ScenarioConfig c = base;
    c.name = "crossing_perpendicular";
    c.initial_positions = {{-1.0, -2.5}, {-4.0, 0.0}, {-3.0, -2.5}};
    out.push_back(c);
  }
  for (auto& c : out) c.initial_velocities.assign(3, Vec2{});
  return out;
}

std::optional<sim::ScenarioConfig> scenario_preset(std::string_view name, std::uint64_t seed) {
  if (name == "case1_6ugv") return case1_6ugv(seed);
  if (name == "exp_3ugv") return exp_3ugv(seed);
  for (auto c : crossing_scenarios()) {
    if (c.name == name) {
      c.seed = seed;
      return c;
    }
  }
  return std::nullopt;
}

std::vector<std::string> scenario_preset_names() {
  return {"case1_6ugv", "exp_3ugv", "crossing_swap", "crossing_headon", "crossing_perpendicular"};
}

}  // namespace ni_swarm::presets
