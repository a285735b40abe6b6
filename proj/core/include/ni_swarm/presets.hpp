#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ni_swarm/engine.hpp"
#include "ni_swarm/lti.hpp"

namespace ni_swarm::presets {

/// Named transfer function with the classification it is expected to have.
struct ModelPreset {
  std::string name;
  lti::RationalTF tf;
  bool expect_sni = false;             // literal strict test
  bool expect_complement_sni = false;  // strict test on -P
  bool expect_ni_origin = false;       // free-body path (pole at origin)
  std::string note;
};

std::optional<ModelPreset> model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

/// Repulsion plant k_r/(m s).
lti::RationalTF repulsion_plant(double k_r = -0.1, double mass = 1.0);

/// Six UGVs, two obstacle rows with a single gap, V-shape to line and back.
sim::ScenarioConfig case1_6ugv(std::uint64_t seed = 1);

/// Three heavy UGVs in a line-abreast triangle, no obstacles.
sim::ScenarioConfig exp_3ugv(std::uint64_t seed = 1);

/// Three-robot runs whose paths cross: swap, head-on, perpendicular.
std::vector<sim::ScenarioConfig> crossing_scenarios();

std::optional<sim::ScenarioConfig> scenario_preset(std::string_view name, std::uint64_t seed = 1);
std::vector<std::string> scenario_preset_names();

}  // namespace ni_swarm::presets
