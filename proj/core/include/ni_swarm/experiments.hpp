#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ni_swarm/lti.hpp"
#include "ni_swarm/vehicle.hpp"

namespace ni_swarm::sim {

/// Single-axis cascade runs used to compare outer-loop controllers.

struct AxisRun {
  std::vector<double> t;
  std::vector<double> pos;
  std::vector<double> ref;
};

struct StepResult {
  double peak = 0.0;
  double po = 0.0;                      // percent
  std::optional<double> t_reach;        // first time pos >= ref
  double final_value = 0.0;
  double rmse = 0.0;                    // over the whole run
};

/// Step of height `ref` from rest.
StepResult run_step(const lti::RationalTF& controller, const lti::RationalTF& plant, double ref, double duration,
                    double dt = lti::kDefaultDt, AxisRun* trace = nullptr);

struct HoverResult {
  std::optional<double> recovery;  // seconds after onset until the band is re-entered for good
  double offset_before = 0.0;      // |pos - hover| just before onset
  double max_deviation = 0.0;      // after onset
  double rmse = 0.0;               // after onset
};

struct HoverSetup {
  double hover = 0.5;
  double onset = 150.0;
  double after = 200.0;       // simulated time after onset
  double band_fraction = 0.05;
  double bias = 0.5;          // m/s magnitude
  double direction = 0.7853981633974483;
  double washout = 1.5;
  double gust_std = 0.0;
  std::uint64_t seed = 7;
};

/// Hover at `hover` on both axes; wind switches on at `onset`. Index 0 is x.
std::vector<HoverResult> run_hover(const lti::RationalTF& cx, const lti::RationalTF& cy, const HoverSetup& setup,
                                   double dt = lti::kDefaultDt);

struct CircleResult {
  double rmse_x = 0.0;
  double rmse_y = 0.0;
};

/// Tracks center + rc*(cos wt, sin wt); RMSE over the last `window` seconds.
CircleResult run_circle(const lti::RationalTF& cx, const lti::RationalTF& cy, double rc = 0.8,
                        double w = 0.2243994752564138, Vec2 center = {-1.4, -1.2}, double duration = 200.0,
                        double window = 56.0, double dt = lti::kDefaultDt);

/// Outer controller for an axis. "pidf" selects the per-axis filtered PID;
/// other names go through control::controller_preset.
std::optional<lti::RationalTF> axis_controller(std::string_view name, int axis);

struct CompareRow {
  std::string controller;
  std::string axis;
  double po = 0.0;
  double rmse = 0.0;
  std::optional<double> time_to_reference;
};

/// scenario: "step", "hover" or "circle".
std::vector<CompareRow> compare(std::string_view scenario, std::string_view controller);

}  // namespace ni_swarm::sim
