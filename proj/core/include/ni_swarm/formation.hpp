#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ni_swarm/control.hpp"
#include "ni_swarm/geometry.hpp"
#include "ni_swarm/lti.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/roles.hpp"

namespace ni_swarm::formation {

enum class Mode { formation, queue };

struct FormationGains {
  double kr = -0.1;   // leader, reference tracking
  double kc = -0.1;   // followers, relative offset
  double vmax = 0.02; // m/s, command saturation
};

/// What every robot sees at the start of a tick.
struct Snapshot {
  std::vector<Vec2> positions;
  roles::IdAssignment ids;
  Vec2 reference;  // leader target
  /// leader minus robot as measured by each follower; nullopt means the
  /// measurement failed. Empty: taken from `positions`.
  std::vector<std::optional<Vec2>> rel_to_leader;
  /// Repulsive velocity per robot; empty means none.
  std::vector<Vec2> avoid_vel;
};

struct FormationCommand {
  std::vector<Vec2> vel_sp;
  Mode mode = Mode::formation;
  std::vector<double> gains_used;
  std::vector<bool> sensing_lost;
};

/// Holds the last command per robot so a lost measurement can be bridged.
struct Failsafe {
  static constexpr int kHoldTicks = 10;
  std::vector<Vec2> last;
  std::vector<int> lost_ticks;
  void resize(std::size_t n);
  /// Command to use for a robot whose measurement failed this tick.
  Vec2 on_lost(std::size_t i);
  void on_ok(std::size_t i, Vec2 cmd);
};

/// Scales `v` down to norm vmax when it is longer.
Vec2 saturate(Vec2 v, double vmax);

/// Mixes a formation command with a repulsive velocity. Equivalent to
/// kc*[a1*e + a2*(v_avoid/kc)] for a formation command kc*e.
Vec2 blend_command(Vec2 formation_cmd, Vec2 avoid_vel, const control::TaskWeights& w);

/// Leader: kr*(pos - reference). Follower with role k: kc*((pos - leader) - offset_k).
/// Robots with a nonzero repulsive velocity get the blended command.
FormationCommand formation_step(const Snapshot& s, const roles::FormationSpec& spec, const FormationGains& g,
                                const control::TaskWeights& w, Failsafe* failsafe = nullptr);

/// Per-robot transition toward `targets` with time-varying gains. `dis_no`
/// holds target minus position at the start of the transition.
FormationCommand transition_step(std::span<const Vec2> positions, std::span<const Vec2> targets,
                                 std::span<const Vec2> dis_no, double t_des, double vmax,
                                 std::span<const Vec2> avoid_vel, const control::TaskWeights& w);

struct ProtocolReport {
  bool plants_sni = false;          // block test over the plants
  bool controllers_sni_complement = false;  // negated controllers are SNI
  ni::NiReport repulsion;           // free-body test on the repulsion plant
  bool repulsion_ok = false;        // NI literally or under the sign complement
  double m0 = 0.0;                  // plant DC gain with the largest magnitude
  double n0 = 0.0;                  // controller DC gain with the largest magnitude (signed)
  double lambda_max = 0.0;
  ni::StabilityVerdict dc_test;
  [[nodiscard]] bool pass() const { return plants_sni && repulsion_ok && dc_test.stable; }
};

ProtocolReport check_protocol_stability(const roles::IdAssignment& ids, roles::TopologyMode mode,
                                        std::span<const lti::RationalTF> controllers,
                                        std::span<const lti::RationalTF> plants,
                                        const lti::RationalTF& repulsion_plant,
                                        const lti::FreqGrid& grid = lti::FreqGrid::default_grid());

}  // namespace ni_swarm::formation
