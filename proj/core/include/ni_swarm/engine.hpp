#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ni_swarm/avoidance.hpp"
#include "ni_swarm/control.hpp"
#include "ni_swarm/formation.hpp"
#include "ni_swarm/geometry.hpp"
#include "ni_swarm/rng.hpp"
#include "ni_swarm/roles.hpp"
#include "ni_swarm/vehicle.hpp"

namespace ni_swarm::sim {

inline constexpr const char* kTraceSchema = "ni-swarm-trace/1";
inline constexpr const char* kSummarySchema = "ni-swarm-summary/1";

enum class RepulsionMode { always, avoidance_only };
/// literal: 0.002*(u - 350) cm/s; spread: 0.002*(700u - 350) cm/s.
enum class InitVelocity { literal, spread };

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  double dt = 0.01;
  double duration = 600.0;
  bool stop_on_arrival = false;

  // Robots. Explicit poses win over random initialization.
  int n_robots = 3;
  std::vector<Vec2> initial_positions;
  std::vector<Vec2> initial_velocities;
  double init_half_width = 1.6;
  InitVelocity init_velocity = InitVelocity::literal;
  std::vector<int> fixed_ids;  // empty: distributed assignment
  double radius = 0.46;
  double mass = 1.0;

  // Control.
  formation::FormationGains gains;
  double yaw_gain = 15.0;
  double corner_threshold = 1.0471975511965976;
  control::TaskWeights weights;

  // Mission.
  Vec2 destination;
  std::vector<Vec2> waypoints;  // visited by the leader before the destination
  roles::FormationSpec formation;
  bool assembly = true;         // followers form up before the leader departs
  double waypoint_tol = 0.2;
  double arrive_tol = 0.10;
  double arrive_hold = 2.0;

  // Obstacles and queuing.
  std::vector<avoid::ObstacleCircle> obstacles;
  bool queue_enabled = true;
  double queue_trigger = 1.0;   // m, distance to the gap midpoint
  double line_spacing = 1.0;
  double hold_offset = 0.5;     // line head waits this far before m
  double pass_ahead = 1.5;      // line head target beyond m
  double t_des = 200.0;
  avoid::FovParams fov;

  // Repulsion.
  RepulsionMode repulsion_mode = RepulsionMode::always;
  double k_r = -0.1;
  double fmax = 6.0;
  double repulsion_decay = 1.0;
  // Lateral share added to the avoidance velocity (rotated +90 deg) so two
  // robots pushing straight at each other slide past instead of stalling.
  double repulsion_sidestep = 1.0;
  // A pushed robot that moves less than 5 cm in this long tries the other side.
  double sidestep_stall = 20.0;
  // A yielding robot in contact drops the part of its command that closes
  // the gap, so it slides along the other robot instead of pressing on.
  bool peer_guard = true;
  // Fraction of the combined radii below which the robot with right of way
  // also stops closing in.
  double right_of_way_floor = 0.75;
  // How long a chosen side outlives the contact that picked it.
  double sidestep_memory = 30.0;
  // Inside this band around an obstacle circle, commands lose their inward
  // radial part. 0 turns the guard off.
  double obstacle_margin = 0.15;

  // Aerial helper and disturbance.
  bool uav_enabled = true;
  double uav_noise_std = 0.0;
  WindModel wind;

  int role_decimation = 10;  // role logic runs every this many ticks
  int trace_stride = 1;
};

/// Throws ModelError on an inconsistent configuration.
void validate(const ScenarioConfig& cfg);

enum class Phase { assembly, transit, arrived };
enum class QueueStage { idle, forming, passing };
enum class RobotMode { formation, queue, passed };

const char* to_string(Phase p);
const char* to_string(QueueStage q);
const char* to_string(RobotMode m);

struct QueueState {
  QueueStage stage = QueueStage::idle;
  std::vector<int> que;  // per-robot flag
  Vec2 m;
  Vec2 dir{0.0, 1.0};
  roles::IdAssignment saved_ids;
  std::vector<Vec2> slots;
  std::vector<Vec2> dis_no;
  std::vector<bool> passed;
  double started_at = 0.0;
  double trigger_distance = 0.0;  // distance to m of the robot that triggered
  std::vector<Vec2> done_gaps;    // gap midpoints already traversed
};

struct RobotRuntime {
  RobotState state;
  UgvDrive drive;
  avoid::RepulsionAccumulator acc;
  Vec2 cmd;
  Vec2 target;
  RobotMode mode = RobotMode::formation;
  double overlap = 0.0;  // largest overlap with any peer this tick
  double turn = 0.0;     // sidestep side, fixed while the accumulator is live
  Vec2 stall_anchor;      // where the robot stood when it last made headway
  double stalled_for = 0.0;
  double free_for = 0.0;  // time since the accumulator last emptied
  Vec2 force;
  bool occluded = false;
  bool uav_sourced = false;
  bool sensing_lost = false;
};

struct World {
  ScenarioConfig cfg;
  std::vector<RobotRuntime> robots;
  std::int64_t clock = 0;
  Phase phase = Phase::assembly;
  std::size_t waypoint = 0;
  roles::IdAssignment ids;
  roles::IdAssignment initial_ids;
  QueueState queue;
  formation::Failsafe failsafe;
  RobotState uav;
  std::optional<UavDrive> uav_drive;
  lti::DiscreteLTI uav_ctrl_x{{0.0}, {1.0}, 0.01};
  lti::DiscreteLTI uav_ctrl_y{{0.0}, {1.0}, 0.01};
  double settled_for = 0.0;

  [[nodiscard]] double time() const { return static_cast<double>(clock) * cfg.dt; }
  [[nodiscard]] Vec2 leader_reference() const;
  [[nodiscard]] std::vector<Vec2> positions() const;
};

/// Builds a world; random poses use `cfg.seed`.
World make_world(const ScenarioConfig& cfg);

/// Random poses in [-h, h]^2 and the initial-velocity rule, as a World.
World init_random(int n, std::uint64_t seed, ScenarioConfig base = {});

struct RobotSample {
  Vec2 pos;
  Vec2 vel;
  double yaw = 0.0;
  int id = 0;
  RobotMode mode = RobotMode::formation;
  Vec2 cmd;
  Vec2 target;
  double overlap = 0.0;
  Vec2 force;
  int que = 0;
  bool occluded = false;
  bool uav_sourced = false;
};

struct TraceRecord {
  std::int64_t tick = 0;
  double time = 0.0;
  Phase phase = Phase::assembly;
  QueueStage queue = QueueStage::idle;
  std::vector<RobotSample> robots;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void record(const TraceRecord& r) = 0;
};

/// One CSV row per robot per recorded tick.
class CsvTraceSink : public TraceSink {
 public:
  explicit CsvTraceSink(std::ostream& out);
  void record(const TraceRecord& r) override;
  static const char* header();

 private:
  std::ostream& out_;
};

/// Keeps the CSV text in memory (tests, hashing).
class StringTraceSink : public TraceSink {
 public:
  void record(const TraceRecord& r) override;
  [[nodiscard]] const std::string& text() const { return text_; }
  [[nodiscard]] std::uint64_t hash() const;

 private:
  std::string text_;
};

/// Writes a double so that it parses back to the same value.
std::string format_double(double v);

struct Summary {
  std::string scenario;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::int64_t ticks = 0;
  int n_robots = 0;

  bool ids_bijective = false;
  std::vector<int> initial_ids;
  std::vector<int> final_ids;

  std::optional<double> formation_time;  // assembly done
  std::optional<double> arrival_time;
  bool arrived = false;
  std::vector<double> final_error;  // distance to the final slot
  std::vector<double> rmse;         // tracking error vs the per-tick target

  double min_pairwise = 1e300;
  double min_pairwise_ratio = 1e300;  // distance / (ri + rj)
  double min_obstacle_clearance = 1e300;  // center distance minus obstacle radius
  int obstacle_intrusions = 0;
  // Pairwise distance below half the combined radii. Counted only while
  // repulsion acts on the pair and only once the pair has been clear of each
  // other; random starts can spawn robots on top of one another.
  int safety_violations = 0;
  double min_separated_ratio = 1e300;  // min_pairwise_ratio over those pairs
  std::vector<bool> pair_separated;    // upper triangle, row-major
  int saturation_violations = 0;
  int non_finite = 0;
  int force_mismatch = 0;  // ticks where force and overlap disagree

  int queue_activations = 0;
  int queue_deactivations = 0;
  std::optional<double> queue_start;
  std::optional<double> queue_formed;
  std::optional<double> queue_end;
  double queue_trigger_distance = 0.0;
  bool ids_restored = false;
  std::vector<int> per_robot_queue_entries;
  std::vector<int> per_robot_queue_exits;
  int occlusion_events = 0;
  int sensing_lost_events = 0;
};

/// Advances one tick. Exposed for tests; run() is the usual entry point.
void tick(World& w, Summary* summary = nullptr, TraceSink* sink = nullptr);

Summary run(World& w, double duration, TraceSink* sink = nullptr);

/// Convenience: make_world + run for cfg.duration.
Summary run_scenario(const ScenarioConfig& cfg, TraceSink* sink = nullptr);

}  // namespace ni_swarm::sim
