#include "ni_swarm/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "ni_swarm/error.hpp"

namespace ni_swarm::sim {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::assembly: return "assembly";
    case Phase::transit: return "transit";
    case Phase::arrived: return "arrived";
  }
  return "?";
}

const char* to_string(QueueStage q) {
  switch (q) {
    case QueueStage::idle: return "idle";
    case QueueStage::forming: return "forming";
    case QueueStage::passing: return "passing";
  }
  return "?";
}

const char* to_string(RobotMode m) {
  switch (m) {
    case RobotMode::formation: return "formation";
    case RobotMode::queue: return "queue";
    case RobotMode::passed: return "passed";
  }
  return "?";
}

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& what) { throw ModelError("scenario: " + what); };
  if (c.n_robots < 1) fail("n_robots must be at least 1");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("dt must be positive");
  if (!(c.duration > 0.0)) fail("duration must be positive");
  if (!c.initial_positions.empty() && c.initial_positions.size() != static_cast<std::size_t>(c.n_robots))
    fail("initial_positions must list every robot");
  if (!c.initial_velocities.empty() && c.initial_velocities.size() != static_cast<std::size_t>(c.n_robots))
    fail("initial_velocities must list every robot");
  if (!c.fixed_ids.empty()) {
    if (c.fixed_ids.size() != static_cast<std::size_t>(c.n_robots)) fail("fixed_ids must list every robot");
    if (!roles::IdAssignment{c.fixed_ids}.is_bijection()) fail("fixed_ids must be a permutation of 1..n");
  }
  if (c.formation.offsets.size() != static_cast<std::size_t>(c.n_robots))
    fail("formation needs one offset per robot");
  if (!(c.formation.offsets.front() == Vec2{})) fail("the leader offset must be (0, 0)");
  if (!(c.radius > 0.0)) fail("radius must be positive");
  if (!(c.mass > 0.0)) fail("mass must be positive");
  if (!(c.gains.vmax > 0.0)) fail("vmax must be positive");
  if (!(c.line_spacing > 0.0)) fail("line_spacing must be positive");
  if (!(c.t_des > 0.0)) fail("t_des must be positive");
  if (!(c.fmax > 0.0)) fail("fmax must be positive");
  if (!(c.repulsion_sidestep >= 0.0)) fail("repulsion_sidestep must be non-negative");
  if (!(c.obstacle_margin >= 0.0)) fail("obstacle_margin must be non-negative");
  if (!(c.sidestep_stall > 0.0)) fail("sidestep_stall must be positive");
  if (!(c.sidestep_memory >= 0.0)) fail("sidestep_memory must be non-negative");
  if (!(c.right_of_way_floor >= 0.0 && c.right_of_way_floor <= 1.0)) fail("right_of_way_floor must lie in [0, 1]");
  if (c.role_decimation < 1) fail("role_decimation must be at least 1");
  if (c.trace_stride < 1) fail("trace_stride must be at least 1");
  if (!(c.arrive_tol > 0.0) || !(c.arrive_hold >= 0.0)) fail("arrival tolerance must be positive");
  if (c.wind.gust_std < 0.0) fail("gust_std must be non-negative");
  for (const auto& o : c.obstacles)
    if (!(o.radius > 0.0)) fail("obstacle radius must be positive");
  control::validate(c.weights);
}

Vec2 World::leader_reference() const {
  if (phase == Phase::assembly) return robots[ids.leader()].target;
  if (waypoint < cfg.waypoints.size()) return cfg.waypoints[waypoint];
  return cfg.destination;
}

std::vector<Vec2> World::positions() const {
  std::vector<Vec2> p;
  p.reserve(robots.size());
  for (const auto& r : robots) p.push_back(r.state.pos);
  return p;
}

namespace {

// The leader waits where two robots can still pass abreast between it and
// any obstacle; closer in, a follower arriving on the far side gets pinned.
Vec2 staging_point(const ScenarioConfig& c, Vec2 p) {
  const double corridor = 4.0 * c.radius + c.obstacle_margin;
  for (int pass = 0; pass < 8; ++pass) {
    bool moved = false;
    for (const auto& o : c.obstacles) {
      const double need = o.radius + corridor;
      const double d = distance(p, o.center);
      if (d >= need) continue;
      p = o.center + need * normalized(p - o.center);
      moved = true;
    }
    if (!moved) break;
  }
  return p;
}

}  // namespace

World make_world(const ScenarioConfig& cfg) {
  validate(cfg);
  World w;
  w.cfg = cfg;
  const auto n = static_cast<std::size_t>(cfg.n_robots);
  Rng rng(cfg.seed);
  std::vector<Vec2> pos = cfg.initial_positions;
  std::vector<Vec2> vel = cfg.initial_velocities;
  if (pos.empty()) {
    const double h = cfg.init_half_width;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = h * (2.0 * rng.uniform() - 1.0);
      const double y = h * (2.0 * rng.uniform() - 1.0);
      pos.push_back({x, y});
    }
  }
  if (vel.empty()) {
    // cm/s, converted to m/s.
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 v;
      if (cfg.init_velocity == InitVelocity::literal) {
        v = {0.002 * (rng.uniform() - 350.0), 0.002 * (rng.uniform() - 350.0)};
      } else {
        v = {0.002 * (700.0 * rng.uniform() - 350.0), 0.002 * (700.0 * rng.uniform() - 350.0)};
      }
      vel.push_back(0.01 * v);
    }
  }

  const UgvParams up{cfg.gains.vmax, cfg.corner_threshold, cfg.yaw_gain};
  for (std::size_t i = 0; i < n; ++i) {
    RobotState s;
    s.pos = pos[i];
    s.vel = vel[i];
    s.yaw = (vel[i].x == 0.0 && vel[i].y == 0.0) ? 0.0 : std::atan2(vel[i].y, vel[i].x);
    s.radius = cfg.radius;
    s.kind = VehicleKind::ugv;
    RobotRuntime r;
    r.state = s;
    r.drive = UgvDrive(up, cfg.dt);
    r.target = pos[i];
    w.robots.push_back(std::move(r));
  }

  w.ids = cfg.fixed_ids.empty() ? roles::assign_ids(pos, cfg.destination) : roles::IdAssignment{cfg.fixed_ids};
  w.initial_ids = w.ids;
  for (std::size_t i = 0; i < n; ++i) w.robots[i].state.id = w.ids.ids[i];
  w.phase = (cfg.assembly && n > 1) ? Phase::assembly : Phase::transit;
  if (w.phase == Phase::assembly) {
    const std::size_t leader = w.ids.leader();
    w.robots[leader].target = staging_point(cfg, pos[leader]);
  }
  w.queue.que.assign(n, 0);
  w.queue.passed.assign(n, false);
  w.failsafe.resize(n);

  if (cfg.uav_enabled) {
    const Vec2 c = avoid::uav_center(pos);
    w.uav.pos = c;
    w.uav.kind = VehicleKind::uav;
    w.uav.radius = 0.3;
    w.uav_drive.emplace(c, cfg.dt);
    const auto k = *control::controller_preset("sni-sim");
    w.uav_ctrl_x = lti::discretize(k, cfg.dt);
    w.uav_ctrl_y = lti::discretize(k, cfg.dt);
  }
  return w;
}

World init_random(int n, std::uint64_t seed, ScenarioConfig base) {
  if (n < 1) throw ModelError("init_random needs at least one robot");
  base.n_robots = n;
  base.seed = seed;
  base.initial_positions.clear();
  base.initial_velocities.clear();
  base.fixed_ids.clear();
  if (base.formation.offsets.size() != static_cast<std::size_t>(n)) base.formation.offsets.assign(n, Vec2{});
  return make_world(base);
}

// ---------------------------------------------------------------------------
// Trace output

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void append_csv(std::string& out, const TraceRecord& r) {
  for (std::size_t i = 0; i < r.robots.size(); ++i) {
    const RobotSample& s = r.robots[i];
    out += std::to_string(r.tick);
    const auto field = [&](double v) {
      out += ',';
      out += format_double(v);
    };
    field(r.time);
    out += ',';
    out += std::to_string(i);
    field(s.pos.x);
    field(s.pos.y);
    field(s.vel.x);
    field(s.vel.y);
    field(s.yaw);
    out += ',';
    out += std::to_string(s.id);
    out += ',';
    out += to_string(s.mode);
    field(s.cmd.x);
    field(s.cmd.y);
    field(s.target.x);
    field(s.target.y);
    field(s.overlap);
    field(s.force.x);
    field(s.force.y);
    out += ',';
    out += std::to_string(s.que);
    out += s.occluded ? ",1" : ",0";
    out += s.uav_sourced ? ",1" : ",0";
    out += ',';
    out += to_string(r.phase);
    out += ',';
    out += to_string(r.queue);
    out += '\n';
  }
}

}  // namespace

const char* CsvTraceSink::header() {
  return "tick,time,robot,x,y,vx,vy,yaw,id,mode,cmd_x,cmd_y,target_x,target_y,overlap,force_x,force_y,que,"
         "occluded,uav_sourced,phase,queue_stage";
}

CsvTraceSink::CsvTraceSink(std::ostream& out) : out_(out) {
  out_ << "# " << kTraceSchema << '\n' << header() << '\n';
}

void CsvTraceSink::record(const TraceRecord& r) {
  std::string line;
  append_csv(line, r);
  out_ << line;
}

void StringTraceSink::record(const TraceRecord& r) { append_csv(text_, r); }

std::uint64_t StringTraceSink::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text_) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Tick pipeline

namespace {

constexpr double kSnapZero = 1e-9;
constexpr double kStallRadius = 0.05;

double formation_width(const ScenarioConfig& c) {
  double w = 0.0;
  for (const Vec2& a : c.formation.offsets)
    for (const Vec2& b : c.formation.offsets) w = std::max(w, distance(a, b));
  return w + 2.0 * c.radius;
}

bool near_done_gap(const QueueState& q, Vec2 m) {
  return std::any_of(q.done_gaps.begin(), q.done_gaps.end(), [&](Vec2 g) { return distance(g, m) < 0.5; });
}

Vec2 final_slot(const World& w, std::size_t i) {
  return w.cfg.destination + roles::desired_offset(w.cfg.formation, w.ids.ids[i]);
}

// Relative position of `to` seen by `from`, with the aerial fallback.
std::optional<Vec2> measure(World& w, std::size_t from, std::size_t to, Rng& rng, Summary* s) {
  RobotRuntime& r = w.robots[from];
  try {
    const auto m = avoid::fallback_relative_position(r.state.pos, w.robots[to].state.pos, w.cfg.obstacles,
                                                     w.cfg.uav_enabled, w.cfg.uav_noise_std, rng);
    if (m.uav_sourced) {
      r.occluded = true;
      r.uav_sourced = true;
      if (s) ++s->occlusion_events;
    }
    return m.rel;
  } catch (const SensingLostError&) {
    r.occluded = true;
    r.sensing_lost = true;
    if (s) ++s->sensing_lost_events;
    return std::nullopt;
  }
}

void start_queue(World& w, const avoid::Gap& gap, double trigger_distance, Summary* s) {
  QueueState& q = w.queue;
  const auto pos = w.positions();
  q.stage = QueueStage::forming;
  q.m = gap.m;
  q.dir = gap.normal;
  q.saved_ids = w.ids;
  q.started_at = w.time();
  q.trigger_distance = trigger_distance;
  w.ids = roles::requeue_ids(pos, gap.m);
  const Vec2 head = gap.m - w.cfg.hold_offset * gap.normal;
  q.slots = roles::line_targets(w.ids, head, w.cfg.line_spacing, gap.normal);
  q.dis_no.resize(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) q.dis_no[i] = q.slots[i] - pos[i];
  q.passed.assign(pos.size(), false);
  for (auto& r : w.robots) r.mode = RobotMode::queue;
  if (s) {
    ++s->queue_activations;
    if (!s->queue_start) s->queue_start = w.time();
    s->queue_trigger_distance = trigger_distance;
    for (auto& e : s->per_robot_queue_entries) ++e;
  }
}

void end_queue(World& w, Summary* s) {
  QueueState& q = w.queue;
  w.ids = q.saved_ids;
  q.stage = QueueStage::idle;
  q.done_gaps.push_back(q.m);
  std::fill(q.que.begin(), q.que.end(), 0);
  for (auto& r : w.robots) r.mode = RobotMode::formation;
  if (s) {
    ++s->queue_deactivations;
    s->queue_end = w.time();
    s->ids_restored = (w.ids == q.saved_ids);
  }
}

void role_logic(World& w, Summary* s) {
  const ScenarioConfig& c = w.cfg;
  const double dt_role = c.dt * c.role_decimation;
  const auto pos = w.positions();
  const std::size_t n = pos.size();
  const std::size_t leader = w.ids.leader();

  if (w.phase == Phase::assembly) {
    bool settled = true;
    for (std::size_t i = 0; i < n && settled; ++i) {
      if (i == leader) continue;
      const Vec2 slot = pos[leader] + roles::desired_offset(c.formation, w.ids.ids[i]);
      settled = distance(pos[i], slot) <= c.arrive_tol;
    }
    w.settled_for = settled ? w.settled_for + dt_role : 0.0;
    if (w.settled_for >= c.arrive_hold) {
      w.phase = Phase::transit;
      w.settled_for = 0.0;
      if (s) s->formation_time = w.time();
    }
    return;
  }

  QueueState& q = w.queue;
  if (q.stage == QueueStage::idle && w.waypoint < c.waypoints.size() &&
      distance(pos[leader], c.waypoints[w.waypoint]) < c.waypoint_tol) {
    ++w.waypoint;
  }

  if (c.queue_enabled && !c.obstacles.empty() && w.phase == Phase::transit) {
    if (q.stage == QueueStage::idle) {
      std::set<std::size_t> seen;
      for (const auto& r : w.robots)
        for (std::size_t k : avoid::sense_obstacles(r.state.pos, r.state.yaw, c.obstacles, c.fov)) seen.insert(k);
      const std::vector<std::size_t> cand(seen.begin(), seen.end());
      const auto gap = avoid::find_gap(avoid::uav_center(pos), c.destination, c.obstacles, cand,
                                       formation_width(c));
      if (gap && !near_done_gap(q, gap->m)) {
        double trigger = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = distance(pos[i], gap->m);
          q.que[i] = roles::queue_flag(d, roles::side_of(pos[i], gap->m, gap->normal), q.que[i], c.queue_trigger);
          if (q.que[i] == 1 && (trigger < 0.0 || d < trigger)) trigger = d;
        }
        if (trigger >= 0.0) start_queue(w, *gap, trigger, s);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = distance(pos[i], q.m);
        q.que[i] = roles::queue_flag(d, roles::side_of(pos[i], q.m, q.dir), q.que[i], c.queue_trigger);
      }
      if (q.stage == QueueStage::forming) {
        bool formed = true;
        for (std::size_t i = 0; i < n && formed; ++i) formed = distance(pos[i], q.slots[i]) <= c.arrive_tol;
        if (formed || w.time() - q.started_at > 3.0 * c.t_des) {
          q.stage = QueueStage::passing;
          if (s && !s->queue_formed) s->queue_formed = w.time();
        }
      } else {
        bool all = true;
        for (std::size_t i = 0; i < n; ++i) {
          if (!q.passed[i] && roles::side_of(pos[i], q.m, q.dir) == roles::Side::behind &&
              distance(pos[i], q.m) > c.queue_trigger) {
            q.passed[i] = true;
            w.robots[i].mode = RobotMode::passed;
            if (s) ++s->per_robot_queue_exits[i];
          }
          all = all && q.passed[i];
        }
        if (all) end_queue(w, s);
      }
    }
  }

  if (q.stage == QueueStage::idle && w.waypoint >= c.waypoints.size() && w.phase == Phase::transit) {
    bool settled = true;
    for (std::size_t i = 0; i < n && settled; ++i) settled = distance(pos[i], final_slot(w, i)) <= c.arrive_tol;
    w.settled_for = settled ? w.settled_for + dt_role : 0.0;
    if (w.settled_for >= c.arrive_hold) {
      w.phase = Phase::arrived;
      if (s && !s->arrival_time) s->arrival_time = w.time();
    }
  }
}

std::vector<Vec2> avoid_velocities(const World& w) {
  std::vector<Vec2> v;
  v.reserve(w.robots.size());
  const double side = w.cfg.repulsion_sidestep;
  for (const auto& r : w.robots) v.push_back(r.acc.v + (side * r.turn) * Vec2{-r.acc.v.y, r.acc.v.x});
  return v;
}

void compute_commands(World& w, std::int64_t tick_index, Summary* s) {
  const ScenarioConfig& c = w.cfg;
  const std::size_t n = w.robots.size();
  const auto pos = w.positions();
  const auto avoid = avoid_velocities(w);
  for (auto& r : w.robots) {
    r.occluded = false;
    r.uav_sourced = false;
    r.sensing_lost = false;
  }
  auto rng_for = [&](std::size_t i) { return Rng::split(c.seed, static_cast<std::uint64_t>(tick_index), i + 1); };
  const QueueState& q = w.queue;

  if (q.stage == QueueStage::idle) {
    formation::Snapshot snap;
    snap.positions = pos;
    snap.ids = w.ids;
    snap.reference = w.leader_reference();
    snap.avoid_vel = avoid;
    const std::size_t leader = w.ids.leader();
    snap.rel_to_leader.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == leader) continue;
      Rng rng = rng_for(i);
      snap.rel_to_leader[i] = measure(w, i, leader, rng, s);
    }
    const auto cmd = formation::formation_step(snap, c.formation, c.gains, c.weights, &w.failsafe);
    for (std::size_t i = 0; i < n; ++i) {
      w.robots[i].cmd = cmd.vel_sp[i];
      w.robots[i].target = i == leader ? snap.reference
                                       : pos[leader] + roles::desired_offset(c.formation, w.ids.ids[i]);
    }
    if (w.phase == Phase::assembly) w.robots[leader].target = snap.reference;
    return;
  }

  if (q.stage == QueueStage::forming) {
    const auto cmd = formation::transition_step(pos, q.slots, q.dis_no, c.t_des, c.gains.vmax, avoid, c.weights);
    for (std::size_t i = 0; i < n; ++i) {
      w.robots[i].cmd = cmd.vel_sp[i];
      w.robots[i].target = q.slots[i];
    }
    return;
  }

  // Passing: the line threads the gap, robots past it rejoin the formation.
  const Vec2 exit_target = q.m + c.pass_ahead * q.dir;
  const std::size_t orig_leader = q.saved_ids.leader();
  const Vec2 reference = w.leader_reference();
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = rng_for(i);
    Vec2 target;
    double k = c.gains.kc;
    bool lost = false;
    if (q.passed[i]) {
      const int saved = q.saved_ids.ids[i];
      if (saved == 1) {
        target = reference;
        k = c.gains.kr;
      } else {
        Vec2 anchor = reference;
        if (q.passed[orig_leader]) {
          const auto rel = measure(w, i, orig_leader, rng, s);
          if (rel) anchor = pos[i] + *rel;
          else lost = true;
        }
        target = anchor + roles::desired_offset(c.formation, saved);
      }
    } else if (w.ids.ids[i] == 1) {
      target = exit_target;
      k = c.gains.kr;
    } else {
      const std::size_t ahead = w.ids.robot_with(w.ids.ids[i] - 1);
      if (q.passed[ahead]) {
        target = exit_target;
      } else {
        const auto rel = measure(w, i, ahead, rng, s);
        if (rel) target = pos[i] + *rel - c.line_spacing * q.dir;
        else lost = true;
      }
    }
    Vec2 cmd;
    if (lost) {
      cmd = w.failsafe.on_lost(i);
    } else {
      cmd = k * (pos[i] - target);
      if (avoid[i].x != 0.0 || avoid[i].y != 0.0) cmd = formation::blend_command(cmd, avoid[i], c.weights);
      cmd = formation::saturate(cmd, c.gains.vmax);
      w.failsafe.on_ok(i, cmd);
    }
    w.robots[i].cmd = cmd;
    w.robots[i].target = lost ? w.robots[i].target : target;
  }
}

bool in_avoidance(const World& w, std::size_t i) { return w.robots[i].mode == RobotMode::queue; }

// Room left around a point once obstacle circles and their margin are taken out.
double side_clearance(const ScenarioConfig& c, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : c.obstacles) best = std::min(best, distance(p, o.center) - o.radius - c.obstacle_margin);
  return best;
}

// Returns the (yielder, other) pairs that touched this tick.
std::vector<std::pair<std::size_t, std::size_t>> apply_repulsion(World& w, Summary* s) {
  const ScenarioConfig& c = w.cfg;
  const std::size_t n = w.robots.size();
  const avoid::RepulsionParams p{c.k_r, c.mass, c.fmax, c.repulsion_decay};
  std::vector<Vec2> force(n);
  std::vector<bool> forced(n, false);
  std::vector<std::pair<std::size_t, std::size_t>> touching;
  for (auto& r : w.robots) r.overlap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      RobotRuntime& a = w.robots[i];
      RobotRuntime& b = w.robots[j];
      const double ov = avoid::overlap(a.state.pos, a.state.radius, b.state.pos, b.state.radius);
      a.overlap = std::max(a.overlap, ov);
      b.overlap = std::max(b.overlap, ov);
      const bool ai = in_avoidance(w, i);
      const bool bj = in_avoidance(w, j);
      if (c.repulsion_mode == RepulsionMode::avoidance_only && !ai && !bj) continue;
      std::size_t y = 0;
      if (ai != bj) y = ai ? j : i;
      else y = w.ids.ids[i] > w.ids.ids[j] ? i : j;
      const std::size_t o = y == i ? j : i;
      avoid::RepulsionAccumulator scratch;
      const auto res = avoid::repulsion(w.robots[y].state.pos, w.robots[y].state.radius, w.robots[o].state.pos,
                                        w.robots[o].state.radius, p, c.dt, scratch);
      const bool nonzero = res.force.x != 0.0 || res.force.y != 0.0;
      if (s && nonzero != (ov > 0.0)) ++s->force_mismatch;
      if (ov > 0.0) {
        force[y] += res.force;
        forced[y] = true;
        touching.emplace_back(y, o);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    RobotRuntime& r = w.robots[i];
    r.force = formation::saturate(force[i], c.fmax);
    if (forced[i]) {
      r.acc.v += (c.dt / c.mass) * r.force;
    } else {
      r.acc.v *= c.repulsion_decay > 0.0 ? std::exp(-c.dt / c.repulsion_decay) : 0.0;
      if (r.acc.v.norm() < kSnapZero) r.acc.v = {};
    }
    if (r.acc.v.x == 0.0 && r.acc.v.y == 0.0) {
      // The side is remembered for a while so a robot that bounces off one
      // peer keeps circling the same way instead of retrying the blocked side.
      if ((r.free_for += c.dt) >= c.sidestep_memory) {
        r.turn = 0.0;
        r.stalled_for = 0.0;
      }
      continue;
    }
    r.free_for = 0.0;
    if (r.turn == 0.0) {
      // Slide toward the side the target lies on, left on a tie.
      const Vec2 to_goal = r.target - r.state.pos;
      r.turn = r.acc.v.x * to_goal.y - r.acc.v.y * to_goal.x < 0.0 ? -1.0 : 1.0;
      // Unless that side runs into a box and the other side is roomier.
      const Vec2 lateral = normalized(Vec2{-r.acc.v.y, r.acc.v.x});
      const double here = side_clearance(c, r.state.pos + (r.turn * r.state.radius) * lateral);
      const double there = side_clearance(c, r.state.pos - (r.turn * r.state.radius) * lateral);
      if (here < 0.0 && there > here) r.turn = -r.turn;
      r.stall_anchor = r.state.pos;
      r.stalled_for = 0.0;
    } else if (distance(r.state.pos, r.stall_anchor) > kStallRadius) {
      r.stall_anchor = r.state.pos;
      r.stalled_for = 0.0;
    } else if ((r.stalled_for += c.dt) >= c.sidestep_stall) {
      // Pinned against something the push cannot clear; go round the other way.
      r.turn = -r.turn;
      r.stalled_for = 0.0;
    }
  }
  return touching;
}

// Drops the inward radial part of the command for a robot inside the margin
// band of an obstacle circle. The overlap force alone is far too soft to
// stop a robot that the formation law drives into a box.
void guard_peers(World& w, const std::vector<std::pair<std::size_t, std::size_t>>& touching) {
  for (const auto& [y, o] : touching) {
    RobotRuntime& r = w.robots[y];
    const Vec2 out = r.state.pos - w.robots[o].state.pos;
    const double d = out.norm();
    if (d == 0.0) continue;
    const Vec2 u = out * (1.0 / d);
    const double inward = -(r.cmd.x * u.x + r.cmd.y * u.y);
    // The blocked part is turned into a slide round the other robot on the
    // side picked when the contact began.
    const double turn = r.turn == 0.0 ? 1.0 : r.turn;
    if (inward > 0.0)
      r.cmd = formation::saturate(r.cmd + inward * u + (inward * turn) * Vec2{-u.y, u.x}, w.cfg.gains.vmax);
    // The robot with right of way presses on until the pair is well inside
    // each other's circles, then may not drive further in.
    RobotRuntime& q = w.robots[o];
    if (d >= w.cfg.right_of_way_floor * (r.state.radius + q.state.radius)) continue;
    const double closing = q.cmd.x * u.x + q.cmd.y * u.y;
    if (closing > 0.0) q.cmd -= closing * u;
  }
}

void guard_obstacles(World& w) {
  const ScenarioConfig& c = w.cfg;
  if (!(c.obstacle_margin > 0.0)) return;
  for (auto& r : w.robots) {
    for (const auto& o : c.obstacles) {
      const Vec2 out = r.state.pos - o.center;
      const double d = out.norm();
      if (d >= o.radius + c.obstacle_margin || d == 0.0) continue;
      const Vec2 u = out * (1.0 / d);
      const double inward = -(r.cmd.x * u.x + r.cmd.y * u.y);
      if (inward > 0.0) r.cmd += inward * u;
    }
  }
}

void size_summary(Summary& s, std::size_t n) {
  if (s.rmse.size() != n) s.rmse.resize(n, 0.0);
  if (s.per_robot_queue_entries.size() != n) s.per_robot_queue_entries.resize(n, 0);
  if (s.per_robot_queue_exits.size() != n) s.per_robot_queue_exits.resize(n, 0);
  if (s.pair_separated.size() != n * (n - 1) / 2) s.pair_separated.assign(n * (n - 1) / 2, false);
}

void update_summary(const World& w, Summary& s) {
  const ScenarioConfig& c = w.cfg;
  const std::size_t n = w.robots.size();
  for (std::size_t i = 0; i < n; ++i) {
    const RobotRuntime& a = w.robots[i];
    if (!a.state.pos.finite() || !a.state.vel.finite() || !std::isfinite(a.state.yaw) || !a.cmd.finite())
      ++s.non_finite;
    if (a.cmd.norm() > c.gains.vmax * (1.0 + 1e-9) || std::abs(a.drive.last_speed()) > c.gains.vmax * (1.0 + 1e-9))
      ++s.saturation_violations;
    for (std::size_t j = i + 1; j < n; ++j) {
      const RobotRuntime& b = w.robots[j];
      const double d = distance(a.state.pos, b.state.pos);
      const double rr = a.state.radius + b.state.radius;
      s.min_pairwise = std::min(s.min_pairwise, d);
      s.min_pairwise_ratio = std::min(s.min_pairwise_ratio, d / rr);
      const std::size_t pair = i * n - i * (i + 1) / 2 + (j - i - 1);
      if (d >= rr) s.pair_separated[pair] = true;
      const bool repelling =
          c.repulsion_mode == RepulsionMode::always || in_avoidance(w, i) || in_avoidance(w, j);
      if (s.pair_separated[pair] && repelling) {
        s.min_separated_ratio = std::min(s.min_separated_ratio, d / rr);
        if (d < 0.5 * rr) ++s.safety_violations;
      }
    }
    for (const auto& o : c.obstacles) {
      const double clear = distance(a.state.pos, o.center) - o.radius;
      s.min_obstacle_clearance = std::min(s.min_obstacle_clearance, clear);
      if (clear < 0.0) ++s.obstacle_intrusions;
    }
    const double e = distance(a.state.pos, a.target);
    s.rmse[i] += e * e;
  }
  if (!w.ids.is_bijection()) s.ids_bijective = false;
}

TraceRecord make_record(const World& w, std::int64_t tick_index) {
  TraceRecord r;
  r.tick = tick_index;
  r.time = static_cast<double>(tick_index) * w.cfg.dt;
  r.phase = w.phase;
  r.queue = w.queue.stage;
  r.robots.reserve(w.robots.size());
  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    const RobotRuntime& x = w.robots[i];
    r.robots.push_back(RobotSample{x.state.pos, x.state.vel, x.state.yaw, w.ids.ids[i], x.mode, x.cmd, x.target,
                                   x.overlap, x.force, w.queue.que[i], x.occluded, x.uav_sourced});
  }
  return r;
}

}  // namespace

void tick(World& w, Summary* summary, TraceSink* sink) {
  const ScenarioConfig& c = w.cfg;
  const std::int64_t k = w.clock;
  if (summary) size_summary(*summary, w.robots.size());
  if (k % c.role_decimation == 0) role_logic(w, summary);
  compute_commands(w, k, summary);
  const auto touching = apply_repulsion(w, summary);
  if (c.peer_guard) guard_peers(w, touching);
  guard_obstacles(w);

  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    RobotRuntime& r = w.robots[i];
    r.state = r.drive.tick(r.state, r.cmd);
    r.state.id = w.ids.ids[i];
  }

  if (w.uav_drive) {
    const Vec2 center = avoid::uav_center(w.positions());
    const Vec2 vel_sp{w.uav_ctrl_x.step(w.uav.pos.x - center.x), w.uav_ctrl_y.step(w.uav.pos.y - center.y)};
    Rng rng = Rng::split(c.seed, static_cast<std::uint64_t>(k), 0);
    w.uav = w.uav_drive->tick(w.uav, vel_sp, c.wind, w.time(), rng);
  }

  ++w.clock;
  if (summary) update_summary(w, *summary);
  if (sink && k % c.trace_stride == 0) sink->record(make_record(w, k + 1));
}

Summary run(World& w, double duration, TraceSink* sink) {
  if (!(duration > 0.0)) throw ModelError("run duration must be positive");
  const std::size_t n = w.robots.size();
  Summary s;
  s.scenario = w.cfg.name;
  s.seed = w.cfg.seed;
  s.n_robots = static_cast<int>(n);
  s.initial_ids = w.initial_ids.ids;
  s.ids_bijective = w.ids.is_bijection();
  size_summary(s, n);
  if (sink) sink->record(make_record(w, w.clock));

  const auto steps = static_cast<std::int64_t>(std::llround(duration / w.cfg.dt));
  std::int64_t done = 0;
  for (; done < steps; ++done) {
    tick(w, &s, sink);
    if (w.cfg.stop_on_arrival && w.phase == Phase::arrived) {
      ++done;
      break;
    }
  }
  s.ticks = done;
  s.duration = static_cast<double>(done) * w.cfg.dt;
  s.final_ids = w.ids.ids;
  s.arrived = w.phase == Phase::arrived;
  for (std::size_t i = 0; i < n; ++i) {
    s.rmse[i] = done > 0 ? std::sqrt(s.rmse[i] / static_cast<double>(done)) : 0.0;
    s.final_error.push_back(distance(w.robots[i].state.pos, final_slot(w, i)));
  }
  if (s.queue_activations == 0) s.ids_restored = true;
  return s;
}

Summary run_scenario(const ScenarioConfig& cfg, TraceSink* sink) {
  World w = make_world(cfg);
  return run(w, cfg.duration, sink);
}

}  // namespace ni_swarm::sim
