#include "ni_swarm/formation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ni_swarm/error.hpp"

namespace ni_swarm::formation {

void Failsafe::resize(std::size_t n) {
  last.resize(n);
  lost_ticks.resize(n, 0);
}

Vec2 Failsafe::on_lost(std::size_t i) {
  ++lost_ticks[i];
  return lost_ticks[i] <= kHoldTicks ? last[i] : Vec2{};
}

void Failsafe::on_ok(std::size_t i, Vec2 cmd) {
  lost_ticks[i] = 0;
  last[i] = cmd;
}

Vec2 saturate(Vec2 v, double vmax) {
  const double n = v.norm();
  return n > vmax ? v * (vmax / n) : v;
}

Vec2 blend_command(Vec2 formation_cmd, Vec2 avoid_vel, const control::TaskWeights& w) {
  return {w.ax1 * formation_cmd.x + w.ax2 * avoid_vel.x, w.ay1 * formation_cmd.y + w.ay2 * avoid_vel.y};
}

namespace {

constexpr double kDisFloor = 0.1;

bool has_avoid(std::span<const Vec2> avoid_vel, std::size_t i) {
  return i < avoid_vel.size() && (avoid_vel[i].x != 0.0 || avoid_vel[i].y != 0.0);
}

}  // namespace

FormationCommand formation_step(const Snapshot& s, const roles::FormationSpec& spec, const FormationGains& g,
                                const control::TaskWeights& w, Failsafe* failsafe) {
  const std::size_t n = s.positions.size();
  if (s.ids.ids.size() != n) throw ModelError("formation_step: id count mismatch");
  if (!s.rel_to_leader.empty() && s.rel_to_leader.size() != n)
    throw ModelError("formation_step: measurement count mismatch");
  if (failsafe && failsafe->last.size() != n) failsafe->resize(n);

  FormationCommand out;
  out.vel_sp.assign(n, {});
  out.gains_used.assign(n, 0.0);
  out.sensing_lost.assign(n, false);
  const std::size_t leader = s.ids.leader();

  for (std::size_t i = 0; i < n; ++i) {
    Vec2 cmd;
    if (i == leader) {
      // X_r + X_L with X_r the negated reference.
      cmd = g.kr * (s.positions[i] - s.reference);
      out.gains_used[i] = g.kr;
    } else {
      std::optional<Vec2> rel = s.rel_to_leader.empty() ? std::optional<Vec2>(s.positions[leader] - s.positions[i])
                                                        : s.rel_to_leader[i];
      out.gains_used[i] = g.kc;
      if (!rel) {
        out.sensing_lost[i] = true;
        out.vel_sp[i] = failsafe ? failsafe->on_lost(i) : Vec2{};
        continue;
      }
      const Vec2 offset = roles::desired_offset(spec, s.ids.ids[i]);
      cmd = g.kc * ((-*rel) - offset);
    }
    if (has_avoid(s.avoid_vel, i)) cmd = blend_command(cmd, s.avoid_vel[i], w);
    cmd = saturate(cmd, g.vmax);
    out.vel_sp[i] = cmd;
    if (failsafe) failsafe->on_ok(i, cmd);
  }
  return out;
}

FormationCommand transition_step(std::span<const Vec2> positions, std::span<const Vec2> targets,
                                 std::span<const Vec2> dis_no, double t_des, double vmax,
                                 std::span<const Vec2> avoid_vel, const control::TaskWeights& w) {
  const std::size_t n = positions.size();
  if (targets.size() != n || dis_no.size() != n) throw ModelError("transition_step: size mismatch");
  FormationCommand out;
  out.mode = Mode::queue;
  out.vel_sp.assign(n, {});
  out.gains_used.assign(n, 0.0);
  out.sensing_lost.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = positions[i] - targets[i];
    // Magnitudes keep the gain negative once a robot overshoots its slot;
    // with signed inputs the command would keep pointing along dis_no. The
    // floor keeps an axis that started aligned correctable.
    const std::array<double, 2> d{-std::max(std::abs(dis_no[i].x), kDisFloor),
                                  -std::max(std::abs(dis_no[i].y), kDisFloor)};
    const std::array<double, 2> ev{std::abs(e.x), std::abs(e.y)};
    const auto k = control::tv_gains(d, t_des, ev);
    Vec2 cmd{k[0] * e.x, k[1] * e.y};
    out.gains_used[i] = std::abs(k[0]) >= std::abs(k[1]) ? k[0] : k[1];
    if (has_avoid(avoid_vel, i)) cmd = blend_command(cmd, avoid_vel[i], w);
    out.vel_sp[i] = saturate(cmd, vmax);
  }
  return out;
}

namespace {

double largest_dc(std::span<const lti::RationalTF> tfs) {
  double best = 0.0;
  for (const auto& tf : tfs) {
    const auto g = lti::dc_gain(tf);
    if (!g) throw ModelError("stability check needs finite DC gains");
    if (std::abs(*g) > std::abs(best)) best = *g;
  }
  return best;
}

}  // namespace

ProtocolReport check_protocol_stability(const roles::IdAssignment& ids, roles::TopologyMode mode,
                                        std::span<const lti::RationalTF> controllers,
                                        std::span<const lti::RationalTF> plants,
                                        const lti::RationalTF& repulsion_plant, const lti::FreqGrid& grid) {
  ProtocolReport r;
  r.plants_sni = plants.empty() || ni::block_sni(plants, grid);
  r.controllers_sni_complement =
      std::all_of(controllers.begin(), controllers.end(),
                  [&](const lti::RationalTF& c) { return ni::is_sni(c, grid).sign_complement_sni; });
  r.repulsion = ni::is_ni(repulsion_plant, grid);
  r.repulsion_ok = r.repulsion.origin_pole && (r.repulsion.is_ni || r.repulsion.sign_complement_ni);
  r.m0 = largest_dc(plants);
  r.n0 = largest_dc(controllers);
  const auto topo = roles::build_topology(ids, mode);
  if (topo.qi.cols() > 0) r.lambda_max = ni::max_eigenvalue(ni::laplacian_from_incidence(topo.qi));
  r.dc_test = ni::formation_stable(r.m0, r.n0, topo.qi);
  return r;
}

}  // namespace ni_swarm::formation
