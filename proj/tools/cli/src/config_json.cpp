#include "ni_swarm_cli/config_json.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string_view>
#include <vector>

#include "ni_swarm/error.hpp"
#include "ni_swarm/presets.hpp"

namespace ni_swarm::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw InputError(where + ": " + what); }

double number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(where, "must be finite");
  return d;
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) bad(where, "expected an integer");
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) bad(where, "out of range");
  return static_cast<int>(i);
}

std::uint64_t unsigned_integer(const json& v, const std::string& where) {
  // Parsed text gives unsigned for non-negative literals; values built in
  // code may still be signed.
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(where, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v.get<std::int64_t>());
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) bad(where, "expected true or false");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) bad(where, "expected a string");
  return v.get<std::string>();
}

Vec2 vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) bad(where, "expected [x, y]");
  return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

std::vector<Vec2> vec2_list(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected a list of [x, y]");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vec2(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }

json vec2_list_json(const std::vector<Vec2>& vs) {
  json a = json::array();
  for (Vec2 v : vs) a.push_back(vec2_json(v));
  return a;
}

// Walks one JSON object, remembering which keys were consumed.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) bad(where_, "expected an object");
  }

  template <class F>
  void opt(const char* key, F&& f) {
    keys_.emplace_back(key);
    if (j_.contains(key)) f(j_.at(key), where_ + "." + key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (std::find(keys_.begin(), keys_.end(), item.key()) == keys_.end()) bad(where_, "unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> keys_;
};

// Small readers so each field is one line below.
auto set(double& dst) {
  return [&dst](const json& v, const std::string& w) { dst = number(v, w); };
}
auto set(int& dst) {
  return [&dst](const json& v, const std::string& w) { dst = integer(v, w); };
}
auto set(bool& dst) {
  return [&dst](const json& v, const std::string& w) { dst = boolean(v, w); };
}
auto set(Vec2& dst) {
  return [&dst](const json& v, const std::string& w) { dst = vec2(v, w); };
}
auto set(std::vector<Vec2>& dst) {
  return [&dst](const json& v, const std::string& w) { dst = vec2_list(v, w); };
}

const char* name_of(sim::RepulsionMode m) { return m == sim::RepulsionMode::always ? "always" : "avoidance_only"; }
const char* name_of(sim::InitVelocity v) { return v == sim::InitVelocity::literal ? "literal" : "spread"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// The engine seeds running minima with 1e300; nothing observed shows as null.
json observed(double v) { return v < 1e299 ? json(v) : json(nullptr); }

}  // namespace

json to_json(const sim::ScenarioConfig& c) {
  json j;
  j["schema"] = kScenarioSchema;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["stop_on_arrival"] = c.stop_on_arrival;
  j["robots"] = {
      {"count", c.n_robots},
      {"initial_positions", vec2_list_json(c.initial_positions)},
      {"initial_velocities", vec2_list_json(c.initial_velocities)},
      {"init_half_width", c.init_half_width},
      {"init_velocity", name_of(c.init_velocity)},
      {"fixed_ids", c.fixed_ids},
      {"radius", c.radius},
      {"mass", c.mass},
  };
  j["control"] = {
      {"kr", c.gains.kr},
      {"kc", c.gains.kc},
      {"vmax", c.gains.vmax},
      {"yaw_gain", c.yaw_gain},
      {"corner_threshold", c.corner_threshold},
      {"weights", {{"ax1", c.weights.ax1}, {"ax2", c.weights.ax2}, {"ay1", c.weights.ay1}, {"ay2", c.weights.ay2}}},
  };
  j["mission"] = {
      {"destination", vec2_json(c.destination)},
      {"waypoints", vec2_list_json(c.waypoints)},
      {"formation", {{"shape", c.formation.shape_name}, {"offsets", vec2_list_json(c.formation.offsets)}}},
      {"assembly", c.assembly},
      {"waypoint_tol", c.waypoint_tol},
      {"arrive_tol", c.arrive_tol},
      {"arrive_hold", c.arrive_hold},
  };
  json obstacles = json::array();
  for (const auto& o : c.obstacles) obstacles.push_back({{"center", vec2_json(o.center)}, {"radius", o.radius}});
  j["obstacles"] = obstacles;
  j["queue"] = {
      {"enabled", c.queue_enabled},
      {"trigger", c.queue_trigger},
      {"line_spacing", c.line_spacing},
      {"hold_offset", c.hold_offset},
      {"pass_ahead", c.pass_ahead},
      {"t_des", c.t_des},
      {"fov", {{"half_angle", c.fov.half_angle}, {"range", c.fov.range}}},
  };
  j["repulsion"] = {
      {"mode", name_of(c.repulsion_mode)},
      {"k_r", c.k_r},
      {"fmax", c.fmax},
      {"decay", c.repulsion_decay},
      {"sidestep", c.repulsion_sidestep},
      {"sidestep_stall", c.sidestep_stall},
      {"sidestep_memory", c.sidestep_memory},
      {"peer_guard", c.peer_guard},
      {"right_of_way_floor", c.right_of_way_floor},
      {"obstacle_margin", c.obstacle_margin},
  };
  j["uav"] = {{"enabled", c.uav_enabled}, {"noise_std", c.uav_noise_std}};
  j["wind"] = {
      {"enabled", c.wind.enabled},   {"bias", vec2_json(c.wind.bias)}, {"gust_std", c.wind.gust_std},
      {"onset", c.wind.onset},       {"direction", c.wind.direction},  {"washout", c.wind.washout},
  };
  j["output"] = {{"role_decimation", c.role_decimation}, {"trace_stride", c.trace_stride}};
  return j;
}

sim::ScenarioConfig scenario_from_json(const json& j) {
  Obj root(j, "config");
  sim::ScenarioConfig c;

  root.opt("schema", [](const json& v, const std::string& w) {
    if (string(v, w) != kScenarioSchema) bad(w, std::string("expected \"") + kScenarioSchema + "\"");
  });
  if (!j.contains("schema")) bad("config", std::string("missing \"schema\": \"") + kScenarioSchema + "\"");
  // The base has to be settled before any field overrides it.
  root.opt("preset", [&](const json& v, const std::string& w) {
    const std::string name = string(v, w);
    auto p = presets::scenario_preset(name);
    if (!p) bad(w, "unknown scenario preset '" + name + "'");
    c = *p;
  });

  root.opt("name", [&](const json& v, const std::string& w) { c.name = string(v, w); });
  root.opt("seed", [&](const json& v, const std::string& w) { c.seed = unsigned_integer(v, w); });
  root.opt("dt", set(c.dt));
  root.opt("duration", set(c.duration));
  root.opt("stop_on_arrival", set(c.stop_on_arrival));

  root.opt("robots", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("count", set(c.n_robots));
    o.opt("initial_positions", set(c.initial_positions));
    o.opt("initial_velocities", set(c.initial_velocities));
    o.opt("init_half_width", set(c.init_half_width));
    o.opt("init_velocity", [&](const json& x, const std::string& wx) {
      const std::string s = string(x, wx);
      if (s == "literal") c.init_velocity = sim::InitVelocity::literal;
      else if (s == "spread") c.init_velocity = sim::InitVelocity::spread;
      else bad(wx, "expected \"literal\" or \"spread\"");
    });
    o.opt("fixed_ids", [&](const json& x, const std::string& wx) {
      if (!x.is_array()) bad(wx, "expected a list of integers");
      c.fixed_ids.clear();
      for (std::size_t i = 0; i < x.size(); ++i) c.fixed_ids.push_back(integer(x[i], wx + "[" + std::to_string(i) + "]"));
    });
    o.opt("radius", set(c.radius));
    o.opt("mass", set(c.mass));
    o.finish();
  });

  root.opt("control", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("kr", set(c.gains.kr));
    o.opt("kc", set(c.gains.kc));
    o.opt("vmax", set(c.gains.vmax));
    o.opt("yaw_gain", set(c.yaw_gain));
    o.opt("corner_threshold", set(c.corner_threshold));
    o.opt("weights", [&](const json& x, const std::string& wx) {
      Obj ow(x, wx);
      ow.opt("ax1", set(c.weights.ax1));
      ow.opt("ax2", set(c.weights.ax2));
      ow.opt("ay1", set(c.weights.ay1));
      ow.opt("ay2", set(c.weights.ay2));
      ow.finish();
    });
    o.finish();
  });

  root.opt("mission", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("destination", set(c.destination));
    o.opt("waypoints", set(c.waypoints));
    o.opt("formation", [&](const json& x, const std::string& wx) {
      Obj of(x, wx);
      of.opt("shape", [&](const json& y, const std::string& wy) { c.formation.shape_name = string(y, wy); });
      of.opt("offsets", set(c.formation.offsets));
      of.finish();
    });
    o.opt("assembly", set(c.assembly));
    o.opt("waypoint_tol", set(c.waypoint_tol));
    o.opt("arrive_tol", set(c.arrive_tol));
    o.opt("arrive_hold", set(c.arrive_hold));
    o.finish();
  });

  root.opt("obstacles", [&](const json& v, const std::string& w) {
    if (!v.is_array()) bad(w, "expected a list of obstacles");
    c.obstacles.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      avoid::ObstacleCircle oc;
      Obj o(v[i], w + "[" + std::to_string(i) + "]");
      o.opt("center", set(oc.center));
      o.opt("radius", set(oc.radius));
      o.finish();
      c.obstacles.push_back(oc);
    }
  });

  root.opt("queue", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("enabled", set(c.queue_enabled));
    o.opt("trigger", set(c.queue_trigger));
    o.opt("line_spacing", set(c.line_spacing));
    o.opt("hold_offset", set(c.hold_offset));
    o.opt("pass_ahead", set(c.pass_ahead));
    o.opt("t_des", set(c.t_des));
    o.opt("fov", [&](const json& x, const std::string& wx) {
      Obj of(x, wx);
      of.opt("half_angle", set(c.fov.half_angle));
      of.opt("range", set(c.fov.range));
      of.finish();
    });
    o.finish();
  });

  root.opt("repulsion", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("mode", [&](const json& x, const std::string& wx) {
      const std::string s = string(x, wx);
      if (s == "always") c.repulsion_mode = sim::RepulsionMode::always;
      else if (s == "avoidance_only") c.repulsion_mode = sim::RepulsionMode::avoidance_only;
      else bad(wx, "expected \"always\" or \"avoidance_only\"");
    });
    o.opt("k_r", set(c.k_r));
    o.opt("fmax", set(c.fmax));
    o.opt("decay", set(c.repulsion_decay));
    o.opt("sidestep", set(c.repulsion_sidestep));
    o.opt("sidestep_stall", set(c.sidestep_stall));
    o.opt("sidestep_memory", set(c.sidestep_memory));
    o.opt("peer_guard", set(c.peer_guard));
    o.opt("right_of_way_floor", set(c.right_of_way_floor));
    o.opt("obstacle_margin", set(c.obstacle_margin));
    o.finish();
  });

  root.opt("uav", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("enabled", set(c.uav_enabled));
    o.opt("noise_std", set(c.uav_noise_std));
    o.finish();
  });

  root.opt("wind", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("enabled", set(c.wind.enabled));
    o.opt("bias", set(c.wind.bias));
    o.opt("gust_std", set(c.wind.gust_std));
    o.opt("onset", set(c.wind.onset));
    o.opt("direction", set(c.wind.direction));
    o.opt("washout", set(c.wind.washout));
    o.finish();
  });

  root.opt("output", [&](const json& v, const std::string& w) {
    Obj o(v, w);
    o.opt("role_decimation", set(c.role_decimation));
    o.opt("trace_stride", set(c.trace_stride));
    o.finish();
  });

  root.finish();
  try {
    sim::validate(c);
  } catch (const ModelError& e) {
    throw InputError(e.what());
  }
  return c;
}

json to_json(const sim::Summary& s) {
  json j;
  j["schema"] = sim::kSummarySchema;
  j["scenario"] = s.scenario;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["ticks"] = s.ticks;
  j["n_robots"] = s.n_robots;
  j["ids"] = {{"bijective", s.ids_bijective}, {"initial", s.initial_ids}, {"final", s.final_ids},
              {"restored", s.ids_restored}};
  j["formation_time"] = opt_json(s.formation_time);
  j["arrival_time"] = opt_json(s.arrival_time);
  j["arrived"] = s.arrived;
  j["final_error"] = s.final_error;
  j["rmse"] = s.rmse;
  json reached = json::array();
  for (double e : s.final_error) reached.push_back(s.arrived && e <= 0.10);
  j["target_reached"] = reached;
  j["safety"] = {
      {"min_pairwise", observed(s.min_pairwise)},
      {"min_pairwise_ratio", observed(s.min_pairwise_ratio)},
      {"min_separated_ratio", observed(s.min_separated_ratio)},
      {"violations", s.safety_violations},
      {"min_obstacle_clearance", observed(s.min_obstacle_clearance)},
      {"obstacle_intrusions", s.obstacle_intrusions},
      {"saturation_violations", s.saturation_violations},
      {"force_mismatch", s.force_mismatch},
      {"non_finite", s.non_finite},
  };
  j["queue"] = {
      {"activations", s.queue_activations},
      {"deactivations", s.queue_deactivations},
      {"start", opt_json(s.queue_start)},
      {"formed", opt_json(s.queue_formed)},
      {"end", opt_json(s.queue_end)},
      {"trigger_distance", s.queue_trigger_distance},
      {"entries", s.per_robot_queue_entries},
      {"exits", s.per_robot_queue_exits},
  };
  j["sensing"] = {{"occlusion_events", s.occlusion_events}, {"lost_events", s.sensing_lost_events}};
  return j;
}

// ---------------------------------------------------------------------------
// Transfer-function text

namespace {

using Poly = std::vector<double>;  // ascending powers

Poly mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) out[i + k] += a[i] * b[k];
  return out;
}

Poly add(Poly a, const Poly& b, double sign) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += sign * b[i];
  return a;
}

class PolyParser {
 public:
  explicit PolyParser(std::string_view text) : s_(text) {}

  Poly parse() {
    Poly p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("transfer function: " + what + " at column " + std::to_string(pos_ + 1) + " in \"" +
                     std::string(s_) + "\"");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  Poly expr() {
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = s_[pos_++] == '-' ? -1.0 : 1.0;
    Poly acc = add({0.0}, term(), sign);
    while (peek() == '+' || peek() == '-') {
      const double sg = s_[pos_++] == '-' ? -1.0 : 1.0;
      acc = add(std::move(acc), term(), sg);
    }
    return acc;
  }

  static bool starts_primary(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 's' || c == '(';
  }

  Poly term() {
    Poly acc = power();
    for (;;) {
      const char c = peek();
      if (c == '*') {
        ++pos_;
        acc = mul(acc, power());
      } else if (starts_primary(c)) {
        acc = mul(acc, power());
      } else {
        return acc;
      }
    }
  }

  Poly power() {
    Poly base = primary();
    if (peek() != '^') return base;
    ++pos_;
    skip();
    int e = 0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), e);
    if (res.ec != std::errc() || e < 0 || e > 32) fail("expected a small non-negative integer exponent");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    Poly out{1.0};
    for (int i = 0; i < e; ++i) out = mul(out, base);
    return out;
  }

  Poly primary() {
    const char c = peek();
    if (c == 's') {
      ++pos_;
      return {0.0, 1.0};
    }
    if (c == '(') {
      ++pos_;
      Poly p = expr();
      if (peek() != ')') fail("missing ')'");
      ++pos_;
      return p;
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc()) fail(c == '\0' ? "unexpected end" : "expected a number, 's' or '('");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return {v};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

lti::Coeffs descending(Poly p) {
  while (p.size() > 1 && p.back() == 0.0) p.pop_back();
  return {p.rbegin(), p.rend()};
}

lti::Coeffs side(std::string_view text) {
  std::size_t b = 0;
  while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  if (b < text.size() && text[b] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::exception& e) {
      throw InputError(std::string("transfer function: bad coefficient list: ") + e.what());
    }
    if (!arr.is_array() || arr.empty()) throw InputError("transfer function: empty coefficient list");
    lti::Coeffs out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number(arr[i], "coefficient " + std::to_string(i)));
    while (out.size() > 1 && out.front() == 0.0) out.erase(out.begin());
    return out;
  }
  return descending(PolyParser(text).parse());
}

lti::RationalTF make_tf(lti::Coeffs num, lti::Coeffs den) {
  if (den.size() == 1 && den[0] == 0.0) throw InputError("transfer function: denominator is zero");
  try {
    return lti::RationalTF(std::move(num), std::move(den));
  } catch (const ModelError& e) {
    throw InputError(std::string("transfer function: ") + e.what());
  }
}

}  // namespace

lti::RationalTF parse_tf(const std::string& text) {
  std::size_t slash = std::string::npos;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == '/' && depth == 0) {
      if (slash != std::string::npos) throw InputError("transfer function: more than one top-level '/'");
      slash = i;
    }
    if (depth < 0) throw InputError("transfer function: unbalanced brackets");
  }
  if (depth != 0) throw InputError("transfer function: unbalanced brackets");
  if (slash == std::string::npos) return make_tf(side(text), {1.0});
  return make_tf(side(std::string_view(text).substr(0, slash)), side(std::string_view(text).substr(slash + 1)));
}

lti::RationalTF tf_from_json(const json& j) {
  Obj o(j, "model");
  lti::Coeffs num;
  lti::Coeffs den;
  const auto list = [](lti::Coeffs& dst) {
    return [&dst](const json& v, const std::string& w) {
      if (!v.is_array() || v.empty()) bad(w, "expected a non-empty list of numbers");
      dst.clear();
      for (std::size_t i = 0; i < v.size(); ++i) dst.push_back(number(v[i], w + "[" + std::to_string(i) + "]"));
    };
  };
  o.opt("num", list(num));
  o.opt("den", list(den));
  o.opt("name", [](const json& v, const std::string& w) { (void)string(v, w); });
  o.finish();
  if (num.empty() || den.empty()) throw InputError("model: needs \"num\" and \"den\"");
  while (den.size() > 1 && den.front() == 0.0) den.erase(den.begin());
  return make_tf(std::move(num), std::move(den));
}

}  // namespace ni_swarm::cli
