#include "ni_swarm_cli/app.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ni_swarm/engine.hpp"
#include "ni_swarm/error.hpp"
#include "ni_swarm/experiments.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/presets.hpp"
#include "ni_swarm_cli/config_json.hpp"

namespace ni_swarm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fnv1a_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::shared_ptr<spdlog::logger> logger() {
  static const auto log = [] {
    auto l = spdlog::stderr_logger_st("ni_swarm");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return log;
}

void configure_logging() {
  const char* env = std::getenv("NI_SWARM_LOG");
  if (env == nullptr || *env == '\0') return;
  static const std::map<std::string, spdlog::level::level_enum> kLevels{
      {"trace", spdlog::level::trace}, {"debug", spdlog::level::debug}, {"info", spdlog::level::info},
      {"warn", spdlog::level::warn},   {"warning", spdlog::level::warn}, {"error", spdlog::level::err},
      {"off", spdlog::level::off}};
  const auto it = kLevels.find(env);
  if (it == kLevels.end()) {
    logger()->warn("NI_SWARM_LOG={} not understood; using warn", env);
    return;
  }
  logger()->set_level(it->second);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// CSV writer that hashes everything it writes, header included.
class HashedCsvFile : public sim::TraceSink {
 public:
  explicit HashedCsvFile(const fs::path& path) : file_(path, std::ios::binary), csv_(buf_) {
    if (!file_) throw IoError("cannot write " + path.string());
  }
  void record(const sim::TraceRecord& r) override {
    csv_.record(r);
    if (buf_.tellp() > (1 << 20)) flush();
  }
  std::uint64_t finish() {
    flush();
    file_.close();
    if (!file_) throw IoError("write failed");
    return hash_;
  }

 private:
  void flush() {
    const std::string s = buf_.str();
    hash_ = fnv1a(hash_, s);
    file_.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!file_) throw IoError("write failed");
    buf_.str("");
    buf_.clear();
  }

  std::ofstream file_;
  std::ostringstream buf_;
  sim::CsvTraceSink csv_;
  std::uint64_t hash_ = kFnvOffset;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

json complex_list(const std::vector<lti::Complex>& zs) {
  json a = json::array();
  for (const auto& z : zs) a.push_back({{"re", z.real()}, {"im", z.imag()}});
  return a;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string preset;
  std::string tf;
  std::string file;
  std::string expect = "sni";
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  std::optional<lti::RationalTF> tf;
  std::string label;
  std::string expect = a.expect;
  if (!a.preset.empty()) {
    const auto p = presets::model_preset(a.preset);
    if (!p) throw InputError("unknown model preset '" + a.preset + "'");
    tf = p->tf;
    label = p->name;
    expect = p->expect_sni ? "sni" : p->expect_complement_sni ? "complement" : p->expect_ni_origin ? "ni" : "none";
  } else if (!a.tf.empty()) {
    tf = parse_tf(a.tf);
    label = a.tf;
  } else {
    tf = tf_from_json(read_json_file(a.file));
    label = a.file;
  }

  const auto sni = ni::is_sni(*tf);
  const auto nir = ni::is_ni(*tf);
  const auto dc = lti::dc_gain(*tf);
  bool match = true;
  if (expect == "sni") match = sni.is_sni;
  else if (expect == "complement") match = sni.sign_complement_sni;
  else if (expect == "ni") match = nir.origin_pole ? (nir.is_ni || nir.sign_complement_ni) : nir.is_ni;

  json j;
  j["schema"] = kCheckSchema;
  j["model"] = label;
  j["num"] = tf->num();
  j["den"] = tf->den();
  j["dc_gain"] = opt_json(dc);
  j["poles"] = complex_list(lti::poles(*tf));
  j["sni"] = {{"is_sni", sni.is_sni},
              {"poles_stable", sni.poles_stable},
              {"margin", sni.margin},
              {"worst_omega", sni.worst_omega},
              {"reason", std::string(ni::to_string(sni.reason))},
              {"sign_complement_sni", sni.sign_complement_sni},
              {"complement_margin", sni.complement_margin}};
  j["ni"] = {{"is_ni", nir.is_ni},
             {"origin_pole", nir.origin_pole},
             {"min_margin", nir.min_margin},
             {"worst_omega", nir.worst_omega},
             {"reason", std::string(ni::to_string(nir.reason))},
             {"sign_complement_ni", nir.sign_complement_ni}};
  j["expected"] = expect;
  j["match"] = match;
  out << j.dump(2) << '\n';
  if (!match) logger()->warn("{}: classification does not match expectation '{}'", label, expect);
  return match ? kExitOk : kExitMismatch;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> duration;
  bool strict = false;
  bool dump_config = false;
  std::string output_dir = ".";
};

sim::ScenarioConfig resolve_scenario(const std::string& what) {
  if (fs::exists(what)) return scenario_from_json(read_json_file(what));
  if (auto p = presets::scenario_preset(what)) return *p;
  if (what.find('/') != std::string::npos || what.ends_with(".json")) throw IoError("cannot open " + what);
  throw InputError("'" + what + "' is neither a config file nor a scenario preset");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::ScenarioConfig cfg = resolve_scenario(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.dt) cfg.dt = *a.dt;
  if (a.duration) cfg.duration = *a.duration;
  try {
    sim::validate(cfg);
  } catch (const ModelError& e) {
    throw InputError(e.what());
  }
  if (a.dump_config) {
    out << to_json(cfg).dump(2) << '\n';
    return kExitOk;
  }

  const fs::path dir(a.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  logger()->info("simulating {} (seed {}, dt {}, {} s)", cfg.name, cfg.seed, cfg.dt, cfg.duration);
  HashedCsvFile trace(dir / "trace.csv");
  const sim::Summary s = sim::run_scenario(cfg, &trace);
  const std::uint64_t h = trace.finish();

  json j = to_json(s);
  j["trace_file"] = "trace.csv";
  j["trace_fnv1a"] = fnv1a_hex(h);
  const int problems = s.safety_violations + s.obstacle_intrusions + s.non_finite + s.force_mismatch +
                       s.saturation_violations;
  j["clean"] = problems == 0;
  write_text(dir / "summary.json", j.dump(2) + "\n");
  out << j.dump(2) << '\n';
  logger()->info("wrote {} and {}", (dir / "trace.csv").string(), (dir / "summary.json").string());
  if (a.strict && problems > 0) {
    logger()->error("{} safety-invariant violation(s)", problems);
    return kExitMismatch;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::vector<std::string> controllers;
  std::string scenario = "step";
  bool as_json = false;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  std::vector<sim::CompareRow> rows;
  for (const auto& c : a.controllers) {
    try {
      const auto r = sim::compare(a.scenario, c);
      rows.insert(rows.end(), r.begin(), r.end());
    } catch (const ModelError& e) {
      throw InputError(e.what());
    }
  }
  if (a.as_json) {
    json j;
    j["schema"] = kCompareSchema;
    j["scenario"] = a.scenario;
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"controller", r.controller},
                     {"axis", r.axis},
                     {"po", r.po},
                     {"rmse", r.rmse},
                     {"time_to_reference", opt_json(r.time_to_reference)}});
    }
    j["rows"] = arr;
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  const char* time_label = a.scenario == "hover" ? "recovery_s" : "t_ref_s";
  out << "# " << kCompareSchema << " scenario=" << a.scenario << '\n';
  out << std::left << std::setw(12) << "controller" << std::setw(6) << "axis" << std::right << std::setw(10) << "po_pct"
      << std::setw(12) << "rmse" << std::setw(12) << time_label << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.controller << std::setw(6) << r.axis << std::right << std::fixed
        << std::setprecision(2) << std::setw(10) << r.po << std::setprecision(5) << std::setw(12) << r.rmse;
    if (r.time_to_reference) out << std::setprecision(2) << std::setw(12) << *r.time_to_reference;
    else out << std::setw(12) << "-";
    out << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double field(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("trace line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

int cmd_metrics(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != std::string("# ") + sim::kTraceSchema) throw InputError(path + ": not a " + sim::kTraceSchema + " trace");
  std::getline(in, line);
  if (line != sim::CsvTraceSink::header()) throw InputError(path + ": unexpected column header");
  const auto columns = split(sim::CsvTraceSink::header()).size();

  struct Acc {
    double sq = 0.0;
    double max_err = 0.0;
    double final_err = 0.0;
    Vec2 final_pos;
    std::int64_t rows = 0;
    std::int64_t queue_rows = 0;
  };
  std::vector<Acc> robots;
  std::uint64_t h = fnv1a(kFnvOffset, std::string("# ") + sim::kTraceSchema + "\n" + sim::CsvTraceSink::header() + "\n");
  std::int64_t current_tick = -1;
  std::int64_t ticks = 0;
  double last_time = 0.0;
  double min_pair = std::numeric_limits<double>::infinity();
  std::int64_t overlap_rows = 0;
  std::vector<Vec2> tick_pos;
  auto close_tick = [&] {
    for (std::size_t i = 0; i < tick_pos.size(); ++i)
      for (std::size_t k = i + 1; k < tick_pos.size(); ++k) min_pair = std::min(min_pair, distance(tick_pos[i], tick_pos[k]));
    tick_pos.clear();
  };

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    h = fnv1a(h, line);
    h = fnv1a(h, "\n");
    const auto f = split(line);
    if (f.size() != columns) throw InputError("trace line " + std::to_string(line_no) + ": wrong column count");
    const auto tick = static_cast<std::int64_t>(field(f[0], line_no));
    const auto robot = static_cast<std::size_t>(field(f[2], line_no));
    if (tick != current_tick) {
      close_tick();
      current_tick = tick;
      ++ticks;
    }
    last_time = field(f[1], line_no);
    if (robot >= robots.size()) robots.resize(robot + 1);
    const Vec2 pos{field(f[3], line_no), field(f[4], line_no)};
    const Vec2 target{field(f[12], line_no), field(f[13], line_no)};
    const double e = distance(pos, target);
    Acc& a = robots[robot];
    a.sq += e * e;
    a.max_err = std::max(a.max_err, e);
    a.final_err = e;
    a.final_pos = pos;
    ++a.rows;
    if (f[9] == "queue") ++a.queue_rows;
    if (field(f[14], line_no) > 0.0) ++overlap_rows;
    tick_pos.push_back(pos);
  }
  close_tick();
  if (ticks == 0) throw InputError(path + ": trace has no rows");

  json j;
  j["schema"] = kMetricsSchema;
  j["trace"] = path;
  j["trace_fnv1a"] = fnv1a_hex(h);
  j["records"] = ticks;
  j["end_time"] = last_time;
  j["min_pairwise"] = std::isfinite(min_pair) ? json(min_pair) : json(nullptr);
  j["overlap_rows"] = overlap_rows;
  json arr = json::array();
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const Acc& a = robots[i];
    arr.push_back({{"robot", i},
                   {"tracking_rmse", a.rows ? std::sqrt(a.sq / static_cast<double>(a.rows)) : 0.0},
                   {"max_tracking_error", a.max_err},
                   {"final_tracking_error", a.final_err},
                   {"final_position", {a.final_pos.x, a.final_pos.y}},
                   {"queue_fraction", a.rows ? static_cast<double>(a.queue_rows) / static_cast<double>(a.rows) : 0.0}});
  }
  j["robots"] = arr;
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Negative-imaginary formation control toolkit", "ni_swarm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ni_swarm 0.1.0");

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Classify a transfer function (SNI / NI), report DC gain and poles");
  auto* o_preset = c->add_option("--preset", check.preset, "Model preset name");
  auto* o_tf = c->add_option("--tf", check.tf, "Transfer function text, e.g. \"1/(s+1)\"");
  auto* o_file = c->add_option("--file", check.file, "JSON file with num/den coefficient lists");
  o_preset->excludes(o_tf)->excludes(o_file);
  o_tf->excludes(o_file);
  c->add_option("--expect", check.expect, "Expected class for --tf/--file input")
      ->check(CLI::IsMember({"sni", "complement", "ni", "none"}));

  SimulateArgs sima;
  auto* s = app.add_subcommand("simulate", "Run a scenario; writes trace.csv and summary.json");
  s->add_option("config", sima.config, "Config file or scenario preset name")->required();
  s->add_option("--seed", sima.seed, "Override the seed");
  s->add_option("--dt", sima.dt, "Override the step size (s)");
  s->add_option("--duration", sima.duration, "Override the simulated time (s)");
  s->add_flag("--strict", sima.strict, "Exit 1 on any safety-invariant violation");
  s->add_flag("--dump-config", sima.dump_config, "Print the resolved config and exit");
  s->add_option("--output-dir", sima.output_dir, "Directory for trace.csv and summary.json");

  CompareArgs cmp;
  auto* k = app.add_subcommand("compare", "Run the same single-axis experiment under two controllers");
  k->add_option("controllers", cmp.controllers, "Two controller names (sni, pidf, sni-exp, pi-exp, ...)")
      ->required()
      ->expected(2);
  k->add_option("--scenario", cmp.scenario, "step, hover or circle")->check(CLI::IsMember({"step", "hover", "circle"}));
  k->add_flag("--json", cmp.as_json, "JSON instead of a table");

  std::string trace_path;
  auto* m = app.add_subcommand("metrics", "Summarize a trace.csv");
  m->add_option("trace", trace_path, "Trace file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }
  if (c->parsed() && check.preset.empty() && check.tf.empty() && check.file.empty()) {
    err << "check: one of --preset, --tf, --file is required\n";
    return kExitInput;
  }

  try {
    if (c->parsed()) return cmd_check(check, out);
    if (s->parsed()) return cmd_simulate(sima, out);
    if (k->parsed()) return cmd_compare(cmp, out);
    if (m->parsed()) return cmd_metrics(trace_path, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitInput;
}

}  // namespace ni_swarm::cli
