#include "rotator/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rotator/analytic.hpp"
#include "rotator/mechanics.hpp"
#include "rotator/numdiff.hpp"

namespace rotator::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using dynamics::GaugeFrequency;
using dynamics::GaugeKind;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ValidationError, path + ": " + message);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& object_at(const json& parent, const std::string& key, const std::string& path) {
  const std::string where = join(path, key);
  if (!parent.contains(key)) invalid(where, "missing");
  const json& obj = parent.at(key);
  if (!obj.is_object()) invalid(where, "expected an object");
  return obj;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) invalid(join(path, item.key()), "unknown key");
  }
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) invalid(where, "missing");
  const json& value = obj.at(key);
  if (!value.is_number()) invalid(where, "expected a number");
  const double out = value.get<double>();
  if (!std::isfinite(out)) invalid(where, "must be finite");
  return out;
}

double number_or(const json& obj, const std::string& key, const std::string& path,
                 double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

int positive_int_or(const json& obj, const std::string& key, const std::string& path,
                    int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& value = obj.at(key);
  const std::string where = join(path, key);
  if (!value.is_number_integer()) invalid(where, "expected an integer");
  const auto raw = value.get<long long>();
  if (raw < 1 || raw > std::numeric_limits<int>::max()) invalid(where, "must be >= 1");
  return static_cast<int>(raw);
}

std::string text(const json& obj, const std::string& key, const std::string& path) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) invalid(where, "missing");
  const json& value = obj.at(key);
  if (!value.is_string()) invalid(where, "expected a string");
  return value.get<std::string>();
}

Vec3 vec3(const json& obj, const std::string& key, const std::string& path) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) invalid(where, "missing");
  const json& value = obj.at(key);
  if (!value.is_array() || value.size() != 3) invalid(where, "expected an array of 3 numbers");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!value[i].is_number()) invalid(where, "expected an array of 3 numbers");
    out[i] = value[i].get<double>();
    if (!std::isfinite(out[i])) invalid(where, "must be finite");
  }
  return out;
}

Vec3 vec3_or_zero(const json& obj, const std::string& key, const std::string& path) {
  return obj.contains(key) ? vec3(obj, key, path) : Vec3::Zero();
}

// Error of the raw initial direction below which the input is kept bit for
// bit, so that parsing a serialized config reproduces it exactly.
constexpr double kExactSphere = 1e-15;
// Slack for decimal inputs sitting on the 1e-6 boundary.
constexpr double kNormalizationTolerance = 1e-6 + 1e-12;

RotatorState parse_initial(const json& root) {
  const json& init = object_at(root, "initial", "");
  check_keys(init, "initial", {"x", "v", "n", "ndot"});
  const Vec3 x = vec3_or_zero(init, "x", "initial");
  const Vec3 v = vec3_or_zero(init, "v", "initial");
  const Vec3 n = vec3(init, "n", "initial");
  const Vec3 ndot = vec3(init, "ndot", "initial");
  const double norm_error = std::abs(n.norm() - 1.0);
  const double tangency = std::abs(n.dot(ndot)) / std::max(1.0, ndot.norm());
  try {
    if (norm_error <= kExactSphere && tangency <= kExactSphere) {
      return RotatorState{0.0, x, v, n, ndot};
    }
    return RotatorState::normalized(0.0, x, v, n, ndot, kNormalizationTolerance);
  } catch (const Error& e) {
    invalid("initial.n", e.what());
  }
}

FieldConfig parse_field(const json& root, double c) {
  const json& f = object_at(root, "field", "");
  const std::string kind = text(f, "kind", "field");
  FieldConfig out;
  if (kind == "none") {
    check_keys(f, "field", {"kind"});
  } else if (kind == "uniform_e") {
    check_keys(f, "field", {"kind", "E0"});
    out = FieldConfig::uniform_e(vec3(f, "E0", "field"));
  } else if (kind == "uniform_h") {
    check_keys(f, "field", {"kind", "H0"});
    out = FieldConfig::uniform_h(vec3(f, "H0", "field"));
  } else if (kind == "plane_wave") {
    check_keys(f, "field", {"kind", "E0", "k", "phase"});
    try {
      out = FieldConfig::plane_wave(vec3(f, "E0", "field"), vec3(f, "k", "field"),
                                    number_or(f, "phase", "field", 0.0), c);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ValidationError) throw;
      invalid("field", e.what());
    }
  } else {
    invalid("field.kind", "unknown field kind '" + kind + "'");
  }
  out.c = c;
  return out;
}

GaugeFrequency parse_gauge(const json& g) {
  check_keys(g, "gauge", {"kind", "omega0", "amp", "freq", "samples"});
  const std::string kind = text(g, "kind", "gauge");
  if (kind == "constant") {
    return GaugeFrequency::constant(number(g, "omega0", "gauge"));
  }
  if (kind == "sinusoidal") {
    return GaugeFrequency::sinusoidal(number(g, "omega0", "gauge"), number(g, "amp", "gauge"),
                                      number(g, "freq", "gauge"));
  }
  if (kind == "table") {
    if (!g.contains("samples") || !g.at("samples").is_array()) {
      invalid("gauge.samples", "expected an array of [t, omega] pairs");
    }
    std::vector<std::pair<double, double>> samples;
    for (const json& row : g.at("samples")) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
        invalid("gauge.samples", "expected an array of [t, omega] pairs");
      }
      samples.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return GaugeFrequency::table(std::move(samples));
  }
  invalid("gauge.kind", "unknown gauge kind '" + kind + "'");
}

}  // namespace

ScenarioConfig parse_config(const std::string& input) {
  json root;
  try {
    root = json::parse(input);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    const auto pos = msg.find("] ");
    if (pos != std::string::npos) msg = msg.substr(pos + 2);
    throw Error(ErrorCode::ParseError, msg);
  }
  if (!root.is_object()) invalid("$", "document must be a JSON object");
  check_keys(root, "", {"params", "initial", "field", "gauge", "integrator", "output"});

  ScenarioConfig cfg;
  const json& p = object_at(root, "params", "");
  check_keys(p, "params", {"m", "ell", "c", "a1", "a2", "charge"});
  try {
    cfg.params = RotatorParams::make(number(p, "m", "params"), number(p, "ell", "params"),
                                     number(p, "c", "params"), number(p, "a1", "params"),
                                     number(p, "a2", "params"),
                                     number_or(p, "charge", "params", 0.0));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError) throw;
    invalid("params", e.what());
  }

  cfg.initial = parse_initial(root);
  cfg.field = parse_field(root, cfg.params.c);

  const bool degenerate = is_degenerate(cfg.params);
  if (root.contains("gauge")) {
    if (!degenerate) invalid("gauge", "only allowed for a2 = a1^2");
    cfg.gauge = parse_gauge(object_at(root, "gauge", ""));
  } else if (degenerate) {
    invalid("gauge", "required for a2 = a1^2");
  }

  if (root.contains("integrator")) {
    const json& in = object_at(root, "integrator", "");
    check_keys(in, "integrator", {"dt", "t_end", "method", "renorm_every"});
    cfg.integrator.dt = number_or(in, "dt", "integrator", cfg.integrator.dt);
    cfg.integrator.t_end = number_or(in, "t_end", "integrator", cfg.integrator.t_end);
    if (in.contains("method") && text(in, "method", "integrator") != "rk4") {
      invalid("integrator.method", "only 'rk4' is supported");
    }
    cfg.integrator.renorm_every =
        positive_int_or(in, "renorm_every", "integrator", cfg.integrator.renorm_every);
  }
  try {
    cfg.integrator.validate(cfg.initial.t);
    if (cfg.gauge) cfg.gauge->validate(cfg.initial.t, cfg.integrator.t_end);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError) throw;
    invalid(cfg.gauge ? "integrator|gauge" : "integrator", e.what());
  }

  if (root.contains("output")) {
    const json& o = object_at(root, "output", "");
    check_keys(o, "output", {"path", "every", "format"});
    if (o.contains("format")) {
      const std::string fmt = text(o, "format", "output");
      if (fmt == "csv") {
        cfg.output.format = OutputFormat::Csv;
      } else if (fmt == "json") {
        cfg.output.format = OutputFormat::Json;
      } else {
        invalid("output.format", "expected 'csv' or 'json'");
      }
    }
    cfg.output.every = positive_int_or(o, "every", "output", 1);
    if (o.contains("path")) {
      cfg.output.path = text(o, "path", "output");
      if (cfg.output.path.empty()) invalid("output.path", "must not be empty");
    } else if (cfg.output.format == OutputFormat::Json) {
      cfg.output.path = "trajectory.json";
    }
  }
  return cfg;
}

namespace {

ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string serialize_config(const ScenarioConfig& cfg) {
  ojson root;
  root["params"] = {{"m", cfg.params.m},   {"ell", cfg.params.ell}, {"c", cfg.params.c},
                    {"a1", cfg.params.a1}, {"a2", cfg.params.a2},   {"charge", cfg.params.charge}};
  root["initial"] = {{"x", vec_json(cfg.initial.x)},
                     {"v", vec_json(cfg.initial.v)},
                     {"n", vec_json(cfg.initial.n)},
                     {"ndot", vec_json(cfg.initial.ndot)}};
  ojson field;
  field["kind"] = field_kind_name(cfg.field.kind);
  switch (cfg.field.kind) {
    case FieldKind::None: break;
    case FieldKind::UniformE: field["E0"] = vec_json(cfg.field.E0); break;
    case FieldKind::UniformH: field["H0"] = vec_json(cfg.field.H0); break;
    case FieldKind::PlaneWave:
      field["E0"] = vec_json(cfg.field.E0);
      field["k"] = vec_json(cfg.field.wave_k);
      field["phase"] = cfg.field.wave_phase;
      break;
  }
  root["field"] = field;
  if (cfg.gauge) {
    ojson g;
    g["kind"] = dynamics::gauge_kind_name(cfg.gauge->kind);
    switch (cfg.gauge->kind) {
      case GaugeKind::Constant: g["omega0"] = cfg.gauge->omega0; break;
      case GaugeKind::Sinusoidal:
        g["omega0"] = cfg.gauge->omega0;
        g["amp"] = cfg.gauge->amp;
        g["freq"] = cfg.gauge->freq;
        break;
      case GaugeKind::Table: {
        ojson rows = ojson::array();
        for (const auto& [t, w] : cfg.gauge->samples) rows.push_back(ojson::array({t, w}));
        g["samples"] = rows;
        break;
      }
    }
    root["gauge"] = g;
  }
  root["integrator"] = {{"dt", cfg.integrator.dt},
                        {"t_end", cfg.integrator.t_end},
                        {"method", "rk4"},
                        {"renorm_every", cfg.integrator.renorm_every}};
  root["output"] = {{"path", cfg.output.path},
                    {"every", cfg.output.every},
                    {"format", cfg.output.format == OutputFormat::Csv ? "csv" : "json"}};
  return root.dump(2) + "\n";
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::array<double, 17> record_fields(const dynamics::TrajectorySample& s) {
  const RotatorState& st = s.state;
  const dynamics::Diagnostics& d = s.diag;
  return {st.t,       st.x.x(),      st.x.y(),      st.x.z(),  st.v.x(),
          st.v.y(),   st.v.z(),      st.n.x(),      st.n.y(),  st.n.z(),
          d.omega,    d.energy,      d.p.x(),       d.p.y(),   d.p.z(),
          d.det_hessian, d.lorentz_residual};
}

const std::array<const char*, 17> kFieldNames{
    "t",  "x",  "y",     "z",      "vx", "vy", "vz", "nx",          "ny",
    "nz", "omega", "energy", "px", "py", "pz", "det_hessian", "lorentz_residual"};

}  // namespace

void emit_trajectory(const dynamics::Trajectory& traj, std::ostream& out, OutputFormat format,
                     int every) {
  if (every < 1) throw Error(ErrorCode::InvalidArgument, "every must be >= 1");
  const auto stride = static_cast<std::size_t>(every);
  if (format == OutputFormat::Csv) {
    out << kCsvHeader << '\n';
    for (std::size_t i = 0; i < traj.samples.size(); i += stride) {
      const auto f = record_fields(traj.samples[i]);
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (k) out << ',';
        out << format_double(f[k]);
      }
      out << '\n';
    }
    return;
  }
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < traj.samples.size(); i += stride) {
    const auto f = record_fields(traj.samples[i]);
    ojson row;
    for (std::size_t k = 0; k < f.size(); ++k) row[kFieldNames[k]] = f[k];
    rows.push_back(std::move(row));
  }
  out << rows.dump(1) << '\n';
}

void emit_trajectory(const dynamics::Trajectory& traj, const fs::path& path, OutputFormat format,
                     int every) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  emit_trajectory(traj, out, format, every);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

double parse_number(std::string_view token, std::size_t line) {
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

TrajectoryRecord to_record(const std::array<double, 17>& f) {
  TrajectoryRecord r;
  r.t = f[0];
  r.x = Vec3(f[1], f[2], f[3]);
  r.v = Vec3(f[4], f[5], f[6]);
  r.n = Vec3(f[7], f[8], f[9]);
  r.omega = f[10];
  r.energy = f[11];
  r.p = Vec3(f[12], f[13], f[14]);
  r.det_hessian = f[15];
  r.lorentz_residual = f[16];
  return r;
}

}  // namespace

std::vector<TrajectoryRecord> read_trajectory(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open trajectory " + path.string());
  std::vector<TrajectoryRecord> out;
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::ParseError, "trajectory JSON must be an array");
    for (const json& row : doc) {
      std::array<double, 17> f{};
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (!row.contains(kFieldNames[k]) || !row.at(kFieldNames[k]).is_number()) {
          throw Error(ErrorCode::ParseError, std::string("missing field ") + kFieldNames[k]);
        }
        f[k] = row.at(kFieldNames[k]).get<double>();
      }
      out.push_back(to_record(f));
    }
    return out;
  }
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw Error(ErrorCode::ParseError, "unexpected CSV header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 17> f{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const std::size_t comma = line.find(',', start);
      const bool last = k + 1 == f.size();
      if (last != (comma == std::string::npos)) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(lineno) + ": expected 17 columns");
      }
      const std::size_t end = last ? line.size() : comma;
      f[k] = parse_number(std::string_view(line).substr(start, end - start), lineno);
      start = end + 1;
    }
    out.push_back(to_record(f));
  }
  return out;
}

namespace {

struct ConditionRange {
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
  bool singular = false;
};

ConditionRange condition_range(const RotatorParams& params, const dynamics::Trajectory& traj) {
  ConditionRange out;
  for (const auto& s : traj.samples) {
    const Mat5 h = mechanics::hessian_matrix_closed(params, to_chart(s.state));
    const Eigen::JacobiSVD<Mat5> svd(h);
    const Vec5 sv = svd.singularValues();
    const double cond = sv[4] <= 1e-14 * sv[0] ? std::numeric_limits<double>::infinity()
                                               : sv[0] / sv[4];
    if (!std::isfinite(cond)) out.singular = true;
    out.min = std::min(out.min, cond);
    out.max = std::max(out.max, cond);
  }
  return out;
}

ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson summary_json(const ScenarioConfig& cfg, const dynamics::Trajectory& traj) {
  const auto& first = traj.samples.front();
  const auto& last = traj.samples.back();
  double dp = 0.0;
  double de = 0.0;
  double dw = 0.0;
  double lorentz = 0.0;
  for (const auto& s : traj.samples) {
    dp = std::max(dp, (s.diag.p - first.diag.p).norm());
    de = std::max(de, std::abs(s.diag.energy - first.diag.energy));
    dw = std::max(dw, std::abs(s.diag.omega - first.diag.omega));
    lorentz = std::max(lorentz, std::abs(s.diag.lorentz_residual));
  }
  const ConditionRange cond = condition_range(cfg.params, traj);
  ojson out;
  out["classification"] = {{"degenerate", is_degenerate(cfg.params)},
                           {"defect", cfg.params.defect()},
                           {"regime", dynamics::regime_name(traj.regime)}};
  out["samples"] = traj.samples.size();
  out["final_state"] = {{"t", last.state.t},
                        {"x", vec_json(last.state.x)},
                        {"v", vec_json(last.state.v)},
                        {"n", vec_json(last.state.n)},
                        {"ndot", vec_json(last.state.ndot)}};
  out["drift"] = {{"p", dp}, {"energy", de}, {"omega", dw}};
  out["max_lorentz_residual"] = lorentz;
  out["hessian_condition"] = {{"min", finite_or_null(cond.min)},
                              {"max", finite_or_null(cond.max)},
                              {"singular", cond.singular}};
  out["max_sphere_drift"] = traj.max_sphere_drift;
  out["gauge_fallback_steps"] = traj.gauge_fallback_steps;
  return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const fs::path& base_dir) {
  RunResult res;
  spdlog::info("integrating to t = {} with dt = {}", cfg.integrator.t_end, cfg.integrator.dt);
  res.trajectory =
      dynamics::integrate(cfg.params, cfg.initial, cfg.field, cfg.integrator, cfg.gauge);
  spdlog::debug("regime {}, {} samples", dynamics::regime_name(res.trajectory.regime),
                res.trajectory.samples.size());
  res.trajectory_path = resolve(base_dir, cfg.output.path);
  emit_trajectory(res.trajectory, res.trajectory_path, cfg.output.format, cfg.output.every);
  res.summary_path = res.trajectory_path;
  res.summary_path += ".summary.json";
  std::ofstream out(res.summary_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + res.summary_path.string());
  out << summary_json(cfg, res.trajectory).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + res.summary_path.string());
  spdlog::info("wrote {}", res.trajectory_path.string());
  return res;
}

ScenarioConfig example_scenario(int which) {
  ScenarioConfig cfg;
  cfg.integrator.dt = 1e-3;
  cfg.output.every = 10;
  if (which == 1) {
    cfg.params = RotatorParams::make(1.0, 0.1, 1.0, -1.0, 1.0, 1.0);
    cfg.field = FieldConfig::uniform_e(Vec3(0.0, 0.0, 0.01));
    cfg.initial = RotatorState::make(0.0, Vec3::Zero(), Vec3(0.01, 0.0, 0.0), Vec3::UnitX(),
                                     Vec3(0.0, 0.5, 0.0));
    cfg.gauge = GaugeFrequency::sinusoidal(0.5, 0.3, 1.0);
    cfg.integrator.t_end = 10.0;
    cfg.output.path = "example1.csv";
    return cfg;
  }
  if (which == 2) {
    cfg.params = RotatorParams::make(1.0, 0.1, 1.0, -1.0, 1.0, -1.0);
    const Vec3 H0(0.0, 0.0, 0.1);
    cfg.field = FieldConfig::uniform_h(H0);
    const double omega_L = analytic::larmor_frequency(cfg.params, H0);
    const double omega = analytic::example2_planar_frequencies(cfg.params, 1.0, omega_L).first.omega;
    cfg.initial = analytic::planar_corotating(cfg.params, 1.0, omega, H0).state(0.0);
    cfg.gauge = GaugeFrequency::constant(omega);
    cfg.integrator.t_end = 60.0;
    cfg.output.path = "example2.csv";
    return cfg;
  }
  throw Error(ErrorCode::InvalidArgument, "--which must be 1 or 2");
}

namespace {

std::once_flag g_logger_once;

void configure_logging() {
  std::call_once(g_logger_once, [] {
    auto logger = spdlog::stderr_color_mt("rotator");
    spdlog::set_default_logger(logger);
  });
  const char* env = std::getenv("ROTATOR_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "ROTATOR_LOG must be one of error, warn, info, debug (got '" + level + "')");
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// Rebuilds states from a stored trajectory; ndot comes from differencing n
// and is rescaled to the recorded |ndot|.
std::vector<RotatorState> states_from_records(const std::vector<TrajectoryRecord>& rows) {
  const std::size_t n = rows.size();
  if (n < 5) throw Error(ErrorCode::InvalidArgument, "need at least 5 trajectory rows");
  std::vector<RotatorState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d;
    if (i >= 2 && i + 2 < n) {
      const double h = rows[i + 1].t - rows[i].t;
      d = (rows[i - 2].n - 8.0 * rows[i - 1].n + 8.0 * rows[i + 1].n - rows[i + 2].n) / (12.0 * h);
    } else if (i < 2) {
      const double h = rows[i + 1].t - rows[i].t;
      d = (-3.0 * rows[i].n + 4.0 * rows[i + 1].n - rows[i + 2].n) / (2.0 * h);
    } else {
      const double h = rows[i].t - rows[i - 1].t;
      d = (3.0 * rows[i].n - 4.0 * rows[i - 1].n + rows[i - 2].n) / (2.0 * h);
    }
    const Vec3 unit = rows[i].n.normalized();
    d -= unit.dot(d) * unit;
    if (d.norm() > 0.0) d *= rows[i].omega / d.norm();
    out[i] = RotatorState{rows[i].t, rows[i].x, rows[i].v, unit, d};
  }
  return out;
}

ojson analyze(const ScenarioConfig& cfg, const fs::path& trajectory, std::size_t stride) {
  const auto rows = read_trajectory(trajectory);
  const auto states = states_from_records(rows);
  auto opts = dynamics::verify_options_for(cfg.params, cfg.field);
  opts.stride = stride;
  const auto report = dynamics::verify_solution(cfg.params, states, cfg.field, opts);
  ojson out;
  out["rows"] = rows.size();
  out["evaluated"] = report.evaluated;
  out["max_residual"] = report.max;
  out["worst_time"] = report.worst_time;
  out["max_abs"] = ojson::array();
  for (int i = 0; i < 5; ++i) out["max_abs"].push_back(report.max_abs[i]);
  return out;
}

ojson inspect(const ScenarioConfig& cfg) {
  const ChartState chart = to_chart(cfg.initial);
  const Mat5 closed = mechanics::hessian_matrix_closed(cfg.params, chart);
  const Mat5 numeric = numdiff::hessian_velocity(mechanics::chart_lagrangian(cfg.params, cfg.field),
                                                 chart, numdiff::DiffSettings::precise());
  const Eigen::SelfAdjointEigenSolver<Mat5> eig(closed);
  const auto kernel = mechanics::nullifying_kernel(cfg.params, chart);
  ojson out;
  out["degenerate"] = is_degenerate(cfg.params);
  out["det_hessian_closed"] = mechanics::hessian_determinant_closed(cfg.params, chart);
  out["det_hessian_numeric"] = numeric.determinant();
  out["eigenvalues"] = ojson::array();
  for (int i = 0; i < 5; ++i) out["eigenvalues"].push_back(eig.eigenvalues()[i]);
  out["kernel_rank"] = 5 - static_cast<int>(kernel.vectors.size());
  out["kernel"] = ojson::array();
  for (const Vec5& v : kernel.vectors) {
    ojson row = ojson::array();
    for (int i = 0; i < 5; ++i) row.push_back(v[i]);
    out["kernel"].push_back(row);
  }
  const Vec5 eta = mechanics::nullifying_direction(cfg.params, chart);
  out["nullifying_direction"] = ojson::array();
  for (int i = 0; i < 5; ++i) out["nullifying_direction"].push_back(eta[i]);
  out["lorentz_residual"] = mechanics::lorentz_constraint_residual(cfg.initial, cfg.field);
  return out;
}

int run_batch(const fs::path& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "batch directory " + dir.string() + " not found");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename().string().find(".summary.") == std::string::npos) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  // Parse everything first so clashing outputs are caught before any run.
  std::vector<std::optional<ScenarioConfig>> configs(files.size());
  std::vector<std::string> messages(files.size());
  std::map<fs::path, fs::path> owners;
  int failures = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      configs[i] = load_config(files[i]);
      const fs::path target =
          fs::weakly_canonical(resolve(files[i].parent_path(), configs[i]->output.path));
      const auto [it, fresh] = owners.emplace(target, files[i]);
      if (!fresh) {
        configs[i].reset();
        throw Error(ErrorCode::ValidationError, "output.path: " + target.string() +
                                                    " already used by " + it->second.string());
      }
    } catch (const Error& e) {
      messages[i] = "error:" + std::string(code_name(e.code())) + ": " + files[i].string() +
                    ": " + one_line(e.what());
      ++failures;
    }
  }

  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t next = 0;
  std::vector<std::future<std::string>> running;
  auto launch = [&](std::size_t i) {
    return std::async(std::launch::async, [&, i]() -> std::string {
      try {
        const RunResult r = run_scenario(*configs[i], files[i].parent_path());
        return "ok " + files[i].string() + " -> " + r.trajectory_path.string();
      } catch (const Error& e) {
        return "error:" + std::string(code_name(e.code())) + ": " + files[i].string() + ": " +
               one_line(e.what());
      }
    });
  };
  std::vector<std::pair<std::size_t, std::future<std::string>>> jobs;
  while (next < files.size() || !jobs.empty()) {
    while (next < files.size() && jobs.size() < workers) {
      if (configs[next]) jobs.emplace_back(next, launch(next));
      ++next;
    }
    if (jobs.empty()) continue;
    messages[jobs.front().first] = jobs.front().second.get();
    if (messages[jobs.front().first].rfind("error:", 0) == 0) ++failures;
    jobs.erase(jobs.begin());
  }
  for (const auto& m : messages) {
    if (m.rfind("error:", 0) == 0) {
      err << m << '\n';
    } else {
      out << m << '\n';
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis of non-relativistic rotators", "rotator"};
  std::string batch_dir;
  app.add_option("--batch", batch_dir, "Run every scenario *.json in a directory concurrently");

  auto* simulate = app.add_subcommand("simulate", "Integrate a scenario");
  std::string sim_config;
  std::string sim_out;
  simulate->add_option("--config", sim_config, "Scenario JSON")->required();
  simulate->add_option("--out", sim_out, "Trajectory output path (overrides output.path)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Substitute a stored trajectory");
  std::string an_traj;
  std::string an_config;
  std::size_t an_stride = 1;
  analyze_cmd->add_option("--trajectory", an_traj, "Trajectory CSV or JSON")->required();
  analyze_cmd->add_option("--config", an_config, "Scenario JSON")->required();
  analyze_cmd->add_option("--stride", an_stride, "Evaluate every k-th row")
      ->check(CLI::PositiveNumber);

  auto* inspect_cmd = app.add_subcommand("inspect", "Hessian data at the initial state");
  std::string in_config;
  inspect_cmd->add_option("--config", in_config, "Scenario JSON")->required();

  auto* examples = app.add_subcommand("examples", "Write and run a built-in scenario");
  int which = 0;
  std::string ex_out;
  examples->add_option("--which", which, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  examples->add_option("--out", ex_out, "Output directory")->required();

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error:" << code_name(ErrorCode::InvalidArgument) << ": " << one_line(e.what())
        << '\n';
    return 2;
  }

  try {
    configure_logging();
    if (!batch_dir.empty()) {
      if (app.get_subcommands().size() > 0) {
        throw Error(ErrorCode::InvalidArgument, "--batch cannot be combined with a subcommand");
      }
      return run_batch(batch_dir, out, err);
    }
    if (simulate->parsed()) {
      ScenarioConfig cfg = load_config(sim_config);
      fs::path base = fs::path(sim_config).parent_path();
      if (!sim_out.empty()) {
        cfg.output.path = sim_out;
        base.clear();
      }
      const RunResult r = run_scenario(cfg, base);
      out << r.trajectory_path.string() << '\n' << r.summary_path.string() << '\n';
      return 0;
    }
    if (analyze_cmd->parsed()) {
      const ScenarioConfig cfg = load_config(an_config);
      out << analyze(cfg, an_traj, an_stride).dump(2) << '\n';
      return 0;
    }
    if (inspect_cmd->parsed()) {
      const ScenarioConfig cfg = load_config(in_config);
      out << inspect(cfg).dump(2) << '\n';
      return 0;
    }
    if (examples->parsed()) {
      const fs::path dir(ex_out);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
      const ScenarioConfig cfg = example_scenario(which);
      const fs::path config_path = dir / ("example" + std::to_string(which) + ".json");
      {
        std::ofstream cf(config_path, std::ios::binary | std::ios::trunc);
        if (!cf) throw Error(ErrorCode::IoError, "cannot write " + config_path.string());
        cf << serialize_config(cfg);
      }
      const RunResult r = run_scenario(cfg, dir);
      out << config_path.string() << '\n'
          << r.trajectory_path.string() << '\n'
          << r.summary_path.string() << '\n';
      return 0;
    }
    err << "error:" << code_name(ErrorCode::InvalidArgument)
        << ": expected a subcommand or --batch (see --help)\n";
    return 2;
  } catch (const Error& e) {
    err << one_line(e.diagnostic()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error:" << code_name(ErrorCode::IoError) << ": " << one_line(e.what()) << '\n';
    return 1;
  }
}

}  // namespace rotator::cli
