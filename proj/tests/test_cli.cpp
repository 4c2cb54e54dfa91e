#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rotator/cli.hpp"
#include "rotator/mechanics.hpp"
#include <json.hpp>

using namespace rotator;
using namespace rotator::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kFree = R"({
  "params": {"m": 1.0, "ell": 0.1, "c": 1.0, "a1": -1.0, "a2": 2.0},
  "initial": {"x": [0, 0, 0], "v": [0.01, 0.02, 0], "n": [1, 0, 0], "ndot": [0, 0.5, 0.1]},
  "field": {"kind": "none"},
  "integrator": {"dt": 0.01, "t_end": 0.5},
  "output": {"path": "free.csv"}
})";

const char* kViolating = R"({
  "params": {"m": 1.0, "ell": 0.1, "c": 1.0, "a1": -1.0, "a2": 1.0, "charge": 1.0},
  "initial": {"n": [0, 0, 1], "ndot": [0.5, 0, 0]},
  "field": {"kind": "uniform_e", "E0": [0, 0, 0.01]},
  "gauge": {"kind": "constant", "omega0": 0.5},
  "integrator": {"dt": 0.01, "t_end": 0.1}
})";

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("rotator_cli_" + std::to_string(rd()) + "_" +
                                         std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "rotator");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

Error parse_error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "config accepted";
  return Error(ErrorCode::InvalidArgument, "none");
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

dynamics::Trajectory free_trajectory(int steps) {
  const auto cfg = parse_config(kFree);
  auto ic = cfg.integrator;
  ic.t_end = ic.dt * steps;
  return dynamics::integrate(cfg.params, cfg.initial, cfg.field, ic);
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto cfg = parse_config(R"({
    "params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]},
    "field": {"kind": "none"}})");
  EXPECT_EQ(cfg.integrator.dt, 1e-3);
  EXPECT_EQ(cfg.output.every, 1);
  EXPECT_EQ(cfg.output.format, OutputFormat::Csv);
  EXPECT_EQ(cfg.params.charge, 0.0);
  EXPECT_EQ(cfg.initial.x, Vec3::Zero());
  EXPECT_FALSE(cfg.gauge.has_value());
}

TEST(Config, DegenerateNeedsGauge) {
  const auto e = parse_error_of(R"({
    "params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 1},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]},
    "field": {"kind": "none"}})");
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_NE(std::string(e.what()).find("gauge"), std::string::npos);
}

TEST(Config, GaugeRejectedForRegularRotator) {
  const auto e = parse_error_of(R"({
    "params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]},
    "field": {"kind": "none"},
    "gauge": {"kind": "constant", "omega0": 1}})");
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
}

TEST(Config, DirectionNormalizationSlack) {
  const std::string head = R"({"params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "field": {"kind": "none"}, "initial": {"ndot": [0.1, 0, 0], "n": )";
  const auto ok = parse_config(head + "[0, 0, 0.999999]}}");
  EXPECT_NEAR(ok.initial.n.norm(), 1.0, 1e-15);
  const auto e = parse_error_of(head + "[0, 0, 0.9]}}");
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_NE(std::string(e.what()).find("initial.n"), std::string::npos);
}

TEST(Config, UnknownKeyNamesItsPath) {
  const auto e = parse_error_of(R"({
    "params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2, "mass": 3},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]},
    "field": {"kind": "none"}})");
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_NE(std::string(e.what()).find("params.mass"), std::string::npos);
}

TEST(Config, SyntaxErrorHasPosition) {
  const auto e = parse_error_of("{\n  \"params\": {\"m\": 1,,}\n}");
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, WrongTypesAndBadValues) {
  EXPECT_EQ(parse_error_of(R"({"params": {"m": "1", "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]}, "field": {"kind": "none"}})")
                .code(),
            ErrorCode::ValidationError);
  EXPECT_EQ(parse_error_of(R"({"params": {"m": -1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]}, "field": {"kind": "none"}})")
                .code(),
            ErrorCode::ValidationError);
  EXPECT_EQ(parse_error_of(R"({"params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]}, "field": {"kind": "none"},
    "integrator": {"method": "euler"}})")
                .code(),
            ErrorCode::ValidationError);
  EXPECT_EQ(parse_error_of(R"({"params": {"m": 1, "ell": 1, "c": 1, "a1": -1, "a2": 2},
    "initial": {"n": [1, 0, 0], "ndot": [0, 1, 0]}, "field": {"kind": "none"},
    "output": {"every": 0}})")
                .code(),
            ErrorCode::ValidationError);
  EXPECT_EQ(parse_error_of("[1, 2]").code(), ErrorCode::ValidationError);
}

TEST(Config, SerializeIsAFixedPoint) {
  const std::vector<ScenarioConfig> configs = {parse_config(kFree), example_scenario(1),
                                               example_scenario(2), parse_config(kViolating)};
  for (const auto& cfg : configs) {
    const std::string once = serialize_config(cfg);
    const auto back = parse_config(once);
    EXPECT_EQ(serialize_config(back), once);
    EXPECT_EQ(back.initial.n, cfg.initial.n);
    EXPECT_EQ(back.initial.ndot, cfg.initial.ndot);
    EXPECT_EQ(back.params.a2, cfg.params.a2);
  }
}

TEST(Config, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Emit, RowCounts) {
  const auto three = free_trajectory(2);
  ASSERT_EQ(three.samples.size(), 3u);
  std::ostringstream a;
  emit_trajectory(three, a, OutputFormat::Csv, 1);
  EXPECT_EQ(count_lines(a.str()), 4u);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), kCsvHeader);

  const auto many = free_trajectory(94);
  ASSERT_EQ(many.samples.size(), 95u);
  std::ostringstream b;
  emit_trajectory(many, b, OutputFormat::Csv, 10);
  EXPECT_EQ(count_lines(b.str()), 11u);
}

TEST(Emit, CsvRoundTripIsExact) {
  TempDir dir;
  const auto traj = free_trajectory(20);
  const fs::path p = dir.path() / "t.csv";
  emit_trajectory(traj, p, OutputFormat::Csv, 1);
  const auto rows = read_trajectory(p);
  ASSERT_EQ(rows.size(), traj.samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = traj.samples[i];
    EXPECT_EQ(rows[i].t, s.state.t);
    EXPECT_EQ(rows[i].x, s.state.x);
    EXPECT_EQ(rows[i].v, s.state.v);
    EXPECT_EQ(rows[i].n, s.state.n);
    EXPECT_EQ(rows[i].omega, s.state.omega());
  }
}

TEST(Emit, JsonMatchesCsv) {
  TempDir dir;
  const auto traj = free_trajectory(12);
  emit_trajectory(traj, dir.path() / "t.csv", OutputFormat::Csv, 3);
  emit_trajectory(traj, dir.path() / "t.json", OutputFormat::Json, 3);
  const auto a = read_trajectory(dir.path() / "t.csv");
  const auto b = read_trajectory(dir.path() / "t.json");
  ASSERT_EQ(a.size(), 5u);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].n, b[i].n);
    EXPECT_EQ(a[i].p, b[i].p);
    EXPECT_EQ(a[i].det_hessian, b[i].det_hessian);
  }
  const auto doc = json::parse(read_file(dir.path() / "t.json"));
  ASSERT_TRUE(doc.is_array());
  EXPECT_TRUE(doc[0].contains("lorentz_residual"));
}

TEST(Emit, MalformedCsvIsRejected) {
  TempDir dir;
  write_file(dir.path() / "bad.csv", std::string(kCsvHeader) + "\n1,2,3\n");
  try {
    read_trajectory(dir.path() / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  write_file(dir.path() / "hdr.csv", "a,b\n");
  EXPECT_THROW(read_trajectory(dir.path() / "hdr.csv"), Error);
}

// Guards the output format against silent drift.
TEST(Emit, GoldenFile) {
  TempDir dir;
  auto cfg = parse_config(kFree);
  cfg.output.every = 10;
  const auto r = run_scenario(cfg, dir.path());
  EXPECT_EQ(read_file(r.trajectory_path),
            read_file(fs::path(ROTATOR_TEST_DATA) / "free_golden.csv"));
}

TEST(Run, FreeScenarioSummary) {
  TempDir dir;
  const auto r = run_scenario(parse_config(kFree), dir.path());
  EXPECT_EQ(r.trajectory_path, dir.path() / "free.csv");
  const auto rows = read_trajectory(r.trajectory_path);
  ASSERT_EQ(rows.size(), 51u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].t, rows[i - 1].t);
  const auto summary = json::parse(read_file(r.summary_path));
  EXPECT_LT(summary["drift"]["p"].get<double>(), 1e-9);
  EXPECT_LT(summary["drift"]["energy"].get<double>(), 1e-9);
  EXPECT_EQ(summary["classification"]["degenerate"], false);
  EXPECT_EQ(summary["classification"]["regime"], "non_degenerate");
  EXPECT_EQ(summary["samples"], 51);
  EXPECT_EQ(summary["gauge_fallback_steps"], 0);
  EXPECT_FALSE(summary["hessian_condition"]["singular"].get<bool>());
}

TEST(Run, DegenerateSummaryHasNullCondition) {
  TempDir dir;
  auto cfg = example_scenario(1);
  cfg.integrator.t_end = 0.2;
  const auto r = run_scenario(cfg, dir.path());
  const auto summary = json::parse(read_file(r.summary_path));
  EXPECT_EQ(summary["classification"]["degenerate"], true);
  EXPECT_TRUE(summary["hessian_condition"]["singular"].get<bool>());
  EXPECT_TRUE(summary["hessian_condition"]["max"].is_null());
}

TEST(Cli, SimulateWritesFiles) {
  TempDir dir;
  write_file(dir.path() / "free.json", kFree);
  const auto r = run({"simulate", "--config", (dir.path() / "free.json").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "free.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "free.csv.summary.json"));

  const auto o = run({"simulate", "--config", (dir.path() / "free.json").string(), "--out",
                      (dir.path() / "other.csv").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(read_file(dir.path() / "other.csv"), read_file(dir.path() / "free.csv"));
}

TEST(Cli, ViolatingStartFailsWithResidual) {
  TempDir dir;
  write_file(dir.path() / "bad.json", kViolating);
  const auto r = run({"simulate", "--config", (dir.path() / "bad.json").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error:constraint_violated_at_start:", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("0.01"), std::string::npos) << r.err;
  EXPECT_EQ(count_lines(r.err), 1u);
  EXPECT_FALSE(fs::exists(dir.path() / "trajectory.csv"));
}

TEST(Cli, ParseErrorsAreOneLine) {
  TempDir dir;
  write_file(dir.path() / "broken.json", "{\n\"params\": [\n");
  const auto r = run({"simulate", "--config", (dir.path() / "broken.json").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error:parse_error:", 0), 0u) << r.err;
  EXPECT_EQ(count_lines(r.err), 1u);

  const auto missing = run({"simulate", "--config", (dir.path() / "nope.json").string()});
  EXPECT_EQ(missing.status, 1);
  EXPECT_EQ(missing.err.rfind("error:io_error:", 0), 0u) << missing.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"simulate"}).status, 2);
  EXPECT_EQ(run({"frobnicate"}).status, 2);
  EXPECT_EQ(run({"examples", "--which", "3", "--out", "x"}).status, 2);
  const auto none = run({});
  EXPECT_EQ(none.status, 2);
  EXPECT_EQ(none.err.rfind("error:invalid_argument:", 0), 0u);
  EXPECT_EQ(run({"--help"}).status, 0);
}

TEST(Cli, AnalyzeFreeTrajectory) {
  TempDir dir;
  auto cfg = parse_config(kFree);
  cfg.integrator.t_end = 2.0;
  write_file(dir.path() / "free.json", serialize_config(cfg));
  ASSERT_EQ(run({"simulate", "--config", (dir.path() / "free.json").string()}).status, 0);
  const auto r = run({"analyze", "--trajectory", (dir.path() / "free.csv").string(), "--config",
                      (dir.path() / "free.json").string(), "--stride", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["rows"], 201);
  EXPECT_GT(doc["evaluated"].get<int>(), 10);
  // rebuilt ndot carries the fourth-order difference error of the stored n
  EXPECT_LT(doc["max_residual"].get<double>(), 1e-4);
}

TEST(Cli, InspectReportsHessian) {
  TempDir dir;
  write_file(dir.path() / "free.json", kFree);
  const auto r = run({"inspect", "--config", (dir.path() / "free.json").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["degenerate"], false);
  EXPECT_EQ(doc["kernel_rank"], 5);
  const double closed = doc["det_hessian_closed"].get<double>();
  EXPECT_NEAR(doc["det_hessian_numeric"].get<double>(), closed, 1e-5 * std::abs(closed));

  write_file(dir.path() / "deg.json", serialize_config(example_scenario(1)));
  const auto d = json::parse(run({"inspect", "--config", (dir.path() / "deg.json").string()}).out);
  EXPECT_EQ(d["degenerate"], true);
  EXPECT_EQ(d["kernel_rank"], 4);
  EXPECT_EQ(d["det_hessian_closed"].get<double>(), 0.0);
}

TEST(Cli, ExamplesRunAndStayOnConstraint) {
  TempDir dir;
  for (const char* which : {"1", "2"}) {
    const auto r = run({"examples", "--which", which, "--out", dir.path().string()});
    ASSERT_EQ(r.status, 0) << r.err;
    const std::string stem = std::string("example") + which;
    EXPECT_TRUE(fs::exists(dir.path() / (stem + ".json")));
    const auto summary = json::parse(read_file(dir.path() / (stem + ".csv.summary.json")));
    EXPECT_LT(summary["max_lorentz_residual"].get<double>(), 1e-7) << which;
    // the written config reproduces the scenario
    const auto cfg = load_config(dir.path() / (stem + ".json"));
    EXPECT_EQ(serialize_config(cfg), serialize_config(example_scenario(std::stoi(which))));
  }
}

TEST(Cli, InvalidLogLevel) {
  TempDir dir;
  write_file(dir.path() / "free.json", kFree);
  ::setenv("ROTATOR_LOG", "verbose", 1);
  const auto r = run({"inspect", "--config", (dir.path() / "free.json").string()});
  ::unsetenv("ROTATOR_LOG");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error:invalid_argument:", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("ROTATOR_LOG"), std::string::npos);
}

TEST(Cli, BatchRunsAllScenarios) {
  TempDir dir;
  for (int i = 0; i < 6; ++i) {
    auto cfg = parse_config(kFree);
    cfg.initial.ndot = Vec3(0, 0.2 + 0.1 * i, 0);
    cfg.output.path = "run" + std::to_string(i) + ".csv";
    write_file(dir.path() / ("s" + std::to_string(i) + ".json"), serialize_config(cfg));
  }
  const auto r = run({"--batch", dir.path().string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 6u);
  for (int i = 0; i < 6; ++i) {
    const auto rows = read_trajectory(dir.path() / ("run" + std::to_string(i) + ".csv"));
    ASSERT_EQ(rows.size(), 51u);
    EXPECT_DOUBLE_EQ(rows[0].omega, 0.2 + 0.1 * i);
  }
  // summaries left in the directory are skipped on a second pass
  EXPECT_EQ(run({"--batch", dir.path().string()}).status, 0);
}

TEST(Cli, BatchRejectsSharedOutput) {
  TempDir dir;
  write_file(dir.path() / "a.json", kFree);
  write_file(dir.path() / "b.json", kFree);
  write_file(dir.path() / "c.json", kViolating);
  const auto r = run({"--batch", dir.path().string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("already used"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("constraint_violated_at_start"), std::string::npos) << r.err;
  EXPECT_EQ(count_lines(r.err), 2u);
  EXPECT_EQ(count_lines(r.out), 1u);
  EXPECT_TRUE(fs::exists(dir.path() / "free.csv"));
  EXPECT_EQ(run({"--batch", (dir.path() / "missing").string()}).status, 1);
  EXPECT_EQ(run({"--batch", dir.path().string(), "inspect", "--config", "x"}).status, 1);
}
