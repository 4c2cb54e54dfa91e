#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rotator/dynamics.hpp"
#include "rotator/model.hpp"

namespace rotator::cli {

enum class OutputFormat { Csv, Json };

struct OutputConfig {
  std::string path = "trajectory.csv";
  int every = 1;
  OutputFormat format = OutputFormat::Csv;
};

struct ScenarioConfig {
  RotatorParams params;
  RotatorState initial;
  FieldConfig field;
  std::optional<dynamics::GaugeFrequency> gauge;
  dynamics::IntegratorConfig integrator;
  OutputConfig output;
};

/// Strict JSON scenario parser. ParseError carries line/column, ValidationError
/// the offending key path.
ScenarioConfig parse_config(const std::string& text);

/// Canonical JSON text of a config; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& cfg);

ScenarioConfig load_config(const std::filesystem::path& path);

inline constexpr const char* kCsvHeader =
    "t,x,y,z,vx,vy,vz,nx,ny,nz,omega,energy,px,py,pz,det_hessian,lorentz_residual";

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Writes samples 0, every, 2 every, ... in CSV or JSON form.
void emit_trajectory(const dynamics::Trajectory& traj, std::ostream& out, OutputFormat format,
                     int every);
void emit_trajectory(const dynamics::Trajectory& traj, const std::filesystem::path& path,
                     OutputFormat format, int every);

/// One parsed row of a trajectory file.
struct TrajectoryRecord {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 n = Vec3::UnitX();
  double omega = 0.0;
  double energy = 0.0;
  Vec3 p = Vec3::Zero();
  double det_hessian = 0.0;
  double lorentz_residual = 0.0;
};

std::vector<TrajectoryRecord> read_trajectory(const std::filesystem::path& path);

struct RunResult {
  dynamics::Trajectory trajectory;
  std::filesystem::path trajectory_path;
  std::filesystem::path summary_path;
};

/// Integrates and writes the trajectory plus "<path>.summary.json".
/// Relative output paths are taken against `base_dir`.
RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& base_dir = {});

/// Built-in scenarios for the uniform-E family (1) and the magnetic circle (2).
ScenarioConfig example_scenario(int which);

/// Entry point of the command-line tool; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rotator::cli
