#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rotator/mechanics.hpp"
#include "rotator/model.hpp"
#include "rotator/numdiff.hpp"

namespace rotator::dynamics {

enum class GaugeKind { Constant, Sinusoidal, Table };

/// The free function Omega(t) = |ndot|(t) that a defective rotator leaves open.
///   Constant:   Omega0
///   Sinusoidal: Omega0 (1 + amp sin(freq t))
///   Table:      piecewise-linear interpolation of (t, Omega) samples
struct GaugeFrequency {
  GaugeKind kind = GaugeKind::Constant;
  double omega0 = 1.0;
  double amp = 0.0;
  double freq = 0.0;
  std::vector<std::pair<double, double>> samples;

  static GaugeFrequency constant(double omega0);
  static GaugeFrequency sinusoidal(double omega0, double amp, double freq);
  static GaugeFrequency table(std::vector<std::pair<double, double>> samples);

  double omega(double t) const;
  /// dOmega/dt (one-sided slope at table knots).
  double rate(double t) const;
  /// Integral of Omega over [t0, t1]: arc length travelled on the sphere.
  double arc_length(double t0, double t1) const;

  /// Throws InvalidArgument unless Omega > 0 on [t0, t1] (and the table covers it).
  void validate(double t0, double t1) const;
};

const char* gauge_kind_name(GaugeKind kind) noexcept;

enum class Method { RK4 };

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Method method = Method::RK4;
  int renorm_every = 1;

  void validate(double t0) const;
};

/// How the equations of motion were closed for a run.
enum class Regime {
  NonDegenerate,       ///< unique accelerations from the regular Hessian
  DegenerateGauge,     ///< arc-length path with the frequency supplied by a gauge
  DegenerateEPlane,    ///< uniform E: motion restricted to the plane n.E = 0, gauge frequency
  DegenerateConstraint ///< uniform H: frequency rate fixed by preserving n.((v/c) x H) = 0
};

const char* regime_name(Regime regime) noexcept;

struct Diagnostics {
  double energy = 0.0;
  Vec3 p = Vec3::Zero();
  double det_hessian = 0.0;
  double lorentz_residual = 0.0;
  double omega = 0.0;
};

struct TrajectorySample {
  RotatorState state;
  Diagnostics diag;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Regime regime = Regime::NonDegenerate;
  /// Largest ||n| - 1| seen before a renormalization.
  double max_sphere_drift = 0.0;
  /// For DegenerateConstraint: steps where the constraint left the rate open
  /// and the gauge rate was used.
  std::size_t gauge_fallback_steps = 0;
};

Diagnostics diagnose(const RotatorParams& params, const RotatorState& state,
                     const FieldConfig& field);

struct VectorAccelerations {
  Vec3 vdot = Vec3::Zero();
  Vec3 ndotdot = Vec3::Zero();
};

/// Closed-form solution of the equations of motion for a prescribed
/// frequency rate dOmega/dt:
///   ndotdot = -Omega^2 n + rate u + beta w,  beta = -a1 m l Omega^2 (w.v) / K
///   vdot    = F/m + a1 l (rate n + Omega^2 u)
/// with u = ndot/Omega, w = n x u, K = m l (a2 l Omega - a1 (c + n.v)),
/// F = e ((v/c) x H + E).
VectorAccelerations equations_of_motion_with_rate(const RotatorParams& params,
                                                  const RotatorState& state,
                                                  const FieldConfig& field, double rate);

/// Non-degenerate case: rate from the frequency law. Throws IndeterminateDynamics
/// for a2 = a1^2.
VectorAccelerations equations_of_motion(const RotatorParams& params, const RotatorState& state,
                                        const FieldConfig& field);

/// Chart accelerations from solving A qddot = -B qdot - c_t + g with the
/// finite-difference blocks.
Vec5 accelerations(const RotatorParams& params, const ChartState& chart,
                   const FieldConfig& field,
                   const numdiff::DiffSettings& cfg = numdiff::DiffSettings::precise());

/// Chart image (vdot, theta_ddot, phi_ddot) of Cartesian accelerations.
Vec5 chart_accelerations(const ChartState& chart, const VectorAccelerations& acc);

/// n'' from the arc-length equation for constant kinetic momentum p0;
/// `omega_prime` is dOmega/ds. Throws ZeroDenominator at a vanishing bracket.
Vec3 projected_sphere_rhs(const RotatorParams& params, const RotatorState& state,
                          const Vec3& p0, double omega_prime = 0.0);

inline constexpr double kStartConstraintTolerance = 1e-9;

Trajectory integrate(const RotatorParams& params, const RotatorState& initial,
                     const FieldConfig& field, const IntegratorConfig& cfg,
                     const std::optional<GaugeFrequency>& gauge = std::nullopt);

/// Regime `integrate` would select, after checking its preconditions.
Regime select_regime(const RotatorParams& params, const FieldConfig& field);

struct VerifyOptions {
  numdiff::DiffSettings diff = numdiff::DiffSettings::precise();
  /// Chart frame used at every sample; by default the aligned chart of each sample.
  std::optional<Mat3> frame;
  /// Equations included in the report (x, y, z, theta, phi).
  std::array<bool, 5> mask{true, true, true, true, true};
  /// Spacing of the time stencil when verifying a sampler.
  double sampler_step = 1e-3;
  /// Evaluate every `stride`-th interior sample of a trajectory.
  std::size_t stride = 1;
};

/// Options matching the regime: the uniform-E plane restriction verifies only
/// the equations tangent to n.E = 0 in a chart whose pole is E.
VerifyOptions verify_options_for(const RotatorParams& params, const FieldConfig& field);

struct ResidualReport {
  Vec5 max_abs = Vec5::Zero();
  /// Largest |dx/dt - v|, |dn/dt - ndot| by the same difference stencil.
  double kinematic = 0.0;
  /// Max over the unmasked equations and the kinematic check.
  double max = 0.0;
  double worst_time = 0.0;
  std::size_t evaluated = 0;
};

using StateSampler = std::function<RotatorState(double)>;

/// Substitutes uniformly spaced states into A qddot + B qdot + c_t - g, with
/// qddot from a fourth-order difference of the chart velocities, and checks
/// that positions difference to the stored velocities.
ResidualReport verify_solution(const RotatorParams& params,
                               const std::vector<RotatorState>& states,
                               const FieldConfig& field, const VerifyOptions& opts = {});

ResidualReport verify_solution(const RotatorParams& params, const Trajectory& traj,
                               const FieldConfig& field, const VerifyOptions& opts = {});

/// Substitutes a closed-form sampler at `count` times spread over [t0, t1].
ResidualReport verify_solution(const RotatorParams& params, const StateSampler& sampler,
                               double t0, double t1, int count, const FieldConfig& field,
                               const VerifyOptions& opts = {});

}  // namespace rotator::dynamics
