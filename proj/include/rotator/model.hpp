#pragma once

#include <Eigen/Dense>

#include "rotator/error.hpp"

namespace rotator {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// Physical constants of one member of the rotator family.
///
/// The Lagrangian is
///   L = 1/2 m v^2 + 1/2 a2 m l^2 |ndot|^2 - a1 m l c |ndot| (1 + n.v/c)
/// plus the minimal coupling (e/c) A.v - e Phi when a field is present.
struct RotatorParams {
  double m = 1.0;
  double ell = 1.0;
  double c = 1.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double charge = 0.0;

  /// Validates m, ell, c > 0 and excludes the point particle a1 = a2 = 0.
  static RotatorParams make(double m, double ell, double c, double a1, double a2,
                            double charge = 0.0);

  /// a2 - a1^2; zero exactly for the defective members.
  double defect() const noexcept { return a2 - a1 * a1; }

  /// beta = a1 - a2/a1. Throws DivisionByZero when a1 == 0.
  double beta() const;
};

/// a1 = F'(0), a2 = -F''(0) for the shape function F of the relativistic action.
RotatorParams params_from_shape(double f_prime_0, double f_double_prime_0, double m,
                                double ell, double c, double charge = 0.0);

/// True iff a2 - a1^2 == 0, compared exactly.
bool is_degenerate(const RotatorParams& params) noexcept;

inline constexpr double kSphereTolerance = 1e-12;

/// Kinematic snapshot on R^3 x S^2.
struct RotatorState {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 n = Vec3::UnitX();
  Vec3 ndot = Vec3::Zero();

  /// Checks |n| = 1 and n.ndot = 0 to kSphereTolerance.
  static RotatorState make(double t, const Vec3& x, const Vec3& v, const Vec3& n,
                           const Vec3& ndot);

  /// Normalizes n and removes the normal part of ndot. Rejects inputs whose
  /// pre-normalization error (||n| - 1| or |n.ndot|/|ndot|) exceeds `tolerance`.
  static RotatorState normalized(double t, const Vec3& x, const Vec3& v, const Vec3& n,
                                 const Vec3& ndot, double tolerance);

  double omega() const { return ndot.norm(); }
};

/// Spherical chart of the direction n, with a rotated frame so the chart pole
/// stays away from n: n = frame * (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)).
struct ChartState {
  Mat3 frame = Mat3::Identity();
  double theta = 0.5 * 3.14159265358979323846;
  double phi = 0.0;
  double theta_dot = 0.0;
  double phi_dot = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double t = 0.0;

  /// Generalized coordinates (x, y, z, theta, phi).
  Vec5 q() const;
  /// Generalized velocities (vx, vy, vz, theta_dot, phi_dot).
  Vec5 qdot() const;

  Vec3 n() const;
  Vec3 ndot() const;
  /// Partial derivatives of n with respect to theta and phi (world frame).
  Vec3 dn_dtheta() const;
  Vec3 dn_dphi() const;

  static ChartState from_coordinates(const Mat3& frame, const Vec5& q, const Vec5& qdot,
                                     double t);
};

inline constexpr double kMinChartSin = 0.1;

/// Chart whose pole is the world axis least aligned with n (a cyclic axis
/// permutation; identity when that axis is z). Guarantees |sin(theta)| >= sqrt(2/3),
/// well above kMinChartSin.
ChartState to_chart(const RotatorState& state);
/// Chart in a caller-chosen orthonormal frame (no admissibility check).
ChartState to_chart(const RotatorState& state, const Mat3& frame);
RotatorState from_chart(const ChartState& chart);

/// Right-handed orthonormal frame whose third column is `axis` normalized.
Mat3 frame_with_pole(const Vec3& axis);

enum class FieldKind { None, UniformE, UniformH, PlaneWave };

/// External electromagnetic field. Gauges are fixed: Phi = -E0.x for UniformE,
/// A = 1/2 H0 x x for UniformH, and Phi = 0 with A = (c/omega) E0 sin(k.x - omega t + phase)
/// for the plane wave (omega = c|k|).
struct FieldConfig {
  FieldKind kind = FieldKind::None;
  Vec3 E0 = Vec3::Zero();
  Vec3 H0 = Vec3::Zero();
  Vec3 wave_k = Vec3::Zero();
  double wave_omega = 0.0;
  double wave_phase = 0.0;
  /// Speed constant entering E = -(1/c) dA/dt - grad Phi and the Lorentz force.
  double c = 1.0;

  static FieldConfig none();
  static FieldConfig uniform_e(const Vec3& E0);
  static FieldConfig uniform_h(const Vec3& H0);
  /// Requires E0 orthogonal to k and k != 0; omega is set to c|k|.
  static FieldConfig plane_wave(const Vec3& E0, const Vec3& k, double phase, double c);

  /// True when the field is identically zero (None kind or zero amplitude).
  bool vanishes() const;
};

struct FieldSample {
  Vec3 E = Vec3::Zero();
  Vec3 H = Vec3::Zero();
  Vec3 A = Vec3::Zero();
  double Phi = 0.0;
};

FieldSample field_eval(const FieldConfig& field, const Vec3& x, double t);

const char* field_kind_name(FieldKind kind) noexcept;

/// InvalidArgument when a charged rotator sees a field whose c differs from params.c;
/// the coupling and the Lorentz force would otherwise use different constants.
void require_common_speed(const RotatorParams& params, const FieldConfig& field);

}  // namespace rotator
