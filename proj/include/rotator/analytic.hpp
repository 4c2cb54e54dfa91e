#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rotator/model.hpp"

namespace rotator::analytic {

/// mu = a1 |p0| / (a1 m c - (a2 - a1^2) m l Omega).
double mu_parameter(const RotatorParams& params, const Vec3& p0, double omega);

/// Path of n on the sphere for constant momentum p0, through the projection
/// Y(s) = p0.n(s)/|p0| as a function of arc length s. Y oscillates between
/// the turning points y_lo and y_hi and reaches y_hi at s0.
struct QuadratureSolution {
  double mu = 0.0;
  double a_const = 0.0;  ///< a^2 is the constant term of the quartic
  double s0 = 0.0;
  Vec3 p0 = Vec3::Zero();
  double y_lo = 0.0;
  double y_hi = 0.0;
  /// (Y, s) on the branch s >= s0 where Y decreases from y_hi to y_lo.
  std::vector<std::pair<double, double>> samples;

  /// Quartic a^2 + 2 mu y - (1 - mu^2) y^2 - 2 mu y^3 - mu^2 y^4.
  double quartic(double y) const;
  /// Arc length from y_hi to y along the decreasing branch.
  double half_period() const;
  double period() const { return 2.0 * half_period(); }
};

/// From Y(0) and Y'(0) directly.
QuadratureSolution quadrature_solution(double mu, double y0, double y0_prime,
                                       const Vec3& p0 = Vec3::UnitZ());

/// From a free state: p0 is the conserved momentum, n'(0) = ndot/|ndot|.
QuadratureSolution quadrature_solution(const RotatorParams& params, const Vec3& p0,
                                       const Vec3& n0, const Vec3& ndot0);

/// s(Y) = s0 + int_Y^{y_hi} (1 + mu y) dy / sqrt(quartic(y)); DomainExceeded
/// outside [y_lo, y_hi].
double s_of_Y(const QuadratureSolution& sol, double y);

/// Inverse of s_of_Y continued by symmetry about s0 and periodicity.
double Y_of_s(const QuadratureSolution& sol, double s);

/// mu + (y_hi - mu) cos(s - s0).
double circle_approximation(const QuadratureSolution& sol, double s);

using StateSampler = std::function<RotatorState(double)>;

/// A prescribed rotation angle psi(t) with its derivatives.
struct AngleFunction {
  std::function<double(double)> value;
  std::function<double(double)> rate;
};

/// Family of motions of a charged defective rotator in a uniform electric
/// field E0 along z; n rotates in the xy plane by the free angle psi(t).
struct Example1Family {
  RotatorParams params;
  double E0 = 0.0;
  Vec3 x0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  AngleFunction psi;
  double epsilon = 1.0;
  /// z(t) = z_coefficient t^2 (on top of x0 + v0 t).
  double z_coefficient = 0.0;

  FieldConfig field() const;
  /// Throws DomainExceeded where psi stops being monotone with the sign epsilon.
  RotatorState state(double t) const;
  StateSampler sampler() const;
};

/// Coefficient e E0 / (2 m) from the force balance along E.
double example1_z_coefficient(const RotatorParams& params, double E0);

/// Requires a2 = a1^2 (NonDegenerateSystem otherwise) and psi_rate(0) != 0.
/// `z_coefficient` overrides the default example1_z_coefficient.
Example1Family example1_family(const RotatorParams& params, double E0, const Vec3& x0,
                               const Vec3& v0, AngleFunction psi,
                               std::optional<double> z_coefficient = std::nullopt);

/// Helical motion in a uniform magnetic field, written in a frame whose third
/// axis is H0: x = x0 + F(-R sin wt, R cos wt, v t), n = F(cos a cos wt, cos a sin wt, sin a).
struct HelicalSolution {
  RotatorParams params;
  double R = 1.0;
  double alpha = 0.0;
  double omega = 0.0;
  double omega_L = 0.0;
  double v_axial = 0.0;
  double Q = 0.0;
  Vec3 H0 = Vec3::UnitZ();
  Vec3 x0 = Vec3::Zero();
  Mat3 frame = Mat3::Identity();
  /// |v| > 0.1 c somewhere on the orbit: outside the slow-motion regime.
  bool fast = false;

  FieldConfig field() const;
  RotatorState state(double t) const;
  StateSampler sampler() const;
  double max_speed() const;
};

/// Larmor-type frequency Q |H0| / (m c).
double larmor_frequency(const RotatorParams& params, const Vec3& H0);

/// Requires a2 = a1^2, charge < 0, R > 0 and omega > 0 (FrequencySignViolation
/// when R <= -a1 l cos^2 alpha for a1 < 0).
HelicalSolution example2_helix(const RotatorParams& params, double R, double alpha,
                               const Vec3& H0, const Vec3& x0 = Vec3::Zero());

struct PlanarBranch {
  double omega = 0.0;
  bool valid = false;
  /// -a1 l omega = R |omega|: a nullifying variation would be admissible.
  bool nullifying_admissible = false;
};

/// omega_L / (1 + a1 l / R), valid for R > -a1 l, and
/// omega_L / (1 - a1 l / R), valid for R < a1 l.
std::pair<PlanarBranch, PlanarBranch> example2_planar_frequencies(const RotatorParams& params,
                                                                  double R, double omega_L);

/// Co-rotating planar circle (alpha = 0) with a given angular rate, which may be
/// negative; used to substitute either planar branch.
HelicalSolution planar_corotating(const RotatorParams& params, double R, double omega,
                                  const Vec3& H0, const Vec3& x0 = Vec3::Zero());

/// Planar Hessian constraint rdot cos(phi - psi) + r psidot sin(phi - psi).
double planar_hessian_constraint(double r, double rdot, double psi, double psidot, double phi);

}  // namespace rotator::analytic
