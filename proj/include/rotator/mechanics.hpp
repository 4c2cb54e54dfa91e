#pragma once

#include <vector>

#include "rotator/model.hpp"
#include "rotator/numdiff.hpp"

namespace rotator::mechanics {

/// Canonical momenta conjugate to xdot and ndot. `pi` is tangent to the sphere.
struct Momenta {
  Vec3 p = Vec3::Zero();
  Vec3 pi = Vec3::Zero();
};

/// Null space of the 5x5 velocity Hessian, chart-ordered
/// (vx, vy, vz, theta_dot, phi_dot); vectors are unit-normalized.
struct KernelBasis {
  std::vector<Vec5> vectors;
  int rank = 5;
  Vec5 singular_values = Vec5::Zero();
};

/// Velocity variation (dxdot, dndot); dndot must be tangent to the sphere.
struct HessianProbe {
  Vec3 d_v = Vec3::Zero();
  Vec3 d_ndot = Vec3::Zero();
};

inline constexpr double kKernelThreshold = 1e-8;

double lagrangian_value(const RotatorParams& params, const RotatorState& state,
                        const FieldConfig& field = FieldConfig{});

/// The Lagrangian as a function of chart variables, for the finite-difference oracle.
numdiff::ChartFunction chart_lagrangian(const RotatorParams& params,
                                        const FieldConfig& field = FieldConfig{});

Momenta canonical_momenta(const RotatorParams& params, const RotatorState& state,
                          const FieldConfig& field = FieldConfig{});

/// Energy function G = qdot . dL/dqdot - L (with e Phi under a field).
double energy_function(const RotatorParams& params, const RotatorState& state,
                       const FieldConfig& field = FieldConfig{});

/// 1/2 d^2L/dqdot^2 (dqdot, dqdot) written in terms of (dxdot, dndot).
double hessian_form_value(const RotatorParams& params, const RotatorState& state,
                          const HessianProbe& probe);

/// Closed-form determinant of the chart velocity Hessian.
double hessian_determinant_closed(const RotatorParams& params, const ChartState& chart);

/// Closed-form 5x5 chart velocity Hessian.
Mat5 hessian_matrix_closed(const RotatorParams& params, const ChartState& chart);

/// Chart image of the nullifying variation dxdot = a1 l |ndot| n, dndot = ndot:
/// (a1 l |ndot| n, theta_dot, phi_dot). Not normalized.
Vec5 nullifying_direction(const RotatorParams& params, const ChartState& chart);

/// Kernel of the finite-difference velocity Hessian; singular values below
/// kKernelThreshold times the largest are treated as zero.
KernelBasis nullifying_kernel(const RotatorParams& params, const ChartState& chart,
                              const numdiff::DiffSettings& cfg =
                                  numdiff::DiffSettings::precise());

/// Lagrange multiplier of the sphere constraint for a given ndotdot.
double lambda_multiplier(const RotatorParams& params, const RotatorState& state,
                         const Vec3& ndotdot);

/// pi_dot - dL/dn + 2 Lambda n for the unconstrained (Lambda-augmented) system.
Vec3 sphere_equation_residual(const RotatorParams& params, const RotatorState& state,
                              const Vec3& vdot, const Vec3& ndotdot, double lambda);

struct Velocities {
  Vec3 v = Vec3::Zero();
  Vec3 ndot = Vec3::Zero();
};

/// Inverse Legendre map (p, pi) -> (v, ndot) on the branch where the
/// pi-bracket has the sign of -a1.
Velocities velocities_from_momenta(const RotatorParams& params, const Vec3& n, const Vec3& p,
                                   const Vec3& pi);

double hamiltonian(const RotatorParams& params, const Vec3& n, const Vec3& p, const Vec3& pi);

/// p^2/2m: what the degenerate energy function looks like when written with p alone.
double false_hamiltonian(const RotatorParams& params, const Vec3& p);

/// (B qdot + c_t - g) . eta from finite-difference EL blocks, eta = nullifying_direction.
double constraint_residual_general(const RotatorParams& params, const ChartState& chart,
                                   const FieldConfig& field,
                                   const numdiff::DiffSettings& cfg =
                                       numdiff::DiffSettings::precise());

/// (v/c) x H + E at the state's position and time.
Vec3 lorentz_field(const RotatorState& state, const FieldConfig& field);

/// n . ((v/c) x H + E).
double lorentz_constraint_residual(const RotatorState& state, const FieldConfig& field);

/// dOmega/dt = a1/(a2 - a1^2) * e/(m l) * n . ((v/c) x H + E).
double omega_dot_law(const RotatorParams& params, const RotatorState& state,
                     const FieldConfig& field);

}  // namespace rotator::mechanics
