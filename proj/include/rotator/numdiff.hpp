#pragma once

#include <functional>

#include "rotator/model.hpp"

namespace rotator::numdiff {

enum class Stencil { Central2, Central4, Central6 };

struct DiffSettings {
  double step = 1e-5;
  Stencil order = Stencil::Central2;

  /// Throws InvalidArgument unless step lies in [1e-9, 1e-2].
  void validate() const;

  /// Sixth-order stencil with a wide step; balances truncation against
  /// cancellation for second derivatives of the rotator Lagrangian.
  static DiffSettings precise() { return DiffSettings{3e-3, Stencil::Central6}; }
};

/// Scalar function of the chart variables (q, qdot, t).
using ChartFunction = std::function<double(const ChartState&)>;

/// d f / d qdot, ordered (vx, vy, vz, theta_dot, phi_dot).
Vec5 grad_velocity(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg = {});

/// d f / d q, ordered (x, y, z, theta, phi).
Vec5 grad_position(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg = {});

/// d^2 f / d qdot^i d qdot^j, symmetrized.
Mat5 hessian_velocity(const ChartFunction& f, const ChartState& s,
                      const DiffSettings& cfg = {});

/// Raw (unsymmetrized) velocity Hessian; each off-diagonal entry uses its own
/// nested stencil (outer derivative along i, inner along j).
Mat5 hessian_velocity_raw(const ChartFunction& f, const ChartState& s,
                          const DiffSettings& cfg = {});

/// Blocks of the expanded Euler-Lagrange equations A qddot = -B qdot - c_t + g.
struct ELBlocks {
  Mat5 A = Mat5::Zero();  ///< A_ij = d^2 L / d qdot^j d qdot^i
  Mat5 B = Mat5::Zero();  ///< B_ij = d^2 L / d q^j d qdot^i
  Vec5 c_t = Vec5::Zero();  ///< d^2 L / dt d qdot^i
  Vec5 g = Vec5::Zero();  ///< d L / d q^i
};

ELBlocks el_blocks(const ChartFunction& L, const ChartState& s, const DiffSettings& cfg = {});

}  // namespace rotator::numdiff
