#include "rotator/mechanics.hpp"

#include <cmath>
#include <string>

namespace rotator::mechanics {

namespace {

double rotation_rate(const Vec3& ndot) {
  const double omega = ndot.norm();
  if (!(omega > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "|ndot| = 0: the rotation direction is undefined");
  }
  return omega;
}

// K = m l (a2 l Omega - a1 (c + n.v)); pi = K ndot/|ndot| and K/|ndot| is the
// stiffness against variations of ndot orthogonal to ndot.
double pi_magnitude_signed(const RotatorParams& p, const Vec3& n, const Vec3& v, double omega) {
  return p.m * p.ell * (p.a2 * p.ell * omega - p.a1 * (p.c + n.dot(v)));
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Branch selector of the inverse Legendre map: sign of K in the slow-motion regime.
double legendre_branch(const RotatorParams& p) {
  return p.a1 != 0.0 ? -sign(p.a1) : sign(p.a2);
}

struct InverseLegendre {
  double omega;
  double branch;
  Vec3 pi_hat;
};

InverseLegendre solve_inverse(const RotatorParams& params, const Vec3& n, const Vec3& p,
                              const Vec3& pi) {
  if (is_degenerate(params)) {
    throw Error(ErrorCode::DegenerateLegendreMap,
                "a2 = a1^2: the map between velocities and momenta is singular");
  }
  const double pi_norm = pi.norm();
  if (!(pi_norm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "|pi| must be positive");
  }
  if (std::abs(pi.dot(n)) > 1e-10 * std::max(1.0, pi_norm)) {
    throw Error(ErrorCode::InvalidArgument, "pi must be orthogonal to n");
  }
  const double branch = legendre_branch(params);
  const double omega =
      (params.a1 * (params.c + p.dot(n) / params.m) + branch * pi_norm / (params.m * params.ell)) /
      (params.defect() * params.ell);
  if (!(omega > 0.0)) {
    throw Error(ErrorCode::SignConditionViolated,
                "momentum bracket has the wrong sign for this rotator (|ndot| would be " +
                    std::to_string(omega) + ")");
  }
  return {omega, branch, pi / pi_norm};
}

}  // namespace

double lagrangian_value(const RotatorParams& params, const RotatorState& state,
                        const FieldConfig& field) {
  require_common_speed(params, field);
  const double omega = state.ndot.norm();
  if (params.a1 != 0.0 && !(omega > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "|ndot| = 0 with a1 != 0");
  }
  const double m = params.m;
  const double l = params.ell;
  double value = 0.5 * m * state.v.squaredNorm() + 0.5 * params.a2 * m * l * l * omega * omega -
                 params.a1 * m * l * omega * (params.c + state.n.dot(state.v));
  if (field.kind != FieldKind::None && params.charge != 0.0) {
    const FieldSample f = field_eval(field, state.x, state.t);
    value += params.charge * (f.A.dot(state.v) / params.c - f.Phi);
  }
  return value;
}

numdiff::ChartFunction chart_lagrangian(const RotatorParams& params, const FieldConfig& field) {
  require_common_speed(params, field);
  return [params, field](const ChartState& s) {
    return lagrangian_value(params, from_chart(s), field);
  };
}

Momenta canonical_momenta(const RotatorParams& params, const RotatorState& state,
                          const FieldConfig& field) {
  require_common_speed(params, field);
  const double omega = rotation_rate(state.ndot);
  Momenta out;
  out.p = params.m * state.v - params.a1 * params.m * params.ell * omega * state.n;
  if (field.kind != FieldKind::None && params.charge != 0.0) {
    out.p += params.charge / params.c * field_eval(field, state.x, state.t).A;
  }
  out.pi = pi_magnitude_signed(params, state.n, state.v, omega) / omega * state.ndot;
  return out;
}

double energy_function(const RotatorParams& params, const RotatorState& state,
                       const FieldConfig& field) {
  require_common_speed(params, field);
  const double omega = state.ndot.norm();
  const Vec3 kinetic = params.m * state.v - params.a1 * params.m * params.ell * omega * state.n;
  double g = kinetic.squaredNorm() / (2.0 * params.m) +
             0.5 * params.m * params.ell * params.ell * params.defect() * omega * omega;
  if (field.kind != FieldKind::None && params.charge != 0.0) {
    g += params.charge * field_eval(field, state.x, state.t).Phi;
  }
  return g;
}

double hessian_form_value(const RotatorParams& params, const RotatorState& state,
                          const HessianProbe& probe) {
  const double omega = rotation_rate(state.ndot);
  if (std::abs(probe.d_ndot.dot(state.n)) > 1e-12 * std::max(1.0, probe.d_ndot.norm())) {
    throw Error(ErrorCode::InvalidArgument, "probe d_ndot must be tangent to the sphere");
  }
  const double m = params.m;
  const double l = params.ell;
  const double c = params.c;
  const double along = state.ndot.dot(probe.d_ndot) / omega;
  const double across = (state.ndot.cross(probe.d_ndot) / omega).squaredNorm();
  const double stiffness =
      params.a2 * (l / c) * omega - params.a1 * (1.0 + state.n.dot(state.v) / c);
  return 0.5 * m * (probe.d_v - params.a1 * l * along * state.n).squaredNorm() +
         0.5 * m * l * l * params.defect() * along * along +
         0.5 * m * l * c / omega * stiffness * across;
}

double hessian_determinant_closed(const RotatorParams& params, const ChartState& chart) {
  const double omega = rotation_rate(chart.ndot());
  const double m = params.m;
  const double l = params.ell;
  const double c = params.c;
  const double s = std::sin(chart.theta);
  const double bracket =
      params.a2 * (l / c) * omega - params.a1 * (1.0 + chart.n().dot(chart.v) / c);
  return std::pow(m, 4) * l * l * params.defect() * (m * l * l / ((l / c) * omega)) * bracket *
         s * s;
}

Mat5 hessian_matrix_closed(const RotatorParams& params, const ChartState& chart) {
  const Vec3 n = chart.n();
  const Vec3 ndot = chart.ndot();
  const double omega = rotation_rate(ndot);
  const Vec3 u = ndot / omega;
  const double m = params.m;
  const double l = params.ell;

  Eigen::Matrix<double, 3, 2> jac;
  jac.col(0) = chart.dn_dtheta();
  jac.col(1) = chart.dn_dphi();

  const Mat3 tangent_projector = Mat3::Identity() - u * u.transpose();
  const Mat3 d2_ndot = params.a2 * m * l * l * Mat3::Identity() -
                       params.a1 * m * l * (params.c + n.dot(chart.v)) / omega * tangent_projector;
  const Mat3 d2_v_ndot = -params.a1 * m * l * n * u.transpose();

  Mat5 h = Mat5::Zero();
  h.topLeftCorner<3, 3>() = m * Mat3::Identity();
  h.topRightCorner<3, 2>() = d2_v_ndot * jac;
  h.bottomLeftCorner<2, 3>() = h.topRightCorner<3, 2>().transpose();
  h.bottomRightCorner<2, 2>() = jac.transpose() * d2_ndot * jac;
  return h;
}

Vec5 nullifying_direction(const RotatorParams& params, const ChartState& chart) {
  const double omega = rotation_rate(chart.ndot());
  Vec5 eta;
  eta << params.a1 * params.ell * omega * chart.n(), chart.theta_dot, chart.phi_dot;
  return eta;
}

KernelBasis nullifying_kernel(const RotatorParams& params, const ChartState& chart,
                              const numdiff::DiffSettings& cfg) {
  rotation_rate(chart.ndot());
  const Mat5 h = numdiff::hessian_velocity(chart_lagrangian(params), chart, cfg);
  const Eigen::JacobiSVD<Mat5> svd(h, Eigen::ComputeFullV);
  KernelBasis out;
  out.singular_values = svd.singularValues();
  const double cutoff = kKernelThreshold * out.singular_values[0];
  out.rank = 0;
  for (int i = 0; i < 5; ++i) {
    if (out.singular_values[i] > cutoff) {
      ++out.rank;
      continue;
    }
    Vec5 k = svd.matrixV().col(i).normalized();
    Eigen::Index lead = 0;
    k.cwiseAbs().maxCoeff(&lead);
    if (k[lead] < 0.0) k = -k;
    out.vectors.push_back(k);
  }
  return out;
}

double lambda_multiplier(const RotatorParams& params, const RotatorState& state,
                         const Vec3& ndotdot) {
  const double omega = rotation_rate(state.ndot);
  const double k = pi_magnitude_signed(params, state.n, state.v, omega);
  const double n_dl_dn = -params.a1 * params.m * params.ell * omega * state.n.dot(state.v);
  // Only the normal part of ndotdot enters n . pi_dot.
  const double n_pidot = k * state.n.dot(ndotdot) / omega;
  return 0.5 * (n_dl_dn - n_pidot);
}

Vec3 sphere_equation_residual(const RotatorParams& params, const RotatorState& state,
                              const Vec3& vdot, const Vec3& ndotdot, double lambda) {
  const double omega = rotation_rate(state.ndot);
  const Vec3 u = state.ndot / omega;
  const double m = params.m;
  const double l = params.ell;
  const double k = pi_magnitude_signed(params, state.n, state.v, omega);
  const double omega_dot = u.dot(ndotdot);
  const double k_dot =
      m * l * (params.a2 * l * omega_dot - params.a1 * (state.ndot.dot(state.v) + state.n.dot(vdot)));
  const Vec3 u_dot = (ndotdot - omega_dot * u) / omega;
  const Vec3 pi_dot = k_dot * u + k * u_dot;
  const Vec3 dl_dn = -params.a1 * m * l * omega * state.v;
  return pi_dot - dl_dn + 2.0 * lambda * state.n;
}

Velocities velocities_from_momenta(const RotatorParams& params, const Vec3& n, const Vec3& p,
                                   const Vec3& pi) {
  const InverseLegendre inv = solve_inverse(params, n, p, pi);
  Velocities out;
  out.ndot = inv.omega * inv.branch * inv.pi_hat;
  out.v = p / params.m + params.a1 * params.ell * inv.omega * n;
  return out;
}

double hamiltonian(const RotatorParams& params, const Vec3& n, const Vec3& p, const Vec3& pi) {
  solve_inverse(params, n, p, pi);
  const double m = params.m;
  const double c = params.c;
  const double bracket =
      std::abs(params.a1) * (1.0 + n.dot(p) / (m * c)) - pi.norm() / (m * params.ell * c);
  return p.squaredNorm() / (2.0 * m) + 0.5 * m * c * c * bracket * bracket / params.defect();
}

double false_hamiltonian(const RotatorParams& params, const Vec3& p) {
  return p.squaredNorm() / (2.0 * params.m);
}

double constraint_residual_general(const RotatorParams& params, const ChartState& chart,
                                   const FieldConfig& field, const numdiff::DiffSettings& cfg) {
  if (!is_degenerate(params)) {
    throw Error(ErrorCode::NonDegenerateSystem,
                "the velocity Hessian has an empty kernel for a2 != a1^2");
  }
  const Vec5 eta = nullifying_direction(params, chart);
  const numdiff::ELBlocks blocks = numdiff::el_blocks(chart_lagrangian(params, field), chart, cfg);
  const Vec5 rest = blocks.B * chart.qdot() + blocks.c_t - blocks.g;
  return rest.dot(eta);
}

Vec3 lorentz_field(const RotatorState& state, const FieldConfig& field) {
  const FieldSample f = field_eval(field, state.x, state.t);
  return state.v.cross(f.H) / field.c + f.E;
}

double lorentz_constraint_residual(const RotatorState& state, const FieldConfig& field) {
  return state.n.dot(lorentz_field(state, field));
}

double omega_dot_law(const RotatorParams& params, const RotatorState& state,
                     const FieldConfig& field) {
  require_common_speed(params, field);
  if (is_degenerate(params)) {
    throw Error(ErrorCode::DegenerateSystem,
                "a2 = a1^2: energy conservation gives no law for the frequency");
  }
  return params.a1 / params.defect() * params.charge / (params.m * params.ell) *
         lorentz_constraint_residual(state, field);
}

}  // namespace rotator::mechanics
