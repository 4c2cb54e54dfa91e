#include "rotator/model.hpp"

#include <cmath>
#include <sstream>

namespace rotator {

namespace {

bool finite3(const Vec3& v) { return v.allFinite(); }

std::string fmt(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

}  // namespace

RotatorParams RotatorParams::make(double m, double ell, double c, double a1, double a2,
                                  double charge) {
  if (!(m > 0.0) || !(ell > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "m, ell and c must be strictly positive");
  }
  if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(charge) ||
      !std::isfinite(m) || !std::isfinite(ell) || !std::isfinite(c)) {
    throw Error(ErrorCode::InvalidParams, "parameters must be finite");
  }
  if (a1 == 0.0 && a2 == 0.0) {
    throw Error(ErrorCode::InvalidParams, "a1 = a2 = 0 is a point particle, not a rotator");
  }
  return RotatorParams{m, ell, c, a1, a2, charge};
}

double RotatorParams::beta() const {
  if (a1 == 0.0) {
    throw Error(ErrorCode::DivisionByZero, "beta = a1 - a2/a1 is undefined for a1 = 0");
  }
  return a1 - a2 / a1;
}

RotatorParams params_from_shape(double f_prime_0, double f_double_prime_0, double m,
                                double ell, double c, double charge) {
  return RotatorParams::make(m, ell, c, f_prime_0, -f_double_prime_0, charge);
}

bool is_degenerate(const RotatorParams& params) noexcept {
  return params.a2 - params.a1 * params.a1 == 0.0;
}

RotatorState RotatorState::make(double t, const Vec3& x, const Vec3& v, const Vec3& n,
                                 const Vec3& ndot) {
  if (!std::isfinite(t) || !finite3(x) || !finite3(v) || !finite3(n) || !finite3(ndot)) {
    throw Error(ErrorCode::InvalidState, "state components must be finite");
  }
  if (std::abs(n.norm() - 1.0) > kSphereTolerance) {
    throw Error(ErrorCode::InvalidState, "|n| - 1 = " + fmt(n.norm() - 1.0));
  }
  if (std::abs(n.dot(ndot)) > kSphereTolerance) {
    throw Error(ErrorCode::InvalidState, "n.ndot = " + fmt(n.dot(ndot)));
  }
  return RotatorState{t, x, v, n, ndot};
}

RotatorState RotatorState::normalized(double t, const Vec3& x, const Vec3& v, const Vec3& n,
                                      const Vec3& ndot, double tolerance) {
  if (!std::isfinite(t) || !finite3(x) || !finite3(v) || !finite3(n) || !finite3(ndot)) {
    throw Error(ErrorCode::InvalidState, "state components must be finite");
  }
  const double norm = n.norm();
  if (std::abs(norm - 1.0) > tolerance) {
    throw Error(ErrorCode::InvalidState,
                "|n| deviates from 1 by " + fmt(std::abs(norm - 1.0)));
  }
  const Vec3 unit = n / norm;
  const double tangency = unit.dot(ndot);
  const double scale = std::max(ndot.norm(), 1.0);
  if (std::abs(tangency) > tolerance * scale) {
    throw Error(ErrorCode::InvalidState, "ndot is not tangent to the sphere: n.ndot = " +
                                             fmt(tangency));
  }
  return RotatorState{t, x, v, unit, ndot - tangency * unit};
}

Vec5 ChartState::q() const {
  Vec5 out;
  out << x, theta, phi;
  return out;
}

Vec5 ChartState::qdot() const {
  Vec5 out;
  out << v, theta_dot, phi_dot;
  return out;
}

Vec3 ChartState::n() const {
  const double st = std::sin(theta);
  return frame * Vec3(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
}

Vec3 ChartState::dn_dtheta() const {
  const double ct = std::cos(theta);
  return frame * Vec3(ct * std::cos(phi), ct * std::sin(phi), -std::sin(theta));
}

Vec3 ChartState::dn_dphi() const {
  const double st = std::sin(theta);
  return frame * Vec3(-st * std::sin(phi), st * std::cos(phi), 0.0);
}

Vec3 ChartState::ndot() const { return theta_dot * dn_dtheta() + phi_dot * dn_dphi(); }

ChartState ChartState::from_coordinates(const Mat3& frame, const Vec5& q, const Vec5& qdot,
                                        double t) {
  ChartState s;
  s.frame = frame;
  s.x = q.head<3>();
  s.theta = q[3];
  s.phi = q[4];
  s.v = qdot.head<3>();
  s.theta_dot = qdot[3];
  s.phi_dot = qdot[4];
  s.t = t;
  return s;
}

Mat3 frame_with_pole(const Vec3& axis) {
  const double norm = axis.norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "frame pole must be a nonzero vector");
  }
  const Vec3 e3 = axis / norm;
  // Seed with the world axis least aligned with the pole.
  Eigen::Index k = 0;
  e3.cwiseAbs().minCoeff(&k);
  const Vec3 seed = Vec3::Unit(k);
  const Vec3 e1 = (seed - seed.dot(e3) * e3).normalized();
  const Vec3 e2 = e3.cross(e1);
  Mat3 frame;
  frame.col(0) = e1;
  frame.col(1) = e2;
  frame.col(2) = e3;
  return frame;
}

ChartState to_chart(const RotatorState& state, const Mat3& frame) {
  const Vec3 local = frame.transpose() * state.n;
  const Vec3 local_dot = frame.transpose() * state.ndot;
  ChartState s;
  s.frame = frame;
  s.x = state.x;
  s.v = state.v;
  s.t = state.t;
  const double rho = std::hypot(local.x(), local.y());
  s.theta = std::atan2(rho, local.z());
  s.phi = std::atan2(local.y(), local.x());
  const double st = std::sin(s.theta);
  const double ct = std::cos(s.theta);
  const double cp = std::cos(s.phi);
  const double sp = std::sin(s.phi);
  const Vec3 e_theta(ct * cp, ct * sp, -st);
  const Vec3 e_phi(-sp, cp, 0.0);
  s.theta_dot = local_dot.dot(e_theta);
  s.phi_dot = st != 0.0 ? local_dot.dot(e_phi) / st : 0.0;
  return s;
}

ChartState to_chart(const RotatorState& state) {
  // Pole on the world axis least aligned with n, so sin(theta) >= sqrt(2/3);
  // the identity frame wins ties.
  const Vec3 a = state.n.cwiseAbs();
  if (a.z() <= a.x() && a.z() <= a.y()) {
    return to_chart(state, Mat3::Identity());
  }
  const int k = a.x() <= a.y() ? 0 : 1;
  Mat3 frame;
  frame.col(0) = Vec3::Unit((k + 1) % 3);
  frame.col(1) = Vec3::Unit((k + 2) % 3);
  frame.col(2) = Vec3::Unit(k);
  return to_chart(state, frame);
}

RotatorState from_chart(const ChartState& chart) {
  return RotatorState{chart.t, chart.x, chart.v, chart.n(), chart.ndot()};
}

FieldConfig FieldConfig::none() { return FieldConfig{}; }

FieldConfig FieldConfig::uniform_e(const Vec3& E0) {
  FieldConfig f;
  f.kind = FieldKind::UniformE;
  f.E0 = E0;
  return f;
}

FieldConfig FieldConfig::uniform_h(const Vec3& H0) {
  FieldConfig f;
  f.kind = FieldKind::UniformH;
  f.H0 = H0;
  return f;
}

FieldConfig FieldConfig::plane_wave(const Vec3& E0, const Vec3& k, double phase, double c) {
  const double kn = k.norm();
  if (!(kn > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "plane wave needs k != 0 and c > 0");
  }
  if (std::abs(E0.dot(k)) > 1e-12 * std::max(1.0, E0.norm() * kn)) {
    throw Error(ErrorCode::InvalidArgument, "plane wave amplitude must be orthogonal to k");
  }
  FieldConfig f;
  f.kind = FieldKind::PlaneWave;
  f.E0 = E0;
  f.wave_k = k;
  f.wave_omega = c * kn;
  f.wave_phase = phase;
  f.c = c;
  return f;
}

bool FieldConfig::vanishes() const {
  switch (kind) {
    case FieldKind::None: return true;
    case FieldKind::UniformE: return E0.isZero(0.0);
    case FieldKind::UniformH: return H0.isZero(0.0);
    case FieldKind::PlaneWave: return E0.isZero(0.0);
  }
  return true;
}

FieldSample field_eval(const FieldConfig& field, const Vec3& x, double t) {
  FieldSample out;
  switch (field.kind) {
    case FieldKind::None:
      break;
    case FieldKind::UniformE:
      out.E = field.E0;
      out.Phi = -field.E0.dot(x);
      break;
    case FieldKind::UniformH:
      out.H = field.H0;
      out.A = 0.5 * field.H0.cross(x);
      break;
    case FieldKind::PlaneWave: {
      const double xi = field.wave_k.dot(x) - field.wave_omega * t + field.wave_phase;
      const double amp = field.c / field.wave_omega;
      out.A = amp * std::sin(xi) * field.E0;
      out.E = std::cos(xi) * field.E0;
      out.H = amp * std::cos(xi) * field.wave_k.cross(field.E0);
      break;
    }
  }
  return out;
}

const char* field_kind_name(FieldKind kind) noexcept {
  switch (kind) {
    case FieldKind::None: return "none";
    case FieldKind::UniformE: return "uniform_e";
    case FieldKind::UniformH: return "uniform_h";
    case FieldKind::PlaneWave: return "plane_wave";
  }
  return "none";
}

void require_common_speed(const RotatorParams& params, const FieldConfig& field) {
  if (params.charge != 0.0 && !field.vanishes() && field.c != params.c) {
    throw Error(ErrorCode::InvalidArgument, "field c = " + std::to_string(field.c) +
                                                " differs from params c = " +
                                                std::to_string(params.c));
  }
}

}  // namespace rotator
