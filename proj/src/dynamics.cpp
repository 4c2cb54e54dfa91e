#include "rotator/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rotator::dynamics {

using mechanics::lorentz_constraint_residual;
using mechanics::lorentz_field;

namespace {

using Vec12 = Eigen::Matrix<double, 12, 1>;

std::string fmt(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

template <class Rhs>
Vec12 rk4_step(const Rhs& rhs, double t, const Vec12& y, double h) {
  const Vec12 k1 = rhs(t, y);
  const Vec12 k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
  const Vec12 k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
  const Vec12 k4 = rhs(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec12 pack(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Vec12 y;
  y << a, b, c, d;
  return y;
}

bool charged_in_field(const RotatorParams& params, const FieldConfig& field) {
  return params.charge != 0.0 && !field.vanishes();
}

// Frequency rate that keeps C = n.G (G = (v/c) x H + E) stationary to second
// order for uniform static fields. C'' is affine in the rate; returns nullopt
// when the rate drops out.
std::optional<double> constraint_preserving_rate(const RotatorParams& params,
                                                 const RotatorState& state,
                                                 const FieldConfig& field) {
  const FieldSample f = field_eval(field, state.x, state.t);
  const double c = field.c;
  const double omega = state.ndot.norm();
  const Vec3 u = state.ndot / omega;
  const Vec3 w = state.n.cross(u);
  const double k = params.m * params.ell *
                   (params.a2 * params.ell * omega - params.a1 * (params.c + state.n.dot(state.v)));
  const double beta = -params.a1 * params.m * params.ell * omega * omega * w.dot(state.v) / k;

  auto c_ddot = [&](double rate) {
    const VectorAccelerations acc = equations_of_motion_with_rate(params, state, field, rate);
    const Vec3 g = state.v.cross(f.H) / c + f.E;
    const Vec3 g_dot = acc.vdot.cross(f.H) / c;
    const Vec3 u_dot = -omega * state.n + (beta / omega) * w;
    const Vec3 v_ddot =
        params.charge * g_dot / params.m +
        params.a1 * params.ell *
            (rate * state.ndot + 2.0 * omega * rate * u + omega * omega * u_dot);
    const Vec3 g_ddot = v_ddot.cross(f.H) / c;
    return acc.ndotdot.dot(g) + 2.0 * state.ndot.dot(g_dot) + state.n.dot(g_ddot);
  };
  const double c0 = c_ddot(0.0);
  const double slope = c_ddot(1.0) - c0;
  const double scale = std::max({std::abs(c0), std::abs(c_ddot(-1.0)), 1e-300});
  if (std::abs(slope) <= 1e-12 * scale) return std::nullopt;
  return -c0 / slope;
}

double constraint_rate_of_change(const RotatorParams& params, const RotatorState& state,
                                 const FieldConfig& field) {
  // dC/dt does not depend on the frequency rate: n . ((n/c) x H) = 0.
  const FieldSample f = field_eval(field, state.x, state.t);
  const VectorAccelerations acc = equations_of_motion_with_rate(params, state, field, 0.0);
  const Vec3 g = state.v.cross(f.H) / field.c + f.E;
  return state.ndot.dot(g) + state.n.dot(acc.vdot.cross(f.H) / field.c);
}

}  // namespace

GaugeFrequency GaugeFrequency::constant(double omega0) {
  GaugeFrequency g;
  g.kind = GaugeKind::Constant;
  g.omega0 = omega0;
  return g;
}

GaugeFrequency GaugeFrequency::sinusoidal(double omega0, double amp, double freq) {
  GaugeFrequency g;
  g.kind = GaugeKind::Sinusoidal;
  g.omega0 = omega0;
  g.amp = amp;
  g.freq = freq;
  return g;
}

GaugeFrequency GaugeFrequency::table(std::vector<std::pair<double, double>> samples) {
  GaugeFrequency g;
  g.kind = GaugeKind::Table;
  g.samples = std::move(samples);
  g.omega0 = g.samples.empty() ? 0.0 : g.samples.front().second;
  return g;
}

double GaugeFrequency::omega(double t) const {
  switch (kind) {
    case GaugeKind::Constant: return omega0;
    case GaugeKind::Sinusoidal: return omega0 * (1.0 + amp * std::sin(freq * t));
    case GaugeKind::Table: {
      if (samples.empty()) return 0.0;
      if (t <= samples.front().first) return samples.front().second;
      if (t >= samples.back().first) return samples.back().second;
      const auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                       [](double value, const auto& s) { return value < s.first; });
      const auto lo = hi - 1;
      const double w = (t - lo->first) / (hi->first - lo->first);
      return lo->second + w * (hi->second - lo->second);
    }
  }
  return omega0;
}

double GaugeFrequency::rate(double t) const {
  switch (kind) {
    case GaugeKind::Constant: return 0.0;
    case GaugeKind::Sinusoidal: return omega0 * amp * freq * std::cos(freq * t);
    case GaugeKind::Table: {
      if (samples.size() < 2 || t < samples.front().first || t >= samples.back().first) return 0.0;
      const auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                       [](double value, const auto& s) { return value < s.first; });
      const auto lo = hi - 1;
      return (hi->second - lo->second) / (hi->first - lo->first);
    }
  }
  return 0.0;
}

double GaugeFrequency::arc_length(double t0, double t1) const {
  switch (kind) {
    case GaugeKind::Constant: return omega0 * (t1 - t0);
    case GaugeKind::Sinusoidal:
      if (freq == 0.0) return omega0 * (t1 - t0);
      return omega0 * ((t1 - t0) - amp * (std::cos(freq * t1) - std::cos(freq * t0)) / freq);
    case GaugeKind::Table: {
      // Exact integral of the piecewise-linear interpolant.
      const double sign = t1 >= t0 ? 1.0 : -1.0;
      const double a = std::min(t0, t1);
      const double b = std::max(t0, t1);
      std::vector<double> knots{a};
      for (const auto& s : samples) {
        if (s.first > a && s.first < b) knots.push_back(s.first);
      }
      knots.push_back(b);
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        total += 0.5 * (omega(knots[i]) + omega(knots[i + 1])) * (knots[i + 1] - knots[i]);
      }
      return sign * total;
    }
  }
  return 0.0;
}

void GaugeFrequency::validate(double t0, double t1) const {
  switch (kind) {
    case GaugeKind::Constant:
      if (!(omega0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "gauge omega0 must be > 0");
      return;
    case GaugeKind::Sinusoidal:
      if (!(omega0 > 0.0) || !(amp >= 0.0) || !(amp < 1.0) || !std::isfinite(freq)) {
        throw Error(ErrorCode::InvalidArgument,
                    "sinusoidal gauge needs omega0 > 0 and 0 <= amp < 1 so that Omega > 0");
      }
      return;
    case GaugeKind::Table:
      if (samples.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "table gauge needs at least two samples");
      }
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].second > 0.0)) {
          throw Error(ErrorCode::InvalidArgument, "table gauge values must be > 0");
        }
        if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
          throw Error(ErrorCode::InvalidArgument, "table gauge times must be strictly increasing");
        }
      }
      if (samples.front().first > t0 || samples.back().first < t1) {
        throw Error(ErrorCode::InvalidArgument, "table gauge does not cover the integration window");
      }
      return;
  }
}

const char* gauge_kind_name(GaugeKind kind) noexcept {
  switch (kind) {
    case GaugeKind::Constant: return "constant";
    case GaugeKind::Sinusoidal: return "sinusoidal";
    case GaugeKind::Table: return "table";
  }
  return "constant";
}

void IntegratorConfig::validate(double t0) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  }
  if (!(dt < t_end - t0)) {
    throw Error(ErrorCode::InvalidArgument, "dt must be smaller than the integration window");
  }
  if (renorm_every < 1) {
    throw Error(ErrorCode::InvalidArgument, "renorm_every must be >= 1");
  }
}

const char* regime_name(Regime regime) noexcept {
  switch (regime) {
    case Regime::NonDegenerate: return "non_degenerate";
    case Regime::DegenerateGauge: return "degenerate_gauge";
    case Regime::DegenerateEPlane: return "degenerate_e_plane";
    case Regime::DegenerateConstraint: return "degenerate_constraint";
  }
  return "non_degenerate";
}

Diagnostics diagnose(const RotatorParams& params, const RotatorState& state,
                     const FieldConfig& field) {
  Diagnostics d;
  d.omega = state.omega();
  d.energy = mechanics::energy_function(params, state, field);
  d.p = mechanics::canonical_momenta(params, state, field).p;
  d.det_hessian = mechanics::hessian_determinant_closed(params, to_chart(state));
  d.lorentz_residual = lorentz_constraint_residual(state, field);
  return d;
}

VectorAccelerations equations_of_motion_with_rate(const RotatorParams& params,
                                                  const RotatorState& state,
                                                  const FieldConfig& field, double rate) {
  require_common_speed(params, field);
  const double omega = state.ndot.norm();
  if (!(omega > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "|ndot| = 0: equations of motion are singular");
  }
  const Vec3 u = state.ndot / omega;
  const Vec3 w = state.n.cross(u);
  const double m = params.m;
  const double l = params.ell;
  const double k = m * l * (params.a2 * l * omega - params.a1 * (params.c + state.n.dot(state.v)));
  if (k == 0.0 || !std::isfinite(k)) {
    throw Error(ErrorCode::ZeroDenominator,
                "a2 l |ndot| - a1 (c + n.v) vanishes: outside the slow-motion regime");
  }
  const double beta = -params.a1 * m * l * omega * omega * w.dot(state.v) / k;

  Vec3 force = Vec3::Zero();
  if (params.charge != 0.0 && field.kind != FieldKind::None) {
    force = params.charge * lorentz_field(state, field);
  }
  VectorAccelerations out;
  out.ndotdot = -omega * omega * state.n + rate * u + beta * w;
  out.vdot = force / m + params.a1 * l * (rate * state.n + omega * omega * u);
  return out;
}

VectorAccelerations equations_of_motion(const RotatorParams& params, const RotatorState& state,
                                        const FieldConfig& field) {
  if (is_degenerate(params)) {
    throw Error(ErrorCode::IndeterminateDynamics,
                "a2 = a1^2: the accelerations cannot be uniquely determined");
  }
  const double rate = params.charge != 0.0 ? mechanics::omega_dot_law(params, state, field) : 0.0;
  return equations_of_motion_with_rate(params, state, field, rate);
}

Vec5 accelerations(const RotatorParams& params, const ChartState& chart, const FieldConfig& field,
                   const numdiff::DiffSettings& cfg) {
  if (is_degenerate(params)) {
    throw Error(ErrorCode::IndeterminateDynamics,
                "singular Hessian: infinitely many accelerations are compatible with the state");
  }
  if (!(chart.ndot().norm() > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "|ndot| = 0");
  }
  const numdiff::ELBlocks b =
      numdiff::el_blocks(mechanics::chart_lagrangian(params, field), chart, cfg);
  const Vec5 rhs = -b.B * chart.qdot() - b.c_t + b.g;
  const Eigen::FullPivLU<Mat5> lu(b.A);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::IndeterminateDynamics, "numerical velocity Hessian is singular");
  }
  const Vec5 qddot = lu.solve(rhs);
  const double residual = (b.A * qddot - rhs).norm();
  if (residual > 1e-10 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorCode::IndeterminateDynamics,
                "linear solve residual " + fmt(residual) + " exceeds tolerance");
  }
  return qddot;
}

Vec5 chart_accelerations(const ChartState& chart, const VectorAccelerations& acc) {
  const Vec3 local = chart.frame.transpose() * acc.ndotdot;
  const double st = std::sin(chart.theta);
  const double ct = std::cos(chart.theta);
  const double cp = std::cos(chart.phi);
  const double sp = std::sin(chart.phi);
  const Vec3 e_theta(ct * cp, ct * sp, -st);
  const Vec3 e_phi(-sp, cp, 0.0);
  Vec5 out;
  out.head<3>() = acc.vdot;
  out[3] = local.dot(e_theta) + st * ct * chart.phi_dot * chart.phi_dot;
  out[4] = (local.dot(e_phi) - 2.0 * ct * chart.theta_dot * chart.phi_dot) / st;
  return out;
}

Vec3 projected_sphere_rhs(const RotatorParams& params, const RotatorState& state, const Vec3& p0,
                          double omega_prime) {
  const double omega = state.ndot.norm();
  if (!(omega > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "arc length is undefined for |ndot| = 0");
  }
  const Vec3 n_prime = state.ndot / omega;
  const Vec3 w = state.n.cross(n_prime);
  const double den = params.a1 * (params.m * params.c + p0.dot(state.n)) -
                     params.defect() * params.m * params.ell * omega;
  if (den == 0.0 || !std::isfinite(den)) {
    throw Error(ErrorCode::ZeroDenominator, "arc-length equation bracket vanishes");
  }
  const Vec3 rhs = (params.a1 * p0.dot(w) * w +
                    params.defect() * params.m * params.ell * omega_prime * n_prime) /
                   den;
  return rhs - state.n;
}

Regime select_regime(const RotatorParams& params, const FieldConfig& field) {
  if (!is_degenerate(params)) return Regime::NonDegenerate;
  if (!charged_in_field(params, field)) return Regime::DegenerateGauge;
  switch (field.kind) {
    case FieldKind::UniformE: return Regime::DegenerateEPlane;
    case FieldKind::UniformH: return Regime::DegenerateConstraint;
    default:
      throw Error(ErrorCode::UnsupportedDegenerateField,
                  std::string("charged defective rotator in a ") + field_kind_name(field.kind) +
                      " field has no supported closure of its equations of motion");
  }
}

Trajectory integrate(const RotatorParams& params, const RotatorState& initial,
                     const FieldConfig& field, const IntegratorConfig& cfg,
                     const std::optional<GaugeFrequency>& gauge) {
  require_common_speed(params, field);
  cfg.validate(initial.t);
  const double omega_start = initial.omega();
  if (!(omega_start > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "initial |ndot| must be positive");
  }
  const bool degenerate = is_degenerate(params);
  if (degenerate) {
    if (!gauge) {
      throw Error(ErrorCode::IndeterminateDynamics,
                  "a2 = a1^2 requires a gauge frequency Omega(t) to select one motion");
    }
    if (charged_in_field(params, field)) {
      const double residual = lorentz_constraint_residual(initial, field);
      if (!(std::abs(residual) < kStartConstraintTolerance)) {
        throw Error(ErrorCode::ConstraintViolatedAtStart,
                    "n.((v/c) x H + E) = " + fmt(residual) +
                        " at t0; a charged defective rotator must start on the constraint");
      }
    }
  }
  Trajectory traj;
  traj.regime = select_regime(params, field);
  if (degenerate) {
    gauge->validate(initial.t, cfg.t_end);
    if (traj.regime == Regime::DegenerateEPlane || traj.regime == Regime::DegenerateConstraint) {
      const double drift = constraint_rate_of_change(params, initial, field);
      if (!(std::abs(drift) < kStartConstraintTolerance)) {
        throw Error(ErrorCode::ConstraintViolatedAtStart,
                    "d/dt n.((v/c) x H + E) = " + fmt(drift) +
                        " at t0; the initial data leave the constraint surface");
      }
    }
    if (traj.regime != Regime::DegenerateConstraint) {
      const double g0 = gauge->omega(initial.t);
      if (std::abs(g0 - omega_start) > 1e-9 * std::max(1.0, omega_start)) {
        throw Error(ErrorCode::InvalidArgument, "gauge Omega(t0) = " + fmt(g0) +
                                                    " differs from |ndot(t0)| = " +
                                                    fmt(omega_start));
      }
    }
  }

  const double m = params.m;
  const double l = params.ell;
  const double a1 = params.a1;
  const bool arc_length_form =
      traj.regime == Regime::DegenerateGauge || traj.regime == Regime::DegenerateEPlane;

  // Arc-length form: y = (x, P, n, n') with P the kinetic momentum m v - a1 m l Omega n.
  // Vector form: y = (x, v, n, ndot).
  auto unpack_state = [&](double t, const Vec12& y) {
    RotatorState s;
    s.t = t;
    s.x = y.segment<3>(0);
    s.n = y.segment<3>(6);
    if (arc_length_form) {
      const double omega = gauge->omega(t);
      s.v = y.segment<3>(3) / m + a1 * l * omega * s.n;
      s.ndot = omega * y.segment<3>(9);
    } else {
      s.v = y.segment<3>(3);
      s.ndot = y.segment<3>(9);
    }
    return s;
  };

  auto rhs = [&](double t, const Vec12& y) -> Vec12 {
    const RotatorState s = unpack_state(t, y);
    if (traj.regime == Regime::NonDegenerate) {
      const VectorAccelerations acc = equations_of_motion(params, s, field);
      return pack(s.v, acc.vdot, s.ndot, acc.ndotdot);
    }
    if (traj.regime == Regime::DegenerateConstraint) {
      const std::optional<double> rate = constraint_preserving_rate(params, s, field);
      const VectorAccelerations acc =
          equations_of_motion_with_rate(params, s, field, rate ? *rate : gauge->rate(t));
      return pack(s.v, acc.vdot, s.ndot, acc.ndotdot);
    }
    const double omega = gauge->omega(t);
    const Vec3 kinetic = y.segment<3>(3);
    const Vec3 n_prime = y.segment<3>(9);
    Vec3 force = Vec3::Zero();
    Vec3 n_second = -s.n;
    if (traj.regime == Regime::DegenerateEPlane) {
      // The out-of-plane equation is replaced by the constraint force of n.E = 0.
      force = params.charge * lorentz_field(s, field);
    } else {
      if (params.charge != 0.0 && field.kind != FieldKind::None) {
        force = params.charge * lorentz_field(s, field);
      }
      n_second = projected_sphere_rhs(params, s, kinetic);
    }
    return pack(s.v, force, omega * n_prime, omega * n_second);
  };

  const double t0 = initial.t;
  const double window = cfg.t_end - t0;
  const auto steps = static_cast<std::size_t>(std::ceil(window / cfg.dt - 1e-9));

  Vec12 y;
  if (arc_length_form) {
    const Vec3 kinetic = m * initial.v - a1 * m * l * omega_start * initial.n;
    y = pack(initial.x, kinetic, initial.n, initial.ndot / omega_start);
  } else {
    y = pack(initial.x, initial.v, initial.n, initial.ndot);
  }

  traj.samples.reserve(steps + 1);
  auto record = [&](double t) {
    const RotatorState s = unpack_state(t, y);
    traj.samples.push_back({s, diagnose(params, s, field)});
  };
  record(t0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * cfg.dt;
    const double t_next = (k + 1 == steps) ? cfg.t_end : t0 + static_cast<double>(k + 1) * cfg.dt;
    if (traj.regime == Regime::DegenerateConstraint) {
      if (!constraint_preserving_rate(params, unpack_state(t, y), field)) {
        ++traj.gauge_fallback_steps;
      }
    }
    y = rk4_step(rhs, t, y, t_next - t);
    if (!y.allFinite()) {
      throw Error(ErrorCode::NonFiniteEvaluation, "integration produced non-finite state at t = " +
                                                      fmt(t_next));
    }
    Vec3 n = y.segment<3>(6);
    traj.max_sphere_drift = std::max(traj.max_sphere_drift, std::abs(n.norm() - 1.0));
    if ((k + 1) % static_cast<std::size_t>(cfg.renorm_every) == 0) {
      n.normalize();
      Vec3 tangent = y.segment<3>(9);
      tangent -= n.dot(tangent) * n;
      if (arc_length_form) tangent.normalize();
      y.segment<3>(6) = n;
      y.segment<3>(9) = tangent;
    }
    record(t_next);
  }
  return traj;
}

VerifyOptions verify_options_for(const RotatorParams& params, const FieldConfig& field) {
  VerifyOptions opts;
  if (is_degenerate(params) && charged_in_field(params, field) &&
      field.kind == FieldKind::UniformE) {
    opts.frame = frame_with_pole(field.E0);
    opts.mask = {true, true, true, false, true};
  }
  return opts;
}

namespace {

void accumulate(const RotatorParams& params, const FieldConfig& field, const VerifyOptions& opts,
                const std::array<RotatorState, 5>& stencil, double h, ResidualReport& report) {
  const RotatorState& center = stencil[2];
  const Mat3 frame = opts.frame ? *opts.frame : to_chart(center).frame;
  const ChartState chart = to_chart(center, frame);
  std::array<Vec5, 5> qdot;
  for (int i = 0; i < 5; ++i) qdot[i] = to_chart(stencil[i], frame).qdot();
  const Vec5 qddot = (qdot[0] - 8.0 * qdot[1] + 8.0 * qdot[3] - qdot[4]) / (12.0 * h);

  const numdiff::ELBlocks b =
      numdiff::el_blocks(mechanics::chart_lagrangian(params, field), chart, opts.diff);
  const Vec5 residual = b.A * qddot + b.B * chart.qdot() + b.c_t - b.g;
  for (int i = 0; i < 5; ++i) {
    if (!opts.mask[i]) continue;
    const double r = std::abs(residual[i]);
    report.max_abs[i] = std::max(report.max_abs[i], r);
    if (r > report.max) {
      report.max = r;
      report.worst_time = center.t;
    }
  }
  // x and n must also integrate to the stored velocities
  const auto d = [&](auto get) {
    return ((get(stencil[0]) - 8.0 * get(stencil[1]) + 8.0 * get(stencil[3]) - get(stencil[4])) /
            (12.0 * h))
        .eval();
  };
  const double kin =
      std::max((d([](const RotatorState& s) { return s.x; }) - center.v).norm(),
               (d([](const RotatorState& s) { return s.n; }) - center.ndot).norm());
  report.kinematic = std::max(report.kinematic, kin);
  if (kin > report.max) {
    report.max = kin;
    report.worst_time = center.t;
  }
  ++report.evaluated;
}

}  // namespace

ResidualReport verify_solution(const RotatorParams& params,
                               const std::vector<RotatorState>& states, const FieldConfig& field,
                               const VerifyOptions& opts) {
  ResidualReport report;
  if (states.size() < 5) return report;
  const std::size_t stride = std::max<std::size_t>(1, opts.stride);
  for (std::size_t i = 2; i + 2 < states.size(); i += stride) {
    const double h = states[i + 1].t - states[i].t;
    bool uniform = h > 0.0;
    for (std::size_t j = i - 2; j < i + 2 && uniform; ++j) {
      uniform = std::abs((states[j + 1].t - states[j].t) - h) <= 1e-9 * h;
    }
    if (!uniform) continue;
    const std::array<RotatorState, 5> stencil{states[i - 2], states[i - 1], states[i],
                                              states[i + 1], states[i + 2]};
    accumulate(params, field, opts, stencil, h, report);
  }
  return report;
}

ResidualReport verify_solution(const RotatorParams& params, const Trajectory& traj,
                               const FieldConfig& field, const VerifyOptions& opts) {
  std::vector<RotatorState> states;
  states.reserve(traj.samples.size());
  for (const auto& s : traj.samples) states.push_back(s.state);
  return verify_solution(params, states, field, opts);
}

ResidualReport verify_solution(const RotatorParams& params, const StateSampler& sampler,
                               double t0, double t1, int count, const FieldConfig& field,
                               const VerifyOptions& opts) {
  ResidualReport report;
  const double h = opts.sampler_step;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? t0 : t0 + (t1 - t0) * k / (count - 1);
    std::array<RotatorState, 5> stencil;
    for (int j = 0; j < 5; ++j) stencil[j] = sampler(t + (j - 2) * h);
    accumulate(params, field, opts, stencil, h, report);
  }
  return report;
}

}  // namespace rotator::dynamics
