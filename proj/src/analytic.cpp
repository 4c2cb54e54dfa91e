#include "rotator/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <spdlog/spdlog.h>

namespace rotator::analytic {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Root of f in [lo, hi] with f(lo) f(hi) <= 0.
template <class F>
double bracketed_root(F f, double lo, double hi) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

// Quotient of the quartic by -(y - y_hi)(y - y_lo), as r2 y^2 + r1 y + r0.
struct Reduced {
  double r2, r1, r0;
  double operator()(double y) const { return (r2 * y + r1) * y + r0; }
};

Reduced reduce(const QuadratureSolution& sol) {
  const double mu = sol.mu;
  const double S = sol.y_hi + sol.y_lo;
  const double P = sol.y_hi * sol.y_lo;
  const double r2 = mu * mu;
  const double r1 = 2.0 * mu + r2 * S;
  const double r0 = (1.0 - mu * mu) - r2 * P + r1 * S;
  return {r2, r1, r0};
}

// int_{theta_y}^{pi/2} (1 + mu y) / sqrt(R(y)) dtheta with y = mid + half sin(theta).
double branch_integral(const QuadratureSolution& sol, double y) {
  const double mid = 0.5 * (sol.y_hi + sol.y_lo);
  const double half = 0.5 * (sol.y_hi - sol.y_lo);
  if (half <= 0.0) return 0.0;
  const double arg = std::clamp((y - mid) / half, -1.0, 1.0);
  const double theta_y = std::asin(arg);
  const Reduced red = reduce(sol);
  auto integrand = [&](double theta) {
    const double yy = mid + half * std::sin(theta);
    const double r = red(yy);
    if (!(r > 0.0)) {
      throw Error(ErrorCode::DomainExceeded,
                  "quartic has an interior root between the turning points");
    }
    return (1.0 + sol.mu * yy) / std::sqrt(r);
  };
  if (theta_y >= 0.5 * kPi) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, theta_y,
                                                                        0.5 * kPi, 15, 1e-12,
                                                                        &err);
}

}  // namespace

double mu_parameter(const RotatorParams& params, const Vec3& p0, double omega) {
  const double den = params.a1 * params.m * params.c - params.defect() * params.m * params.ell * omega;
  if (den == 0.0) {
    throw Error(ErrorCode::ZeroDenominator, "a1 m c - (a2 - a1^2) m l Omega vanishes");
  }
  return params.a1 * p0.norm() / den;
}

double QuadratureSolution::quartic(double y) const {
  const double m2 = mu * mu;
  return a_const * a_const + 2.0 * mu * y - (1.0 - m2) * y * y - 2.0 * mu * y * y * y -
         m2 * y * y * y * y;
}

double QuadratureSolution::half_period() const { return branch_integral(*this, y_lo); }

QuadratureSolution quadrature_solution(double mu, double y0, double y0_prime, const Vec3& p0) {
  if (!(std::abs(y0) <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "Y(0) must lie in [-1, 1]");
  }
  if (std::abs(mu) > 0.3) {
    spdlog::warn("mu = {} is large for the slow-motion regime", mu);
  }
  QuadratureSolution sol;
  sol.mu = mu;
  sol.p0 = p0;
  const double m2 = mu * mu;
  const double lead = (1.0 + mu * y0) * (1.0 + mu * y0) * y0_prime * y0_prime;
  const double rest = 2.0 * mu * y0 - (1.0 - m2) * y0 * y0 - 2.0 * mu * y0 * y0 * y0 -
                      m2 * y0 * y0 * y0 * y0;
  const double a2 = lead - rest;
  if (!(a2 >= 0.0)) {
    throw Error(ErrorCode::DomainExceeded, "negative a^2 from the initial data");
  }
  sol.a_const = std::sqrt(a2);

  // March out of Y(0) to bracket the nearest sign changes of the quartic.
  auto q = [&](double y) { return sol.quartic(y); };
  const double step = 1e-3;
  auto turning = [&](double dir) {
    double prev = y0;
    for (int k = 1; k <= 4000; ++k) {
      const double y = y0 + dir * step * k;
      if (q(y) < 0.0) {
        if (q(prev) <= 0.0) return prev;  // Y(0) sits on the turning point
        return bracketed_root(q, std::min(prev, y), std::max(prev, y));
      }
      prev = y;
    }
    throw Error(ErrorCode::DomainExceeded, "no turning point found for the quartic");
  };
  sol.y_hi = turning(1.0);
  sol.y_lo = turning(-1.0);

  // Offset of Y(0) along the decreasing branch; sign of Y'(0) picks the side.
  sol.s0 = 0.0;
  const double offset = branch_integral(sol, y0);
  sol.s0 = y0_prime <= 0.0 ? -offset : offset;

  const int n = 65;
  sol.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double theta = 0.5 * kPi - kPi * i / (n - 1);
    const double y = 0.5 * (sol.y_hi + sol.y_lo) + 0.5 * (sol.y_hi - sol.y_lo) * std::sin(theta);
    sol.samples.emplace_back(y, sol.s0 + branch_integral(sol, y));
  }
  return sol;
}

QuadratureSolution quadrature_solution(const RotatorParams& params, const Vec3& p0,
                                       const Vec3& n0, const Vec3& ndot0) {
  const double p_norm = p0.norm();
  if (!(p_norm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "p0 = 0: the path is a great circle, Y is undefined");
  }
  const double omega = ndot0.norm();
  if (!(omega > 0.0)) {
    throw Error(ErrorCode::NonRotatingState, "|ndot| = 0");
  }
  const Vec3 p_hat = p0 / p_norm;
  return quadrature_solution(mu_parameter(params, p0, omega), p_hat.dot(n0),
                             p_hat.dot(ndot0 / omega), p0);
}

double s_of_Y(const QuadratureSolution& sol, double y) {
  const double slack = 1e-12;
  if (y > sol.y_hi + slack || y < sol.y_lo - slack) {
    throw Error(ErrorCode::DomainExceeded, "Y = " + fmt(y) + " outside the turning points [" +
                                               fmt(sol.y_lo) + ", " + fmt(sol.y_hi) + "]");
  }
  return sol.s0 + branch_integral(sol, y);
}

double Y_of_s(const QuadratureSolution& sol, double s) {
  const double half = sol.half_period();
  const double period = 2.0 * half;
  double d = std::fmod(s - sol.s0, period);
  if (d < 0.0) d += period;
  if (d > half) d = period - d;
  auto f = [&](double y) { return branch_integral(sol, y) - d; };
  return bracketed_root(f, sol.y_lo, sol.y_hi);
}

double circle_approximation(const QuadratureSolution& sol, double s) {
  return sol.mu + (sol.y_hi - sol.mu) * std::cos(s - sol.s0);
}

double example1_z_coefficient(const RotatorParams& params, double E0) {
  return 0.5 * params.charge * E0 / params.m;
}

FieldConfig Example1Family::field() const {
  FieldConfig f = FieldConfig::uniform_e(Vec3(0.0, 0.0, E0));
  f.c = params.c;
  return f;
}

RotatorState Example1Family::state(double t) const {
  const double psi_t = psi.value(t);
  const double rate = psi.rate(t);
  if (sign(rate) != epsilon) {
    throw Error(ErrorCode::DomainExceeded,
                "psi is not monotone at t = " + fmt(t) + "; epsilon would change sign");
  }
  const double l = params.a1 * params.ell * epsilon;
  const double cp = std::cos(psi_t);
  const double sp = std::sin(psi_t);
  RotatorState s;
  s.t = t;
  s.x = x0 + v0 * t + Vec3(l * sp, -l * cp, z_coefficient * t * t);
  s.v = v0 + Vec3(l * rate * cp, l * rate * sp, 2.0 * z_coefficient * t);
  s.n = Vec3(cp, sp, 0.0);
  s.ndot = rate * Vec3(-sp, cp, 0.0);
  return s;
}

StateSampler Example1Family::sampler() const {
  return [family = *this](double t) { return family.state(t); };
}

Example1Family example1_family(const RotatorParams& params, double E0, const Vec3& x0,
                               const Vec3& v0, AngleFunction psi,
                               std::optional<double> z_coefficient) {
  if (!is_degenerate(params)) {
    throw Error(ErrorCode::NonDegenerateSystem, "the family exists only for a2 = a1^2");
  }
  if (!psi.value || !psi.rate) {
    throw Error(ErrorCode::InvalidArgument, "psi needs value and rate");
  }
  Example1Family fam;
  fam.params = params;
  fam.E0 = E0;
  fam.x0 = x0;
  fam.v0 = v0;
  fam.psi = std::move(psi);
  fam.epsilon = sign(fam.psi.rate(0.0));
  if (fam.epsilon == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "psi must rotate at t = 0");
  }
  fam.z_coefficient = z_coefficient ? *z_coefficient : example1_z_coefficient(params, E0);
  return fam;
}

double larmor_frequency(const RotatorParams& params, const Vec3& H0) {
  return std::abs(params.charge) * H0.norm() / (params.m * params.c);
}

FieldConfig HelicalSolution::field() const {
  FieldConfig f = FieldConfig::uniform_h(H0);
  f.c = params.c;
  return f;
}

RotatorState HelicalSolution::state(double t) const {
  const double ph = omega * t;
  const double c = std::cos(ph);
  const double s = std::sin(ph);
  const double ca = std::cos(alpha);
  RotatorState out;
  out.t = t;
  out.x = x0 + frame * Vec3(-R * s, R * c, v_axial * t);
  out.v = frame * Vec3(-R * omega * c, -R * omega * s, v_axial);
  out.n = frame * Vec3(ca * c, ca * s, std::sin(alpha));
  out.ndot = frame * Vec3(-ca * omega * s, ca * omega * c, 0.0);
  return out;
}

StateSampler HelicalSolution::sampler() const {
  return [sol = *this](double t) { return sol.state(t); };
}

double HelicalSolution::max_speed() const {
  return std::hypot(R * omega, v_axial);
}

namespace {

HelicalSolution helix_base(const RotatorParams& params, double R, double alpha, const Vec3& H0,
                           const Vec3& x0) {
  if (!is_degenerate(params)) {
    throw Error(ErrorCode::NonDegenerateSystem, "the helical solution needs a2 = a1^2");
  }
  if (!(params.charge < 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "the helical solution needs charge e = -Q < 0");
  }
  if (!(R > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "R must be positive");
  }
  HelicalSolution sol;
  sol.params = params;
  sol.R = R;
  sol.alpha = alpha;
  sol.Q = -params.charge;
  sol.H0 = H0;
  sol.x0 = x0;
  sol.frame = frame_with_pole(H0);
  sol.omega_L = larmor_frequency(params, H0);
  return sol;
}

}  // namespace

HelicalSolution example2_helix(const RotatorParams& params, double R, double alpha,
                               const Vec3& H0, const Vec3& x0) {
  HelicalSolution sol = helix_base(params, R, alpha, H0, x0);
  const double ca = std::cos(alpha);
  const double l = params.ell;
  if (params.a1 < 0.0 && R <= -params.a1 * l * ca * ca) {
    throw Error(ErrorCode::FrequencySignViolation,
                "R <= -a1 l cos^2(alpha): the frequency would not be positive");
  }
  const double den = params.a1 * (l / R) * ca * ca + 1.0;
  sol.omega = sol.omega_L / den;
  const double c = params.c;
  const double cos2a = std::cos(2.0 * alpha);
  if (cos2a == 0.0) {
    throw Error(ErrorCode::ZeroDenominator, "cos(2 alpha) = 0");
  }
  sol.v_axial = c * std::sin(alpha) / cos2a *
                (1.0 - 2.0 * (R * sol.omega / c) * (1.0 + params.a1 * l / (2.0 * R)) * ca);
  sol.fast = sol.max_speed() > 0.1 * c;
  if (sol.fast) {
    spdlog::warn("helix speed {} exceeds 0.1 c", sol.max_speed());
  }
  return sol;
}

HelicalSolution planar_corotating(const RotatorParams& params, double R, double omega,
                                  const Vec3& H0, const Vec3& x0) {
  HelicalSolution sol = helix_base(params, R, 0.0, H0, x0);
  sol.omega = omega;
  sol.v_axial = 0.0;
  sol.fast = sol.max_speed() > 0.1 * params.c;
  return sol;
}

std::pair<PlanarBranch, PlanarBranch> example2_planar_frequencies(const RotatorParams& params,
                                                                  double R, double omega_L) {
  const double k = params.a1 * params.ell / R;
  auto admissible = [&](double w) {
    const double lhs = -params.a1 * params.ell * w;
    const double rhs = R * std::abs(w);
    return std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
  };
  PlanarBranch first;
  first.valid = R > 0.0 && R > -params.a1 * params.ell;
  first.omega = (1.0 + k) != 0.0 ? omega_L / (1.0 + k) : std::numeric_limits<double>::infinity();
  first.nullifying_admissible = admissible(first.omega);
  PlanarBranch second;
  second.valid = R > 0.0 && R < params.a1 * params.ell;
  second.omega = (1.0 - k) != 0.0 ? omega_L / (1.0 - k) : std::numeric_limits<double>::infinity();
  second.nullifying_admissible = admissible(second.omega);
  return {first, second};
}

double planar_hessian_constraint(double r, double rdot, double psi, double psidot, double phi) {
  return rdot * std::cos(phi - psi) + r * psidot * std::sin(phi - psi);
}

}  // namespace rotator::analytic
