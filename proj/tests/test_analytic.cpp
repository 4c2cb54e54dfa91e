#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rotator/analytic.hpp"
#include "rotator/dynamics.hpp"
#include "rotator/mechanics.hpp"
#include "support.hpp"

using namespace rotator;
using namespace rotator::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

RotatorParams natural(double a1, double a2, double ell = 1.0, double charge = 0.0) {
  return RotatorParams::make(1, ell, 1, a1, a2, charge);
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rotator::Error thrown";
  return ErrorCode::InvalidArgument;
}

double circle_deviation(const analytic::QuadratureSolution& q) {
  double d = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double s = q.s0 + q.period() * i / 2000.0;
    d = std::max(d, std::abs(analytic::Y_of_s(q, s) - analytic::circle_approximation(q, s)));
  }
  return d;
}

analytic::AngleFunction angle(std::function<double(double)> v, std::function<double(double)> r) {
  return {std::move(v), std::move(r)};
}

}  // namespace

TEST(Mu, Values) {
  EXPECT_EQ(analytic::mu_parameter(natural(-1, 2), Vec3::Zero(), 0.3), 0.0);
  const Vec3 p0(0.03, 0.04, 0.0);
  const auto deg = RotatorParams::make(1.5, 0.7, 2.0, -1, 1);
  EXPECT_NEAR(analytic::mu_parameter(deg, p0, 0.2), 0.05 / 3.0, 1e-16);
  EXPECT_EQ(analytic::mu_parameter(deg, p0, 0.2), analytic::mu_parameter(deg, p0, 1.7));
  EXPECT_NEAR(analytic::mu_parameter(natural(-1, 2), Vec3(0.05, 0, 0), 0.1), 0.05 / 1.1, 1e-16);
  EXPECT_EQ(code_of([] { analytic::mu_parameter(natural(1, 2), Vec3(0.05, 0, 0), 1.0); }),
            ErrorCode::ZeroDenominator);
}

TEST(Quadrature, GreatCircleWhenMuVanishes) {
  const auto q = analytic::quadrature_solution(0.0, 0.3, 0.4);
  EXPECT_NEAR(q.a_const, 0.5, 1e-15);
  EXPECT_NEAR(q.y_hi, 0.5, 1e-12);
  EXPECT_NEAR(q.y_lo, -0.5, 1e-12);
  EXPECT_NEAR(q.period(), 2 * kPi, 1e-10);
  for (int i = 0; i < 50; ++i) {
    const double s = -3.0 + 0.25 * i;
    EXPECT_NEAR(analytic::Y_of_s(q, s), 0.5 * std::cos(s - q.s0), 1e-10);
  }
  // Y(0) = 0.3 with Y'(0) = 0.4 > 0: climbing towards y_hi
  EXPECT_NEAR(analytic::Y_of_s(q, 0.0), 0.3, 1e-10);
  EXPECT_GT(analytic::Y_of_s(q, 1e-3), 0.3);
}

TEST(Quadrature, InversionRoundTripAndMonotoneTable) {
  const auto q = analytic::quadrature_solution(0.08, 0.2, -0.3);
  for (std::size_t i = 1; i < q.samples.size(); ++i) {
    EXPECT_LT(q.samples[i].first, q.samples[i - 1].first);
    EXPECT_GT(q.samples[i].second, q.samples[i - 1].second);
  }
  for (int i = 1; i < 40; ++i) {
    const double y = q.y_lo + (q.y_hi - q.y_lo) * i / 40.0;
    EXPECT_NEAR(analytic::Y_of_s(q, analytic::s_of_Y(q, y)), y, 1e-10);
  }
  EXPECT_NEAR(analytic::Y_of_s(q, 0.0), 0.2, 1e-10);
}

TEST(Quadrature, OutsideTurningPoints) {
  const auto q = analytic::quadrature_solution(0.05, 0.3, 0.1);
  EXPECT_EQ(code_of([&] { analytic::s_of_Y(q, q.y_hi + 1e-6); }), ErrorCode::DomainExceeded);
  EXPECT_EQ(code_of([&] { analytic::s_of_Y(q, q.y_lo - 1e-6); }), ErrorCode::DomainExceeded);
  EXPECT_EQ(code_of([] { analytic::quadrature_solution(0.05, 1.2, 0.0); }),
            ErrorCode::InvalidArgument);
}

TEST(Quadrature, StartOnTurningPoint) {
  const auto q = analytic::quadrature_solution(0.05, 0.6, 0.0);
  EXPECT_NEAR(q.y_hi, 0.6, 1e-12);
  EXPECT_NEAR(analytic::Y_of_s(q, 0.0), 0.6, 1e-10);
}

// (1 + mu Y) Y'' + mu Y'^2 + (1 + 2 mu Y) Y - mu = 0 by central differences.
TEST(Quadrature, SatisfiesArcLengthOde) {
  for (double mu : {0.02, 0.05, 0.1}) {
    const auto q = analytic::quadrature_solution(mu, 0.4, 0.2);
    const double h = 1e-3;
    for (int i = 0; i < 60; ++i) {
      const double s = 0.11 * i;
      const double y = analytic::Y_of_s(q, s);
      const double yp = (analytic::Y_of_s(q, s + h) - analytic::Y_of_s(q, s - h)) / (2 * h);
      const double ypp =
          (analytic::Y_of_s(q, s + h) - 2 * y + analytic::Y_of_s(q, s - h)) / (h * h);
      EXPECT_LT(std::abs((1 + mu * y) * ypp + mu * yp * yp + (1 + 2 * mu * y) * y - mu), 1e-6)
          << "mu " << mu << " s " << s;
    }
  }
}

// Second order holds while a^2 is O(mu); the deviation ratio under halving is ~4.
TEST(Quadrature, CircleApproximationSecondOrder) {
  for (double k : {0.5, 1.0, 2.0}) {
    const double mu = 0.05;
    const double d1 = circle_deviation(analytic::quadrature_solution(mu, std::sqrt(k * mu), 0.0));
    const double d2 =
        circle_deviation(analytic::quadrature_solution(mu / 2, std::sqrt(k * mu / 2), 0.0));
    EXPECT_LT(d1, 4 * k * mu * mu);
    EXPECT_NEAR(d1 / d2, 4.0, 0.3);
  }
}

// With a = O(1) the turning points are centred on mu (1 - a^2), not mu: the circle
// misses by about mu a^2 and the error only halves with mu.
TEST(Quadrature, CircleApproximationLargeAmplitude) {
  const double a = 0.5;
  for (double mu : {0.05, 0.025}) {
    const auto q = analytic::quadrature_solution(mu, a, 0.0);
    EXPECT_NEAR(0.5 * (q.y_hi + q.y_lo), mu * (1 - a * a), 3 * mu * mu);
  }
  const double d1 = circle_deviation(analytic::quadrature_solution(0.05, a, 0.0));
  const double d2 = circle_deviation(analytic::quadrature_solution(0.025, a, 0.0));
  EXPECT_GT(d1, 5e-3);
  EXPECT_NEAR(d1 / d2, 2.0, 0.3);
}

TEST(Quadrature, FromFreeState) {
  const auto p = natural(-1, 2);
  const Vec3 p0(0.03, 0.0, 0.04);
  const Vec3 n0 = Vec3::UnitX();
  const Vec3 nd(0, 0.5, 0);
  const auto q = analytic::quadrature_solution(p, p0, n0, nd);
  EXPECT_NEAR(q.mu, analytic::mu_parameter(p, p0, 0.5), 1e-16);
  EXPECT_NEAR(analytic::Y_of_s(q, 0.0), 0.6, 1e-10);
  EXPECT_EQ(code_of([&] { analytic::quadrature_solution(p, Vec3::Zero(), n0, nd); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { analytic::quadrature_solution(p, p0, n0, Vec3::Zero()); }),
            ErrorCode::NonRotatingState);
}

TEST(Example1, UniformRotationWithoutField) {
  const auto p = natural(-1, 1, 0.1, 1.0);
  const double w = 0.6;
  const auto fam = analytic::example1_family(
      p, 0.0, Vec3::Zero(), Vec3(0.01, 0, 0),
      angle([w](double t) { return w * t; }, [w](double) { return w; }));
  EXPECT_LT(dynamics::verify_solution(p, fam.sampler(), 0, 10, 101, fam.field(),
                                      dynamics::verify_options_for(p, fam.field()))
                .max,
            1e-6);
}

TEST(Example1, SineAngleInField) {
  const auto p = natural(-1, 1, 0.1, 1.0);
  const auto fam = analytic::example1_family(
      p, 0.01, Vec3::Zero(), Vec3::Zero(),
      angle([](double t) { return std::sin(t); }, [](double t) { return std::cos(t); }));
  EXPECT_DOUBLE_EQ(fam.z_coefficient, 0.005);
  // sin t is monotone on [0, pi/2) only
  EXPECT_LT(dynamics::verify_solution(p, fam.sampler(), 0.0, 1.4, 57, fam.field(),
                                      dynamics::verify_options_for(p, fam.field()))
                .max,
            1e-6);
  EXPECT_EQ(code_of([&] { fam.state(2.0); }), ErrorCode::DomainExceeded);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(fam.state(0.07 * i).n.dot(fam.field().E0), 0.0);
  }
}

// The force balance along E fixes z = e E t^2 / (2m); twice that fails the z equation.
TEST(Example1, QuadraticCoefficient) {
  const auto p = natural(-1, 1, 0.1, 1.0);
  auto psi = angle([](double t) { return 0.5 * t + std::sin(0.3 * t); },
                   [](double t) { return 0.5 + 0.3 * std::cos(0.3 * t); });
  const double E0 = 0.02;
  const auto good = analytic::example1_family(p, E0, Vec3::Zero(), Vec3::Zero(), psi);
  const auto doubled = analytic::example1_family(p, E0, Vec3::Zero(), Vec3::Zero(), psi,
                                                 p.charge * E0 / p.m);
  const auto opts = dynamics::verify_options_for(p, good.field());
  const auto rg = dynamics::verify_solution(p, good.sampler(), 0, 10, 101, good.field(), opts);
  const auto rd = dynamics::verify_solution(p, doubled.sampler(), 0, 10, 101, good.field(), opts);
  EXPECT_LT(rg.max, 1e-6);
  EXPECT_NEAR(rd.max_abs[2], p.charge * E0, 1e-6);
}

TEST(Example1, SameStartDifferentMotion) {
  const auto p = natural(-1, 1, 0.1, 1.0);
  const auto a = analytic::example1_family(
      p, 0.01, Vec3::Zero(), Vec3::Zero(),
      angle([](double t) { return t; }, [](double) { return 1.0; }));
  const auto b = analytic::example1_family(
      p, 0.01, Vec3::Zero(), Vec3::Zero(),
      angle([](double t) { return t + 0.1 * t * t; }, [](double t) { return 1.0 + 0.2 * t; }));
  const auto sa = a.state(0.0), sb = b.state(0.0);
  EXPECT_LT((sa.x - sb.x).norm() + (sa.v - sb.v).norm() + (sa.n - sb.n).norm() +
                (sa.ndot - sb.ndot).norm(),
            1e-15);
  EXPECT_GT((a.state(3.0).n - b.state(3.0).n).norm(), 0.1);
}

TEST(Example1, Preconditions) {
  auto psi = angle([](double t) { return t; }, [](double) { return 1.0; });
  EXPECT_EQ(code_of([&] { analytic::example1_family(natural(-1, 2, 1, 1), 0.1, {}, {}, psi); }),
            ErrorCode::NonDegenerateSystem);
  auto still = angle([](double) { return 0.0; }, [](double) { return 0.0; });
  EXPECT_EQ(code_of([&] { analytic::example1_family(natural(-1, 1, 1, 1), 0.1, {}, {}, still); }),
            ErrorCode::InvalidArgument);
}

TEST(Example2, HelixFrequencyAndResiduals) {
  const auto p = natural(-1, 1, 0.01, -1.0);
  const Vec3 H0(0, 0, 0.1);
  EXPECT_NEAR(analytic::larmor_frequency(p, H0), 0.1, 1e-16);
  const auto h = analytic::example2_helix(p, 1.0, 0.0, H0);
  EXPECT_NEAR(h.omega, 0.1 / 0.99, 1e-15);
  EXPECT_LT(dynamics::verify_solution(p, h.sampler(), 0, 60, 121, h.field()).max, 1e-6);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LT(std::abs(mechanics::lorentz_constraint_residual(h.state(0.6 * i), h.field())),
              1e-9);
  }
}

TEST(Example2, TiltedHelixInRotatedField) {
  const auto p = natural(-1, 1, 0.1, -0.5);
  const Vec3 H0 = Vec3(0.3, -0.2, 0.9).normalized() * 0.2;
  const auto h = analytic::example2_helix(p, 1.5, 0.02, H0, Vec3(1, 2, 3));
  EXPECT_LT(dynamics::verify_solution(p, h.sampler(), 0, 30, 61, h.field()).max, 1e-6);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LT(std::abs(mechanics::lorentz_constraint_residual(h.state(0.3 * i), h.field())),
              1e-9);
  }
}

TEST(Example2, WeakFieldLimitIsInertial) {
  const auto p = natural(-1, 1, 0.1, -1.0);
  double prev = 1.0;
  for (double H : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto h = analytic::example2_helix(p, 1.0, 0.0, Vec3(0, 0, H));
    EXPECT_LT(h.omega, prev);
    prev = h.omega;
    const auto s0 = h.state(0.0), s1 = h.state(1.0);
    EXPECT_LT((s1.n - s0.n).norm(), 2 * h.omega);
  }
  EXPECT_LT(prev, 2e-4);
}

TEST(Example2, Preconditions) {
  const Vec3 H0(0, 0, 0.1);
  EXPECT_EQ(code_of([&] { analytic::example2_helix(natural(-1, 1, 0.1, -1), 0.05, 0.0, H0); }),
            ErrorCode::FrequencySignViolation);
  EXPECT_EQ(code_of([&] { analytic::example2_helix(natural(-1, 1, 0.1, 1), 1.0, 0.0, H0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { analytic::example2_helix(natural(-1, 2, 0.1, -1), 1.0, 0.0, H0); }),
            ErrorCode::NonDegenerateSystem);
}

TEST(Example2, PlanarBranches) {
  const auto p = natural(-1, 1, 0.1, -1.0);
  const auto [first, second] = analytic::example2_planar_frequencies(p, 1.0, 0.1);
  EXPECT_TRUE(first.valid);
  EXPECT_NEAR(first.omega, 0.1 / 0.9, 1e-15);
  EXPECT_FALSE(second.valid);
  EXPECT_FALSE(first.nullifying_admissible);
  EXPECT_FALSE(second.nullifying_admissible);

  // a1 > 0 and a small radius open the second window
  const auto q = natural(1, 1, 0.1, -1.0);
  const auto [f2, s2] = analytic::example2_planar_frequencies(q, 0.05, 0.1);
  EXPECT_TRUE(s2.valid);
  EXPECT_NEAR(s2.omega, 0.1 / (1 - 2.0), 1e-15);
  EXPECT_FALSE(s2.nullifying_admissible);
  EXPECT_FALSE(f2.nullifying_admissible);
}

TEST(Example2, CorotatingAnsatzSatisfiesPlanarConstraint) {
  for (double t = 0; t < 10; t += 0.37) {
    const double phi = 0.3 * t;
    EXPECT_EQ(analytic::planar_hessian_constraint(1.0, 0.0, phi, 0.3, phi), 0.0);
  }
  // a radial velocity with psi = phi breaks it
  EXPECT_NE(analytic::planar_hessian_constraint(1.0, 0.1, 0.2, 0.3, 0.2), 0.0);
}

TEST(Example2, PlanarFirstBranchSolvesEquations) {
  const auto p = natural(-1, 1, 0.1, -1.0);
  const Vec3 H0(0, 0, 0.1);
  const auto [first, second] = analytic::example2_planar_frequencies(p, 1.0, 0.1);
  const auto sol = analytic::planar_corotating(p, 1.0, first.omega, H0);
  EXPECT_LT(dynamics::verify_solution(p, sol.sampler(), 0, 50, 101, sol.field()).max, 1e-6);
  const auto off = analytic::planar_corotating(p, 1.0, 1.05 * first.omega, H0);
  EXPECT_GT(dynamics::verify_solution(p, off.sampler(), 0, 50, 101, off.field()).max, 1e-4);
}
