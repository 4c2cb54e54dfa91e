#include "rotator/numdiff.hpp"

#include <array>
#include <cmath>
#include <span>

namespace rotator::numdiff {

namespace {

// Variables: q (0..4), qdot (5..9), t (10).
using Point = Eigen::Matrix<double, 11, 1>;
constexpr int kQ = 0;
constexpr int kQdot = 5;
constexpr int kTime = 10;

struct Tap {
  double offset;  // in units of h
  double weight;
};

constexpr std::array<Tap, 2> kFirst2{{{1.0, 0.5}, {-1.0, -0.5}}};
constexpr std::array<Tap, 4> kFirst4{
    {{2.0, -1.0 / 12.0}, {1.0, 8.0 / 12.0}, {-1.0, -8.0 / 12.0}, {-2.0, 1.0 / 12.0}}};
constexpr std::array<Tap, 3> kSecond2{{{1.0, 1.0}, {0.0, -2.0}, {-1.0, 1.0}}};
constexpr std::array<Tap, 5> kSecond4{{{2.0, -1.0 / 12.0},
                                       {1.0, 16.0 / 12.0},
                                       {0.0, -30.0 / 12.0},
                                       {-1.0, 16.0 / 12.0},
                                       {-2.0, -1.0 / 12.0}}};
constexpr std::array<Tap, 6> kFirst6{{{3.0, 1.0 / 60.0},
                                      {2.0, -9.0 / 60.0},
                                      {1.0, 45.0 / 60.0},
                                      {-1.0, -45.0 / 60.0},
                                      {-2.0, 9.0 / 60.0},
                                      {-3.0, -1.0 / 60.0}}};
constexpr std::array<Tap, 7> kSecond6{{{3.0, 2.0 / 180.0},
                                       {2.0, -27.0 / 180.0},
                                       {1.0, 270.0 / 180.0},
                                       {0.0, -490.0 / 180.0},
                                       {-1.0, 270.0 / 180.0},
                                       {-2.0, -27.0 / 180.0},
                                       {-3.0, 2.0 / 180.0}}};

std::span<const Tap> first_taps(Stencil order) {
  switch (order) {
    case Stencil::Central2: return kFirst2;
    case Stencil::Central4: return kFirst4;
    case Stencil::Central6: return kFirst6;
  }
  return kFirst2;
}

std::span<const Tap> second_taps(Stencil order) {
  switch (order) {
    case Stencil::Central2: return kSecond2;
    case Stencil::Central4: return kSecond4;
    case Stencil::Central6: return kSecond6;
  }
  return kSecond2;
}

class Probe {
 public:
  Probe(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg)
      : f_(f), frame_(s.frame), h_(cfg.step), order_(cfg.order) {
    cfg.validate();
    base_ << s.q(), s.qdot(), s.t;
  }

  double h() const { return h_; }

  double eval(const Point& z) const {
    const ChartState s = ChartState::from_coordinates(frame_, z.segment<5>(kQ),
                                                      z.segment<5>(kQdot), z[kTime]);
    const double value = f_(s);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteEvaluation,
                  "function returned a non-finite value at a stencil point");
    }
    return value;
  }

  double first(int i) const {
    double acc = 0.0;
    for (const Tap& tap : first_taps(order_)) {
      Point z = base_;
      z[i] += tap.offset * h_;
      acc += tap.weight * eval(z);
    }
    return acc / h_;
  }

  double second(int i) const {
    double acc = 0.0;
    for (const Tap& tap : second_taps(order_)) {
      Point z = base_;
      z[i] += tap.offset * h_;
      acc += tap.weight * eval(z);
    }
    return acc / (h_ * h_);
  }

  // Outer derivative along i of the inner derivative along j.
  double mixed(int i, int j) const {
    if (i == j) return second(i);
    double acc = 0.0;
    for (const Tap& outer : first_taps(order_)) {
      double inner_acc = 0.0;
      for (const Tap& inner : first_taps(order_)) {
        Point z = base_;
        z[i] += outer.offset * h_;
        z[j] += inner.offset * h_;
        inner_acc += inner.weight * eval(z);
      }
      acc += outer.weight * inner_acc;
    }
    return acc / (h_ * h_);
  }

 private:
  const ChartFunction& f_;
  Mat3 frame_;
  Point base_;
  double h_;
  Stencil order_;
};

}  // namespace

void DiffSettings::validate() const {
  if (!(step >= 1e-9 && step <= 1e-2)) {
    throw Error(ErrorCode::InvalidArgument, "finite-difference step must lie in [1e-9, 1e-2]");
  }
}

Vec5 grad_velocity(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg) {
  const Probe probe(f, s, cfg);
  Vec5 out;
  for (int i = 0; i < 5; ++i) out[i] = probe.first(kQdot + i);
  return out;
}

Vec5 grad_position(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg) {
  const Probe probe(f, s, cfg);
  Vec5 out;
  for (int i = 0; i < 5; ++i) out[i] = probe.first(kQ + i);
  return out;
}

Mat5 hessian_velocity_raw(const ChartFunction& f, const ChartState& s,
                          const DiffSettings& cfg) {
  const Probe probe(f, s, cfg);
  Mat5 out;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) out(i, j) = probe.mixed(kQdot + i, kQdot + j);
  }
  return out;
}

Mat5 hessian_velocity(const ChartFunction& f, const ChartState& s, const DiffSettings& cfg) {
  const Mat5 raw = hessian_velocity_raw(f, s, cfg);
  return 0.5 * (raw + raw.transpose());
}

ELBlocks el_blocks(const ChartFunction& L, const ChartState& s, const DiffSettings& cfg) {
  const Probe probe(L, s, cfg);
  ELBlocks out;
  for (int i = 0; i < 5; ++i) {
    for (int j = i; j < 5; ++j) {
      const double a = probe.mixed(kQdot + i, kQdot + j);
      out.A(i, j) = a;
      out.A(j, i) = a;
    }
    for (int j = 0; j < 5; ++j) out.B(i, j) = probe.mixed(kQ + j, kQdot + i);
    out.c_t[i] = probe.mixed(kTime, kQdot + i);
    out.g[i] = probe.first(kQ + i);
  }
  return out;
}

}  // namespace rotator::numdiff
