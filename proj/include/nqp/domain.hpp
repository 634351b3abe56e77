#pragma once

#include <cmath>
#include <string>

#include "nqp/common.hpp"

namespace nqp {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double half_length() const { return 0.5 * (hi - lo); }
  double center() const { return 0.5 * (hi + lo); }
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  /// affine map to the Chebyshev variable t in [-1, 1]
  double to_unit(double x) const { return (x - center()) / half_length(); }
  cplx to_unit(cplx x) const { return (x - center()) / half_length(); }
  double from_unit(double t) const { return center() + half_length() * t; }

  void validate(const std::string& name) const {
    if (!(lo < hi)) throw ValidationError(name, "requires lo < hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ValidationError(name, "non-finite bound");
  }
};

inline bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }

/// Base intervals plus complexification widths. The width fields name the
/// direction they thicken: r (I), sigma (y), s (phi strip), xi (x), delta
/// (polydisc radius for the p,q pair). The x/p/q fields are meaningful only in
/// Hamiltonian mode.
struct DomainSpec {
  Interval I_base{0.0, 1.0};
  Interval y_base{0.0, 1.0};
  Interval x_base{0.0, 1.0};
  double r = 0.0;
  double sigma = 0.0;
  double s = 0.0;
  double xi = 0.0;
  double delta = 0.0;
  bool hamiltonian = false;

  void validate() const {
    I_base.validate("I_base");
    y_base.validate("y_base");
    if (!(r > 0)) throw ValidationError("r", "width must be > 0");
    if (!(sigma > 0)) throw ValidationError("sigma", "width must be > 0");
    if (!(s > 0)) throw ValidationError("s", "width must be > 0");
    if (hamiltonian) {
      x_base.validate("x_base");
      if (!(xi > 0)) throw ValidationError("xi", "width must be > 0");
      if (!(delta > 0)) throw ValidationError("delta", "width must be > 0");
    }
  }
};

/// base geometry match (what series algebra requires); widths may differ
inline bool same_geometry(const DomainSpec& a, const DomainSpec& b) {
  if (!(a.I_base == b.I_base && a.y_base == b.y_base)) return false;
  if (a.hamiltonian != b.hamiltonian) return false;
  if (a.hamiltonian && !(a.x_base == b.x_base)) return false;
  return true;
}

struct Weights {
  double rho = 1.0;
  double tau = 1.0;
  double t = 1.0;

  void validate() const {
    if (!(rho > 0)) throw ValidationError("rho", "weight must be > 0");
    if (!(tau > 0)) throw ValidationError("tau", "weight must be > 0");
    if (!(t > 0)) throw ValidationError("t", "weight must be > 0");
  }
};

inline Weights operator*(double a, const Weights& w) { return {a * w.rho, a * w.tau, a * w.t}; }
inline Weights operator/(const Weights& w, double a) { return {w.rho / a, w.tau / a, w.t / a}; }

/// widen/shrink the (r, sigma, s) widths of a vector-field domain by the weights
inline DomainSpec widen(const DomainSpec& u, const Weights& w) {
  DomainSpec out = u;
  out.r += w.rho;
  out.sigma += w.tau;
  out.s += w.t;
  return out;
}

inline DomainSpec shrink(const DomainSpec& u, const Weights& w) {
  DomainSpec out = u;
  out.r -= w.rho;
  out.sigma -= w.tau;
  out.s -= w.t;
  if (!(out.r > 0 && out.sigma > 0 && out.s > 0))
    throw DomainExhausted("shrink(u, w) produced a non-positive width");
  return out;
}

}  // namespace nqp
