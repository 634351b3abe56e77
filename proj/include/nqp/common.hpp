#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace nqp {

using cplx = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846264338327950288;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A field failed its invariant at construction/parse time. Carries the field name.
struct ValidationError : Error {
  std::string field;
  ValidationError(std::string fld, const std::string& msg)
      : Error("validation: " + fld + ": " + msg), field(std::move(fld)) {}
};

/// A denominator series dipped below the modulus floor on the collocation grid.
struct VanishingDenominator : Error {
  double value;
  VanishingDenominator(double val, const std::string& where)
      : Error("vanishing denominator (|value| = " + std::to_string(val) + ") at " + where),
        value(val) {}
};

/// Node-doubling did not converge to the requested tolerance.
struct QuadratureError : Error {
  double residual;
  QuadratureError(double res, const std::string& what)
      : Error("quadrature did not converge (" + what + ", residual " + std::to_string(res) + ")"),
        residual(res) {}
};

/// Strict truncation policy: a product overflowed the hard caps.
struct CapOverflow : Error {
  double discarded;
  explicit CapOverflow(double mass)
      : Error("truncation cap overflow, discarded coefficient mass " + std::to_string(mass)),
        discarded(mass) {}
};

/// Lie series contraction parameter at or above the configured limit.
struct DivergenceRisk : Error {
  double q;
  explicit DivergenceRisk(double q_)
      : Error("Lie series divergence risk: q = " + std::to_string(q_)), q(q_) {}
};

/// A step-lemma gate failed. Carries the name of the violated condition.
struct GateFailure : Error {
  std::string condition;
  double lhs, rhs;
  GateFailure(std::string cond, double l, double r)
      : Error("gate failure: " + cond + " (lhs " + std::to_string(l) + " vs " + std::to_string(r) + ")"),
        condition(std::move(cond)), lhs(l), rhs(r) {}
};

/// Domain/weight shrink produced a non-positive width.
struct DomainExhausted : Error {
  explicit DomainExhausted(const std::string& what) : Error("domain exhausted: " + what) {}
};

/// A trajectory left the real base domain.
struct DomainEscape : Error {
  double time;
  DomainEscape(double t, const std::string& what)
      : Error("trajectory escaped the base domain at t = " + std::to_string(t) + " (" + what + ")"),
        time(t) {}
};

}  // namespace nqp
