#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "nqp/common.hpp"

// Chebyshev kernels on the first-kind (roots) grid. Degree n uses the n+1
// points t_j = cos(pi (j + 1/2) / (n + 1)); interpolation through them is
// exact for polynomials of degree <= n.
//
// Everything is precision-generic. The homological solvers run these in long
// double: transforms smear value-level roundoff into a flat coefficient floor,
// and the ellipse-weighted norms amplify a degree-n floor entry by rho^n, so
// the floor has to sit well below double roundoff for norm-level accuracy.

namespace nqp::cheb {

inline constexpr long double PI_L = 3.14159265358979323846264338327950288L;

template <class T>
struct scalar_of {
  using type = T;
};
template <class X>
struct scalar_of<std::complex<X>> {
  using type = X;
};
template <class T>
using scalar_of_t = typename scalar_of<T>::type;

inline std::vector<double> nodes(int degree) {
  const int n = degree + 1;
  std::vector<double> t(n);
  for (int j = 0; j < n; ++j) t[j] = static_cast<double>(std::cos(PI_L * (j + 0.5L) / n));
  return t;
}

inline std::vector<long double> nodes_l(int degree) {
  const int n = degree + 1;
  std::vector<long double> t(n);
  for (int j = 0; j < n; ++j) t[j] = std::cos(PI_L * (j + 0.5L) / n);
  return t;
}

/// Values at the roots grid -> Chebyshev coefficients, exact for degree < size.
/// The cos(a theta_j) table comes from the T_a recurrence at t_j = cos theta_j;
/// its O(n) error growth stays below the extended-precision budget.
template <class T>
std::vector<T> vals_to_coeffs(const std::vector<T>& v) {
  using S = scalar_of_t<T>;
  const int n = static_cast<int>(v.size());
  std::vector<T> c(n, T{});
  T acc{};
  for (int j = 0; j < n; ++j) acc += v[j];
  c[0] = acc * static_cast<S>(1.0L / n);
  if (n == 1) return c;
  std::vector<S> t(n), Tprev(n, S(1)), Tcur(n);
  for (int j = 0; j < n; ++j) {
    t[j] = static_cast<S>(std::cos(PI_L * (j + 0.5L) / n));
    Tcur[j] = t[j];
  }
  for (int a = 1; a < n; ++a) {
    acc = T{};
    for (int j = 0; j < n; ++j) acc += v[j] * Tcur[j];
    c[a] = acc * static_cast<S>(2.0L / n);
    if (a + 1 < n)
      for (int j = 0; j < n; ++j) {
        const S next = S(2) * t[j] * Tcur[j] - Tprev[j];
        Tprev[j] = Tcur[j];
        Tcur[j] = next;
      }
  }
  return c;
}

template <class T>
std::vector<T> coeffs_to_vals(const std::vector<T>& c) {
  using S = scalar_of_t<T>;
  const int n = static_cast<int>(c.size());
  std::vector<T> v(n, T{});
  for (int j = 0; j < n; ++j) {
    const S t = static_cast<S>(std::cos(PI_L * (j + 0.5L) / n));
    v[j] = clenshaw(c, t);
  }
  return v;
}

/// Clenshaw evaluation of sum c_a T_a(t); coefficients and argument may each be
/// real or complex, in either precision; the result type is their promotion.
template <class T, class S>
auto clenshaw(const T* c, int count, S t) -> decltype(T{} * S{} + T{}) {
  using R = decltype(T{} * S{} + T{});
  if (count == 0) return R{};
  R b1{}, b2{};
  const S two_t = t + t;
  for (int a = count - 1; a >= 1; --a) {
    R b0 = R(c[a]) + two_t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return R(c[0]) + t * b1 - b2;
}

template <class T, class S>
auto clenshaw(const std::vector<T>& c, S t) {
  return clenshaw(&c[0], static_cast<int>(c.size()), t);
}

/// Coefficients of d/dt of sum c_a T_a. Output has the same length (top entry zero).
template <class T>
std::vector<T> derivative(const std::vector<T>& c) {
  using S = scalar_of_t<T>;
  const int n = static_cast<int>(c.size());
  std::vector<T> d(n, T{});
  if (n <= 1) return d;
  for (int a = n - 1; a >= 1; --a) {
    T up = (a + 2 <= n - 1) ? d[a + 1] : T{};
    d[a - 1] = up + static_cast<S>(2.0 * a) * c[a];
  }
  d[0] *= static_cast<S>(0.5);
  return d;
}

/// Coefficients of the antiderivative, with the constant fixed so the result vanishes at t0.
template <class T, class S>
std::vector<T> antiderivative(const std::vector<T>& c, S t0) {
  using Sc = scalar_of_t<T>;
  const int n = static_cast<int>(c.size());
  std::vector<T> F(n + 1, T{});
  auto get = [&](int a) -> T { return (a >= 0 && a < n) ? c[a] : T{}; };
  // int T_0 = T_1, int T_1 = T_2/4, int T_a = T_{a+1}/(2a+2) - T_{a-1}/(2a-2)
  F[1] = get(0) - static_cast<Sc>(0.5) * get(2);
  for (int a = 2; a <= n; ++a) F[a] = (get(a - 1) - get(a + 1)) / static_cast<Sc>(2.0 * a);
  auto at0 = clenshaw(F, static_cast<Sc>(t0));
  F[0] -= at0;
  return F;
}

/// Integral of the interpolant over [-1, 1].
template <class T>
T integrate(const std::vector<T>& c) {
  using S = scalar_of_t<T>;
  T acc{};
  for (int a = 0; a < static_cast<int>(c.size()); a += 2)
    acc += c[a] * static_cast<S>(2.0 / (1.0 - static_cast<double>(a) * a));
  return acc;
}

/// Sample f on [lo, hi] at a fixed degree (roots grid); coefficients in the
/// scaled variable t in [-1, 1]; value type deduced from the sampler.
template <class F>
auto fit_fixed(F&& f, double lo, double hi, int degree) {
  using T = decltype(f(lo));
  using S = scalar_of_t<T>;
  const S c0 = static_cast<S>(0.5L * (static_cast<long double>(lo) + hi));
  const S h = static_cast<S>(0.5L * (static_cast<long double>(hi) - lo));
  const int n = degree + 1;
  std::vector<T> v(n);
  for (int j = 0; j < n; ++j) {
    const S t = static_cast<S>(std::cos(PI_L * (j + 0.5L) / n));
    v[j] = f(c0 + h * t);  // coordinate passed in the sampler's own precision
  }
  return vals_to_coeffs(v);
}

/// Node-doubling degree search: smallest probed degree at which two successive
/// interpolants agree to rtol and the coefficient tail has decayed.
template <class F>
int fit_degree(F&& f, double lo, double hi, double rtol, int n0, int nmax, const char* what) {
  using T = decltype(f(lo));
  auto sample = [&](int degree) { return fit_fixed(f, lo, hi, degree); };
  std::vector<T> prev = sample(n0);
  for (int deg = 2 * n0; deg <= nmax; deg *= 2) {
    std::vector<T> cur = sample(deg);
    double diff = 0, scale = 0;
    for (int j = 0; j <= 16; ++j) {
      const double t = static_cast<double>(std::cos(PI_L * (j + 0.5L) / 17.0L));
      const auto a = clenshaw(prev, static_cast<scalar_of_t<T>>(t));
      const auto b = clenshaw(cur, static_cast<scalar_of_t<T>>(t));
      diff = std::max(diff, static_cast<double>(std::abs(a - b)));
      scale = std::max(scale, static_cast<double>(std::abs(b)));
    }
    double tail = 0, head = 0;
    for (int a = 0; a < static_cast<int>(cur.size()); ++a) {
      const double m = static_cast<double>(std::abs(cur[a]));
      head = std::max(head, m);
      if (a >= 3 * static_cast<int>(cur.size()) / 4) tail = std::max(tail, m);
    }
    // relative acceptance: small data must be resolved as sharply as large
    const double ref = std::max(std::max(scale, head), 1e-300);
    if (diff <= rtol * ref && tail <= 10 * rtol * ref) return deg;
    prev = std::move(cur);
  }
  throw QuadratureError(rtol, what);
}

}  // namespace nqp::cheb
