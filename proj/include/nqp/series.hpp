#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nqp/cheb.hpp"
#include "nqp/common.hpp"
#include "nqp/domain.hpp"

namespace nqp {

/// Hard caps applied by products. Discarded coefficient mass is accumulated on
/// the result as a diagnostic; a strict policy turns overflow into an error.
/// clean_rel trims coefficients below it (relative to the largest) after each
/// product, shrinking the stored support to where content is genuine; without
/// it, roundoff-floor entries at high degrees poison the ellipse-weighted
/// norms, which amplify degree n by rho^n.
struct TruncationPolicy {
  int kmax_cap = 64;
  int dI_cap = 96;
  int dy_cap = 96;
  int dx_cap = 96;
  int pq_cap = 16;
  double clean_rel = 0.0;   // products keep everything unless a policy opts in
  bool strict = false;
};

inline TruncationPolicy& default_policy() {
  static TruncationPolicy p;
  return p;
}

enum class Var { I, y, phi };

/// Truncated Fourier(phi) x Chebyshev(I) x Chebyshev(y) series,
/// f = sum_{k,a,b} c[k][a][b] T_a(I^) T_b(y^) e^{i k phi}.
struct FTSeries {
  DomainSpec domain;
  int kmax = 0;
  int dI = 0;
  int dy = 0;
  bool is_real = false;
  double discarded = 0.0;
  std::vector<cplx> coeff;

  FTSeries() = default;
  FTSeries(DomainSpec dom, int kmax_, int dI_, int dy_)
      : domain(std::move(dom)), kmax(kmax_), dI(dI_), dy(dy_),
        coeff(static_cast<size_t>(2 * kmax_ + 1) * (dI_ + 1) * (dy_ + 1), cplx{}) {}

  size_t idx(int k, int a, int b) const {
    return (static_cast<size_t>(k + kmax) * (dI + 1) + a) * (dy + 1) + b;
  }
  cplx& c(int k, int a, int b) { return coeff[idx(k, a, b)]; }
  const cplx& c(int k, int a, int b) const { return coeff[idx(k, a, b)]; }
  /// coefficient with out-of-range indices reading as zero
  cplx at(int k, int a, int b) const {
    if (std::abs(k) > kmax || a < 0 || a > dI || b < 0 || b > dy) return {};
    return coeff[idx(k, a, b)];
  }

  double max_abs() const {
    double m = 0;
    for (const auto& z : coeff) m = std::max(m, std::abs(z));
    return m;
  }
  double mass() const {
    double m = 0;
    for (const auto& z : coeff) m += std::abs(z);
    return m;
  }
};

namespace detail {

inline void enforce_reality(FTSeries& f) {
  for (int k = 1; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b) {
        cplx avg = 0.5 * (f.c(k, a, b) + std::conj(f.c(-k, a, b)));
        f.c(k, a, b) = avg;
        f.c(-k, a, b) = std::conj(avg);
      }
  for (int a = 0; a <= f.dI; ++a)
    for (int b = 0; b <= f.dy; ++b) f.c(0, a, b) = {f.c(0, a, b).real(), 0.0};
}

inline double reality_defect(const FTSeries& f) {
  double m = 0;
  for (int k = 0; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b)
        m = std::max(m, std::abs(f.c(k, a, b) - std::conj(f.c(-k, a, b))));
  return m;
}

/// 2-D Chebyshev analysis of a grid vals[ia * (dy+1) + ib] sampled at the
/// roots nodes; writes coefficients (a, b) through `put`.
template <class Put>
void mode_from_grid(const std::vector<cplx>& vals, int dI, int dy, Put&& put) {
  const int nI = dI + 1, ny = dy + 1;
  std::vector<cplx> half(static_cast<size_t>(nI) * ny);
  std::vector<cplx> col(nI), row(ny);
  // transform along y first
  for (int ia = 0; ia < nI; ++ia) {
    for (int ib = 0; ib < ny; ++ib) row[ib] = vals[ia * ny + ib];
    auto cb = cheb::vals_to_coeffs(row);
    for (int b = 0; b < ny; ++b) half[ia * ny + b] = cb[b];
  }
  for (int b = 0; b < ny; ++b) {
    for (int ia = 0; ia < nI; ++ia) col[ia] = half[ia * ny + b];
    auto ca = cheb::vals_to_coeffs(col);
    for (int a = 0; a < nI; ++a) put(a, b, ca[a]);
  }
}

}  // namespace detail

/// Collocation constructor: interpolant through the (2kmax+1) x (dI+1) x (dy+1)
/// tensor grid of equispaced Fourier nodes and Chebyshev roots nodes.
template <class Sampler>
FTSeries make_series(Sampler&& sampler, const DomainSpec& domain, int kmax, int dI, int dy) {
  FTSeries f(domain, kmax, dI, dy);
  const int M = 2 * kmax + 1, nI = dI + 1, ny = dy + 1;
  const auto tI = cheb::nodes(dI), ty = cheb::nodes(dy);
  std::vector<cplx> grid(static_cast<size_t>(M) * nI * ny);
  for (int j = 0; j < M; ++j) {
    const double phi = 2.0 * PI * j / M;
    for (int ia = 0; ia < nI; ++ia) {
      const double I = domain.I_base.from_unit(tI[ia]);
      for (int ib = 0; ib < ny; ++ib) {
        const double y = domain.y_base.from_unit(ty[ib]);
        cplx val = sampler(I, y, phi);
        if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
          throw Error("make_series: non-finite sample at I=" + std::to_string(I) +
                      " y=" + std::to_string(y) + " phi=" + std::to_string(phi));
        grid[(static_cast<size_t>(j) * nI + ia) * ny + ib] = val;
      }
    }
  }
  // Fourier analysis per (I, y) node, then Chebyshev per mode
  std::vector<cplx> modegrid(static_cast<size_t>(nI) * ny);
  for (int k = -kmax; k <= kmax; ++k) {
    for (int ia = 0; ia < nI; ++ia)
      for (int ib = 0; ib < ny; ++ib) {
        cplx acc{};
        for (int j = 0; j < M; ++j) {
          const double ang = -2.0 * PI * j * k / M;
          acc += grid[(static_cast<size_t>(j) * nI + ia) * ny + ib] * cplx(std::cos(ang), std::sin(ang));
        }
        modegrid[ia * ny + ib] = acc / static_cast<double>(M);
      }
    detail::mode_from_grid(modegrid, dI, dy, [&](int a, int b, cplx v) { f.c(k, a, b) = v; });
  }
  if (detail::reality_defect(f) <= 1e-13 * std::max(1.0, f.max_abs())) {
    detail::enforce_reality(f);
    f.is_real = true;
  }
  return f;
}

inline FTSeries constant_series(const DomainSpec& domain, cplx value) {
  FTSeries f(domain, 0, 0, 0);
  f.c(0, 0, 0) = value;
  f.is_real = (value.imag() == 0.0);
  return f;
}

inline FTSeries zero_like(const FTSeries& f) {
  FTSeries z(f.domain, 0, 0, 0);
  z.is_real = true;
  return z;
}

inline FTSeries add(const FTSeries& f, const FTSeries& g) {
  if (!same_geometry(f.domain, g.domain)) throw Error("add: mismatched domains");
  FTSeries out(f.domain, std::max(f.kmax, g.kmax), std::max(f.dI, g.dI), std::max(f.dy, g.dy));
  for (int k = -out.kmax; k <= out.kmax; ++k)
    for (int a = 0; a <= out.dI; ++a)
      for (int b = 0; b <= out.dy; ++b) out.c(k, a, b) = f.at(k, a, b) + g.at(k, a, b);
  out.is_real = f.is_real && g.is_real;
  out.discarded = f.discarded + g.discarded;
  return out;
}

inline FTSeries scale(const FTSeries& f, cplx factor) {
  FTSeries out = f;
  for (auto& z : out.coeff) z *= factor;
  out.is_real = f.is_real && (factor.imag() == 0.0);
  return out;
}

inline FTSeries sub(const FTSeries& f, const FTSeries& g) { return add(f, scale(g, -1.0)); }

/// Drop coefficients of magnitude <= rel * max|coeff of the same Fourier mode|
/// and shrink the stored cutoffs to the surviving support. The threshold is
/// mode-local: the e^{|k|s} norm weights make a uniform absolute floor in a
/// small high mode far more expensive than the same floor in the big k = 0
/// mode. Dropped mass joins the diagnostic.
inline FTSeries clean_per_mode(const FTSeries& f, double rel) {
  if (rel <= 0) return f;
  int km = 0, am = 0, bm = 0;
  double dropped = 0;
  std::vector<double> thresh(2 * f.kmax + 1, 0.0);
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    double m = 0;
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b) m = std::max(m, std::abs(f.c(k, a, b)));
    thresh[k + f.kmax] = rel * m;
  }
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b) {
        const double m = std::abs(f.c(k, a, b));
        if (m > thresh[k + f.kmax]) {
          km = std::max(km, std::abs(k));
          am = std::max(am, a);
          bm = std::max(bm, b);
        } else {
          dropped += m;
        }
      }
  FTSeries out(f.domain, km, am, bm);
  for (int k = -km; k <= km; ++k)
    for (int a = 0; a <= am; ++a)
      for (int b = 0; b <= bm; ++b) {
        const cplx z = f.c(k, a, b);
        out.c(k, a, b) = (std::abs(z) > thresh[k + f.kmax]) ? z : cplx{};
      }
  out.is_real = f.is_real;
  out.discarded = f.discarded + dropped;
  return out;
}

/// Drop coefficients of magnitude <= rel * max|coeff| and shrink the stored
/// cutoffs to the surviving support. Dropped mass joins the diagnostic.
inline FTSeries clean(const FTSeries& f, double rel) {
  if (rel <= 0) return f;
  const double thresh = rel * f.max_abs();
  int km = 0, am = 0, bm = 0;
  double dropped = 0;
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b) {
        const double m = std::abs(f.c(k, a, b));
        if (m > thresh) {
          km = std::max(km, std::abs(k));
          am = std::max(am, a);
          bm = std::max(bm, b);
        } else {
          dropped += m;
        }
      }
  FTSeries out(f.domain, km, am, bm);
  for (int k = -km; k <= km; ++k)
    for (int a = 0; a <= am; ++a)
      for (int b = 0; b <= bm; ++b) {
        const cplx z = f.c(k, a, b);
        out.c(k, a, b) = (std::abs(z) > thresh) ? z : cplx{};
      }
  out.is_real = f.is_real;
  out.discarded = f.discarded + dropped;
  return out;
}

namespace detail {
struct NzCell {
  int k, a, b;
  cplx v;
};
inline void collect_nonzeros(const FTSeries& f, std::vector<NzCell>& out) {
  out.clear();
  const cplx* p = f.coeff.data();
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b, ++p)
        if (*p != cplx{}) out.push_back({k, a, b, *p});
}
}  // namespace detail

inline FTSeries mul(const FTSeries& f, const FTSeries& g,
                    const TruncationPolicy& policy = default_policy()) {
  if (!same_geometry(f.domain, g.domain)) throw Error("mul: mismatched domains");
  const int kt = std::min(f.kmax + g.kmax, policy.kmax_cap);
  const int at = std::min(f.dI + g.dI, policy.dI_cap);
  const int bt = std::min(f.dy + g.dy, policy.dy_cap);
  FTSeries out(f.domain, kt, at, bt);
  double dropped = 0.0;
  std::vector<detail::NzCell> nzf, nzg;
  detail::collect_nonzeros(f, nzf);
  detail::collect_nonzeros(g, nzg);
  const auto& small = nzf.size() <= nzg.size() ? nzf : nzg;
  const auto& big = nzf.size() <= nzg.size() ? nzg : nzf;
  cplx* oc = out.coeff.data();
  const int ostrideK = (out.dI + 1) * (out.dy + 1);
  const int ostrideA = out.dy + 1;
  for (const auto& c1 : small) {
    for (const auto& c2 : big) {
      const int k = c1.k + c2.k;
      if (std::abs(k) > kt) {
        dropped += std::abs(c1.v * c2.v);
        continue;
      }
      const cplx q = 0.25 * (c1.v * c2.v);
      const int ap = c1.a + c2.a, am = std::abs(c1.a - c2.a);
      const int bp = c1.b + c2.b, bm = std::abs(c1.b - c2.b);
      const size_t base = static_cast<size_t>(k + kt) * ostrideK;
      // T_{a1}T_{a2} = (T_{a1+a2}+T_{|a1-a2|})/2, same in y
      if (ap <= at) {
        if (bp <= bt)
          oc[base + static_cast<size_t>(ap) * ostrideA + bp] += q;
        else
          dropped += std::abs(q);
        oc[base + static_cast<size_t>(ap) * ostrideA + bm] += q;
      } else {
        dropped += 2.0 * std::abs(q);
      }
      if (am <= at) {  // am <= ap always, kept for symmetry with caps off
        if (bp <= bt)
          oc[base + static_cast<size_t>(am) * ostrideA + bp] += q;
        else
          dropped += std::abs(q);
        oc[base + static_cast<size_t>(am) * ostrideA + bm] += q;
      }
    }
  }
  if (policy.strict && dropped > 0) throw CapOverflow(dropped);
  out.discarded = f.discarded + g.discarded + dropped;
  out.is_real = f.is_real && g.is_real;
  // products accumulate the +k and -k cells in different orders; re-pairing
  // keeps the conjugate symmetry exact, which the mode-mirroring solvers rely on
  if (out.is_real) detail::enforce_reality(out);
  return policy.clean_rel > 0 ? clean(out, policy.clean_rel) : out;
}

inline FTSeries diff(const FTSeries& f, Var dir) {
  FTSeries out = f;
  if (dir == Var::phi) {
    for (int k = -f.kmax; k <= f.kmax; ++k) {
      const cplx ik(0.0, static_cast<double>(k));
      for (int a = 0; a <= f.dI; ++a)
        for (int b = 0; b <= f.dy; ++b) out.c(k, a, b) = ik * f.c(k, a, b);
    }
    return out;
  }
  const bool inI = (dir == Var::I);
  const double scale = 1.0 / (inI ? f.domain.I_base.half_length() : f.domain.y_base.half_length());
  const int n = inI ? f.dI : f.dy;
  std::vector<cplx> line(n + 1);
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    if (inI) {
      for (int b = 0; b <= f.dy; ++b) {
        for (int a = 0; a <= n; ++a) line[a] = f.c(k, a, b);
        auto d = cheb::derivative(line);
        for (int a = 0; a <= n; ++a) out.c(k, a, b) = d[a] * scale;
      }
    } else {
      for (int a = 0; a <= f.dI; ++a) {
        for (int b = 0; b <= n; ++b) line[b] = f.c(k, a, b);
        auto d = cheb::derivative(line);
        for (int b = 0; b <= n; ++b) out.c(k, a, b) = d[b] * scale;
      }
    }
  }
  return out;
}

/// Antiderivative along I or y, normalized to vanish at base_point.
inline FTSeries antiderivative(const FTSeries& f, Var dir, double base_point) {
  if (dir == Var::phi) throw Error("antiderivative: phi direction not supported");
  const bool inI = (dir == Var::I);
  const Interval& iv = inI ? f.domain.I_base : f.domain.y_base;
  const double h = iv.half_length();
  const double t0 = iv.to_unit(base_point);
  FTSeries out(f.domain, f.kmax, inI ? f.dI + 1 : f.dI, inI ? f.dy : f.dy + 1);
  out.is_real = f.is_real;
  out.discarded = f.discarded;
  const int n = inI ? f.dI : f.dy;
  std::vector<cplx> line(n + 1);
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    if (inI) {
      for (int b = 0; b <= f.dy; ++b) {
        for (int a = 0; a <= n; ++a) line[a] = f.c(k, a, b);
        auto F = cheb::antiderivative(line, t0);
        for (int a = 0; a <= n + 1; ++a) out.c(k, a, b) = F[a] * h;
      }
    } else {
      for (int a = 0; a <= f.dI; ++a) {
        for (int b = 0; b <= n; ++b) line[b] = f.c(k, a, b);
        auto F = cheb::antiderivative(line, t0);
        for (int b = 0; b <= n + 1; ++b) out.c(k, a, b) = F[b] * h;
      }
    }
  }
  return out;
}

/// Clenshaw in both Chebyshev directions, direct Fourier sum in phi.
/// The argument type S may be double or cplx (analytic continuation).
template <class S>
cplx eval_general(const FTSeries& f, S I, S y, S phi) {
  const S tI = (I - f.domain.I_base.center()) / f.domain.I_base.half_length();
  const S ty = (y - f.domain.y_base.center()) / f.domain.y_base.half_length();
  std::vector<cplx> inner(f.dI + 1);
  cplx total{};
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    for (int a = 0; a <= f.dI; ++a)
      inner[a] = cheb::clenshaw(&f.coeff[f.idx(k, a, 0)], f.dy + 1, cplx(ty));
    cplx modeval = cheb::clenshaw(inner, cplx(tI));
    const cplx ikphi = cplx(0.0, 1.0) * cplx(phi) * static_cast<double>(k);
    total += modeval * std::exp(ikphi);
  }
  return total;
}

inline cplx eval(const FTSeries& f, double I, double y, double phi, bool* extrapolated = nullptr) {
  if (extrapolated)
    *extrapolated = !(f.domain.I_base.contains(I) && f.domain.y_base.contains(y));
  return eval_general<double>(f, I, y, phi);
}

/// evaluation of one Fourier mode's coefficient function at complex (I, y)
inline cplx eval_mode(const FTSeries& f, int k, cplx I, cplx y) {
  const cplx tI = f.domain.I_base.to_unit(I);
  const cplx ty = f.domain.y_base.to_unit(y);
  std::vector<cplx> inner(f.dI + 1);
  for (int a = 0; a <= f.dI; ++a)
    inner[a] = cheb::clenshaw(&f.coeff[f.idx(k, a, 0)], f.dy + 1, ty);
  return cheb::clenshaw(inner, tI);
}

inline FTSeries project_mean(const FTSeries& f) {
  FTSeries out(f.domain, 0, f.dI, f.dy);
  for (int a = 0; a <= f.dI; ++a)
    for (int b = 0; b <= f.dy; ++b) out.c(0, a, b) = f.at(0, a, b);
  out.is_real = f.is_real;
  return out;
}

inline FTSeries project_osc(const FTSeries& f) {
  FTSeries out = f;
  for (int a = 0; a <= f.dI; ++a)
    for (int b = 0; b <= f.dy; ++b) out.c(0, a, b) = {};
  return out;
}

/// Collocation interpolant of 1/f for phi-independent, non-vanishing f.
/// The product residual |f * reciprocal(f) - 1| (coefficient mass) is reported
/// through `residual` when given.
inline FTSeries reciprocal(const FTSeries& f, int dI_out, int dy_out, double* residual = nullptr,
                           double floor = 1e-10) {
  if (f.kmax != 0) throw Error("reciprocal: input must be phi-independent");
  FTSeries out(f.domain, 0, dI_out, dy_out);
  const auto tI = cheb::nodes(dI_out), ty = cheb::nodes(dy_out);
  std::vector<cplx> grid(static_cast<size_t>(dI_out + 1) * (dy_out + 1));
  for (int ia = 0; ia <= dI_out; ++ia)
    for (int ib = 0; ib <= dy_out; ++ib) {
      cplx val = eval_mode(f, 0, cplx(f.domain.I_base.from_unit(tI[ia])),
                           cplx(f.domain.y_base.from_unit(ty[ib])));
      if (std::abs(val) < floor)
        throw VanishingDenominator(std::abs(val),
                                   "I=" + std::to_string(f.domain.I_base.from_unit(tI[ia])) +
                                       " y=" + std::to_string(f.domain.y_base.from_unit(ty[ib])));
      grid[ia * (dy_out + 1) + ib] = 1.0 / val;
    }
  detail::mode_from_grid(grid, dI_out, dy_out, [&](int a, int b, cplx v) { out.c(0, a, b) = v; });
  out.is_real = f.is_real;
  if (residual) {
    FTSeries check = sub(mul(f, out), constant_series(f.domain, 1.0));
    *residual = check.mass();
  }
  return out;
}

}  // namespace nqp
