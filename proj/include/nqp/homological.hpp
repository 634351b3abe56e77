#pragma once

#include <cmath>
#include <vector>

#include "nqp/cheb.hpp"
#include "nqp/norms.hpp"
#include "nqp/series.hpp"
#include "nqp/vector_field.hpp"

// Solvers for the homological equations. The vector-field solve inverts
// L_N[Y] = Z mode by mode through the transport integrals; the Hamiltonian
// solve inverts (v d/dx + i k omega + (h - j) omega') phi_khj = g_khj with
// phi(x=0) = 0. Every Fourier mode, k = 0 included, is solvable: inversion is
// an integral along the non-periodic direction, so no small divisors appear.
//
// Internals run in long double. The solves end in value->coefficient
// transforms, which smear value roundoff into a flat coefficient floor across
// all degrees; under the ellipse-weighted norms a floor entry at Chebyshev
// degree n costs a factor rho^n, so the floor must sit far below double
// roundoff for the residual norms to reach the 1e-8 scale.

namespace nqp {

using cplxl = std::complex<long double>;

struct HomologicalOptions {
  int dI_out = -1;           // -1: derived from the inputs
  int dy_out = -1;
  int dx_out = -1;
  double quad_tol = 1e-12;   // node-doubling relative tolerance
  int quad_min_degree = 16;
  int quad_max_degree = 4096;
  double denom_floor = 1e-10;
  double clean_rel = 1e-15;  // mode-relative trim of the outputs' support
  int refine_passes = 1;     // residual re-solve passes on the triangular solve
};

namespace detail {

/// 1-D Chebyshev coefficients in y of mode k at the scaled I-position tI,
/// accumulated in long double
inline std::vector<cplxl> y_slice(const FTSeries& f, int k, long double tI) {
  std::vector<cplxl> out(f.dy + 1, cplxl{});
  std::vector<long double> Ta(f.dI + 1);
  Ta[0] = 1.0L;
  if (f.dI >= 1) {
    Ta[1] = tI;
    for (int a = 2; a <= f.dI; ++a) Ta[a] = 2.0L * tI * Ta[a - 1] - Ta[a - 2];
  }
  for (int a = 0; a <= f.dI; ++a) {
    const cplx* row = &f.coeff[f.idx(k, a, 0)];
    for (int b = 0; b <= f.dy; ++b) out[b] += Ta[a] * cplxl(row[b]);
  }
  return out;
}

/// 2-D Chebyshev analysis in long double of a grid vals[ia * (dy+1) + ib]
template <class Put>
void mode_from_grid_l(const std::vector<cplxl>& vals, int dI, int dy, Put&& put) {
  const int nI = dI + 1, ny = dy + 1;
  std::vector<cplxl> half(static_cast<size_t>(nI) * ny);
  std::vector<cplxl> col(nI), row(ny);
  for (int ia = 0; ia < nI; ++ia) {
    for (int ib = 0; ib < ny; ++ib) row[ib] = vals[ia * ny + ib];
    auto cb = cheb::vals_to_coeffs(row);
    for (int b = 0; b < ny; ++b) half[ia * ny + b] = cb[b];
  }
  for (int b = 0; b < ny; ++b) {
    for (int ia = 0; ia < nI; ++ia) col[ia] = half[ia * ny + b];
    auto ca = cheb::vals_to_coeffs(col);
    for (int a = 0; a < nI; ++a) put(a, b, cplx(static_cast<double>(ca[a].real()),
                                                static_cast<double>(ca[a].imag())));
  }
}

struct TransportPlan {
  int dIo = 0, dyo = 0;
  std::vector<long double> tI, ty;          // output nodes
  std::vector<std::vector<cplxl>> v_slice;  // per I-node 1-D y-coeffs of v
  std::vector<std::vector<cplxl>> W_slice;  // per I-node phase antiderivative of omega/v
};

inline TransportPlan make_transport_plan(const NormalPart& N, int dIo, int dyo,
                                         const HomologicalOptions& opt) {
  TransportPlan plan;
  plan.dIo = dIo;
  plan.dyo = dyo;
  plan.tI = cheb::nodes_l(dIo);
  plan.ty = cheb::nodes_l(dyo);
  const Interval& ybase = N.v.domain.y_base;
  plan.v_slice.resize(dIo + 1);
  plan.W_slice.resize(dIo + 1);
  for (int ia = 0; ia <= dIo; ++ia) plan.v_slice[ia] = y_slice(N.v, 0, plan.tI[ia]);

  const long double yc = ybase.center(), yh = ybase.half_length();
  auto ratio_at = [&](int ia) {
    return [&, ia, om = y_slice(N.omega, 0, plan.tI[ia])](long double y) {
      const long double t = (y - yc) / yh;
      const cplxl vv = cheb::clenshaw(plan.v_slice[ia], t);
      if (std::abs(vv) < opt.denom_floor)
        throw VanishingDenominator(static_cast<double>(std::abs(vv)),
                                   "y=" + std::to_string(static_cast<double>(y)));
      return cheb::clenshaw(om, t) / vv;
    };
  };
  // One common sampling degree, chosen by probing and then doubled, keeps the
  // per-node interpolation errors at the roundoff floor and coherent in I.
  int deg = 0;
  for (int ia : {0, dIo / 2, dIo})
    deg = std::max(deg, cheb::fit_degree(ratio_at(ia), ybase.lo, ybase.hi, opt.quad_tol,
                                         opt.quad_min_degree, opt.quad_max_degree, "phase ratio"));
  deg *= 2;
  const long double t0 = (static_cast<long double>(N.y0) - yc) / yh;
  for (int ia = 0; ia <= dIo; ++ia) {
    auto ratio = cheb::fit_fixed(ratio_at(ia), ybase.lo, ybase.hi, deg);
    auto W = cheb::antiderivative(ratio, t0);
    for (auto& z : W) z *= yh;
    plan.W_slice[ia] = std::move(W);
  }
  return plan;
}

/// Shared core of the two transport solves. weighted = false inverts
/// (v d_y + i k omega); weighted = true additionally carries -d_y(v), through
/// the closed-form factor v(y)/v(eta).
inline FTSeries transport_core(const NormalPart& N, const FTSeries& g, bool weighted,
                               const HomologicalOptions& opt) {
  if (!same_geometry(N.v.domain, g.domain)) throw Error("transport: mismatched domains");
  const int dIo = opt.dI_out >= 0 ? opt.dI_out : std::max(g.dI, N.v.dI + N.omega.dI + 2) + 8;
  const int dyo = opt.dy_out >= 0 ? opt.dy_out : std::max(g.dy + 16, 48);
  auto plan = make_transport_plan(N, dIo, dyo, opt);
  const Interval& ybase = g.domain.y_base;
  const long double yc = ybase.center(), yh = ybase.half_length();
  const long double t0 = (static_cast<long double>(N.y0) - yc) / yh;

  FTSeries out(g.domain, g.kmax, dIo, dyo);
  const bool mirror = g.is_real && N.v.is_real && N.omega.is_real;
  std::vector<cplxl> grid(static_cast<size_t>(dIo + 1) * (dyo + 1));

  // One common sampling degree for the whole solve, probed at the stiffest
  // mode |k| = kmax and doubled; all nodes then share one exact procedure and
  // the interpolation errors stay coherent across the I-grid.
  const int kprobe = g.kmax;
  auto probe_at = [&](int ia) {
    return [&, ia, gk = y_slice(g, kprobe, plan.tI[ia])](long double y) {
      const long double t = (y - yc) / yh;
      const cplxl vv = cheb::clenshaw(plan.v_slice[ia], t);
      if (std::abs(vv) < opt.denom_floor)
        throw VanishingDenominator(static_cast<double>(std::abs(vv)),
                                   "y=" + std::to_string(static_cast<double>(y)));
      cplxl val = cheb::clenshaw(gk, t) / vv;
      if (weighted) val /= vv;
      if (kprobe != 0) {
        const cplxl W = cheb::clenshaw(plan.W_slice[ia], t);
        val *= std::exp(cplxl(0.0L, 1.0L) * static_cast<long double>(kprobe) * W);
      }
      return val;
    };
  };
  int deg = opt.quad_min_degree;
  for (int ia : {0, dIo / 2, dIo})
    deg = std::max(deg, cheb::fit_degree(probe_at(ia), ybase.lo, ybase.hi, opt.quad_tol,
                                         opt.quad_min_degree, opt.quad_max_degree,
                                         "transport integrand"));
  deg *= 2;
  const int nq = deg + 1;
  const auto tq = cheb::nodes_l(deg);

  // per-I-node caches at the quadrature nodes: 1/v (or 1/v^2), e^{iW}, and the
  // running phase power e^{ikW}; plus v and e^{-ikW} data at the output nodes
  const int nI = dIo + 1, nyq = dyo + 1;
  std::vector<std::vector<cplxl>> winv(nI), phase1(nI), phasek(nI);
  std::vector<std::vector<cplxl>> vout(nI), eout(nI), eoutk(nI);
  for (int ia = 0; ia < nI; ++ia) {
    winv[ia].resize(nq);
    phase1[ia].resize(nq);
    phasek[ia].assign(nq, cplxl(1.0L, 0.0L));
    vout[ia].resize(nyq);
    eout[ia].resize(nyq);
    eoutk[ia].assign(nyq, cplxl(1.0L, 0.0L));
    for (int jq = 0; jq < nq; ++jq) {
      const cplxl vv = cheb::clenshaw(plan.v_slice[ia], tq[jq]);
      if (std::abs(vv) < opt.denom_floor)
        throw VanishingDenominator(static_cast<double>(std::abs(vv)), "quadrature grid");
      winv[ia][jq] = weighted ? cplxl(1.0L) / (vv * vv) : cplxl(1.0L) / vv;
      const cplxl W = cheb::clenshaw(plan.W_slice[ia], tq[jq]);
      phase1[ia][jq] = std::exp(cplxl(0.0L, 1.0L) * W);
    }
    for (int ib = 0; ib < nyq; ++ib) {
      vout[ia][ib] = cheb::clenshaw(plan.v_slice[ia], plan.ty[ib]);
      const cplxl W = cheb::clenshaw(plan.W_slice[ia], plan.ty[ib]);
      eout[ia][ib] = std::exp(cplxl(0.0L, -1.0L) * W);
    }
  }

  auto solve_mode = [&](int k) {
    for (int ia = 0; ia < nI; ++ia) {
      const auto gk = y_slice(g, k, plan.tI[ia]);
      std::vector<cplxl> vals(nq);
      for (int jq = 0; jq < nq; ++jq)
        vals[jq] = cheb::clenshaw(gk, tq[jq]) * winv[ia][jq] * phasek[ia][jq];
      auto A = cheb::vals_to_coeffs(vals);
      auto Anti = cheb::antiderivative(A, t0);
      for (auto& z : Anti) z *= yh;
      for (int ib = 0; ib < nyq; ++ib) {
        cplxl val = cheb::clenshaw(Anti, plan.ty[ib]) * eoutk[ia][ib];
        if (weighted) val *= vout[ia][ib];
        grid[ia * nyq + ib] = val;
      }
    }
    mode_from_grid_l(grid, dIo, dyo, [&](int a, int b, cplx v) { out.c(k, a, b) = v; });
  };
  auto step_phases = [&](int dir) {
    for (int ia = 0; ia < nI; ++ia) {
      for (int jq = 0; jq < nq; ++jq)
        phasek[ia][jq] = dir > 0 ? phasek[ia][jq] * phase1[ia][jq]
                                 : phasek[ia][jq] / phase1[ia][jq];
      for (int ib = 0; ib < nyq; ++ib)
        eoutk[ia][ib] = dir > 0 ? eoutk[ia][ib] * eout[ia][ib]
                                : eoutk[ia][ib] / eout[ia][ib];
    }
  };

  for (int k = 0; k <= g.kmax; ++k) {
    solve_mode(k);
    if (k < g.kmax) step_phases(+1);
  }
  if (mirror) {
    for (int k = 1; k <= g.kmax; ++k)
      for (int a = 0; a <= dIo; ++a)
        for (int b = 0; b <= dyo; ++b) out.c(-k, a, b) = std::conj(out.c(k, a, b));
    out.is_real = true;
  } else {
    for (int ia = 0; ia < nI; ++ia) {
      phasek[ia].assign(nq, cplxl(1.0L, 0.0L));
      eoutk[ia].assign(nyq, cplxl(1.0L, 0.0L));
    }
    for (int k = -1; k >= -g.kmax; --k) {
      step_phases(-1);
      solve_mode(k);
    }
  }
  return clean_per_mode(out, opt.clean_rel);
}

}  // namespace detail

/// Phase antiderivative W(I, y) = int_{y0}^{y} (omega / v)(I, eta) d eta as a series.
inline FTSeries phase_antiderivative(const NormalPart& N, int dI, int dy,
                                     const HomologicalOptions& opt = {}) {
  auto plan = detail::make_transport_plan(N, dI, std::max(dy, 16), opt);
  FTSeries out(N.v.domain, 0, dI, dy);
  std::vector<cplxl> grid(static_cast<size_t>(dI + 1) * (dy + 1));
  const auto ty = cheb::nodes_l(dy);
  for (int ia = 0; ia <= dI; ++ia)
    for (int ib = 0; ib <= dy; ++ib)
      grid[ia * (dy + 1) + ib] = cheb::clenshaw(plan.W_slice[ia], ty[ib]);
  detail::mode_from_grid_l(grid, dI, dy, [&](int a, int b, cplx v) { out.c(0, a, b) = v; });
  out.is_real = N.v.is_real && N.omega.is_real;
  return out;
}

/// Mode-wise inverse of (v d_y + i k omega) with value 0 at y0; zero-average
/// inputs map to zero-average outputs, exactly at the k-level.
inline FTSeries solve_transport(const NormalPart& N, const FTSeries& g,
                                const HomologicalOptions& opt = {}) {
  return detail::transport_core(N, g, false, opt);
}

/// Mode-wise inverse of (v d_y + i k omega - d_y v); the exponential of the
/// log-derivative integral is used in its closed form v(y)/v(eta).
inline FTSeries solve_transport_weighted(const NormalPart& N, const FTSeries& g,
                                         const HomologicalOptions& opt = {}) {
  return detail::transport_core(N, g, true, opt);
}

/// L_N[Y] = [N, Y] for N = (0, v, omega), written out component-wise
inline VectorField3 apply_vf_operator(const NormalPart& N, const VectorField3& Y,
                                      const TruncationPolicy& policy = default_policy()) {
  auto advect = [&](const FTSeries& f) {
    return add(mul(N.v, diff(f, Var::y), policy), mul(N.omega, diff(f, Var::phi), policy));
  };
  FTSeries r1 = advect(Y.X1);
  FTSeries r2 = sub(advect(Y.X2), add(mul(diff(N.v, Var::I), Y.X1, policy),
                                      mul(diff(N.v, Var::y), Y.X2, policy)));
  FTSeries r3 = sub(advect(Y.X3), add(mul(diff(N.omega, Var::I), Y.X1, policy),
                                      mul(diff(N.omega, Var::y), Y.X2, policy)));
  return {std::move(r1), std::move(r2), std::move(r3)};
}

namespace detail {

inline VectorField3 triangular_solve(const NormalPart& N, const VectorField3& Z,
                                     const HomologicalOptions& opt) {
  const FTSeries dIv = diff(N.v, Var::I);
  const FTSeries dIom = diff(N.omega, Var::I);
  const FTSeries dyom = diff(N.omega, Var::y);
  FTSeries Y1 = solve_transport(N, Z.X1, opt);
  FTSeries Y2 = solve_transport_weighted(N, add(Z.X2, mul(dIv, Y1)), opt);
  FTSeries Y3 = solve_transport(N, add(Z.X3, add(mul(dIom, Y1), mul(dyom, Y2))), opt);
  return {std::move(Y1), std::move(Y2), std::move(Y3)};
}

}  // namespace detail

/// Triangular solve of [N, Y] = Z for N = (0, v, omega), valid for every
/// Fourier mode including k = 0. The optional refinement passes re-solve with
/// the measured residual as data; each pass contracts the residual by the
/// solver's own relative accuracy.
inline VectorField3 solve_homological(const NormalPart& N, const VectorField3& Z,
                                      const HomologicalOptions& opt = {}) {
  VectorField3 Y = detail::triangular_solve(N, Z, opt);
  for (int pass = 0; pass < opt.refine_passes; ++pass) {
    VectorField3 R = sub(apply_vf_operator(N, Y), Z);
    VectorField3 C = detail::triangular_solve(N, R, opt);
    // no outer cleanup: the correction's deep cells cancel the first pass's
    // truncation boundary, which is the whole point of the refinement
    Y = sub(Y, C);
  }
  return Y;
}

/// An element of ker L_N: (0, 0, F0(I, phi - W(I, y))) built by collocation,
/// with W the phase antiderivative vanishing at y0. Verified by applying the
/// operator; residual above tolerance is a construction failure.
template <class F0>
VectorField3 kernel_element_vf(const NormalPart& N, F0&& shape, int kmax, int dI, int dy,
                               const HomologicalOptions& opt = {}, double verify_tol = 1e-8) {
  FTSeries W = phase_antiderivative(N, std::max(dI, N.v.dI + N.omega.dI + 4),
                                    std::max({dy, 32}), opt);
  FTSeries Y3 = make_series(
      [&](double I, double y, double phi) -> cplx {
        const cplx Wv = eval_mode(W, 0, cplx(I), cplx(y));
        cplx val = shape(I, phi - Wv.real());
        if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
          throw Error("kernel_element_vf: shifted arguments escape the shape's domain");
        return val;
      },
      N.v.domain, kmax, dI, dy);
  VectorField3 K{constant_series(N.v.domain, 0.0), constant_series(N.v.domain, 0.0), Y3};
  // residual check: [N, K]_3 = v d_y Y3 + omega d_phi Y3, other rows vanish
  FTSeries resid = add(mul(N.v, diff(Y3, Var::y)), mul(N.omega, diff(Y3, Var::phi)));
  const double rn = scalar_norm_value(resid, N.v.domain);
  const double yn = scalar_norm_value(Y3, N.v.domain);
  if (rn > verify_tol * std::max(1.0, yn))
    throw Error("kernel_element_vf: operator residual " + std::to_string(rn) +
                " exceeds tolerance");
  return K;
}

/// frequencies omega = d_I h, omega' = d_J h, v = d_y h of a Hamiltonian
/// h(I, J, y) at most linear in J with a constant J-coefficient
struct HamFrequencies {
  FTSeries omega;
  FTSeries omega_prime;
  FTSeries v;

  /// from h given as its (I, y) part plus a constant pq coefficient
  static HamFrequencies from_parts(const FTSeries& h0, double omega_prime_const) {
    return {diff(h0, Var::I), constant_series(h0.domain, omega_prime_const), diff(h0, Var::y)};
  }

  /// from a full series; enforces the structural invariants to tol
  static HamFrequencies from_hamiltonian(const HamSeries& h, double tol = 1e-10) {
    const double scale = std::max(1.0, h.max_abs());
    FTSeries h0(h.domain, 0, h.dI, h.dy);
    cplx op{};
    for (int k = -h.kmax; k <= h.kmax; ++k)
      for (int hh = 0; hh <= h.pqmax; ++hh)
        for (int j = 0; j + hh <= h.pqmax; ++j) {
          const cplx* blk = &h.coeff[h.block(k, hh, j)];
          const bool grade0 = (k == 0 && hh == 0 && j == 0);
          const bool grade1 = (k == 0 && hh == 1 && j == 1);
          for (int a = 0; a <= h.dI; ++a)
            for (int b = 0; b <= h.dy; ++b)
              for (int c = 0; c <= h.dx; ++c) {
                const cplx z = blk[h.cell(a, b, c)];
                if (grade0 && c == 0) {
                  h0.c(0, a, b) = z;
                } else if (grade1 && a == 0 && b == 0 && c == 0) {
                  op = z;
                } else if (std::abs(z) > tol * scale) {
                  throw ValidationError("h", "must be h0(I, y) + const * pq (offending mode k=" +
                                                 std::to_string(k) + " h=" + std::to_string(hh) +
                                                 " j=" + std::to_string(j) + ")");
                }
              }
        }
    h0.is_real = h.is_real;
    return {diff(h0, Var::I), constant_series(h.domain, op), diff(h0, Var::y)};
  }
};

/// D phi = sum (v d_x + (h - j) omega' + i k omega) phi_khj e^{i k phi} p^h q^j
inline HamSeries apply_normal_operator(const HamFrequencies& fr, const HamSeries& phi,
                                       const TruncationPolicy& policy = default_policy()) {
  HamSeries out = mul_iy(fr.v, diff(phi, HamVar::x), policy);
  out = add(out, mul_iy(fr.omega, diff(phi, HamVar::phi), policy));
  out = add(out, mul_iy(fr.omega_prime, grade_diff(phi), policy));
  return out;
}

/// Mode-wise solve of (v d_x + lambda_khj) phi = g with phi(x = 0) = 0,
/// lambda_khj = i k omega + (h - j) omega', through the explicit integral
/// phi = (1/v) int_0^x g(tau) e^{-(lambda/v)(x - tau)} d tau.
inline HamSeries solve_ham_homological(const HamFrequencies& fr, const HamSeries& g,
                                       const HomologicalOptions& opt = {}) {
  const DomainSpec& dom = g.domain;
  if (!dom.x_base.contains(0.0))
    throw ValidationError("x_base", "must contain the integration base point 0");
  const int dIo = opt.dI_out >= 0 ? opt.dI_out : std::max(g.dI, fr.v.dI + fr.omega.dI + 2);
  const int dyo = opt.dy_out >= 0 ? opt.dy_out : std::max(g.dy, fr.v.dy + fr.omega.dy + 2);
  const int dxo = opt.dx_out >= 0 ? opt.dx_out : std::max(g.dx + 8, 32);
  const auto tI = cheb::nodes_l(dIo), ty = cheb::nodes_l(dyo), tx = cheb::nodes_l(dxo);
  const int nI = dIo + 1, ny = dyo + 1, nx = dxo + 1;
  const long double xc = dom.x_base.center(), xh = dom.x_base.half_length();
  const long double tx0 = (0.0L - xc) / xh;

  // frequency values on the output (I, y) grid
  std::vector<cplxl> vg(static_cast<size_t>(nI) * ny), og(vg.size()), opg(vg.size());
  for (int ia = 0; ia < nI; ++ia)
    for (int ib = 0; ib < ny; ++ib) {
      const auto vs = detail::y_slice(fr.v, 0, tI[ia]);
      const auto os = detail::y_slice(fr.omega, 0, tI[ia]);
      const auto ps = detail::y_slice(fr.omega_prime, 0, tI[ia]);
      const long double tyb = ty[ib];
      vg[ia * ny + ib] = cheb::clenshaw(vs, tyb);
      og[ia * ny + ib] = cheb::clenshaw(os, tyb);
      opg[ia * ny + ib] = cheb::clenshaw(ps, tyb);
      if (std::abs(vg[ia * ny + ib]) < opt.denom_floor)
        throw VanishingDenominator(static_cast<double>(std::abs(vg[ia * ny + ib])), "(I, y) grid");
    }

  HamSeries out(dom, g.kmax, g.pqmax, dIo, dyo, dxo);
  const bool mirror = g.is_real && fr.v.is_real && fr.omega.is_real && fr.omega_prime.is_real;

  std::vector<cplxl> grid(static_cast<size_t>(nI) * ny * nx);
  std::vector<cplxl> slices(static_cast<size_t>(nI) * ny * (g.dx + 1));
  std::vector<cplxl> stage(static_cast<size_t>(nI) * (g.dy + 1) * (g.dx + 1));

  for (int h = 0; h <= g.pqmax; ++h)
    for (int j = 0; j + h <= g.pqmax; ++j)
      for (int k = mirror ? 0 : -g.kmax; k <= g.kmax; ++k) {
        const cplx* blk = &g.coeff[g.block(k, h, j)];
        // contract the (I, y) Chebyshev directions onto the output nodes
        for (int ia = 0; ia < nI; ++ia) {
          std::vector<long double> Ta(g.dI + 1);
          Ta[0] = 1.0L;
          if (g.dI >= 1) {
            Ta[1] = tI[ia];
            for (int a = 2; a <= g.dI; ++a) Ta[a] = 2.0L * tI[ia] * Ta[a - 1] - Ta[a - 2];
          }
          for (int b = 0; b <= g.dy; ++b)
            for (int c = 0; c <= g.dx; ++c) {
              cplxl acc{};
              for (int a = 0; a <= g.dI; ++a) acc += Ta[a] * cplxl(blk[g.cell(a, b, c)]);
              stage[(static_cast<size_t>(ia) * (g.dy + 1) + b) * (g.dx + 1) + c] = acc;
            }
        }
        for (int ia = 0; ia < nI; ++ia)
          for (int ib = 0; ib < ny; ++ib) {
            std::vector<long double> Tb(g.dy + 1);
            Tb[0] = 1.0L;
            if (g.dy >= 1) {
              Tb[1] = ty[ib];
              for (int b = 2; b <= g.dy; ++b) Tb[b] = 2.0L * ty[ib] * Tb[b - 1] - Tb[b - 2];
            }
            for (int c = 0; c <= g.dx; ++c) {
              cplxl acc{};
              for (int b = 0; b <= g.dy; ++b)
                acc += Tb[b] * stage[(static_cast<size_t>(ia) * (g.dy + 1) + b) * (g.dx + 1) + c];
              slices[(static_cast<size_t>(ia) * ny + ib) * (g.dx + 1) + c] = acc;
            }
          }
        // per-node 1-D solves in x, all at one common sampling degree so the
        // interpolation errors stay coherent across the (I, y) grid
        auto integrand_at = [&](int ia, int ib) {
          const cplxl vv = vg[ia * ny + ib];
          const cplxl lam = cplxl(0.0L, static_cast<long double>(k)) * og[ia * ny + ib] +
                            static_cast<long double>(h - j) * opg[ia * ny + ib];
          const cplxl mu = lam / vv;
          const cplxl* gx = &slices[(static_cast<size_t>(ia) * ny + ib) * (g.dx + 1)];
          return [mu, gx, xc, xh, dxg = g.dx](long double x) {
            const cplxl gv = cheb::clenshaw(gx, dxg + 1, (x - xc) / xh);
            return gv * std::exp(mu * x);
          };
        };
        int deg = 0;
        for (int ia : {0, nI / 2, nI - 1})
          for (int ib : {0, ny / 2, ny - 1})
            deg = std::max(deg, cheb::fit_degree(integrand_at(ia, ib), dom.x_base.lo,
                                                 dom.x_base.hi, opt.quad_tol,
                                                 opt.quad_min_degree, opt.quad_max_degree,
                                                 "x-direction integrand"));
        deg *= 2;
        for (int ia = 0; ia < nI; ++ia)
          for (int ib = 0; ib < ny; ++ib) {
            const cplxl vv = vg[ia * ny + ib];
            const cplxl lam = cplxl(0.0L, static_cast<long double>(k)) * og[ia * ny + ib] +
                              static_cast<long double>(h - j) * opg[ia * ny + ib];
            const cplxl mu = lam / vv;
            auto integrand =
                cheb::fit_fixed(integrand_at(ia, ib), dom.x_base.lo, dom.x_base.hi, deg);
            auto Anti = cheb::antiderivative(integrand, tx0);
            for (auto& z : Anti) z *= xh;
            for (int ic = 0; ic < nx; ++ic) {
              const long double x = xc + xh * tx[ic];
              grid[(static_cast<size_t>(ia) * ny + ib) * nx + ic] =
                  std::exp(-mu * x) * cheb::clenshaw(Anti, tx[ic]) / vv;
            }
          }
        // transform the block in long double
        {
          const int nIl = nI, nyl = ny, nxl = nx;
          std::vector<cplxl> line;
          line.assign(nxl, cplxl{});
          for (int ia = 0; ia < nIl; ++ia)
            for (int ib = 0; ib < nyl; ++ib) {
              cplxl* base = &grid[(static_cast<size_t>(ia) * nyl + ib) * nxl];
              for (int c = 0; c < nxl; ++c) line[c] = base[c];
              auto cc = cheb::vals_to_coeffs(line);
              for (int c = 0; c < nxl; ++c) base[c] = cc[c];
            }
          line.assign(nyl, cplxl{});
          for (int ia = 0; ia < nIl; ++ia)
            for (int c = 0; c < nxl; ++c) {
              for (int ib = 0; ib < nyl; ++ib)
                line[ib] = grid[(static_cast<size_t>(ia) * nyl + ib) * nxl + c];
              auto cb = cheb::vals_to_coeffs(line);
              for (int ib = 0; ib < nyl; ++ib)
                grid[(static_cast<size_t>(ia) * nyl + ib) * nxl + c] = cb[ib];
            }
          line.assign(nIl, cplxl{});
          cplx* dst = &out.coeff[out.block(k, h, j)];
          for (int ib = 0; ib < nyl; ++ib)
            for (int c = 0; c < nxl; ++c) {
              for (int ia = 0; ia < nIl; ++ia)
                line[ia] = grid[(static_cast<size_t>(ia) * nyl + ib) * nxl + c];
              auto ca = cheb::vals_to_coeffs(line);
              for (int ia = 0; ia < nIl; ++ia)
                dst[(static_cast<size_t>(ia) * nyl + ib) * nxl + c] =
                    cplx(static_cast<double>(ca[ia].real()), static_cast<double>(ca[ia].imag()));
            }
        }
      }
  if (mirror) {
    for (int h = 0; h <= g.pqmax; ++h)
      for (int j = 0; j + h <= g.pqmax; ++j)
        for (int k = 1; k <= g.kmax; ++k) {
          const cplx* src = &out.coeff[out.block(k, h, j)];
          cplx* dst = &out.coeff[out.block(-k, h, j)];
          for (size_t i = 0; i < out.cells(); ++i) dst[i] = std::conj(src[i]);
        }
    out.is_real = true;
  }
  return clean(out, opt.clean_rel);
}

/// Element of ker D: modal transport of an x-independent series along the
/// characteristics, F_khj = F0_khj(I, y) e^{-lambda_khj x / v}.
inline HamSeries kernel_element_ham(const HamFrequencies& fr, const HamSeries& F0, int dx_out,
                                    const HomologicalOptions& opt = {}, double verify_tol = 1e-8) {
  if (F0.dx != 0) throw ValidationError("F0", "kernel shape must be x-independent");
  const DomainSpec& dom = F0.domain;
  const int dIo = std::max(F0.dI, fr.v.dI + fr.omega.dI + 2);
  const int dyo = std::max(F0.dy, fr.v.dy + fr.omega.dy + 2);
  const int dxo = std::max(dx_out, 8);
  const auto tI = cheb::nodes_l(dIo), ty = cheb::nodes_l(dyo), tx = cheb::nodes_l(dxo);
  const int nI = dIo + 1, ny = dyo + 1, nx = dxo + 1;
  const double Xmax = std::max(std::abs(dom.x_base.lo), std::abs(dom.x_base.hi));

  HamSeries out(dom, F0.kmax, F0.pqmax, dIo, dyo, dxo);
  std::vector<cplxl> grid(static_cast<size_t>(nI) * ny * nx);
  for (int k = -F0.kmax; k <= F0.kmax; ++k)
    for (int h = 0; h <= F0.pqmax; ++h)
      for (int j = 0; j + h <= F0.pqmax; ++j) {
        for (int ia = 0; ia < nI; ++ia) {
          const auto vs = detail::y_slice(fr.v, 0, tI[ia]);
          const auto os = detail::y_slice(fr.omega, 0, tI[ia]);
          const auto ps = detail::y_slice(fr.omega_prime, 0, tI[ia]);
          for (int ib = 0; ib < ny; ++ib) {
            const long double tyb = ty[ib];
            const cplxl vv = cheb::clenshaw(vs, tyb);
            if (std::abs(vv) < opt.denom_floor)
              throw VanishingDenominator(static_cast<double>(std::abs(vv)), "(I, y) grid");
            const cplxl lam = cplxl(0.0L, static_cast<long double>(k)) * cheb::clenshaw(os, tyb) +
                              static_cast<long double>(h - j) * cheb::clenshaw(ps, tyb);
            const cplxl mu = lam / vv;
            if (std::abs(mu) * Xmax > 50.0)
              throw Error("kernel_element_ham: shifted arguments escape the domain");
            cplxl base{};
            {
              // F0 block value at this (I, y)
              const cplx* blk = &F0.coeff[F0.block(k, h, j)];
              std::vector<long double> Ta(F0.dI + 1);
              Ta[0] = 1.0L;
              if (F0.dI >= 1) {
                Ta[1] = tI[ia];
                for (int a = 2; a <= F0.dI; ++a) Ta[a] = 2.0L * tI[ia] * Ta[a - 1] - Ta[a - 2];
              }
              std::vector<cplxl> liney(F0.dy + 1, cplxl{});
              for (int a = 0; a <= F0.dI; ++a)
                for (int b = 0; b <= F0.dy; ++b) liney[b] += Ta[a] * cplxl(blk[F0.cell(a, b, 0)]);
              base = cheb::clenshaw(liney, tyb);
            }
            for (int ic = 0; ic < nx; ++ic) {
              const long double x = dom.x_base.center() +
                                    dom.x_base.half_length() * tx[ic];
              grid[(static_cast<size_t>(ia) * ny + ib) * nx + ic] = base * std::exp(-mu * x);
            }
          }
        }
        // 3-D long double transform into the output block
        std::vector<cplxl> line;
        line.assign(nx, cplxl{});
        for (int ia = 0; ia < nI; ++ia)
          for (int ib = 0; ib < ny; ++ib) {
            cplxl* basep = &grid[(static_cast<size_t>(ia) * ny + ib) * nx];
            for (int c = 0; c < nx; ++c) line[c] = basep[c];
            auto cc = cheb::vals_to_coeffs(line);
            for (int c = 0; c < nx; ++c) basep[c] = cc[c];
          }
        line.assign(ny, cplxl{});
        for (int ia = 0; ia < nI; ++ia)
          for (int c = 0; c < nx; ++c) {
            for (int ib = 0; ib < ny; ++ib)
              line[ib] = grid[(static_cast<size_t>(ia) * ny + ib) * nx + c];
            auto cb = cheb::vals_to_coeffs(line);
            for (int ib = 0; ib < ny; ++ib)
              grid[(static_cast<size_t>(ia) * ny + ib) * nx + c] = cb[ib];
          }
        line.assign(nI, cplxl{});
        cplx* dst = &out.coeff[out.block(k, h, j)];
        for (int ib = 0; ib < ny; ++ib)
          for (int c = 0; c < nx; ++c) {
            for (int ia = 0; ia < nI; ++ia)
              line[ia] = grid[(static_cast<size_t>(ia) * ny + ib) * nx + c];
            auto ca = cheb::vals_to_coeffs(line);
            for (int ia = 0; ia < nI; ++ia)
              dst[(static_cast<size_t>(ia) * ny + ib) * nx + c] =
                  cplx(static_cast<double>(ca[ia].real()), static_cast<double>(ca[ia].imag()));
          }
      }
  out.is_real = F0.is_real && fr.v.is_real && fr.omega.is_real && fr.omega_prime.is_real;
  out = clean(out, opt.clean_rel);
  HamSeries resid = apply_normal_operator(fr, out);
  const double rn = ham_norm(resid, dom), on = ham_norm(out, dom);
  if (rn > verify_tol * std::max(1.0, on))
    throw Error("kernel_element_ham: operator residual " + std::to_string(rn) +
                " exceeds tolerance");
  return out;
}

}  // namespace nqp
