#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "nqp/ham_series.hpp"
#include "nqp/lie.hpp"
#include "nqp/series.hpp"
#include "nqp/vector_field.hpp"

// Brute-force flow oracles: classical 4th order one-step integration of the
// truncated fields, used to validate the algebraic transformations against
// actual dynamics.

namespace nqp {

struct VFState {
  double I = 0, y = 0, phi = 0;
};

struct HamState {
  double I = 0, phi = 0, p = 0, q = 0, y = 0, x = 0;
};

struct FlowOptions {
  int steps = 400;
  bool check_escape = true;
  double escape_margin = 0.0;  // widen the admissible box by this much
};

namespace detail {

inline void check_inside(const DomainSpec& dom, double I, double y, double t, double margin) {
  if (I < dom.I_base.lo - margin || I > dom.I_base.hi + margin)
    throw DomainEscape(t, "I=" + std::to_string(I));
  if (y < dom.y_base.lo - margin || y > dom.y_base.hi + margin)
    throw DomainEscape(t, "y=" + std::to_string(y));
}

}  // namespace detail

inline VFState flow_map(const VectorField3& X, VFState z0, double T, const FlowOptions& opt = {}) {
  const DomainSpec& dom = X.domain();
  const double h = T / opt.steps;
  auto rhs = [&](const VFState& z) -> std::array<double, 3> {
    return {eval(X.X1, z.I, z.y, z.phi).real(), eval(X.X2, z.I, z.y, z.phi).real(),
            eval(X.X3, z.I, z.y, z.phi).real()};
  };
  VFState z = z0;
  for (int n = 0; n < opt.steps; ++n) {
    if (opt.check_escape) detail::check_inside(dom, z.I, z.y, n * h, opt.escape_margin);
    const auto k1 = rhs(z);
    const VFState z2{z.I + 0.5 * h * k1[0], z.y + 0.5 * h * k1[1], z.phi + 0.5 * h * k1[2]};
    const auto k2 = rhs(z2);
    const VFState z3{z.I + 0.5 * h * k2[0], z.y + 0.5 * h * k2[1], z.phi + 0.5 * h * k2[2]};
    const auto k3 = rhs(z3);
    const VFState z4{z.I + h * k3[0], z.y + h * k3[1], z.phi + h * k3[2]};
    const auto k4 = rhs(z4);
    z.I += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    z.y += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    z.phi += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
  }
  if (opt.check_escape) detail::check_inside(dom, z.I, z.y, T, opt.escape_margin);
  return z;
}

/// Hamiltonian flow z' = J dH(z) with momentum-first pairs (I,phi), (p,q), (y,x):
/// I' = -H_phi, phi' = H_I, p' = -H_q, q' = H_p, y' = -H_x, x' = H_y.
inline HamState flow_map(const HamSeries& H, HamState z0, double T, const FlowOptions& opt = {}) {
  const DomainSpec& dom = H.domain;
  const HamSeries HI = diff(H, HamVar::I), Hphi = diff(H, HamVar::phi);
  const HamSeries Hp = diff(H, HamVar::p), Hq = diff(H, HamVar::q);
  const HamSeries Hy = diff(H, HamVar::y), Hx = diff(H, HamVar::x);
  const double h = T / opt.steps;
  auto rhs = [&](const HamState& z) -> std::array<double, 6> {
    auto ev = [&](const HamSeries& f) {
      return eval_ham(f, z.I, z.phi, z.p, z.q, z.y, z.x).real();
    };
    return {-ev(Hphi), ev(HI), -ev(Hq), ev(Hp), -ev(Hx), ev(Hy)};
  };
  auto advance = [&](const HamState& z, const std::array<double, 6>& k, double fac) {
    return HamState{z.I + fac * k[0], z.phi + fac * k[1], z.p + fac * k[2],
                    z.q + fac * k[3], z.y + fac * k[4], z.x + fac * k[5]};
  };
  HamState z = z0;
  for (int n = 0; n < opt.steps; ++n) {
    if (opt.check_escape) {
      detail::check_inside(dom, z.I, z.y, n * h, opt.escape_margin);
      if (z.x < dom.x_base.lo - opt.escape_margin || z.x > dom.x_base.hi + opt.escape_margin)
        throw DomainEscape(n * h, "x=" + std::to_string(z.x));
      if (std::abs(z.p) > dom.delta + opt.escape_margin || std::abs(z.q) > dom.delta + opt.escape_margin)
        throw DomainEscape(n * h, "p/q outside the polydisc");
    }
    const auto k1 = rhs(z);
    const auto k2 = rhs(advance(z, k1, 0.5 * h));
    const auto k3 = rhs(advance(z, k2, 0.5 * h));
    const auto k4 = rhs(advance(z, k3, h));
    z.I += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    z.phi += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    z.p += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    z.q += h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
    z.y += h / 6.0 * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4]);
    z.x += h / 6.0 * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5]);
  }
  return z;
}

inline double angdiff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * PI);
  if (d > PI) d -= 2.0 * PI;
  if (d < -PI) d += 2.0 * PI;
  return d;
}

inline double state_distance(const VFState& a, const VFState& b) {
  return std::sqrt((a.I - b.I) * (a.I - b.I) + (a.y - b.y) * (a.y - b.y) +
                   angdiff(a.phi, b.phi) * angdiff(a.phi, b.phi));
}

inline double state_distance(const HamState& a, const HamState& b) {
  const double dphi = angdiff(a.phi, b.phi);
  return std::sqrt((a.I - b.I) * (a.I - b.I) + dphi * dphi + (a.p - b.p) * (a.p - b.p) +
                   (a.q - b.q) * (a.q - b.q) + (a.y - b.y) * (a.y - b.y) +
                   (a.x - b.x) * (a.x - b.x));
}

struct ConjugacyReport {
  double max_defect = 0.0;
  int escaped = 0;  // samples excluded because a trajectory left the domain
  std::vector<double> per_sample;
};

/// max_z | Phi_1^Y(Phi_T^Z(z)) - Phi_T^X(Phi_1^Y(z)) | against an explicit Z.
inline ConjugacyReport conjugacy_defect_against(const VectorField3& X, const VectorField3& Y,
                                                const VectorField3& Z, double T,
                                                const std::vector<VFState>& samples,
                                                const FlowOptions& opt = {}) {
  ConjugacyReport rep;
  for (const auto& z0 : samples) {
    try {
      VFState a = flow_map(Y, flow_map(Z, z0, T, opt), 1.0, opt);
      VFState b = flow_map(X, flow_map(Y, z0, 1.0, opt), T, opt);
      const double d = state_distance(a, b);
      rep.per_sample.push_back(d);
      rep.max_defect = std::max(rep.max_defect, d);
    } catch (const DomainEscape&) {
      ++rep.escaped;
      rep.per_sample.push_back(std::nan(""));
    }
  }
  return rep;
}

/// defect with Z = e^{L_Y} X computed by the Lie series
inline ConjugacyReport conjugacy_defect(const VectorField3& X, const VectorField3& Y, double T,
                                        const std::vector<VFState>& samples, const DomainSpec& u,
                                        const Weights& w, const FlowOptions& fopt = {},
                                        const LieOptions& lopt = {}) {
  auto lie = lie_series_apply(Y, X, u, w, lopt);
  return conjugacy_defect_against(X, Y, lie.transformed, T, samples, fopt);
}

/// chain version: x = Phi_1^{Y_0}(Phi_1^{Y_1}(... z ...)) for a full iteration
inline ConjugacyReport conjugacy_defect_chain(const VectorField3& X,
                                              const std::vector<VectorField3>& generators,
                                              const VectorField3& Z_final, double T,
                                              const std::vector<VFState>& samples,
                                              const FlowOptions& opt = {}) {
  auto compose = [&](VFState z) {
    for (auto it = generators.rbegin(); it != generators.rend(); ++it)
      z = flow_map(*it, z, 1.0, opt);
    return z;
  };
  ConjugacyReport rep;
  for (const auto& z0 : samples) {
    try {
      VFState a = compose(flow_map(Z_final, z0, T, opt));
      VFState b = flow_map(X, compose(z0), T, opt);
      const double d = state_distance(a, b);
      rep.per_sample.push_back(d);
      rep.max_defect = std::max(rep.max_defect, d);
    } catch (const DomainEscape&) {
      ++rep.escaped;
      rep.per_sample.push_back(std::nan(""));
    }
  }
  return rep;
}

inline ConjugacyReport conjugacy_defect_chain(const HamSeries& H,
                                              const std::vector<HamSeries>& generators,
                                              const HamSeries& H_final, double T,
                                              const std::vector<HamState>& samples,
                                              const FlowOptions& opt = {}) {
  auto compose = [&](HamState z) {
    for (auto it = generators.rbegin(); it != generators.rend(); ++it)
      z = flow_map(*it, z, 1.0, opt);
    return z;
  };
  ConjugacyReport rep;
  for (const auto& z0 : samples) {
    try {
      HamState a = compose(flow_map(H_final, z0, T, opt));
      HamState b = flow_map(H, compose(z0), T, opt);
      const double d = state_distance(a, b);
      rep.per_sample.push_back(d);
      rep.max_defect = std::max(rep.max_defect, d);
    } catch (const DomainEscape&) {
      ++rep.escaped;
      rep.per_sample.push_back(std::nan(""));
    }
  }
  return rep;
}

/// direct pushforward J(z)^{-1} X(Phi(z)) with Phi = Phi_1^Y, the Jacobian by
/// central differences; used to cross-check the Lie-series transform
inline std::array<double, 3> pushforward_at(const VectorField3& X, const VectorField3& Y,
                                            const VFState& z, const FlowOptions& opt = {},
                                            double fd_scale = 1e-5) {
  auto Phi = [&](const VFState& w) { return flow_map(Y, w, 1.0, opt); };
  const VFState image = Phi(z);
  const std::array<double, 3> Ximg{eval(X.X1, image.I, image.y, image.phi).real(),
                                   eval(X.X2, image.I, image.y, image.phi).real(),
                                   eval(X.X3, image.I, image.y, image.phi).real()};
  // 3x3 Jacobian of Phi by central differences
  double Jm[3][3];
  for (int col = 0; col < 3; ++col) {
    VFState zp = z, zm = z;
    double* comp_p = col == 0 ? &zp.I : col == 1 ? &zp.y : &zp.phi;
    double* comp_m = col == 0 ? &zm.I : col == 1 ? &zm.y : &zm.phi;
    const double step = fd_scale;
    *comp_p += step;
    *comp_m -= step;
    const VFState a = Phi(zp), b = Phi(zm);
    Jm[0][col] = (a.I - b.I) / (2 * step);
    Jm[1][col] = (a.y - b.y) / (2 * step);
    Jm[2][col] = (a.phi - b.phi) / (2 * step);
  }
  // solve Jm * out = Ximg
  double A[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) A[i][j] = Jm[i][j];
    A[i][3] = Ximg[i];
  }
  for (int i = 0; i < 3; ++i) {
    int piv = i;
    for (int r = i + 1; r < 3; ++r)
      if (std::abs(A[r][i]) > std::abs(A[piv][i])) piv = r;
    for (int c = 0; c < 4; ++c) std::swap(A[i][c], A[piv][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == i) continue;
      const double f = A[r][i] / A[i][i];
      for (int c = i; c < 4; ++c) A[r][c] -= f * A[i][c];
    }
  }
  return {A[0][3] / A[0][0], A[1][3] / A[1][1], A[2][3] / A[2][2]};
}

}  // namespace nqp
