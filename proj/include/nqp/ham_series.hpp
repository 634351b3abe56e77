#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nqp/series.hpp"

namespace nqp {

enum class HamVar { I, phi, p, q, y, x };

/// Truncated expansion sum_{k,h,j} c_{khj}(I, y, x) e^{i k phi} p^h q^j with
/// Chebyshev coefficient blocks in (I, y, x) and total-degree truncation
/// h + j <= pqmax.
struct HamSeries {
  DomainSpec domain;
  int kmax = 0;
  int pqmax = 0;
  int dI = 0;
  int dy = 0;
  int dx = 0;
  bool is_real = false;
  double discarded = 0.0;
  std::vector<cplx> coeff;

  HamSeries() = default;
  HamSeries(DomainSpec dom, int kmax_, int pqmax_, int dI_, int dy_, int dx_)
      : domain(std::move(dom)), kmax(kmax_), pqmax(pqmax_), dI(dI_), dy(dy_), dx(dx_) {
    coeff.assign(static_cast<size_t>(2 * kmax + 1) * (pqmax + 1) * (pqmax + 1) * cells(), cplx{});
  }

  size_t cells() const { return static_cast<size_t>(dI + 1) * (dy + 1) * (dx + 1); }
  size_t block(int k, int h, int j) const {
    return ((static_cast<size_t>(k + kmax) * (pqmax + 1) + h) * (pqmax + 1) + j) * cells();
  }
  size_t cell(int a, int b, int c) const {
    return (static_cast<size_t>(a) * (dy + 1) + b) * (dx + 1) + c;
  }
  cplx& at(int k, int h, int j, int a, int b, int c) { return coeff[block(k, h, j) + cell(a, b, c)]; }
  const cplx& at(int k, int h, int j, int a, int b, int c) const {
    return coeff[block(k, h, j) + cell(a, b, c)];
  }
  cplx get(int k, int h, int j, int a, int b, int c) const {
    if (std::abs(k) > kmax || h < 0 || j < 0 || h > pqmax || j > pqmax || h + j > pqmax) return {};
    if (a < 0 || a > dI || b < 0 || b > dy || c < 0 || c > dx) return {};
    return at(k, h, j, a, b, c);
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

inline void enforce_reality(HamSeries& f) {
  for (int h = 0; h <= f.pqmax; ++h)
    for (int j = 0; j + h <= f.pqmax; ++j) {
      for (int k = 1; k <= f.kmax; ++k) {
        cplx* up = &f.coeff[f.block(k, h, j)];
        cplx* dn = &f.coeff[f.block(-k, h, j)];
        for (size_t i = 0; i < f.cells(); ++i) {
          cplx avg = 0.5 * (up[i] + std::conj(dn[i]));
          up[i] = avg;
          dn[i] = std::conj(avg);
        }
      }
      cplx* z = &f.coeff[f.block(0, h, j)];
      for (size_t i = 0; i < f.cells(); ++i) z[i] = {z[i].real(), 0.0};
    }
}

inline double ham_reality_defect(const HamSeries& f) {
  double m = 0;
  for (int h = 0; h <= f.pqmax; ++h)
    for (int j = 0; j + h <= f.pqmax; ++j)
      for (int k = 0; k <= f.kmax; ++k) {
        const cplx* up = &f.coeff[f.block(k, h, j)];
        const cplx* dn = &f.coeff[f.block(-k, h, j)];
        for (size_t i = 0; i < f.cells(); ++i) m = std::max(m, std::abs(up[i] - std::conj(dn[i])));
      }
  return m;
}

/// 3-D Chebyshev analysis of one (k,h,j) block sampled on the roots grid.
inline void block_from_grid(std::vector<cplx>& vals, int dI, int dy, int dx, cplx* out) {
  const int nI = dI + 1, ny = dy + 1, nx = dx + 1;
  std::vector<cplx> line;
  // x direction
  line.assign(nx, cplx{});
  for (int ia = 0; ia < nI; ++ia)
    for (int ib = 0; ib < ny; ++ib) {
      cplx* base = &vals[(static_cast<size_t>(ia) * ny + ib) * nx];
      for (int c = 0; c < nx; ++c) line[c] = base[c];
      auto cc = cheb::vals_to_coeffs(line);
      for (int c = 0; c < nx; ++c) base[c] = cc[c];
    }
  // y direction
  line.assign(ny, cplx{});
  for (int ia = 0; ia < nI; ++ia)
    for (int c = 0; c < nx; ++c) {
      for (int ib = 0; ib < ny; ++ib) line[ib] = vals[(static_cast<size_t>(ia) * ny + ib) * nx + c];
      auto cb = cheb::vals_to_coeffs(line);
      for (int ib = 0; ib < ny; ++ib) vals[(static_cast<size_t>(ia) * ny + ib) * nx + c] = cb[ib];
    }
  // I direction
  line.assign(nI, cplx{});
  for (int ib = 0; ib < ny; ++ib)
    for (int c = 0; c < nx; ++c) {
      for (int ia = 0; ia < nI; ++ia) line[ia] = vals[(static_cast<size_t>(ia) * ny + ib) * nx + c];
      auto ca = cheb::vals_to_coeffs(line);
      for (int ia = 0; ia < nI; ++ia) out[(static_cast<size_t>(ia) * ny + ib) * nx + c] = ca[ia];
    }
}

}  // namespace detail

/// Collocation constructor. The p, q dependence is recovered from samples on
/// circles |p| = |q| = sample_radius (default: delta) by a discrete Fourier
/// transform in the two circle angles; exact for polynomial dependence within
/// pqmax, spectral truncation otherwise.
template <class Sampler>
HamSeries make_ham_series(Sampler&& sampler, const DomainSpec& domain, int kmax, int pqmax, int dI,
                          int dy, int dx, double sample_radius = 0.0) {
  HamSeries f(domain, kmax, pqmax, dI, dy, dx);
  const double rr = sample_radius > 0 ? sample_radius : (domain.delta > 0 ? domain.delta : 1.0);
  const int M = 2 * kmax + 1;
  const int A = std::max(2 * (pqmax + 1), 4);
  const int nI = dI + 1, ny = dy + 1, nx = dx + 1;
  const auto tI = cheb::nodes(dI), ty = cheb::nodes(dy), tx = cheb::nodes(dx);

  // pq-circle samples for every grid point, Fourier-analyzed on the fly
  std::vector<cplx> block(static_cast<size_t>(nI) * ny * nx);
  std::vector<cplx> pqsamp(static_cast<size_t>(A) * A);
  std::vector<std::vector<cplx>> mode_grids(
      static_cast<size_t>(M) * (pqmax + 1) * (pqmax + 1),
      std::vector<cplx>());
  for (auto& g : mode_grids) g.assign(block.size(), cplx{});

  for (int ia = 0; ia < nI; ++ia) {
    const double I = domain.I_base.from_unit(tI[ia]);
    for (int ib = 0; ib < ny; ++ib) {
      const double y = domain.y_base.from_unit(ty[ib]);
      for (int ic = 0; ic < nx; ++ic) {
        const double x = domain.x_base.from_unit(tx[ic]);
        const size_t cellix = (static_cast<size_t>(ia) * ny + ib) * nx + ic;
        for (int jphi = 0; jphi < M; ++jphi) {
          const double phi = 2.0 * PI * jphi / M;
          for (int m = 0; m < A; ++m)
            for (int l = 0; l < A; ++l) {
              const double alpha = 2.0 * PI * m / A, beta = 2.0 * PI * l / A;
              const cplx p = rr * cplx(std::cos(alpha), std::sin(alpha));
              const cplx q = rr * cplx(std::cos(beta), std::sin(beta));
              cplx val = sampler(I, phi, p, q, y, x);
              if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
                throw Error("make_ham_series: non-finite sample");
              pqsamp[static_cast<size_t>(m) * A + l] = val;
            }
          for (int h = 0; h <= pqmax; ++h)
            for (int j = 0; j + h <= pqmax; ++j) {
              cplx acc{};
              for (int m = 0; m < A; ++m)
                for (int l = 0; l < A; ++l) {
                  const double ang = -2.0 * PI * (h * m + j * l) / A;
                  acc += pqsamp[static_cast<size_t>(m) * A + l] * cplx(std::cos(ang), std::sin(ang));
                }
              acc /= static_cast<double>(A) * A * std::pow(rr, h + j);
              mode_grids[(static_cast<size_t>(jphi) * (pqmax + 1) + h) * (pqmax + 1) + j][cellix] = acc;
            }
        }
      }
    }
  }
  // Fourier analysis over phi per (h, j), then Chebyshev per block
  std::vector<cplx> grid(block.size());
  for (int h = 0; h <= pqmax; ++h)
    for (int j = 0; j + h <= pqmax; ++j)
      for (int k = -kmax; k <= kmax; ++k) {
        for (size_t i = 0; i < grid.size(); ++i) {
          cplx acc{};
          for (int jphi = 0; jphi < M; ++jphi) {
            const double ang = -2.0 * PI * jphi * k / M;
            acc += mode_grids[(static_cast<size_t>(jphi) * (pqmax + 1) + h) * (pqmax + 1) + j][i] *
                   cplx(std::cos(ang), std::sin(ang));
          }
          grid[i] = acc / static_cast<double>(M);
        }
        detail::block_from_grid(grid, dI, dy, dx, &f.coeff[f.block(k, h, j)]);
      }
  if (detail::ham_reality_defect(f) <= 1e-12 * std::max(1.0, f.max_abs())) {
    detail::enforce_reality(f);
    f.is_real = true;
  }
  return f;
}

inline HamSeries ham_zero(const DomainSpec& domain) {
  HamSeries z(domain, 0, 0, 0, 0, 0);
  z.is_real = true;
  return z;
}

inline HamSeries ham_constant(const DomainSpec& domain, cplx value) {
  HamSeries f(domain, 0, 0, 0, 0, 0);
  f.at(0, 0, 0, 0, 0, 0) = value;
  f.is_real = (value.imag() == 0.0);
  return f;
}

/// embed an (I, y, phi) series as a Hamiltonian series constant in x, p, q
inline HamSeries embed_ft(const FTSeries& f) {
  HamSeries out(f.domain, f.kmax, 0, f.dI, f.dy, 0);
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int a = 0; a <= f.dI; ++a)
      for (int b = 0; b <= f.dy; ++b) out.at(k, 0, 0, a, b, 0) = f.c(k, a, b);
  out.is_real = f.is_real;
  return out;
}

/// the monomial (p q)^m
inline HamSeries pq_monomial(const DomainSpec& domain, int m, cplx factor = 1.0) {
  HamSeries out(domain, 0, 2 * m, 0, 0, 0);
  out.at(0, m, m, 0, 0, 0) = factor;
  out.is_real = (factor.imag() == 0.0);
  return out;
}

inline HamSeries add(const HamSeries& f, const HamSeries& g) {
  if (!same_geometry(f.domain, g.domain)) throw Error("add: mismatched domains");
  HamSeries out(f.domain, std::max(f.kmax, g.kmax), std::max(f.pqmax, g.pqmax),
                std::max(f.dI, g.dI), std::max(f.dy, g.dy), std::max(f.dx, g.dx));
  for (int k = -out.kmax; k <= out.kmax; ++k)
    for (int h = 0; h <= out.pqmax; ++h)
      for (int j = 0; j + h <= out.pqmax; ++j)
        for (int a = 0; a <= out.dI; ++a)
          for (int b = 0; b <= out.dy; ++b)
            for (int c = 0; c <= out.dx; ++c)
              out.at(k, h, j, a, b, c) = f.get(k, h, j, a, b, c) + g.get(k, h, j, a, b, c);
  out.is_real = f.is_real && g.is_real;
  out.discarded = f.discarded + g.discarded;
  return out;
}

inline HamSeries scale(const HamSeries& f, cplx factor) {
  HamSeries out = f;
  for (auto& z : out.coeff) z *= factor;
  out.is_real = f.is_real && (factor.imag() == 0.0);
  return out;
}

inline HamSeries sub(const HamSeries& f, const HamSeries& g) { return add(f, scale(g, -1.0)); }

/// magnitude cleanup with support trim, see the FTSeries overload
inline HamSeries clean(const HamSeries& f, double rel) {
  if (rel <= 0) return f;
  const double thresh = rel * f.max_abs();
  int km = 0, pm = 0, am = 0, bm = 0, cm = 0;
  double dropped = 0;
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const cplx* blk = &f.coeff[f.block(k, h, j)];
        for (int a = 0; a <= f.dI; ++a)
          for (int b = 0; b <= f.dy; ++b)
            for (int c = 0; c <= f.dx; ++c) {
              const double m = std::abs(blk[f.cell(a, b, c)]);
              if (m > thresh) {
                km = std::max(km, std::abs(k));
                pm = std::max(pm, h + j);
                am = std::max(am, a);
                bm = std::max(bm, b);
                cm = std::max(cm, c);
              } else {
                dropped += m;
              }
            }
      }
  HamSeries out(f.domain, km, pm, am, bm, cm);
  for (int k = -km; k <= km; ++k)
    for (int h = 0; h <= pm; ++h)
      for (int j = 0; j + h <= pm; ++j)
        for (int a = 0; a <= am; ++a)
          for (int b = 0; b <= bm; ++b)
            for (int c = 0; c <= cm; ++c) {
              const cplx z = f.get(k, h, j, a, b, c);
              out.at(k, h, j, a, b, c) = (std::abs(z) > thresh) ? z : cplx{};
            }
  out.is_real = f.is_real;
  out.discarded = f.discarded + dropped;
  return out;
}

inline HamSeries mul(const HamSeries& f, const HamSeries& g,
                     const TruncationPolicy& policy = default_policy()) {
  if (!same_geometry(f.domain, g.domain)) throw Error("mul: mismatched domains");
  const int kt = std::min(f.kmax + g.kmax, policy.kmax_cap);
  const int pqt = std::min(f.pqmax + g.pqmax, policy.pq_cap);
  const int at = std::min(f.dI + g.dI, policy.dI_cap);
  const int bt = std::min(f.dy + g.dy, policy.dy_cap);
  const int ct = std::min(f.dx + g.dx, policy.dx_cap);
  HamSeries out(f.domain, kt, pqt, at, bt, ct);
  double dropped = 0.0;
  for (int k1 = -f.kmax; k1 <= f.kmax; ++k1)
    for (int h1 = 0; h1 <= f.pqmax; ++h1)
      for (int j1 = 0; j1 + h1 <= f.pqmax; ++j1) {
        const cplx* bf = &f.coeff[f.block(k1, h1, j1)];
        bool any = false;
        for (size_t i = 0; i < f.cells() && !any; ++i) any = (bf[i] != cplx{});
        if (!any) continue;
        for (int k2 = -g.kmax; k2 <= g.kmax; ++k2)
          for (int h2 = 0; h2 <= g.pqmax; ++h2)
            for (int j2 = 0; j2 + h2 <= g.pqmax; ++j2) {
              const cplx* bg = &g.coeff[g.block(k2, h2, j2)];
              const int k = k1 + k2, h = h1 + h2, j = j1 + j2;
              const bool modeok = std::abs(k) <= kt && h + j <= pqt;
              cplx* bo = modeok ? &out.coeff[out.block(k, h, j)] : nullptr;
              // 3-D Chebyshev product of the two coefficient blocks
              for (int a1 = 0; a1 <= f.dI; ++a1)
                for (int b1 = 0; b1 <= f.dy; ++b1)
                  for (int c1 = 0; c1 <= f.dx; ++c1) {
                    const cplx v1 = bf[f.cell(a1, b1, c1)];
                    if (v1 == cplx{}) continue;
                    for (int a2 = 0; a2 <= g.dI; ++a2) {
                      const int ap = a1 + a2, am = std::abs(a1 - a2);
                      for (int b2 = 0; b2 <= g.dy; ++b2) {
                        const int bp = b1 + b2, bm = std::abs(b1 - b2);
                        for (int c2 = 0; c2 <= g.dx; ++c2) {
                          const cplx term = v1 * bg[g.cell(a2, b2, c2)];
                          if (term == cplx{}) continue;
                          const int cp = c1 + c2, cm = std::abs(c1 - c2);
                          const cplx w = 0.125 * term;
                          for (int pass = 0; pass < 8; ++pass) {
                            const int a = (pass & 1) ? am : ap;
                            const int b = (pass & 2) ? bm : bp;
                            const int c = (pass & 4) ? cm : cp;
                            if (bo && a <= at && b <= bt && c <= ct)
                              bo[out.cell(a, b, c)] += w;
                            else
                              dropped += std::abs(w);
                          }
                        }
                      }
                    }
                  }
            }
      }
  if (policy.strict && dropped > 0) throw CapOverflow(dropped);
  out.discarded = f.discarded + g.discarded + dropped;
  out.is_real = f.is_real && g.is_real;
  if (out.is_real) detail::enforce_reality(out);
  return policy.clean_rel > 0 ? clean(out, policy.clean_rel) : out;
}

/// product with an (I, y)-only factor, broadcast over k, h, j, x
inline HamSeries mul_iy(const FTSeries& w, const HamSeries& f,
                        const TruncationPolicy& policy = default_policy()) {
  if (w.kmax != 0) throw Error("mul_iy: factor must be phi-independent");
  if (!same_geometry(w.domain, f.domain)) throw Error("mul_iy: mismatched domains");
  const int at = std::min(w.dI + f.dI, policy.dI_cap);
  const int bt = std::min(w.dy + f.dy, policy.dy_cap);
  HamSeries out(f.domain, f.kmax, f.pqmax, at, bt, f.dx);
  double dropped = 0.0;
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const cplx* bf = &f.coeff[f.block(k, h, j)];
        cplx* bo = &out.coeff[out.block(k, h, j)];
        for (int a1 = 0; a1 <= w.dI; ++a1)
          for (int b1 = 0; b1 <= w.dy; ++b1) {
            const cplx v1 = w.c(0, a1, b1);
            if (v1 == cplx{}) continue;
            for (int a2 = 0; a2 <= f.dI; ++a2) {
              const int ap = a1 + a2, am = std::abs(a1 - a2);
              for (int b2 = 0; b2 <= f.dy; ++b2) {
                const int bp = b1 + b2, bm = std::abs(b1 - b2);
                for (int c = 0; c <= f.dx; ++c) {
                  const cplx term = v1 * bf[f.cell(a2, b2, c)];
                  if (term == cplx{}) continue;
                  const cplx q = 0.25 * term;
                  for (int pass = 0; pass < 4; ++pass) {
                    const int a = (pass & 1) ? am : ap;
                    const int b = (pass & 2) ? bm : bp;
                    if (a <= at && b <= bt)
                      bo[out.cell(a, b, c)] += q;
                    else
                      dropped += std::abs(q);
                  }
                }
              }
            }
          }
      }
  if (policy.strict && dropped > 0) throw CapOverflow(dropped);
  out.discarded = w.discarded + f.discarded + dropped;
  out.is_real = w.is_real && f.is_real;
  if (out.is_real) detail::enforce_reality(out);
  return policy.clean_rel > 0 ? clean(out, policy.clean_rel) : out;
}

inline HamSeries diff(const HamSeries& f, HamVar dir) {
  if (dir == HamVar::phi) {
    HamSeries out = f;
    for (int k = -f.kmax; k <= f.kmax; ++k) {
      const cplx ik(0.0, static_cast<double>(k));
      for (int h = 0; h <= f.pqmax; ++h)
        for (int j = 0; j + h <= f.pqmax; ++j) {
          cplx* b = &out.coeff[out.block(k, h, j)];
          for (size_t i = 0; i < out.cells(); ++i) b[i] *= ik;
        }
    }
    return out;
  }
  if (dir == HamVar::p || dir == HamVar::q) {
    HamSeries out(f.domain, f.kmax, std::max(f.pqmax - 1, 0), f.dI, f.dy, f.dx);
    for (int k = -f.kmax; k <= f.kmax; ++k)
      for (int h = 0; h <= out.pqmax; ++h)
        for (int j = 0; j + h <= out.pqmax; ++j) {
          const int hs = dir == HamVar::p ? h + 1 : h;
          const int js = dir == HamVar::p ? j : j + 1;
          if (hs + js > f.pqmax) continue;
          const double fac = dir == HamVar::p ? hs : js;
          const cplx* src = &f.coeff[f.block(k, hs, js)];
          cplx* dst = &out.coeff[out.block(k, h, j)];
          for (size_t i = 0; i < out.cells(); ++i) dst[i] = fac * src[i];
        }
    out.is_real = f.is_real;
    return out;
  }
  // Chebyshev directions
  HamSeries out = f;
  int n;
  double hlen;
  if (dir == HamVar::I) {
    n = f.dI;
    hlen = f.domain.I_base.half_length();
  } else if (dir == HamVar::y) {
    n = f.dy;
    hlen = f.domain.y_base.half_length();
  } else {
    n = f.dx;
    hlen = f.domain.x_base.half_length();
  }
  const double sc = 1.0 / hlen;
  std::vector<cplx> line(n + 1);
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const cplx* src = &f.coeff[f.block(k, h, j)];
        cplx* dst = &out.coeff[out.block(k, h, j)];
        if (dir == HamVar::I) {
          for (int b = 0; b <= f.dy; ++b)
            for (int c = 0; c <= f.dx; ++c) {
              for (int a = 0; a <= n; ++a) line[a] = src[f.cell(a, b, c)];
              auto d = cheb::derivative(line);
              for (int a = 0; a <= n; ++a) dst[f.cell(a, b, c)] = d[a] * sc;
            }
        } else if (dir == HamVar::y) {
          for (int a = 0; a <= f.dI; ++a)
            for (int c = 0; c <= f.dx; ++c) {
              for (int b = 0; b <= n; ++b) line[b] = src[f.cell(a, b, c)];
              auto d = cheb::derivative(line);
              for (int b = 0; b <= n; ++b) dst[f.cell(a, b, c)] = d[b] * sc;
            }
        } else {
          for (int a = 0; a <= f.dI; ++a)
            for (int b = 0; b <= f.dy; ++b) {
              for (int c = 0; c <= n; ++c) line[c] = src[f.cell(a, b, c)];
              auto d = cheb::derivative(line);
              for (int c = 0; c <= n; ++c) dst[f.cell(a, b, c)] = d[c] * sc;
            }
        }
      }
  return out;
}

/// multiply every (k,h,j) block by (h - j); this is p d/dp - q d/dq
inline HamSeries grade_diff(const HamSeries& f) {
  HamSeries out = f;
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const double w = h - j;
        cplx* b = &out.coeff[out.block(k, h, j)];
        for (size_t i = 0; i < out.cells(); ++i) b[i] *= w;
      }
  return out;
}

template <class S>
cplx eval_ham_general(const HamSeries& f, S I, S phi, cplx p, cplx q, S y, S x) {
  const cplx tI = cplx(I - f.domain.I_base.center()) / f.domain.I_base.half_length();
  const cplx ty = cplx(y - f.domain.y_base.center()) / f.domain.y_base.half_length();
  const cplx tx = cplx(x - f.domain.x_base.center()) / f.domain.x_base.half_length();
  cplx total{};
  std::vector<cplx> innerI(f.dI + 1), innery(f.dy + 1);
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    const cplx ph = std::exp(cplx(0.0, 1.0) * cplx(phi) * static_cast<double>(k));
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const cplx* blk = &f.coeff[f.block(k, h, j)];
        for (int a = 0; a <= f.dI; ++a) {
          for (int b = 0; b <= f.dy; ++b)
            innery[b] = cheb::clenshaw(&blk[f.cell(a, b, 0)], f.dx + 1, tx);
          innerI[a] = cheb::clenshaw(innery, ty);
        }
        const cplx cf = cheb::clenshaw(innerI, tI);
        total += cf * ph * std::pow(p, h) * std::pow(q, j);
      }
  }
  return total;
}

inline cplx eval_ham(const HamSeries& f, double I, double phi, double p, double q, double y,
                     double x) {
  return eval_ham_general<double>(f, I, phi, cplx(p), cplx(q), y, x);
}

/// keep the modes (k, h - j) = (0, 0): functions of (I, pq, y, x) only
inline HamSeries project_resonant(const HamSeries& f) {
  HamSeries out(f.domain, 0, f.pqmax, f.dI, f.dy, f.dx);
  for (int h = 0; h <= f.pqmax; ++h) {
    if (2 * h > f.pqmax) break;
    const cplx* src = &f.coeff[f.block(0, h, h)];
    cplx* dst = &out.coeff[out.block(0, h, h)];
    for (size_t i = 0; i < f.cells(); ++i) dst[i] = src[i];
  }
  out.is_real = f.is_real;
  return out;
}

inline HamSeries project_nonresonant(const HamSeries& f) {
  HamSeries out = f;
  for (int h = 0; 2 * h <= f.pqmax; ++h) {
    cplx* dst = &out.coeff[out.block(0, h, h)];
    for (size_t i = 0; i < f.cells(); ++i) dst[i] = {};
  }
  return out;
}

}  // namespace nqp
