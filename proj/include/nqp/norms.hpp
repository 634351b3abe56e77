#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "nqp/ham_series.hpp"
#include "nqp/series.hpp"
#include "nqp/vector_field.hpp"

// Upper-bound estimators for the analytic norms. All bounds are coefficient
// sums against Bernstein-ellipse growth factors: sound upper bounds for the
// truncated representations, not exact sups.

namespace nqp {

/// Smallest rho such that the Bernstein ellipse E_rho of the (scaled) interval
/// contains the complex width-neighbourhood; |T_n| <= rho^n there.
inline double ellipse_factor(double width, double half_length) {
  const double t = width / half_length;
  return 1.0 + t + std::sqrt(t * t + 2.0 * t);
}

struct NormBound {
  double value = 0.0;
  std::vector<std::pair<int, double>> per_mode;  // (k, sup bound)
  double rho_I = 1.0, rho_y = 1.0, rho_x = 1.0;  // ellipse margins in use
};

/// sum_{a,b} |c_ab| rhoI^a rhoy^b for one 2-D coefficient tensor
inline double sup_bound_tensor(const cplx* c, int dI, int dy, double rhoI, double rhoy) {
  double acc = 0;
  std::vector<double> powy(dy + 1);
  powy[0] = 1;
  for (int b = 1; b <= dy; ++b) powy[b] = powy[b - 1] * rhoy;
  double powI = 1;
  for (int a = 0; a <= dI; ++a) {
    const cplx* row = c + static_cast<size_t>(a) * (dy + 1);
    for (int b = 0; b <= dy; ++b) acc += std::abs(row[b]) * powI * powy[b];
    powI *= rhoI;
  }
  return acc;
}

inline double mode_sup_bound(const FTSeries& f, int k, const DomainSpec& dom) {
  const double rI = ellipse_factor(dom.r, f.domain.I_base.half_length());
  const double ry = ellipse_factor(dom.sigma, f.domain.y_base.half_length());
  return sup_bound_tensor(&f.coeff[f.idx(k, 0, 0)], f.dI, f.dy, rI, ry);
}

/// ||f||_u = sum_k sup|f_k| e^{|k| s}; the exponential factors are combined in
/// log space so large kmax * s cannot overflow intermediates.
inline NormBound scalar_norm(const FTSeries& f, const DomainSpec& dom) {
  NormBound nb;
  nb.rho_I = ellipse_factor(dom.r, f.domain.I_base.half_length());
  nb.rho_y = ellipse_factor(dom.sigma, f.domain.y_base.half_length());
  for (int k = -f.kmax; k <= f.kmax; ++k) {
    const double sup = sup_bound_tensor(&f.coeff[f.idx(k, 0, 0)], f.dI, f.dy, nb.rho_I, nb.rho_y);
    nb.per_mode.emplace_back(k, sup);
    if (sup > 0) {
      const double lg = std::log(sup) + std::abs(k) * dom.s;
      nb.value += (lg > 700.0) ? std::numeric_limits<double>::infinity() : std::exp(lg);
    }
  }
  return nb;
}

inline double scalar_norm_value(const FTSeries& f, const DomainSpec& dom) {
  return scalar_norm(f, dom).value;
}

/// |||X|||_u^w := sum_i w_i^{-1} ||X_i||_u
inline double vf_norm(const VectorField3& X, const DomainSpec& dom, const Weights& w) {
  return scalar_norm_value(X.X1, dom) / w.rho + scalar_norm_value(X.X2, dom) / w.tau +
         scalar_norm_value(X.X3, dom) / w.t;
}

/// ||phi|| = sum_{k,h,j} sup|phi_khj| e^{s|k|} delta^{h+j}
inline double ham_norm(const HamSeries& f, const DomainSpec& dom) {
  const double rI = ellipse_factor(dom.r, f.domain.I_base.half_length());
  const double ry = ellipse_factor(dom.sigma, f.domain.y_base.half_length());
  const double rx = f.dx > 0 ? ellipse_factor(dom.xi, f.domain.x_base.half_length()) : 1.0;
  double total = 0;
  std::vector<double> powx(f.dx + 1);
  powx[0] = 1;
  for (int c = 1; c <= f.dx; ++c) powx[c] = powx[c - 1] * rx;
  for (int k = -f.kmax; k <= f.kmax; ++k)
    for (int h = 0; h <= f.pqmax; ++h)
      for (int j = 0; j + h <= f.pqmax; ++j) {
        const cplx* blk = &f.coeff[f.block(k, h, j)];
        double sup = 0;
        double powI = 1;
        for (int a = 0; a <= f.dI; ++a) {
          double powy = 1;
          for (int b = 0; b <= f.dy; ++b) {
            const cplx* line = &blk[f.cell(a, b, 0)];
            double xacc = 0;
            for (int c = 0; c <= f.dx; ++c) xacc += std::abs(line[c]) * powx[c];
            sup += xacc * powI * powy;
            powy *= ry;
          }
          powI *= rI;
        }
        if (sup > 0) {
          const double lg = std::log(sup) + std::abs(k) * dom.s + (h + j) * std::log(dom.delta);
          total += (lg > 700.0) ? std::numeric_limits<double>::infinity() : std::exp(lg);
        }
      }
  return total;
}

/// diameter of the complexified y interval
inline double diam_bound(const DomainSpec& dom) { return dom.y_base.length() + 2.0 * dom.sigma; }

/// Upper bound for sup |Im f| over the complexified rectangle; exact zero for
/// real constants. Uses |Im T_n| <= (rho^n - rho^-n)/2 on the ellipse together
/// with the real/imaginary split of the coefficients.
inline double im_sup_bound(const FTSeries& f, const DomainSpec& dom) {
  if (f.kmax != 0) throw Error("im_sup_bound: phi-independent series expected");
  const double rI = ellipse_factor(dom.r, f.domain.I_base.half_length());
  const double ry = ellipse_factor(dom.sigma, f.domain.y_base.half_length());
  auto Mfac = [](double rho, int n) { return 0.5 * (std::pow(rho, n) + std::pow(rho, -n)); };
  auto mfac = [](double rho, int n) {
    return n == 0 ? 0.0 : 0.5 * (std::pow(rho, n) - std::pow(rho, -n));
  };
  double acc = 0;
  for (int a = 0; a <= f.dI; ++a)
    for (int b = 0; b <= f.dy; ++b) {
      const cplx z = f.c(0, a, b);
      const double MI = Mfac(rI, a), My = Mfac(ry, b);
      const double mI = mfac(rI, a), my = mfac(ry, b);
      acc += std::abs(z.real()) * (mI * My + MI * my) + std::abs(z.imag()) * MI * My;
    }
  return acc;
}

/// sampled estimate of sup |Im f| on the boundary of the complexified rectangle
inline double sampled_im_estimate(const FTSeries& f, const DomainSpec& dom, int n_samples = 256) {
  double best = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double th = 2.0 * PI * i / n_samples;
    // walk the boundary torus (edge of I-rectangle) x (edge of y-rectangle)
    const cplx zI = cplx(f.domain.I_base.center() +
                             f.domain.I_base.half_length() * std::cos(3 * th),
                         dom.r * std::sin(3 * th));
    const cplx zy = cplx(f.domain.y_base.center() +
                             f.domain.y_base.half_length() * std::cos(5 * th + 0.7),
                         dom.sigma * std::sin(5 * th + 0.7));
    best = std::max(best, std::abs(eval_mode(f, 0, zI, zy).imag()));
  }
  return best;
}

/// sampled sup of |analytic continuation| over the complexified rectangle
/// boundary (diagnostic; the soundness tests compare it against scalar_norm)
inline double sampled_sup_estimate(const FTSeries& f, int k, const DomainSpec& dom,
                                   int n_samples = 1000) {
  double best = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double a = 2.0 * PI * i / n_samples;
    const double b = 2.0 * PI * ((i * 137) % n_samples) / n_samples;
    const cplx zI(f.domain.I_base.center() + f.domain.I_base.half_length() * std::cos(a),
                  dom.r * std::sin(a));
    const cplx zy(f.domain.y_base.center() + f.domain.y_base.half_length() * std::cos(b),
                  dom.sigma * std::sin(b));
    best = std::max(best, std::abs(eval_mode(f, k, zI, zy)));
  }
  return best;
}

}  // namespace nqp
