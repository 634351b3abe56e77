#pragma once

#include <cmath>
#include <vector>

#include "nqp/ham_series.hpp"
#include "nqp/norms.hpp"
#include "nqp/series.hpp"
#include "nqp/vector_field.hpp"

namespace nqp {

/// [Y, X] = J_X Y - J_Y X over the coordinates (I, y, phi)
inline VectorField3 lie_bracket(const VectorField3& Y, const VectorField3& X,
                                const TruncationPolicy& policy = default_policy()) {
  auto directional = [&](const FTSeries& f) {
    // (J_f applied to Y) for a scalar component f: dI f * Y1 + dy f * Y2 + dphi f * Y3
    FTSeries out = mul(diff(f, Var::I), Y.X1, policy);
    out = add(out, mul(diff(f, Var::y), Y.X2, policy));
    return add(out, mul(diff(f, Var::phi), Y.X3, policy));
  };
  auto directional_rev = [&](const FTSeries& f) {
    FTSeries out = mul(diff(f, Var::I), X.X1, policy);
    out = add(out, mul(diff(f, Var::y), X.X2, policy));
    return add(out, mul(diff(f, Var::phi), X.X3, policy));
  };
  return {sub(directional(X.X1), directional_rev(Y.X1)),
          sub(directional(X.X2), directional_rev(Y.X2)),
          sub(directional(X.X3), directional_rev(Y.X3))};
}

/// {f, g} over the conjugate pairs (I, phi), (p, q), (y, x), first slot
/// momentum-like: {f,g} = sum d_P f d_Q g - d_Q f d_P g. Gives {p, q} = 1.
inline HamSeries poisson_bracket(const HamSeries& f, const HamSeries& g,
                                 const TruncationPolicy& policy = default_policy()) {
  HamSeries out =
      sub(mul(diff(f, HamVar::I), diff(g, HamVar::phi), policy),
          mul(diff(f, HamVar::phi), diff(g, HamVar::I), policy));
  out = add(out, sub(mul(diff(f, HamVar::p), diff(g, HamVar::q), policy),
                     mul(diff(f, HamVar::q), diff(g, HamVar::p), policy)));
  out = add(out, sub(mul(diff(f, HamVar::y), diff(g, HamVar::x), policy),
                     mul(diff(f, HamVar::x), diff(g, HamVar::y), policy)));
  return out;
}

struct LieOptions {
  int max_terms = 40;
  double q_limit = 0.9;
  double term_rtol = 1e-14;
  double q_override = std::nan("");  // driver-supplied contraction parameter
};

template <class Series>
struct LieSeriesResult {
  Series transformed;
  int terms_used = 0;
  double q = 0.0;
  double tail_bound = 0.0;
  double truncation_error_estimate = 0.0;
  bool convergent = false;
};

/// e^{L_Y} W = sum_k L_Y^k W / k! with adaptive truncation. The contraction
/// parameter q = 3 |||Y|||^w_{u+w} (or the driver's override) gates the run and
/// prices the analytic tail q^{K+1}/(1-q) |||W|||.
inline LieSeriesResult<VectorField3> lie_series_apply(const VectorField3& Y, const VectorField3& W,
                                                      const DomainSpec& u, const Weights& w,
                                                      const LieOptions& opt = {},
                                                      const TruncationPolicy& policy = default_policy()) {
  LieSeriesResult<VectorField3> res;
  res.q = std::isnan(opt.q_override) ? 3.0 * vf_norm(Y, widen(u, w), w) : opt.q_override;
  if (res.q >= opt.q_limit) throw DivergenceRisk(res.q);
  const double wnorm = vf_norm(W, u, w);
  const DomainSpec inner = shrink(u, w);
  VectorField3 sum = W;
  VectorField3 term = W;
  double last = wnorm;
  for (int k = 1; k <= opt.max_terms; ++k) {
    term = scale(lie_bracket(Y, term, policy), 1.0 / k);
    sum = add(sum, term);
    res.terms_used = k;
    last = vf_norm(term, inner, w);
    if (last <= opt.term_rtol * std::max(wnorm, 1e-300)) break;
  }
  res.transformed = std::move(sum);
  res.truncation_error_estimate = last;
  res.tail_bound = (res.q < 1.0 && res.q > 0.0)
                       ? std::pow(res.q, res.terms_used + 1) / (1.0 - res.q) * wnorm
                       : 0.0;
  res.convergent = res.q < 1.0;
  return res;
}

/// Hamiltonian Lie series e^{L_phi} W; q must be supplied by the caller
/// (cbar * ||phi|| / d on the shrunk scale, bookkeeping owned by the driver).
inline LieSeriesResult<HamSeries> lie_series_apply(const HamSeries& phi, const HamSeries& W,
                                                   const DomainSpec& norm_dom, double q,
                                                   const LieOptions& opt = {},
                                                   const TruncationPolicy& policy = default_policy()) {
  LieSeriesResult<HamSeries> res;
  res.q = q;
  if (res.q >= opt.q_limit) throw DivergenceRisk(res.q);
  const double wnorm = ham_norm(W, norm_dom);
  HamSeries sum = W;
  HamSeries term = W;
  double last = wnorm;
  for (int k = 1; k <= opt.max_terms; ++k) {
    term = scale(poisson_bracket(phi, term, policy), 1.0 / k);
    sum = add(sum, term);
    res.terms_used = k;
    last = ham_norm(term, norm_dom);
    if (last <= opt.term_rtol * std::max(wnorm, 1e-300)) break;
  }
  res.transformed = std::move(sum);
  res.truncation_error_estimate = last;
  res.tail_bound = (res.q < 1.0 && res.q > 0.0)
                       ? std::pow(res.q, res.terms_used + 1) / (1.0 - res.q) * wnorm
                       : 0.0;
  res.convergent = res.q < 1.0;
  return res;
}

/// the truncated Lie-series terms L^k_Y W / k! for k = lo..hi, summed
inline VectorField3 lie_tail(const VectorField3& Y, const VectorField3& W, int lo, int hi,
                             const TruncationPolicy& policy = default_policy(),
                             const DomainSpec* stop_dom = nullptr, const Weights* stop_w = nullptr,
                             double stop_rtol = 0.0) {
  VectorField3 term = W;
  VectorField3 acc = vf_zero(W.domain());
  double scale0 = (stop_dom && stop_w) ? vf_norm(W, *stop_dom, *stop_w) : 0.0;
  for (int k = 1; k <= hi; ++k) {
    term = scale(lie_bracket(Y, term, policy), 1.0 / k);
    if (k >= lo) {
      acc = add(acc, term);
      if (stop_dom && stop_w && stop_rtol > 0) {
        if (vf_norm(term, *stop_dom, *stop_w) <= stop_rtol * std::max(scale0, 1e-300)) break;
      }
    }
  }
  return acc;
}

inline HamSeries lie_tail(const HamSeries& phi, const HamSeries& W, int lo, int hi,
                          const TruncationPolicy& policy = default_policy(),
                          const DomainSpec* stop_dom = nullptr, double stop_rtol = 0.0) {
  HamSeries term = W;
  HamSeries acc = ham_zero(W.domain);
  double scale0 = stop_dom ? ham_norm(W, *stop_dom) : 0.0;
  for (int k = 1; k <= hi; ++k) {
    term = scale(poisson_bracket(phi, term, policy), 1.0 / k);
    if (k >= lo) {
      acc = add(acc, term);
      if (stop_dom && stop_rtol > 0) {
        if (ham_norm(term, *stop_dom) <= stop_rtol * std::max(scale0, 1e-300)) break;
      }
    }
  }
  return acc;
}

}  // namespace nqp
