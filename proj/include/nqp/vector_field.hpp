#pragma once

#include "nqp/series.hpp"

namespace nqp {

/// components on the (I, y, phi) directions, sharing one base geometry
struct VectorField3 {
  FTSeries X1, X2, X3;

  const DomainSpec& domain() const { return X1.domain; }
};

inline VectorField3 vf_zero(const DomainSpec& domain) {
  FTSeries z = constant_series(domain, 0.0);
  return {z, z, z};
}

inline VectorField3 add(const VectorField3& a, const VectorField3& b) {
  return {add(a.X1, b.X1), add(a.X2, b.X2), add(a.X3, b.X3)};
}

inline VectorField3 scale(const VectorField3& a, cplx f) {
  return {scale(a.X1, f), scale(a.X2, f), scale(a.X3, f)};
}

inline VectorField3 sub(const VectorField3& a, const VectorField3& b) {
  return add(a, scale(b, -1.0));
}

inline VectorField3 project_mean(const VectorField3& a) {
  return {project_mean(a.X1), project_mean(a.X2), project_mean(a.X3)};
}

inline VectorField3 project_osc(const VectorField3& a) {
  return {project_osc(a.X1), project_osc(a.X2), project_osc(a.X3)};
}

inline double vf_mass(const VectorField3& a) { return a.X1.mass() + a.X2.mass() + a.X3.mass(); }

/// the unperturbed part N = (0, v(I, y), omega(I, y)) with the integration
/// base point y0 for the transport solves
struct NormalPart {
  FTSeries v;
  FTSeries omega;
  double y0;

  NormalPart(FTSeries v_, FTSeries omega_, double y0_ = std::nan(""))
      : v(std::move(v_)), omega(std::move(omega_)), y0(y0_) {
    if (v.kmax != 0 || omega.kmax != 0) throw ValidationError("normal_part", "v, omega must be phi-independent");
    if (!same_geometry(v.domain, omega.domain)) throw ValidationError("normal_part", "v, omega domains differ");
    if (std::isnan(y0)) y0 = v.domain.y_base.center();
    if (!v.domain.y_base.contains(y0)) throw ValidationError("y0", "outside y_base");
  }
};

inline VectorField3 as_vector_field(const NormalPart& N) {
  return {constant_series(N.v.domain, 0.0), N.v, N.omega};
}

/// a perturbed system X = N + P
struct PerturbedVF {
  NormalPart normal;
  VectorField3 P;

  VectorField3 full() const { return add(as_vector_field(normal), P); }
};

}  // namespace nqp
