#pragma once

#include <memory>
#include <vector>

#include "curvelab/triple.hpp"

namespace curvelab {

/// Exact dense spectral realization of the generator. The symmetrization
/// D^{1/2} L D^{-1/2} (D = diag(m)) is diagonalized once; every P_t
/// evaluation afterwards is exact up to eigensolver accuracy, so no
/// time-stepping error enters the downstream inequality checks.
struct SpectralDecomposition {
  MarkovTriple triple;            ///< immutable copy; shareable read-only
  Eigen::VectorXd eigenvalues;    ///< ascending, nonpositive; exact zeros per component
  Eigen::MatrixXd basis;          ///< columns orthonormal in L2(m)
  int n_components = 1;

  int n() const { return triple.n; }
};

inline constexpr int kSpectralStateCap = 5000;

/// Dense eigendecomposition; rejects spaces above kSpectralStateCap with
/// guidance, errors with condition diagnostics on solver failure.
SpectralDecomposition decompose(const MarkovTriple& t);

/// P_t f by eigenexpansion; requires t >= 0.
Field heat_apply(const SpectralDecomposition& dec, double t, const Field& f);

struct HeatKernel {
  double t = 0.0;
  Eigen::MatrixXd u;              ///< u_t[x](y); H_t delta_x = u_t[x] m
  bool diagonal_singularity = false; ///< set when t = 0 (u_0[x](y) = delta_xy / m(y))
};

/// m-symmetric, row-stochastic against m: sum_y u_t[x](y) m(y) = 1.
HeatKernel heat_kernel(const SpectralDecomposition& dec, double t);

/// Dual action on measures: H_t(f m) = (P_t f) m.
ProbabilityDensity dual_apply(const SpectralDecomposition& dec, double t,
                              const ProbabilityDensity& mu);
/// H_t of an atomic measure sum_k a_k delta_{x_k}.
ProbabilityDensity dual_apply(const SpectralDecomposition& dec, double t,
                              const std::vector<std::pair<int, double>>& atoms);

/// Normalized bump kernel on [a,b] subset (0,inf) for the semigroup mollifier.
struct MollifierKernel {
  double a = 1.0, b = 2.0;
  /// c (r-a)^2 (b-r)^2 on [a,b], c chosen so the integral is 1.
  double eval(double r) const;
  /// khat(s) = int kappa(r) e^{s r} dr, adaptive quadrature to 1e-10.
  double transform(double s) const;
  void validate() const; ///< invalid-kernel unless 0 < a < b and normalized
};

/// h^eps f = eps^{-1} int P_r f kappa(r/eps) dr = sum_k khat(eps lambda_k) <f,e_k> e_k.
Field mollify(const SpectralDecomposition& dec, double eps, const Field& f,
              const MollifierKernel& kernel = {});

} // namespace curvelab
