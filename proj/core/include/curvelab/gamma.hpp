#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvelab/triple.hpp"

namespace curvelab {

/// E(f,g) = 1/2 sum_{x,y} w(x,y) (f(x)-f(y)) (g(x)-g(y))  (ordered pairs).
double dirichlet_energy(const MarkovTriple& t, const Field& f, const Field& g);
double dirichlet_energy(const MarkovTriple& t, const Field& f);

/// (Lf)(x) = m(x)^{-1} sum_y w(x,y) (f(y)-f(x)); self-adjoint in L2(m),
/// annihilates constants, <Lf,g>_m = -E(f,g).
Field generator_apply(const MarkovTriple& t, const Field& f);

/// Gamma(f,g)(x) = (2 m(x))^{-1} sum_y w(x,y) (f(y)-f(x)) (g(y)-g(x)).
Field carre_du_champ(const MarkovTriple& t, const Field& f, const Field& g);
Field carre_du_champ(const MarkovTriple& t, const Field& f);

/// 2 Gamma_2(f) = L Gamma(f) - 2 Gamma(f, Lf).
Field gamma2(const MarkovTriple& t, const Field& f);

/// Catalog of post-composition maps eta for the chain-rule probe. All entries
/// have eta(0) = 0; all but Square are normal contractions.
struct EtaSpec {
  enum class Kind { Identity, Square, Clamp, Tanh } kind = Kind::Identity;
  double clamp_lo = 0.0, clamp_hi = 1.0;

  double eval(double r) const;
  double deriv(double r) const;
  bool is_contraction() const { return kind != Kind::Square; }
  std::string name() const;
  static EtaSpec parse(const std::string& s); ///< catalog error on unknown name
};

/// Measures || Gamma(eta(f), g) - eta'(f) Gamma(f, g) ||_inf over a seeded
/// battery of fields g. Zero in the diffusion (strongly local) limit; on a
/// grid builder the value decays O(h) under refinement.
CheckReport chain_rule_defect(const MarkovTriple& t, const Field& f, const EtaSpec& eta,
                              int battery_size = 16, std::uint64_t seed = 42,
                              double tol = 0.0);

struct PointwiseBE {
  double K_star = 0.0;                  ///< min over non-skipped states
  Eigen::VectorXd per_point;            ///< K*(x); +inf marks skipped states
  std::vector<int> skipped;             ///< isolated states (Gamma form vanishes)
  int argmin_state = -1;
  Field extremal;                       ///< minimizing field, supported on a 2-ball
};

/// Optimal pointwise curvature at dimension bound N:
///   K*(x) = inf { (Gamma_2(f)(x) - (1/N) (Lf(x))^2) / Gamma(f)(x) : Gamma(f)(x) > 0 }.
///
/// Assembled per state on the 2-ball of x. The infimum equals
/// sup { K : A_x - nu l l^T - K G_x >= 0 }; after splitting along the spectrum
/// of G_x (eigenvalues below rank_tol * lambda_max dropped), the kernel block
/// is eliminated by a Schur complement before the congruence by the restricted
/// square root of G_x. Projecting without the Schur step only upper-bounds the
/// infimum (the kernel directions couple through Gamma_2).
PointwiseBE pointwise_be_optimal_K(const MarkovTriple& t, double N, double rank_tol = 1e-10);

/// Pass iff K <= K*(N) + tol.
CheckReport be_check(const MarkovTriple& t, double K, double N, double tol);

} // namespace curvelab
