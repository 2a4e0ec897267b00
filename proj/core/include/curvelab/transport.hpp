#pragma once

#include <vector>

#include "curvelab/bakry_emery.hpp"
#include "curvelab/metric.hpp"
#include "curvelab/ot.hpp"
#include "curvelab/spectral.hpp"

namespace curvelab {

/// Ent_m(mu) = int f log f dm for mu = f m (0 log 0 = 0).
double entropy(const MarkovTriple& t, const ProbabilityDensity& mu);

/// Both Fisher evaluations and their gap: 4 E(sqrt f) versus
/// sum_{f>0} Gamma(f)/f dm (the identity holds only in the diffusion limit).
struct FisherPair {
  double four_energy_sqrt = 0.0;
  double gradient_quotient = 0.0;
  double gap = 0.0;
};
FisherPair fisher(const MarkovTriple& t, const ProbabilityDensity& mu);

/// W_2(H_t mu, H_t nu) <= e^{-Kt} W_2(mu, nu) over density pairs and times;
/// worst signed residual reported.
CheckReport contraction_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                              const std::vector<std::pair<ProbabilityDensity, ProbabilityDensity>>& pairs,
                              const std::vector<double>& t_grid, double K, double tol);

/// d+/dt (1/2) W_2^2(H_t rho, nu) + (K/2) W_2^2 + Ent(H_t rho) <= Ent(nu),
/// forward differences on t_grid (the upper right derivative motivates
/// forward differencing); worst positive part reported.
CheckReport evi_residual(const SpectralDecomposition& dec, const MetricMatrix& d,
                         const ProbabilityDensity& rho0, const ProbabilityDensity& nu,
                         const std::vector<double>& t_grid, double K);

/// P_t(log(f+eps))(y) <= log(P_t f(x) + eps) + d(x,y)^2 / (4 I_{2K}(t)),
/// worst over ordered pairs and the eps ladder {0, 1e-6, 1e-3}.
CheckReport log_harnack_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                              const Field& f, double t, double K, double tol);

/// Ent(H_t mu) <= (r^2 + int d^2(., x0) dmu) / (2 I_{2K}(t)) - log m(B_r(x0)).
CheckReport llogl_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                        const ProbabilityDensity& mu, double t, double K, int x0, double r);

/// Difference-quotient speeds W_2(rho_{i+1}, rho_i) / (s_{i+1} - s_i).
Eigen::VectorXd metric_speed(const MetricMatrix& d, const MarkovTriple& t,
                             const std::vector<ProbabilityDensity>& curve,
                             const std::vector<double>& s_grid);

/// Speed-versus-Fisher probe along a heat-flow curve rho_s = H_{tau s} rho0:
/// |rho'_t|^2 <= F(f_t) + tol at the left grid points (asserted only where the
/// quotient steps resolve the grid scale; always reported).
CheckReport speed_fisher_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                               const ProbabilityDensity& rho0, double tau,
                               const std::vector<double>& s_grid, double tol);

/// W_2^2(rho_0, H_t rho_1) + 2t Ent(H_t rho_1)
///   <= R_K(t)^2 int_0^1 |rho'_s|^2 ds + 2t Ent(rho_0).
/// Curve of strictly positive densities; zeros are floored to 1e-12 and
/// renormalized, flagged in the report.
CheckReport action_estimate_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                                  const std::vector<ProbabilityDensity>& curve,
                                  const std::vector<double>& s_grid, double t, double K,
                                  double tol);

/// Integral identity int 2 sqrt(f) Gamma(sqrt f, phi) dm = - int phi Lf dm
/// (exact finite-space algebra); the pointwise gap to Gamma(f, phi) is the
/// reported chain-rule defect.
CheckReport integration_by_parts_check(const MarkovTriple& t, const ProbabilityDensity& mu,
                                       const std::vector<Field>& phi_battery,
                                       double tol = 1e-10);

/// d/dt Ent(P_t f m) = -E(f_t, log f_t) exactly; the gap of the dissipation
/// to -F(f_t) is reported (vanishes under grid refinement).
CheckReport entropy_dissipation_check(const SpectralDecomposition& dec,
                                      const ProbabilityDensity& rho0, double t,
                                      double dt, double tol);

} // namespace curvelab
