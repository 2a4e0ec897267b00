#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvelab/metric.hpp"
#include "curvelab/triple.hpp"

namespace curvelab {

/// Sparse coupling with marginals reproduced to 1e-10.
struct TransportPlan {
  int n = 0;
  std::vector<std::tuple<int, int, double>> mass; ///< (i, j, amount)
  Eigen::MatrixXd dense() const;
};

struct OTResult {
  double value = 0.0;      ///< W_p = cost^{1/p}
  double cost = 0.0;       ///< optimal sum of d^p * mass
  TransportPlan plan;
  Eigen::VectorXd u, v;    ///< optimal node potentials (duals of the LP)
  double duality_gap = 0.0;
  int pivots = 0;
  bool bland_engaged = false;
};

/// Exact L^p Wasserstein (p in {1,2}) by primal network simplex on the
/// complete bipartite graph. The returned plan is feasibility- and
/// complementary-slackness-certified against the dual; gap <= 1e-9 * scale or
/// a numerical error is thrown. Anti-cycling falls back to Bland's rule.
OTResult wasserstein(const MetricMatrix& d, const MarkovTriple& t,
                     const ProbabilityDensity& mu, const ProbabilityDensity& nu, int p);

/// Generic transportation solve on an explicit cost matrix (weights sum equal).
OTResult transport_lp(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                      const Eigen::VectorXd& demand);

/// Bounded concave moduli for the W_(beta) family.
struct BetaSpec {
  enum class Kind { Truncation, Rational } kind = Kind::Truncation;
  double a = 1.0; ///< truncation level for min(r, a)
  double eval(double r) const;
  static BetaSpec parse(const std::string& s); ///< catalog error on unknown name
};

/// W_(beta) = L^1 transport distance with cost beta(d).
double wasserstein_beta(const MetricMatrix& d, const MarkovTriple& t,
                        const ProbabilityDensity& mu, const ProbabilityDensity& nu,
                        const BetaSpec& beta = {});

/// Dual route for 1/2 W_2^2 = sup_f [ int Q_1 f dmu - int f dnu ]:
/// multistart c-transform double cycles, then an exact successive-shortest-path
/// potential ascent; the reported gap is LP minus the best dual value.
CheckReport kantorovich_duality_gap(const MetricMatrix& d, const MarkovTriple& t,
                                    const ProbabilityDensity& mu,
                                    const ProbabilityDensity& nu, int iters = 200,
                                    double tol = 1e-6, std::uint64_t seed = 42);

} // namespace curvelab
