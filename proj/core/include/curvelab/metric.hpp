#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvelab/triple.hpp"

namespace curvelab {

/// Symmetric pairwise distance table. Disconnected pairs carry a tagged
/// sentinel (never a raw float infinity in serialized output) plus a
/// reachability flag.
struct MetricMatrix {
  Eigen::MatrixXd d;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> reachable;
  static constexpr double kUnreachable = 1e30;

  int n() const { return static_cast<int>(d.rows()); }
  bool pair_reachable(int i, int j) const { return reachable(i, j) != 0; }

  /// Symmetry/zero-diagonal exact; triangle inequality within `slack`.
  void validate(double slack = 1e-9) const;

  std::string to_csv() const;                       ///< columns i,j,d,reachable
  static MetricMatrix from_csv(const std::string&); ///< import external metrics
};

struct DistanceOptions {
  int ascent_iterations = 10000; ///< projected-subgradient cap per pair
  bool polish = true;            ///< active-set KKT Newton refinement
  double active_tol = 1e-7;      ///< activity detection threshold
  double step_scale = 0.5;       ///< ascent step c/sqrt(k), c = step_scale * local scale
};

struct DistanceResult {
  MetricMatrix metric;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> converged;
  int unconverged_pairs = 0;
  int disconnected_pairs = 0;
};

/// Intrinsic pseudo-distance of the form:
///   d_E(x,y) = sup { psi(y) - psi(x) : Gamma(psi) <= 1 everywhere }.
/// Per unordered pair: projected subgradient ascent (feasibility restored by
/// cyclic projection along constraint gradients, closed form per constraint)
/// followed by an active-set KKT Newton polish. Entries are min-plus closed
/// afterwards, so the triangle inequality holds exactly and symmetry is by
/// construction. Unconverged pairs keep their best feasible value and are
/// flagged.
DistanceResult intrinsic_distance(const MarkovTriple& t, const DistanceOptions& opt = {});

/// Single-pair solve (used by the per-pair certification tests).
double intrinsic_distance_pair(const MarkovTriple& t, int x, int y,
                               const DistanceOptions& opt = {}, bool* converged = nullptr);

enum class SlopeVariant { Full, Plus, Minus };

/// Discrete slope |Df|(x) = max_{y != x} |f(y)-f(x)| / d(x,y); one-sided
/// variants take the positive/negative part of f(y)-f(x). The max runs over
/// all reachable states, the literal finite-space evaluation of the limsup.
Field local_slope(const MetricMatrix& d, const Field& f, SlopeVariant variant = SlopeVariant::Full);

/// Q_t f(x) = min_y f(y) + d(y,x)^2 / (2t); exact minimization, Q_0 f = f.
Field hopf_lax(const MetricMatrix& d, const Field& f, double t);

/// Compares the finite-difference s-derivative of Q_s f(x) with
/// -(D^+(x,s))^2/(2 s^2), D^+ taken over the argmin set, away from argmin
/// transitions. Optionally reports the semigroup defect Q_s Q_s vs Q_{2s}.
CheckReport hopf_lax_derivative_check(const MetricMatrix& d, const Field& f,
                                      const std::vector<double>& t_grid,
                                      double tol);

/// Midpoint criterion: defect(x,y) = min_z max(d(x,z), d(z,y)) - d(x,y)/2,
/// worst over reachable pairs. Zero on length spaces; O(h) on grid builders.
CheckReport length_defect(const MetricMatrix& d, double tol = 0.0);

/// Energy-distance interaction probe:
/// (a) sampled fields with Gamma(psi) <= 1 are (1+tol)-Lipschitz w.r.t. d
///     (asserted; holds by construction when d is the intrinsic distance);
/// (b) clamped distance profiles f = min(d(x0,.), c) satisfy Gamma(f) <= 1 + gap,
///     the gap reported (the discrete surrogate of the converse direction).
CheckReport ed_condition_check(const MarkovTriple& t, const MetricMatrix& d, double tol,
                               int battery = 8, std::uint64_t seed = 42);

} // namespace curvelab
