#pragma once

#include <memory>
#include <string>
#include <vector>

#include "curvelab/gamma.hpp"
#include "curvelab/triple.hpp"

namespace curvelab {

/// Model-space builder description (kind-tagged).
struct SpaceSpec {
  enum class Kind {
    IntervalDiffusion, ///< e^{-V} dx on [a,b], Neumann ends
    CircleDiffusion,   ///< periodic on [0, circumference)
    TwoPoint,
    CompleteGraph,
    Custom,            ///< inline triple JSON
    Product
  } kind = Kind::TwoPoint;

  std::vector<double> potential; ///< V as polynomial coefficients, low order first
  double a = -5.0, b = 5.0;      ///< interval bounds / circle circumference in b
  int n = 2;
  std::uint64_t seed = 42;
  std::string custom_json;
  std::shared_ptr<const SpaceSpec> x, y; ///< product factors

  /// Shorthand parser for the CLI: "two_point", "ou:400", "circle:64",
  /// "complete:5", "product(ou:100,circle:32)", or a path to a spec/triple
  /// JSON file.
  static SpaceSpec parse(const std::string& text);
  static SpaceSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
  std::string describe() const;
};

/// Discretizes e^{-V} dx with m_i = e^{-V(x_i)} h and geometric-midpoint
/// weights w_{i,i+1} = e^{-(V_i + V_{i+1})/2} / h (detailed balance exact,
/// O(h^2) interior generator consistency). Neumann ends by edge omission;
/// periodic wraparound for circles.
MarkovTriple build(const SpaceSpec& spec);

/// Cartesian product: product measure, edges only in coordinate directions
/// with w_X * m_Y and w_Y * m_X, so the generator is the Kronecker sum and
/// Gamma splits exactly. Rejects products beyond the spectral state cap.
MarkovTriple product(const MarkovTriple& X, const MarkovTriple& Y);

struct TensorizationReport {
  CheckReport factor_x, factor_y; ///< be_check of the claimed factor conditions
  CheckReport product_check;      ///< be_check(product, K, NX + NY)
  double product_K_star = 0.0;
  std::vector<std::pair<double, double>> dimension_sweep; ///< (N, K*(N)) on the product
  bool verdict = false;
};

/// Factors claiming BE(KX, NX) and BE(KY, NY); the product is checked at
/// BE(min(KX,KY), NX + NY) and the product curvature is swept over N.
TensorizationReport tensorization_check(const MarkovTriple& X, double KX, double NX,
                                        const MarkovTriple& Y, double KY, double NY,
                                        double tol);

struct StudyRow {
  int n = 0;
  double K_star = 0.0;
  double de_defect = 0.0;
  double evi_residual = 0.0;
  double contraction_residual = 0.0;
  double log_harnack_residual = 0.0;
};

struct StudyConfig {
  double N = kInfiniteN;     ///< dimension bound for the K* column
  double K_contraction = 0.9;
  double K_evi = 0.85;
  double K_harnack = 0.9;
  int pairs = 6;
  std::uint64_t seed = 42;
  std::vector<double> t_grid = {0.05, 0.1, 0.25, 0.5, 1.0};
};

struct StudyTable {
  std::vector<StudyRow> rows;
  double fitted_order_de = 0.0;   ///< log2 slopes of the defect columns
  double fitted_order_evi = 0.0;
  std::string to_csv() const;     ///< fixed documented column order
};

/// Grid-refinement surrogate of curvature stability: as n grows, K*_n and the
/// residual columns must settle toward their continuum values.
StudyTable refinement_study(const SpaceSpec& family, const std::vector<int>& n_list,
                            const StudyConfig& cfg = {});

} // namespace curvelab
