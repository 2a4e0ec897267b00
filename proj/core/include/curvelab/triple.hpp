#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvelab/types.hpp"

namespace curvelab {

struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

/// Finite state set with a strictly positive reference measure and symmetric
/// nonnegative conductances. Houses everything downstream: the Dirichlet form,
/// the generator, the heat semigroup and the intrinsic geometry.
///
/// Generator convention: (Lf)(x) = m(x)^{-1} sum_y w(x,y) (f(y) - f(x)),
/// the unique choice with E(f,g) = -<f, Lg>_m for the double-sum energy.
struct MarkovTriple {
  int n = 0;
  Eigen::VectorXd measure;
  std::vector<Edge> edges;              ///< stored once per unordered pair, i < j
  std::vector<std::string> labels;      ///< optional state names

  /// Grid descriptor for discretized diffusions (spacing and node positions).
  std::optional<double> grid_h;
  std::optional<Eigen::VectorXd> positions;

  /// Neighbor lists, built by finalize(): adjacency[x] = {(y, w(x,y))}.
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  MarkovTriple() = default;
  MarkovTriple(int n_states, Eigen::VectorXd m, std::vector<Edge> es);

  /// Validates invariants and rebuilds the adjacency lists.
  void finalize();

  double total_mass() const { return measure.sum(); }

  /// Connected-component id per state (0-based, by smallest member).
  std::vector<int> components() const;
  int component_count() const;

  void check_field(const Field& f) const {
    if (f.size() != n) throw invalid_field("field length does not match state count");
  }

  /// JSON schema: {"n": int, "measure": [...], "edges": [[i,j,w]...],
  ///               "labels": [...], "h": float?}. 0-based indices,
  /// duplicate edges rejected.
  static MarkovTriple from_json_text(const std::string& text);
  static MarkovTriple load_json(const std::string& path);
  std::string to_json_text() const;
  void save_json(const std::string& path) const;
};

/// Validated probability density against triple.measure (mass 1 within 1e-10).
ProbabilityDensity make_density(const MarkovTriple& triple, const Field& f);

/// Density of a convex combination of point masses: mu = sum_k a_k delta_{x_k}.
ProbabilityDensity atomic_density(const MarkovTriple& triple,
                                  const std::vector<std::pair<int, double>>& atoms);

double density_mass(const MarkovTriple& triple, const Field& f);

} // namespace curvelab
