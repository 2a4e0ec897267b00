#include "curvelab/battery.hpp"

#include <algorithm>
#include <cmath>

#include "curvelab/gamma.hpp"
#include "curvelab/rng.hpp"

namespace curvelab {

namespace {

// Explicit heat smoothing to a fixed physical time (stability-bounded steps),
// so battery fields keep an h-independent correlation length under refinement.
Field smooth(const MarkovTriple& t, Field f, double time) {
  double rate_max = 0.0;
  for (int x = 0; x < t.n; ++x) {
    double acc = 0.0;
    for (auto [y, w] : t.adjacency[x]) acc += w;
    rate_max = std::max(rate_max, acc / t.measure[x]);
  }
  if (rate_max <= 0.0 || time <= 0.0) return f;
  double tau = 0.9 / rate_max;
  int steps = static_cast<int>(std::ceil(time / tau));
  steps = std::min(steps, 200000);
  tau = time / steps;
  for (int s = 0; s < steps; ++s) f += tau * generator_apply(t, f);
  return f;
}

void sup_normalize(Field& f) {
  double m = f.cwiseAbs().maxCoeff();
  if (m > 0) f /= m;
}

} // namespace

std::vector<Field> field_battery(const MarkovTriple& t, int size, std::uint64_t seed,
                                 bool smooth_only) {
  std::vector<Field> out;
  if (size <= 0) return out;
  if (!smooth_only) {
    // coordinate indicators
    int n_ind = std::min(t.n, std::max(2, size / 4));
    for (int k = 0; k < n_ind && static_cast<int>(out.size()) < size; ++k) {
      Field f = Field::Zero(t.n);
      f[(k * 2654435761u) % t.n] = 1.0;
      out.push_back(f);
    }
  }
  // Chebyshev profiles on grid builders
  if (t.positions) {
    const auto& x = *t.positions;
    double lo = x.minCoeff(), hi = x.maxCoeff();
    for (int k = 1; k <= 8 && static_cast<int>(out.size()) < size; ++k) {
      Field f(t.n);
      for (int i = 0; i < t.n; ++i) {
        double u = (hi > lo) ? 2.0 * (x[i] - lo) / (hi - lo) - 1.0 : 0.0;
        f[i] = std::cos(k * std::acos(std::min(1.0, std::max(-1.0, u))));
      }
      sup_normalize(f);
      out.push_back(f);
    }
  }
  // seeded Gaussian fields; smoothed into the low-pass range on grids
  Rng rng(seed);
  while (static_cast<int>(out.size()) < size) {
    Field f(t.n);
    for (int i = 0; i < t.n; ++i) f[i] = rng.normal();
    if (t.positions && t.n > 16) f = smooth(t, f, 0.05);
    sup_normalize(f);
    out.push_back(f);
  }
  return out;
}

std::vector<ProbabilityDensity> density_battery(const MarkovTriple& t, int count,
                                                std::uint64_t seed, double amplitude,
                                                double smoothing_time) {
  Rng rng(seed);
  std::vector<ProbabilityDensity> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Field g(t.n);
    for (int i = 0; i < t.n; ++i) g[i] = amplitude * rng.normal();
    g = smooth(t, g, smoothing_time);
    Field f = g.array().exp();
    f /= f.dot(t.measure);
    out.push_back(ProbabilityDensity{f});
  }
  return out;
}

} // namespace curvelab
