#pragma once

#include <cstdint>
#include <vector>

#include "curvelab/triple.hpp"

namespace curvelab {

/// Seeded test-field battery: coordinate indicators, low-order Chebyshev
/// profiles when the triple carries grid positions, and smoothed Gaussian
/// fields. Fields are sup-normalized. Deterministic for a fixed seed.
/// `smooth_only` drops the indicator block (grid-refinement probes need
/// h-independent test fields).
std::vector<Field> field_battery(const MarkovTriple& t, int size, std::uint64_t seed = 42,
                                 bool smooth_only = false);

/// Strictly positive probability densities exp(smoothed noise), normalized.
/// `amplitude` scales the log-density fluctuation.
std::vector<ProbabilityDensity> density_battery(const MarkovTriple& t, int count,
                                                std::uint64_t seed = 42,
                                                double amplitude = 2.0,
                                                double smoothing_time = 0.08);

} // namespace curvelab
