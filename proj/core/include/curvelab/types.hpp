#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curvelab {

/// Real-valued function on the states of a MarkovTriple.
using Field = Eigen::VectorXd;

/// Thrown when a field or measure does not match the space it is used with.
class invalid_field : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class invalid_parameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class invalid_measure : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Unknown entry of a fixed catalog (contraction eta, mollifier kernel, beta spec).
class catalog_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Eigensolver or other numerical-kernel failure, with diagnostics in what().
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInfiniteN = std::numeric_limits<double>::infinity();

/// nu = 1/N with N = inf mapped to an exact zero.
inline double nu_of_N(double N) {
  if (std::isinf(N)) return 0.0;
  if (!(N > 0)) throw invalid_parameter("dimension parameter N must be positive or inf");
  return 1.0 / N;
}

/// Structured residual record for one inequality/identity check.
struct CheckReport {
  std::string name;
  std::string anchor;          ///< stable identifier of the quantity being checked
  double K = std::numeric_limits<double>::quiet_NaN();
  double N = std::numeric_limits<double>::quiet_NaN();
  double t = std::numeric_limits<double>::quiet_NaN();
  double worst_residual = 0.0;
  std::string worst_location;
  double tolerance = 0.0;
  bool verdict = true;         ///< worst_residual <= tolerance
  std::vector<std::pair<std::string, double>> details;

  static CheckReport make(std::string name, std::string anchor, double worst,
                          std::string location, double tol) {
    CheckReport r;
    r.name = std::move(name);
    r.anchor = std::move(anchor);
    r.worst_residual = worst;
    r.worst_location = std::move(location);
    r.tolerance = tol;
    r.verdict = (worst <= tol);
    return r;
  }
};

/// Nonnegative density against the reference measure, integrating to 1.
struct ProbabilityDensity {
  Field density;
};

} // namespace curvelab
