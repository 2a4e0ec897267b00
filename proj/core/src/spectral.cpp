#include "curvelab/spectral.hpp"

#include <cmath>
#include <string>

namespace curvelab {

SpectralDecomposition decompose(const MarkovTriple& t) {
  if (t.n > kSpectralStateCap)
    throw invalid_parameter(
        "space has " + std::to_string(t.n) + " states; the dense spectral path is capped at " +
        std::to_string(kSpectralStateCap) +
        " (use a coarser grid, or tensor-factorized evaluation for products)");
  Eigen::VectorXd sqm = t.measure.cwiseSqrt();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(t.n, t.n);
  for (const auto& e : t.edges) {
    if (e.w == 0.0) continue;
    double s = e.w / (sqm[e.i] * sqm[e.j]);
    S(e.i, e.j) += s;
    S(e.j, e.i) += s;
    S(e.i, e.i) -= e.w / t.measure[e.i];
    S(e.j, e.j) -= e.w / t.measure[e.j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw numerical_error("generator eigensolve failed (n=" + std::to_string(t.n) +
                          ", |S|_max=" + std::to_string(S.cwiseAbs().maxCoeff()) + ")");
  SpectralDecomposition dec;
  dec.triple = t;
  dec.eigenvalues = es.eigenvalues();
  dec.basis = es.eigenvectors();
  for (int i = 0; i < t.n; ++i) dec.basis.row(i) /= sqm[i];
  // snap the per-component zero modes to exact zeros
  double scale = std::max(1.0, dec.eigenvalues.cwiseAbs().maxCoeff());
  int zeros = 0;
  for (int k = 0; k < t.n; ++k) {
    if (std::abs(dec.eigenvalues[k]) <= 1e-12 * scale) {
      dec.eigenvalues[k] = 0.0;
      ++zeros;
    } else if (dec.eigenvalues[k] > 0) {
      throw numerical_error("positive generator eigenvalue " +
                            std::to_string(dec.eigenvalues[k]) + " beyond tolerance");
    }
  }
  dec.n_components = t.component_count();
  if (zeros != dec.n_components)
    throw numerical_error("zero-eigenvalue count " + std::to_string(zeros) +
                          " does not match component count " +
                          std::to_string(dec.n_components));
  return dec;
}

Field heat_apply(const SpectralDecomposition& dec, double t, const Field& f) {
  dec.triple.check_field(f);
  if (t < 0) throw invalid_parameter("heat_apply requires t >= 0");
  Eigen::VectorXd c = dec.basis.transpose() * (dec.triple.measure.asDiagonal() * f);
  for (int k = 0; k < dec.n(); ++k) {
    double a = dec.eigenvalues[k] * t;
    c[k] *= (a < -700.0) ? 0.0 : std::exp(a);
  }
  return dec.basis * c;
}

HeatKernel heat_kernel(const SpectralDecomposition& dec, double t) {
  if (t < 0) throw invalid_parameter("heat_kernel requires t >= 0");
  HeatKernel hk;
  hk.t = t;
  if (t == 0.0) {
    hk.diagonal_singularity = true;
    hk.u = Eigen::MatrixXd::Zero(dec.n(), dec.n());
    for (int x = 0; x < dec.n(); ++x) hk.u(x, x) = 1.0 / dec.triple.measure[x];
    return hk;
  }
  Eigen::VectorXd e(dec.n());
  for (int k = 0; k < dec.n(); ++k) {
    double a = dec.eigenvalues[k] * t;
    e[k] = (a < -700.0) ? 0.0 : std::exp(a);
  }
  hk.u = dec.basis * e.asDiagonal() * dec.basis.transpose();
  return hk;
}

ProbabilityDensity dual_apply(const SpectralDecomposition& dec, double t,
                              const ProbabilityDensity& mu) {
  double mass = mu.density.dot(dec.triple.measure);
  if (std::abs(mass - 1.0) > 1e-10)
    throw invalid_measure("dual_apply input mass differs from 1 beyond 1e-10");
  Field out = heat_apply(dec, t, mu.density);
  out = out.cwiseMax(0.0); // clip eigensolver dust
  out /= out.dot(dec.triple.measure);
  return ProbabilityDensity{out};
}

ProbabilityDensity dual_apply(const SpectralDecomposition& dec, double t,
                              const std::vector<std::pair<int, double>>& atoms) {
  return dual_apply(dec, t, atomic_density(dec.triple, atoms));
}

double MollifierKernel::eval(double r) const {
  if (r <= a || r >= b) return 0.0;
  double c = 30.0 / std::pow(b - a, 5);
  double u = r - a, v = b - r;
  return c * u * u * v * v;
}

void MollifierKernel::validate() const {
  if (!(0 < a && a < b)) throw catalog_error("mollifier kernel needs 0 < a < b");
  // normalization of the quartic bump is built in; guard against NaN params
  if (!std::isfinite(a) || !std::isfinite(b)) throw catalog_error("invalid kernel bounds");
}

namespace {

double simpson(const MollifierKernel& k, double s, double lo, double hi) {
  double mid = 0.5 * (lo + hi);
  auto f = [&](double r) { return k.eval(r) * std::exp(s * r); };
  return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
}

double adaptive(const MollifierKernel& k, double s, double lo, double hi, double whole,
                double tol, int depth) {
  double mid = 0.5 * (lo + hi);
  double left = simpson(k, s, lo, mid), right = simpson(k, s, mid, hi);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(k, s, lo, mid, left, tol / 2, depth - 1) +
         adaptive(k, s, mid, hi, right, tol / 2, depth - 1);
}

} // namespace

double MollifierKernel::transform(double s) const {
  validate();
  return adaptive(*this, s, a, b, simpson(*this, s, a, b), 1e-12, 40);
}

Field mollify(const SpectralDecomposition& dec, double eps, const Field& f,
              const MollifierKernel& kernel) {
  dec.triple.check_field(f);
  if (!(eps > 0)) throw invalid_parameter("mollify requires eps > 0");
  kernel.validate();
  Eigen::VectorXd c = dec.basis.transpose() * (dec.triple.measure.asDiagonal() * f);
  for (int k = 0; k < dec.n(); ++k) c[k] *= kernel.transform(eps * dec.eigenvalues[k]);
  return dec.basis * c;
}

} // namespace curvelab
