#include "curvelab/bakry_emery.hpp"

#include <cmath>
#include <string>

#include "curvelab/gamma.hpp"

namespace curvelab {

double weight_I(double K, double t) {
  if (t < 0) throw invalid_parameter("weights need t >= 0");
  double Kt = K * t;
  if (std::abs(Kt) < 1e-4)
    return t * (1.0 + Kt / 2.0 + Kt * Kt / 6.0 + Kt * Kt * Kt / 24.0);
  return std::expm1(Kt) / K;
}

double weight_I2(double K, double t) {
  if (t < 0) throw invalid_parameter("weights need t >= 0");
  double Kt = K * t;
  if (std::abs(Kt) < 1e-4)
    return t * t * (0.5 + Kt / 6.0 + Kt * Kt / 24.0 + Kt * Kt * Kt / 120.0);
  return (std::expm1(Kt) - Kt) / (K * K);
}

double weight_R(double K, double t) {
  if (t == 0.0) return 1.0;
  return t / weight_I(K, t);
}

InterpolationTriple interpolation_functions(const SpectralDecomposition& dec,
                                            const Field& f, const Field& phi, double t,
                                            const Eigen::VectorXd& s_grid) {
  if (!(t > 0)) throw invalid_parameter("interpolation functions need t > 0");
  for (long i = 0; i < s_grid.size(); ++i)
    if (s_grid[i] < 0 || s_grid[i] > t)
      throw invalid_parameter("s_grid point outside [0, t]");
  const auto& tr = dec.triple;
  tr.check_field(f);
  tr.check_field(phi);
  InterpolationTriple out;
  out.t = t;
  out.s_grid = s_grid;
  const long S = s_grid.size();
  out.A.resize(S);
  out.B.resize(S);
  out.B_delta.resize(S);
  out.C.resize(S);
  for (long i = 0; i < S; ++i) {
    double s = s_grid[i];
    Field g = heat_apply(dec, t - s, f);
    Field ps = heat_apply(dec, s, phi);
    Field lg = generator_apply(tr, g);
    Field gg = carre_du_champ(tr, g);
    out.A[i] = 0.5 * (g.array().square() * ps.array() * tr.measure.array()).sum();
    out.B[i] = (gg.array() * ps.array() * tr.measure.array()).sum();
    out.B_delta[i] = 0.5 * (lg.array().square() * ps.array() * tr.measure.array()).sum();
    out.C[i] = (gamma2(tr, g).array() * ps.array() * tr.measure.array()).sum();
  }
  return out;
}

namespace {

void require_nonneg(const Field& phi) {
  for (long i = 0; i < phi.size(); ++i)
    if (phi[i] < 0) throw invalid_field("phi must be nonnegative");
}

void fill_context(CheckReport& r, double K, double N, double t) {
  r.K = K;
  r.N = N;
  r.t = t;
}

} // namespace

CheckReport check_form_ii(const SpectralDecomposition& dec, double K, double N,
                          const Field& f, const Field& phi, double t,
                          const Eigen::VectorXd& s_grid, double tol) {
  require_nonneg(phi);
  double nu = nu_of_N(N);
  auto it = interpolation_functions(dec, f, phi, t, s_grid);
  double worst = -std::numeric_limits<double>::infinity();
  long at = 0;
  for (long i = 0; i < s_grid.size(); ++i) {
    double r = K * it.B[i] + 2.0 * nu * it.B_delta[i] - it.C[i];
    if (r > worst) {
      worst = r;
      at = i;
    }
  }
  auto rep = CheckReport::make("be_form_ii", "be.form-ii", worst,
                               "s=" + std::to_string(s_grid[at]), tol);
  fill_context(rep, K, N, t);
  return rep;
}

CheckReport check_form_iii(const SpectralDecomposition& dec, double K, double N,
                           const Field& f, const Field& phi, double t,
                           const Eigen::VectorXd& s_grid, double tol) {
  require_nonneg(phi);
  const long S = s_grid.size();
  if (S < 5) throw invalid_parameter("form (iii) needs at least 5 grid points");
  double h = s_grid[1] - s_grid[0];
  for (long i = 1; i + 1 < S; ++i)
    if (std::abs((s_grid[i + 1] - s_grid[i]) - h) > 1e-12 * std::max(1.0, t))
      throw invalid_parameter("form (iii) needs a uniform s_grid");
  double nu = nu_of_N(N);
  auto it = interpolation_functions(dec, f, phi, t, s_grid);

  auto worst_on = [&](long stride, long* at) {
    double worst = -std::numeric_limits<double>::infinity();
    double hh = h * stride;
    for (long i = stride; i + stride < S; i += stride) {
      double d1 = (it.A[i + stride] - it.A[i - stride]) / (2.0 * hh);
      double d2 = (it.A[i + stride] - 2.0 * it.A[i] + it.A[i - stride]) / (hh * hh);
      double r = 2.0 * K * d1 + 4.0 * nu * it.B_delta[i] - d2;
      if (r > worst) {
        worst = r;
        if (at) *at = i;
      }
    }
    return worst;
  };
  long at = 0;
  double worst = worst_on(1, &at);
  double worst2 = worst_on(2, nullptr);
  auto rep = CheckReport::make("be_form_iii", "be.form-iii", worst,
                               "s=" + std::to_string(s_grid[at]), tol);
  fill_context(rep, K, N, t);
  rep.details.push_back({"coarse_grid_worst", worst2});
  return rep;
}

CheckReport check_form_iv_v_vi(const SpectralDecomposition& dec, double K, double N,
                               const Field& f, double t, BEForm variant, double tol) {
  if (!(t > 0)) throw invalid_parameter("forms (iv)-(vi) need t > 0");
  double nu = nu_of_N(N);
  const auto& tr = dec.triple;
  tr.check_field(f);
  Field ptf = heat_apply(dec, t, f);
  Field gptf = carre_du_champ(tr, ptf);
  Field lptf = generator_apply(tr, ptf);
  Field ptf2 = heat_apply(dec, t, f.array().square().matrix());
  Field ptgf = heat_apply(dec, t, carre_du_champ(tr, f));
  Field var = 0.5 * ptf2 - 0.5 * ptf.array().square().matrix();

  Field resid(tr.n);
  const char* name = "";
  switch (variant) {
    case BEForm::iv:
      resid = weight_I(2.0 * K, t) * gptf + 2.0 * nu * weight_I2(2.0 * K, t) *
                  lptf.array().square().matrix() - var;
      name = "be_form_iv";
      break;
    case BEForm::v:
      resid = var + 2.0 * nu * weight_I2(-2.0 * K, t) * lptf.array().square().matrix() -
              weight_I(-2.0 * K, t) * ptgf;
      name = "be_form_v";
      break;
    case BEForm::vi:
      resid = gptf + 2.0 * nu * weight_I(-2.0 * K, t) * lptf.array().square().matrix() -
              std::exp(-2.0 * K * t) * ptgf;
      name = "be_form_vi";
      break;
    default:
      throw invalid_parameter("unknown BE form variant");
  }
  long at = 0;
  double worst = resid.maxCoeff(&at);
  auto rep = CheckReport::make(name,
                               variant == BEForm::iv   ? "be.form-iv"
                               : variant == BEForm::v ? "be.form-v"
                                                       : "be.form-vi",
                               worst, "x" + std::to_string(at), tol);
  fill_context(rep, K, N, t);
  return rep;
}

GradientBoundEstimate estimate_K_from_gradient_bound(const SpectralDecomposition& dec,
                                                     const std::vector<Field>& battery,
                                                     const std::vector<double>& t_grid,
                                                     double floor) {
  if (battery.empty()) throw invalid_parameter("gradient-bound estimator needs a battery");
  const auto& tr = dec.triple;
  GradientBoundEstimate est;
  est.K_hat = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t fi = 0; fi < battery.size(); ++fi) {
    Field gf = carre_du_champ(tr, battery[fi]);
    if (gf.maxCoeff() <= floor) continue; // constants contribute nothing
    for (double t : t_grid) {
      if (!(t > 0)) throw invalid_parameter("estimator t_grid must be positive");
      Field num = carre_du_champ(tr, heat_apply(dec, t, battery[fi]));
      Field den = heat_apply(dec, t, gf);
      for (int x = 0; x < tr.n; ++x) {
        if (den[x] <= floor || num[x] <= floor) {
          ++est.excluded_points;
          continue;
        }
        any = true;
        double k = -std::log(num[x] / den[x]) / (2.0 * t);
        if (k < est.K_hat) {
          est.K_hat = k;
          est.field_index = static_cast<int>(fi);
          est.t = t;
          est.state = x;
        }
      }
    }
  }
  if (!any) throw invalid_parameter("battery is entirely constant: estimate undefined");
  return est;
}

CheckReport check_ode_comparison(const Eigen::VectorXd& a_samples,
                                 const Eigen::VectorXd& g_samples, double K, double nu,
                                 const Eigen::VectorXd& s_grid, double tol) {
  const long S = s_grid.size();
  if (S < 5) throw invalid_parameter("ode comparison needs at least 5 grid points");
  if (a_samples.size() != S || g_samples.size() != S)
    throw invalid_parameter("sample vectors must match the grid");
  for (long i = 0; i + 1 < S; ++i)
    if (!(s_grid[i + 1] > s_grid[i])) throw invalid_parameter("nonmonotone grid");

  // central differences for a' at interior points
  Eigen::VectorXd ap(S);
  for (long i = 1; i + 1 < S; ++i)
    ap[i] = (a_samples[i + 1] - a_samples[i - 1]) / (s_grid[i + 1] - s_grid[i - 1]);
  ap[0] = (a_samples[1] - a_samples[0]) / (s_grid[1] - s_grid[0]);
  ap[S - 1] = (a_samples[S - 1] - a_samples[S - 2]) / (s_grid[S - 1] - s_grid[S - 2]);

  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  for (long i = 1; i + 1 < S; ++i) {
    // running trapezoid of e^{-2K(s - s1)} g over [s1, s2]
    double integral = 0.0;
    for (long j = i + 1; j + 1 < S; ++j) {
      double s1 = s_grid[i];
      double w1 = std::exp(-2.0 * K * (s_grid[j - 1] - s1)) * g_samples[j - 1];
      double w2 = std::exp(-2.0 * K * (s_grid[j] - s1)) * g_samples[j];
      integral += 0.5 * (w1 + w2) * (s_grid[j] - s_grid[j - 1]);
      double lhs = std::exp(-2.0 * K * (s_grid[j] - s_grid[i])) * ap[j];
      double r = ap[i] + nu * integral - lhs;
      if (r > worst) {
        worst = r;
        loc = "s1=" + std::to_string(s_grid[i]) + ",s2=" + std::to_string(s_grid[j]);
      }
    }
  }
  auto rep = CheckReport::make("ode_comparison", "be.ode-comparison", worst, loc, tol);
  rep.K = K;
  return rep;
}

} // namespace curvelab
