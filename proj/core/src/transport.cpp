#include "curvelab/transport.hpp"

#include <algorithm>
#include <cmath>

#include "curvelab/gamma.hpp"
#include "curvelab/report.hpp"

namespace curvelab {

double entropy(const MarkovTriple& t, const ProbabilityDensity& mu) {
  t.check_field(mu.density);
  double acc = 0.0;
  for (int x = 0; x < t.n; ++x) {
    double f = mu.density[x];
    if (f > 0) acc += f * std::log(f) * t.measure[x];
  }
  return acc;
}

FisherPair fisher(const MarkovTriple& t, const ProbabilityDensity& mu) {
  t.check_field(mu.density);
  FisherPair out;
  Field sq = mu.density.cwiseMax(0.0).cwiseSqrt();
  out.four_energy_sqrt = 4.0 * dirichlet_energy(t, sq);
  Field g = carre_du_champ(t, mu.density);
  double acc = 0.0;
  for (int x = 0; x < t.n; ++x)
    if (mu.density[x] > 0) acc += g[x] / mu.density[x] * t.measure[x];
  out.gradient_quotient = acc;
  out.gap = out.gradient_quotient - out.four_energy_sqrt;
  return out;
}

CheckReport contraction_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                              const std::vector<std::pair<ProbabilityDensity, ProbabilityDensity>>& pairs,
                              const std::vector<double>& t_grid, double K, double tol) {
  const auto& tr = dec.triple;
  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    double w0 = wasserstein(d, tr, pairs[p].first, pairs[p].second, 2).value;
    for (double t : t_grid) {
      auto mt = dual_apply(dec, t, pairs[p].first);
      auto nt = dual_apply(dec, t, pairs[p].second);
      double wt = wasserstein(d, tr, mt, nt, 2).value;
      double r = wt - std::exp(-K * t) * w0;
      if (r > worst) {
        worst = r;
        loc = "pair" + std::to_string(p) + ",t=" + std::to_string(t);
      }
    }
  }
  auto rep = CheckReport::make("w2_contraction", "w2.contraction", worst, loc, tol);
  rep.K = K;
  return rep;
}

CheckReport evi_residual(const SpectralDecomposition& dec, const MetricMatrix& d,
                         const ProbabilityDensity& rho0, const ProbabilityDensity& nu,
                         const std::vector<double>& t_grid, double K) {
  const auto& tr = dec.triple;
  if (t_grid.size() < 2) throw invalid_parameter("evi needs at least two grid times");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    if (!(t_grid[i + 1] > t_grid[i]) || !(t_grid[i] > 0))
      throw invalid_parameter("evi t_grid must be positive increasing");
  double ent_nu = entropy(tr, nu);
  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  int tiny_steps = 0;
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    double t0 = t_grid[i], t1 = t_grid[i + 1];
    if (t1 - t0 < 1e-6) ++tiny_steps;
    auto r0 = dual_apply(dec, t0, rho0);
    auto r1 = dual_apply(dec, t1, rho0);
    double w0 = wasserstein(d, tr, r0, nu, 2).value;
    double w1 = wasserstein(d, tr, r1, nu, 2).value;
    double dplus = (0.5 * w1 * w1 - 0.5 * w0 * w0) / (t1 - t0);
    double resid = dplus + 0.5 * K * w0 * w0 + entropy(tr, r0) - ent_nu;
    if (resid > worst) {
      worst = resid;
      loc = "t=" + std::to_string(t0);
    }
  }
  auto rep = CheckReport::make("evi_residual", "evi.k-convexity", worst, loc, 0.0);
  rep.K = K;
  if (tiny_steps > 0)
    rep.details.push_back({"steps_below_1e-6", static_cast<double>(tiny_steps)});
  return rep;
}

CheckReport log_harnack_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                              const Field& f, double t, double K, double tol) {
  const auto& tr = dec.triple;
  tr.check_field(f);
  if (!(t > 0)) throw invalid_parameter("log-harnack needs t > 0");
  for (int x = 0; x < tr.n; ++x)
    if (f[x] < 0) throw invalid_field("log-harnack needs f >= 0");
  double i2k = weight_I(2.0 * K, t);
  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  for (double eps : {0.0, 1e-6, 1e-3}) {
    Field logf(tr.n);
    bool has_minus_inf = false;
    for (int x = 0; x < tr.n; ++x) {
      double v = f[x] + eps;
      if (v <= 0) {
        logf[x] = -std::numeric_limits<double>::infinity();
        has_minus_inf = true;
      } else {
        logf[x] = std::log(v);
      }
    }
    if (has_minus_inf) continue; // LHS = -inf satisfies the bound trivially
    Field lhs = heat_apply(dec, t, logf);
    Field ptf = heat_apply(dec, t, f);
    for (int y = 0; y < tr.n; ++y)
      for (int x = 0; x < tr.n; ++x) {
        if (!d.pair_reachable(x, y)) continue;
        double rhs = std::log(ptf[x] + eps) + d.d(x, y) * d.d(x, y) / (4.0 * i2k);
        double r = lhs[y] - rhs;
        if (r > worst) {
          worst = r;
          loc = "(x=" + std::to_string(x) + ",y=" + std::to_string(y) +
                ",eps=" + JsonWriter::format_double(eps) + ")";
        }
      }
  }
  auto rep = CheckReport::make("log_harnack", "heat.log-harnack", worst, loc, tol);
  rep.K = K;
  rep.t = t;
  return rep;
}

CheckReport llogl_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                        const ProbabilityDensity& mu, double t, double K, int x0, double r) {
  const auto& tr = dec.triple;
  if (!(t > 0)) throw invalid_parameter("llogl needs t > 0");
  if (x0 < 0 || x0 >= tr.n) throw invalid_parameter("x0 out of range");
  double mball = 0.0;
  for (int y = 0; y < tr.n; ++y)
    if (y == x0 || (d.pair_reachable(x0, y) && d.d(x0, y) <= r)) mball += tr.measure[y];
  if (!(mball > 0)) throw invalid_parameter("empty ball: invalid radius");
  double second_moment = 0.0;
  for (int y = 0; y < tr.n; ++y) {
    if (mu.density[y] <= 0) continue;
    if (!d.pair_reachable(x0, y))
      throw invalid_measure("mu places mass outside the component of x0");
    second_moment += d.d(x0, y) * d.d(x0, y) * mu.density[y] * tr.measure[y];
  }
  auto ft = dual_apply(dec, t, mu);
  double lhs = entropy(tr, ft);
  double rhs = (r * r + second_moment) / (2.0 * weight_I(2.0 * K, t)) - std::log(mball);
  auto rep = CheckReport::make("llogl", "heat.llogl", lhs - rhs,
                               "x0=" + std::to_string(x0) + ",r=" + std::to_string(r), 0.0);
  rep.K = K;
  rep.t = t;
  rep.details.push_back({"entropy", lhs});
  rep.details.push_back({"bound", rhs});
  return rep;
}

Eigen::VectorXd metric_speed(const MetricMatrix& d, const MarkovTriple& t,
                             const std::vector<ProbabilityDensity>& curve,
                             const std::vector<double>& s_grid) {
  if (curve.size() < 2) throw invalid_parameter("metric speed needs >= 2 curve points");
  if (curve.size() != s_grid.size())
    throw invalid_parameter("curve and grid sizes differ");
  for (std::size_t i = 0; i + 1 < s_grid.size(); ++i)
    if (!(s_grid[i + 1] > s_grid[i]))
      throw invalid_parameter("duplicate or decreasing grid times");
  Eigen::VectorXd speeds(curve.size() - 1);
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    double w = wasserstein(d, t, curve[i + 1], curve[i], 2).value;
    speeds[static_cast<long>(i)] = w / (s_grid[i + 1] - s_grid[i]);
  }
  return speeds;
}

CheckReport speed_fisher_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                               const ProbabilityDensity& rho0, double tau,
                               const std::vector<double>& s_grid, double tol) {
  const auto& tr = dec.triple;
  std::vector<ProbabilityDensity> curve;
  for (double s : s_grid) curve.push_back(dual_apply(dec, tau * s, rho0));
  Eigen::VectorXd sp = metric_speed(d, tr, curve, s_grid);
  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  for (long i = 0; i < sp.size(); ++i) {
    double speed_t = sp[i] / tau; // reparameterize to heat time
    double F = fisher(tr, curve[static_cast<std::size_t>(i)]).four_energy_sqrt;
    double r = speed_t * speed_t - F;
    if (r > worst) {
      worst = r;
      loc = "s=" + std::to_string(s_grid[static_cast<std::size_t>(i)]);
    }
  }
  auto rep = CheckReport::make("speed_vs_fisher", "curve.speed-fisher", worst, loc, tol);
  rep.details.push_back({"tau", tau});
  return rep;
}

CheckReport action_estimate_check(const SpectralDecomposition& dec, const MetricMatrix& d,
                                  const std::vector<ProbabilityDensity>& curve,
                                  const std::vector<double>& s_grid, double t, double K,
                                  double tol) {
  const auto& tr = dec.triple;
  if (curve.size() < 2) throw invalid_parameter("action estimate needs a curve");
  int floored = 0;
  std::vector<ProbabilityDensity> reg;
  reg.reserve(curve.size());
  for (const auto& rho : curve) {
    bool zero = rho.density.minCoeff() <= 0.0;
    if (zero) {
      ++floored;
      Field f = rho.density.cwiseMax(1e-12);
      f /= f.dot(tr.measure);
      reg.push_back(ProbabilityDensity{f});
    } else {
      reg.push_back(rho);
    }
  }
  Eigen::VectorXd sp = metric_speed(d, tr, reg, s_grid);
  double action = 0.0;
  for (long i = 0; i < sp.size(); ++i)
    action += sp[i] * sp[i] *
              (s_grid[static_cast<std::size_t>(i) + 1] - s_grid[static_cast<std::size_t>(i)]);
  auto rho1t = dual_apply(dec, t, reg.back());
  double lhs = 0.0;
  {
    double w = wasserstein(d, tr, reg.front(), rho1t, 2).value;
    lhs = w * w + 2.0 * t * entropy(tr, rho1t);
  }
  double RK = weight_R(K, t);
  double rhs = RK * RK * action + 2.0 * t * entropy(tr, reg.front());
  auto rep = CheckReport::make("action_estimate", "curve.action-bound", lhs - rhs, "-", tol);
  rep.K = K;
  rep.t = t;
  rep.details.push_back({"action", action});
  if (floored > 0) rep.details.push_back({"floored_curve_points", static_cast<double>(floored)});
  return rep;
}

CheckReport integration_by_parts_check(const MarkovTriple& t, const ProbabilityDensity& mu,
                                       const std::vector<Field>& phi_battery, double tol) {
  Field sq = mu.density.cwiseMax(0.0).cwiseSqrt();
  Field lf = generator_apply(t, mu.density);
  double worst = -std::numeric_limits<double>::infinity();
  double worst_pointwise_gap = 0.0;
  std::string loc = "-";
  for (std::size_t k = 0; k < phi_battery.size(); ++k) {
    const Field& phi = phi_battery[k];
    Field gtilde = 2.0 * sq.cwiseProduct(carre_du_champ(t, sq, phi));
    double lhs = gtilde.dot(t.measure);
    double rhs = -phi.cwiseProduct(lf).dot(t.measure);
    double r = std::abs(lhs - rhs);
    if (r > worst) {
      worst = r;
      loc = "phi" + std::to_string(k);
    }
    Field gap = gtilde - carre_du_champ(t, mu.density, phi);
    worst_pointwise_gap = std::max(worst_pointwise_gap, gap.cwiseAbs().maxCoeff());
  }
  auto rep = CheckReport::make("integration_by_parts", "ibp.sqrt-density", worst, loc, tol);
  rep.details.push_back({"pointwise_chain_rule_gap", worst_pointwise_gap});
  return rep;
}

CheckReport entropy_dissipation_check(const SpectralDecomposition& dec,
                                      const ProbabilityDensity& rho0, double t,
                                      double dt, double tol) {
  const auto& tr = dec.triple;
  auto at = [&](double s) { return dual_apply(dec, s, rho0); };
  double e_m = entropy(tr, at(t - dt));
  double e_p = entropy(tr, at(t + dt));
  double fd = (e_p - e_m) / (2.0 * dt);
  auto ft = at(t);
  Field logf(tr.n);
  for (int x = 0; x < tr.n; ++x)
    logf[x] = std::log(std::max(ft.density[x], 1e-300));
  double exact = -dirichlet_energy(tr, ft.density, logf);
  auto rep = CheckReport::make("entropy_dissipation", "heat.entropy-dissipation",
                               std::abs(fd - exact), "t=" + std::to_string(t), tol);
  rep.t = t;
  rep.details.push_back({"dissipation", exact});
  rep.details.push_back({"fisher_gap",
                         -exact - fisher(tr, ft).four_energy_sqrt});
  return rep;
}

} // namespace curvelab
