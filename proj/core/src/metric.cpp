#include "curvelab/metric.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "curvelab/gamma.hpp"
#include "curvelab/parallel.hpp"
#include "curvelab/report.hpp"
#include "curvelab/rng.hpp"

namespace curvelab {

void MetricMatrix::validate(double slack) const {
  const int m = n();
  if (d.cols() != m || reachable.rows() != m || reachable.cols() != m)
    throw invalid_parameter("metric matrix shape mismatch");
  for (int i = 0; i < m; ++i) {
    if (d(i, i) != 0.0) throw invalid_parameter("metric diagonal must be exactly zero");
    for (int j = 0; j < m; ++j) {
      if (d(i, j) != d(j, i)) throw invalid_parameter("metric must be exactly symmetric");
      if (d(i, j) < 0) throw invalid_parameter("negative distance");
    }
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (!pair_reachable(i, j)) continue;
      for (int k = 0; k < m; ++k) {
        if (!pair_reachable(i, k) || !pair_reachable(k, j)) continue;
        if (d(i, j) > d(i, k) + d(k, j) + slack)
          throw invalid_parameter("triangle inequality violated beyond slack");
      }
    }
}

std::string MetricMatrix::to_csv() const {
  std::string out = "i,j,d,reachable\n";
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j) {
      out += std::to_string(i) + ',' + std::to_string(j) + ',';
      out += JsonWriter::format_double(d(i, j));
      out += reachable(i, j) ? ",1\n" : ",0\n";
    }
  return out;
}

MetricMatrix MetricMatrix::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line); // header
  std::vector<std::tuple<int, int, double, int>> rows;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int i, j, r = 1;
    double v;
    ls >> i >> j >> v;
    if (!(ls >> r)) r = 1;
    rows.push_back({i, j, v, r});
    n = std::max(n, std::max(i, j) + 1);
  }
  MetricMatrix m;
  m.d = Eigen::MatrixXd::Zero(n, n);
  m.reachable.setConstant(n, n, 1);
  for (auto [i, j, v, r] : rows) {
    m.d(i, j) = v;
    m.reachable(i, j) = static_cast<std::uint8_t>(r);
  }
  return m;
}

namespace {

// Gamma(psi)(z) and its gradient restricted to psi_x = 0 handled by caller.
double gamma_at(const MarkovTriple& t, const Field& psi, int z) {
  double acc = 0.0;
  for (auto [y, w] : t.adjacency[z]) {
    double d = psi[y] - psi[z];
    acc += w * d * d;
  }
  return acc / (2.0 * t.measure[z]);
}

void gamma_grad(const MarkovTriple& t, const Field& psi, int z, Field& g) {
  g.setZero();
  for (auto [y, w] : t.adjacency[z]) {
    double d = (psi[y] - psi[z]) * w / t.measure[z];
    g[y] += d;
    g[z] -= d;
  }
}

// phi(tau) = q_z(psi - tau g) = q - (g.Az g-free form and slope); here computed
// from the exact quadratic along the ray.
double project_along_gradient(const MarkovTriple& t, Field& psi, int z, int pinned) {
  Field g(t.n);
  gamma_grad(t, psi, z, g);
  g[pinned] = 0.0;
  double q0 = gamma_at(t, psi, z);
  if (q0 <= 1.0) return 0.0;
  // directional coefficients of the quadratic q_z along psi - tau g
  double c1 = 0.0, c2 = 0.0;
  for (auto [y, w] : t.adjacency[z]) {
    double dpsi = psi[y] - psi[z];
    double dg = g[y] - g[z];
    c1 += w * dpsi * dg;
    c2 += w * dg * dg;
  }
  c1 /= t.measure[z]; // d/dtau at 0 is -c1
  c2 /= 2.0 * t.measure[z];
  // q0 - c1 tau + c2 tau^2 = 1
  double tau;
  if (c2 <= 1e-300) {
    tau = (c1 > 0) ? (q0 - 1.0) / c1 : 0.0;
  } else {
    double disc = c1 * c1 - 4.0 * c2 * (q0 - 1.0);
    tau = (disc >= 0) ? (c1 - std::sqrt(disc)) / (2.0 * c2) : c1 / (2.0 * c2);
  }
  if (!(tau > 0)) return 0.0;
  for (int i = 0; i < t.n; ++i) psi[i] -= tau * g[i];
  return tau;
}

// Restores Gamma(psi) <= 1 by cyclic projection, worst-first sweeps.
bool repair_feasibility(const MarkovTriple& t, Field& psi, int pinned, int max_sweeps = 60) {
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double worst = 0.0;
    for (int z = 0; z < t.n; ++z) {
      double q = gamma_at(t, psi, z);
      if (q > 1.0 + 1e-13) {
        project_along_gradient(t, psi, z, pinned);
        worst = std::max(worst, q);
      }
    }
    if (worst == 0.0) return true;
  }
  // scale-down fallback keeps feasibility unconditionally
  double qmax = 0.0;
  for (int z = 0; z < t.n; ++z) qmax = std::max(qmax, gamma_at(t, psi, z));
  if (qmax > 1.0) psi /= std::sqrt(qmax);
  return false;
}

// Projection pass touching only constraints reachable from the seed states;
// a projection at z moves psi on the star of z, so only neighbors can turn
// infeasible. Work stays local to the ascent perturbation.
void repair_local(const MarkovTriple& t, Field& psi, int pinned, int seed,
                  std::vector<int>& stack, std::vector<unsigned>& stamp,
                  unsigned& epoch) {
  ++epoch;
  stack.clear();
  auto push = [&](int z) {
    if (stamp[z] != epoch) {
      stamp[z] = epoch;
      stack.push_back(z);
    }
  };
  push(seed);
  for (auto [y, w] : t.adjacency[seed]) push(y);
  std::size_t guard = 0, guard_cap = 64u * static_cast<std::size_t>(t.n) + 256;
  while (!stack.empty() && guard++ < guard_cap) {
    int z = stack.back();
    stack.pop_back();
    stamp[z] = 0;
    if (gamma_at(t, psi, z) > 1.0 + 1e-13) {
      project_along_gradient(t, psi, z, pinned);
      push(z);
      for (auto [y, w] : t.adjacency[z]) push(y);
    }
  }
  if (guard >= guard_cap) repair_feasibility(t, psi, pinned, 8);
}

struct PairSolve {
  double value = 0.0;
  bool converged = false;
};

// Active-set KKT Newton polish: stationarity e_y = sum lambda_z grad q_z and
// q_z = 1 on the active set, solved with a sparse bordered system.
bool kkt_polish(const MarkovTriple& t, int x, int y, Field& psi, double active_tol) {
  const int n = t.n;
  std::vector<int> var_of(n, -1);
  int nv = 0;
  for (int i = 0; i < n; ++i)
    if (i != x) var_of[i] = nv++;

  std::vector<int> active;
  for (int z = 0; z < n; ++z)
    if (gamma_at(t, psi, z) >= 1.0 - 1e-3) active.push_back(z);
  if (active.empty()) return false;

  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(active.size(), 0.1);
  Field grad(n);

  for (int as_round = 0; as_round < 8; ++as_round) {
    const int na = static_cast<int>(active.size());
    lambda.conservativeResize(na);
    bool newton_ok = false;
    for (int it = 0; it < 30; ++it) {
      // residuals
      Eigen::VectorXd r1 = Eigen::VectorXd::Zero(nv); // e_y - sum lambda grad q
      r1[var_of[y]] = 1.0;
      std::vector<Eigen::Triplet<double>> trips;
      for (int a = 0; a < na; ++a) {
        int z = active[a];
        gamma_grad(t, psi, z, grad);
        for (int i = 0; i < n; ++i)
          if (i != x && grad[i] != 0.0) {
            r1[var_of[i]] -= lambda[a] * grad[i];
            trips.push_back({var_of[i], nv + a, -grad[i]});
            trips.push_back({nv + a, var_of[i], grad[i]});
          }
        // Hessian block: -sum lambda_a * 2 A_z
        double s = 2.0 * lambda[a] / (2.0 * t.measure[z]);
        for (auto [w_y, w] : t.adjacency[z]) {
          double c = s * w;
          if (w_y != x && z != x) {
            trips.push_back({var_of[w_y], var_of[z], c});
            trips.push_back({var_of[z], var_of[w_y], c});
          }
          if (w_y != x) trips.push_back({var_of[w_y], var_of[w_y], -c});
          if (z != x) trips.push_back({var_of[z], var_of[z], -c});
        }
      }
      Eigen::VectorXd r2(na);
      for (int a = 0; a < na; ++a) r2[a] = 1.0 - gamma_at(t, psi, active[a]);
      double res_norm = std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
      if (res_norm < 1e-12) {
        newton_ok = true;
        break;
      }
      Eigen::SparseMatrix<double> J(nv + na, nv + na);
      for (int i = 0; i < nv + na; ++i) trips.push_back({i, i, (i < nv) ? -1e-12 : 0.0});
      J.setFromTriplets(trips.begin(), trips.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
      if (lu.info() != Eigen::Success) return false;
      Eigen::VectorXd rhs(nv + na);
      rhs.head(nv) = -r1;
      rhs.tail(na) = -r2;
      Eigen::VectorXd dz = lu.solve(rhs);
      if (lu.info() != Eigen::Success || !dz.allFinite()) return false;
      double damp = 1.0;
      if (dz.cwiseAbs().maxCoeff() > 1.0) damp = 1.0 / dz.cwiseAbs().maxCoeff();
      for (int i = 0; i < n; ++i)
        if (i != x) psi[i] += damp * dz[var_of[i]];
      lambda += damp * dz.tail(na);
      newton_ok = (it < 29);
    }
    if (!newton_ok) return false;
    // active-set update
    bool changed = false;
    std::vector<int> next;
    Eigen::VectorXd next_lambda(na);
    int keep = 0;
    for (int a = 0; a < na; ++a) {
      if (lambda[a] < -1e-10) {
        changed = true;
        continue;
      }
      next.push_back(active[a]);
      next_lambda[keep++] = std::max(lambda[a], 0.0);
    }
    for (int z = 0; z < n; ++z) {
      if (gamma_at(t, psi, z) > 1.0 + active_tol &&
          std::find(next.begin(), next.end(), z) == next.end()) {
        next.push_back(z);
        next_lambda.conservativeResize(keep + 1);
        next_lambda[keep++] = 1e-3;
        changed = true;
      }
    }
    if (!changed) return true;
    active = std::move(next);
    lambda = next_lambda.head(keep);
  }
  return false;
}

PairSolve solve_pair(const MarkovTriple& t, int x, int y, const DistanceOptions& opt,
                     Field& psi /*warm in, solution out*/, std::vector<int>& stack,
                     std::vector<unsigned>& stamp, unsigned& epoch) {
  psi[x] = 0.0;
  repair_feasibility(t, psi, x, 8);
  double best = psi[y];
  Field best_psi = psi;

  // local scale for the ascent step: largest feasible single move at y
  double cap = 0.0;
  for (auto [z, w] : t.adjacency[y]) cap = std::max(cap, std::sqrt(2.0 * t.measure[y] / w));
  double c = opt.step_scale * std::max(cap, 1e-6);

  double window_best = best;
  for (int k = 1; k <= opt.ascent_iterations; ++k) {
    psi[y] += c / std::sqrt(static_cast<double>(k));
    repair_local(t, psi, x, y, stack, stamp, epoch);
    if (psi[y] > best) {
      best = psi[y];
      best_psi = psi;
    }
    if (k % 50 == 0) {
      if (best - window_best < 1e-10 * std::max(1.0, best)) break;
      window_best = best;
    }
  }
  psi = best_psi;

  PairSolve out;
  out.converged = false;
  if (opt.polish) {
    Field trial = psi;
    if (kkt_polish(t, x, y, trial, opt.active_tol)) {
      double qmax = 0.0;
      for (int z = 0; z < t.n; ++z) qmax = std::max(qmax, gamma_at(t, trial, z));
      if (qmax > 1.0) trial /= std::sqrt(qmax);
      if (trial[y] >= best - 1e-9) {
        psi = trial;
        best = trial[y];
        out.converged = true;
      }
    }
  }
  out.value = std::max(best, 0.0);
  return out;
}

} // namespace

double intrinsic_distance_pair(const MarkovTriple& t, int x, int y,
                               const DistanceOptions& opt, bool* converged) {
  Field psi = Field::Zero(t.n);
  std::vector<int> stack;
  std::vector<unsigned> stamp(t.n, 0);
  unsigned epoch = 0;
  auto r = solve_pair(t, x, y, opt, psi, stack, stamp, epoch);
  if (converged) *converged = r.converged;
  return r.value;
}

DistanceResult intrinsic_distance(const MarkovTriple& t, const DistanceOptions& opt) {
  const int n = t.n;
  DistanceResult res;
  res.metric.d = Eigen::MatrixXd::Zero(n, n);
  res.metric.reachable.setConstant(n, n, 1);
  res.converged.setConstant(n, n, 1);

  auto comp = t.components();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (comp[i] != comp[j]) {
        res.metric.d(i, j) = MetricMatrix::kUnreachable;
        res.metric.reachable(i, j) = 0;
        ++res.disconnected_pairs;
      }

  // per-source solves; targets in BFS order for warm starting
  std::vector<std::vector<int>> order(n);
  for (int x = 0; x < n; ++x) {
    std::vector<int> dist(n, -1);
    std::queue<int> q;
    q.push(x);
    dist[x] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto [v, w] : t.adjacency[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    std::vector<int> targets;
    for (int y = x + 1; y < n; ++y)
      if (comp[y] == comp[x]) targets.push_back(y);
    std::sort(targets.begin(), targets.end(),
              [&](int a, int b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
    order[x] = std::move(targets);
  }

  std::vector<int> unconv(n, 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t xi) {
    int x = static_cast<int>(xi);
    Field psi = Field::Zero(n);
    std::vector<int> stack;
    std::vector<unsigned> stamp(static_cast<std::size_t>(n), 0);
    unsigned epoch = 0;
    for (int y : order[x]) {
      auto r = solve_pair(t, x, y, opt, psi, stack, stamp, epoch);
      res.metric.d(x, y) = res.metric.d(y, x) = r.value;
      if (!r.converged) {
        res.converged(x, y) = res.converged(y, x) = 0;
        ++unconv[x];
      }
    }
  });
  for (int x = 0; x < n; ++x) res.unconverged_pairs += unconv[x];

  // min-plus closure: triangle inequality exact, entries stay within the
  // solver gap of the supremum (closure only shrinks toward feasible sums)
  auto& D = res.metric.d;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      if (!res.metric.pair_reachable(i, k)) continue;
      for (int j = 0; j < n; ++j) {
        if (!res.metric.pair_reachable(k, j)) continue;
        double via = D(i, k) + D(k, j);
        if (via < D(i, j)) D(i, j) = D(j, i) = via;
      }
    }
  for (int i = 0; i < n; ++i) D(i, i) = 0.0;
  return res;
}

Field local_slope(const MetricMatrix& d, const Field& f, SlopeVariant variant) {
  const int n = d.n();
  if (f.size() != n) throw invalid_field("field length does not match metric");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && d.pair_reachable(i, j) && d.d(i, j) <= 0.0)
        throw invalid_parameter("degenerate metric: zero off-diagonal distance");
  Field out = Field::Zero(n);
  for (int x = 0; x < n; ++x) {
    double best = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x || !d.pair_reachable(x, y)) continue;
      double diff = f[y] - f[x];
      double v;
      switch (variant) {
        case SlopeVariant::Plus: v = std::max(diff, 0.0); break;
        case SlopeVariant::Minus: v = std::max(-diff, 0.0); break;
        default: v = std::abs(diff);
      }
      best = std::max(best, v / d.d(x, y));
    }
    out[x] = best;
  }
  return out;
}

Field hopf_lax(const MetricMatrix& d, const Field& f, double t) {
  const int n = d.n();
  if (f.size() != n) throw invalid_field("field length does not match metric");
  if (t < 0) throw invalid_parameter("hopf_lax requires t >= 0");
  if (t == 0.0) return f;
  Field out(n);
  for (int x = 0; x < n; ++x) {
    double best = f[x];
    for (int y = 0; y < n; ++y) {
      if (!d.pair_reachable(x, y)) continue;
      best = std::min(best, f[y] + d.d(y, x) * d.d(y, x) / (2.0 * t));
    }
    out[x] = best;
  }
  return out;
}

CheckReport hopf_lax_derivative_check(const MetricMatrix& d, const Field& f,
                                      const std::vector<double>& t_grid, double tol) {
  const int n = d.n();
  if (f.size() != n) throw invalid_field("field length does not match metric");
  for (double s : t_grid)
    if (!(s > 0)) throw invalid_parameter("t_grid must be strictly positive");

  auto argmin_radius = [&](int x, double s, double* dplus, double* dminus) {
    double best = std::numeric_limits<double>::infinity();
    for (int y = 0; y < n; ++y) {
      if (!d.pair_reachable(x, y)) continue;
      best = std::min(best, f[y] + d.d(y, x) * d.d(y, x) / (2.0 * s));
    }
    double dp = 0.0, dm = std::numeric_limits<double>::infinity();
    for (int y = 0; y < n; ++y) {
      if (!d.pair_reachable(x, y)) continue;
      double v = f[y] + d.d(y, x) * d.d(y, x) / (2.0 * s);
      if (v <= best + 1e-12 * std::max(1.0, std::abs(best))) {
        dp = std::max(dp, d.d(y, x));
        dm = std::min(dm, d.d(y, x));
      }
    }
    *dplus = dp;
    *dminus = dm;
  };

  double worst = 0.0;
  std::string loc = "-";
  int checked = 0;
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    double s0 = t_grid[i], s1 = t_grid[i + 1], sm = 0.5 * (s0 + s1);
    Field q0 = hopf_lax(d, f, s0), q1 = hopf_lax(d, f, s1);
    for (int x = 0; x < n; ++x) {
      double dp0, dm0, dp1, dm1, dpm, dmm;
      argmin_radius(x, s0, &dp0, &dm0);
      argmin_radius(x, s1, &dp1, &dm1);
      argmin_radius(x, sm, &dpm, &dmm);
      // only check between argmin transitions (unique minimizer radius stable)
      if (std::abs(dp0 - dp1) > 1e-10 || std::abs(dp0 - dm0) > 1e-10 ||
          std::abs(dp1 - dm1) > 1e-10)
        continue;
      double fd = (q1[x] - q0[x]) / (s1 - s0);
      double predicted = -dpm * dpm / (2.0 * sm * sm);
      double r = std::abs(fd - predicted);
      ++checked;
      if (r > worst) {
        worst = r;
        loc = "x" + std::to_string(x) + ",s=" + std::to_string(sm);
      }
    }
  }
  auto rep = CheckReport::make("hopf_lax_derivative", "hopflax.derivative", worst, loc, tol);
  rep.details.push_back({"segments_checked", static_cast<double>(checked)});
  return rep;
}

CheckReport length_defect(const MetricMatrix& d, double tol) {
  const int n = d.n();
  double worst = -std::numeric_limits<double>::infinity();
  std::string loc = "-";
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      if (!d.pair_reachable(x, y)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int z = 0; z < n; ++z) {
        if (!d.pair_reachable(x, z) || !d.pair_reachable(z, y)) continue;
        best = std::min(best, std::max(d.d(x, z), d.d(z, y)));
      }
      double defect = best - 0.5 * d.d(x, y);
      if (defect > worst) {
        worst = defect;
        loc = "(" + std::to_string(x) + "," + std::to_string(y) + ")";
      }
    }
  if (!std::isfinite(worst)) worst = 0.0;
  return CheckReport::make("length_defect", "metric.length-defect", worst, loc, tol);
}

CheckReport ed_condition_check(const MarkovTriple& t, const MetricMatrix& d, double tol,
                               int battery, std::uint64_t seed) {
  if (d.n() != t.n) throw invalid_parameter("metric and triple state counts differ");
  Rng rng(seed);

  // (a) Gamma-feasible fields are 1-Lipschitz w.r.t. d
  double worst_a = 0.0;
  std::string loc_a = "-";
  for (int b = 0; b < battery; ++b) {
    Field psi(t.n);
    for (int i = 0; i < t.n; ++i) psi[i] = rng.normal();
    double qmax = 0.0;
    for (int z = 0; z < t.n; ++z) qmax = std::max(qmax, gamma_at(t, psi, z));
    if (qmax > 0) psi /= std::sqrt(qmax);
    for (int x = 0; x < t.n; ++x)
      for (int y = 0; y < t.n; ++y) {
        if (x == y || !d.pair_reachable(x, y) || d.d(x, y) <= 0) continue;
        double lip = std::abs(psi[y] - psi[x]) / d.d(x, y) - 1.0;
        if (lip > worst_a) {
          worst_a = lip;
          loc_a = "psi" + std::to_string(b) + "(" + std::to_string(x) + "," +
                  std::to_string(y) + ")";
        }
      }
  }

  // (b) clamped distance profiles: Gamma(min(d(x0,.), c)) <= 1 + gap
  double worst_b = 0.0;
  for (int b = 0; b < battery; ++b) {
    int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.n)));
    double dmax = 0.0;
    for (int y = 0; y < t.n; ++y)
      if (d.pair_reachable(x0, y)) dmax = std::max(dmax, d.d(x0, y));
    double c = (0.25 + 0.75 * rng.uniform()) * std::max(dmax, 1e-12);
    Field f(t.n);
    for (int y = 0; y < t.n; ++y)
      f[y] = d.pair_reachable(x0, y) ? std::min(d.d(x0, y), c) : c;
    Field g = carre_du_champ(t, f);
    worst_b = std::max(worst_b, g.maxCoeff() - 1.0);
  }

  auto rep = CheckReport::make("ed_condition", "metric.ed", worst_a, loc_a, tol);
  rep.details.push_back({"clamp_profile_gamma_excess", worst_b});
  return rep;
}

} // namespace curvelab
