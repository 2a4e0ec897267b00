#include "curvelab/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "curvelab/battery.hpp"
#include "curvelab/parallel.hpp"

namespace curvelab {

double dirichlet_energy(const MarkovTriple& t, const Field& f, const Field& g) {
  t.check_field(f);
  t.check_field(g);
  double e = 0.0;
  for (const auto& ed : t.edges)
    e += ed.w * (f[ed.i] - f[ed.j]) * (g[ed.i] - g[ed.j]);
  return e; // each unordered edge appears twice in the ordered double sum
}

double dirichlet_energy(const MarkovTriple& t, const Field& f) {
  return dirichlet_energy(t, f, f);
}

Field generator_apply(const MarkovTriple& t, const Field& f) {
  t.check_field(f);
  Field out = Field::Zero(t.n);
  for (int x = 0; x < t.n; ++x) {
    double acc = 0.0;
    for (auto [y, w] : t.adjacency[x]) acc += w * (f[y] - f[x]);
    out[x] = acc / t.measure[x];
  }
  return out;
}

Field carre_du_champ(const MarkovTriple& t, const Field& f, const Field& g) {
  t.check_field(f);
  t.check_field(g);
  Field out = Field::Zero(t.n);
  for (int x = 0; x < t.n; ++x) {
    double acc = 0.0;
    for (auto [y, w] : t.adjacency[x]) acc += w * (f[y] - f[x]) * (g[y] - g[x]);
    out[x] = acc / (2.0 * t.measure[x]);
  }
  return out;
}

Field carre_du_champ(const MarkovTriple& t, const Field& f) {
  return carre_du_champ(t, f, f);
}

Field gamma2(const MarkovTriple& t, const Field& f) {
  Field gf = carre_du_champ(t, f);
  Field lf = generator_apply(t, f);
  Field lgf = generator_apply(t, gf);
  Field gflf = carre_du_champ(t, f, lf);
  return 0.5 * lgf - gflf;
}

double EtaSpec::eval(double r) const {
  switch (kind) {
    case Kind::Identity: return r;
    case Kind::Square: return r * r;
    case Kind::Clamp: return std::min(std::max(r, clamp_lo), clamp_hi) - std::min(std::max(0.0, clamp_lo), clamp_hi);
    case Kind::Tanh: return std::tanh(r);
  }
  return r;
}

double EtaSpec::deriv(double r) const {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::Square: return 2.0 * r;
    case Kind::Clamp: return (r > clamp_lo && r < clamp_hi) ? 1.0 : 0.0;
    case Kind::Tanh: {
      double th = std::tanh(r);
      return 1.0 - th * th;
    }
  }
  return 1.0;
}

std::string EtaSpec::name() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::Square: return "square";
    case Kind::Clamp: return "clamp";
    case Kind::Tanh: return "tanh";
  }
  return "?";
}

EtaSpec EtaSpec::parse(const std::string& s) {
  if (s == "identity") return {Kind::Identity};
  if (s == "square") return {Kind::Square};
  if (s == "clamp") return {Kind::Clamp};
  if (s == "tanh" || s == "sigmoid") return {Kind::Tanh};
  throw catalog_error("unknown eta spec: " + s);
}

CheckReport chain_rule_defect(const MarkovTriple& t, const Field& f, const EtaSpec& eta,
                              int battery_size, std::uint64_t seed, double tol) {
  t.check_field(f);
  Field ef(t.n), def(t.n);
  for (int x = 0; x < t.n; ++x) {
    ef[x] = eta.eval(f[x]);
    def[x] = eta.deriv(f[x]);
  }
  // grid builders probe with h-independent smooth fields so the defect has a
  // well-defined refinement order
  auto gs = field_battery(t, battery_size, seed, t.positions.has_value());
  double worst = 0.0;
  std::string loc = "-";
  for (std::size_t k = 0; k < gs.size(); ++k) {
    Field lhs = carre_du_champ(t, ef, gs[k]);
    Field rhs = carre_du_champ(t, f, gs[k]);
    for (int x = 0; x < t.n; ++x) {
      double r = std::abs(lhs[x] - def[x] * rhs[x]);
      if (r > worst) {
        worst = r;
        loc = "g" + std::to_string(k) + "@x" + std::to_string(x);
      }
    }
  }
  auto rep = CheckReport::make("chain_rule_defect(" + eta.name() + ")",
                               "gamma.chain-rule", worst, loc, tol);
  rep.details.push_back({"battery_size", static_cast<double>(gs.size())});
  return rep;
}

namespace {

// 2-ball of x as a sorted vertex list.
std::vector<int> two_ball(const MarkovTriple& t, int x) {
  std::set<int> b{x};
  for (auto [y, wy] : t.adjacency[x]) b.insert(y);
  std::set<int> b2 = b;
  for (int y : b)
    for (auto [z, wz] : t.adjacency[y]) b2.insert(z);
  return std::vector<int>(b2.begin(), b2.end());
}

struct LocalForms {
  Eigen::MatrixXd G;  // f -> Gamma(f)(x)
  Eigen::MatrixXd A;  // f -> Gamma_2(f)(x)
  Eigen::VectorXd l;  // f -> Lf(x)
};

// Quadratic/linear forms of Gamma(.)(x), Gamma_2(.)(x), L.(x) on the 2-ball.
LocalForms local_forms(const MarkovTriple& t, int x, const std::vector<int>& ball) {
  const int k = static_cast<int>(ball.size());
  std::vector<int> idx(t.n, -1);
  for (int a = 0; a < k; ++a) idx[ball[a]] = a;

  auto gamma_form = [&](int z) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(k, k);
    for (auto [y, w] : t.adjacency[z]) {
      int a = idx[y], b = idx[z];
      Q(a, a) += w;
      Q(b, b) += w;
      Q(a, b) -= w;
      Q(b, a) -= w;
    }
    return Eigen::MatrixXd((0.5 / t.measure[z]) * Q);
  };
  auto ell_vec = [&](int z) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
    for (auto [y, w] : t.adjacency[z]) {
      v[idx[y]] += w / t.measure[z];
      v[idx[z]] -= w / t.measure[z];
    }
    return v;
  };

  LocalForms F;
  F.G = gamma_form(x);
  F.l = ell_vec(x);
  // Gamma_2 = 1/2 L Gamma(f) - Gamma(f, Lf), all evaluated at x.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
  for (auto [y, w] : t.adjacency[x])
    A += (0.5 * w / t.measure[x]) * (gamma_form(y) - F.G);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
  for (auto [y, w] : t.adjacency[x]) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(k);
    d[idx[y]] = 1.0;
    d[idx[x]] -= 1.0;
    Eigen::VectorXd dL = ell_vec(y) - F.l;
    B += (0.5 * w / t.measure[x]) * (d * dL.transpose());
  }
  A -= 0.5 * (B + B.transpose());
  F.A = A;
  return F;
}

// Largest K with M - K G psd, via spectral split of G and a Schur complement
// eliminating ker(G). Returns +inf if G vanishes, -inf on an unbounded
// kernel-coupling (cannot occur for these forms; guarded anyway).
double local_optimal_K(const LocalForms& F, double nu, double rank_tol,
                       Eigen::VectorXd* extremal /*in ball coords*/) {
  const int k = static_cast<int>(F.G.rows());
  Eigen::MatrixXd M = F.A - nu * (F.l * F.l.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F.G);
  if (es.info() != Eigen::Success) throw numerical_error("eigensolver failed on local Gamma form");
  const auto& gval = es.eigenvalues();
  double gmax = gval[k - 1];
  if (!(gmax > 0)) return std::numeric_limits<double>::infinity();
  int r0 = 0;
  while (r0 < k && gval[r0] <= rank_tol * gmax) ++r0;
  const int nr = k - r0, nk = r0;
  Eigen::MatrixXd R = es.eigenvectors().rightCols(nr);
  Eigen::MatrixXd Nk, pinvMnn, Mrn;
  Eigen::MatrixXd S;
  if (nk > 0) {
    Nk = es.eigenvectors().leftCols(nk);
    Eigen::MatrixXd Mnn = Nk.transpose() * M * Nk;
    Mrn = R.transpose() * M * Nk;
    double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(Mnn);
    Eigen::VectorXd inv(nk);
    for (int a = 0; a < nk; ++a)
      inv[a] = (ek.eigenvalues()[a] > 1e-10 * scale) ? 1.0 / ek.eigenvalues()[a] : 0.0;
    pinvMnn = ek.eigenvectors() * inv.asDiagonal() * ek.eigenvectors().transpose();
    S = R.transpose() * M * R - Mrn * pinvMnn * Mrn.transpose();
  } else {
    S = R.transpose() * M * R;
  }
  Eigen::VectorXd dih(nr);
  for (int a = 0; a < nr; ++a) dih[a] = 1.0 / std::sqrt(gval[r0 + a]);
  Eigen::MatrixXd P = dih.asDiagonal() * S * dih.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(0.5 * (P + P.transpose()));
  if (extremal) {
    Eigen::VectorXd u = ep.eigenvectors().col(0);
    Eigen::VectorXd fr = dih.asDiagonal() * u;
    *extremal = R * fr;
    if (nk > 0) // kernel component of the minimizer
      *extremal -= Nk * (pinvMnn * (Mrn.transpose() * fr));
  }
  return ep.eigenvalues()[0];
}

} // namespace

PointwiseBE pointwise_be_optimal_K(const MarkovTriple& t, double N, double rank_tol) {
  if (!(rank_tol > 0)) throw invalid_parameter("rank_tol must be positive");
  const double nu = nu_of_N(N);
  PointwiseBE out;
  out.per_point = Eigen::VectorXd::Constant(t.n, std::numeric_limits<double>::infinity());
  std::vector<Eigen::VectorXd> exts(t.n);
  std::vector<std::vector<int>> balls(t.n);
  parallel_for(static_cast<std::size_t>(t.n), [&](std::size_t xi) {
    int x = static_cast<int>(xi);
    if (t.adjacency[x].empty()) return;
    balls[x] = two_ball(t, x);
    auto F = local_forms(t, x, balls[x]);
    Eigen::VectorXd e;
    out.per_point[x] = local_optimal_K(F, nu, rank_tol, &e);
    exts[x] = e;
  });
  out.K_star = std::numeric_limits<double>::infinity();
  for (int x = 0; x < t.n; ++x) {
    if (t.adjacency[x].empty()) {
      out.skipped.push_back(x);
      continue;
    }
    if (out.per_point[x] < out.K_star) {
      out.K_star = out.per_point[x];
      out.argmin_state = x;
    }
  }
  if (out.argmin_state >= 0) {
    out.extremal = Field::Zero(t.n);
    const auto& ball = balls[out.argmin_state];
    const auto& e = exts[out.argmin_state];
    for (std::size_t a = 0; a < ball.size(); ++a) out.extremal[ball[a]] = e[a];
    double nrm = out.extremal.cwiseAbs().maxCoeff();
    if (nrm > 0) out.extremal /= nrm;
  }
  return out;
}

CheckReport be_check(const MarkovTriple& t, double K, double N, double tol) {
  auto be = pointwise_be_optimal_K(t, N);
  auto rep = CheckReport::make("be_check", "be.pointwise", K - be.K_star,
                               "x" + std::to_string(be.argmin_state), tol);
  rep.K = K;
  rep.N = N;
  rep.details.push_back({"K_star", be.K_star});
  rep.details.push_back({"skipped_states", static_cast<double>(be.skipped.size())});
  return rep;
}

} // namespace curvelab
