#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "curvelab/battery.hpp"
#include "curvelab/gamma.hpp"
#include "curvelab/spaces.hpp"
#include "curvelab/spectral.hpp"
#include "oracles.hpp"

using namespace curvelab;

TEST_CASE("decompose: two-point spectrum, basis orthonormality, reconstruction") {
  auto t = build(SpaceSpec::parse("two_point"));
  auto dec = decompose(t);
  CHECK(dec.eigenvalues[0] == doctest::Approx(-2.0));
  CHECK(dec.eigenvalues[1] == doctest::Approx(0.0));
  // characteristic polynomial oracle: lambda^2 + 2 lambda = 0
  for (double lam : {dec.eigenvalues[0], dec.eigenvalues[1]})
    CHECK(lam * lam + 2.0 * lam == doctest::Approx(0.0).epsilon(1e-12));
  // m-orthonormal basis
  Eigen::MatrixXd Gram =
      dec.basis.transpose() * t.measure.asDiagonal() * dec.basis;
  CHECK((Gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  // reconstruction of L
  Eigen::MatrixXd L = oracle::dense_generator(t);
  Eigen::MatrixXd L2 = dec.basis * dec.eigenvalues.asDiagonal() *
                       dec.basis.transpose() * Eigen::MatrixXd(t.measure.asDiagonal());
  CHECK((L - L2).cwiseAbs().maxCoeff() < 1e-10 * L.cwiseAbs().maxCoeff());
}

TEST_CASE("decompose: one zero eigenvalue per component") {
  MarkovTriple t(4, Eigen::Vector4d(1, 1, 1, 1), {{0, 1, 1.0}, {2, 3, 0.7}});
  auto dec = decompose(t);
  CHECK(dec.n_components == 2);
  int zeros = 0;
  for (int k = 0; k < 4; ++k)
    if (dec.eigenvalues[k] == 0.0) ++zeros;
  CHECK(zeros == 2);
}

TEST_CASE("decompose: OU spectral gap approaches -1 under refinement") {
  double prev_err = 1e9;
  for (int n : {50, 100, 200}) {
    auto dec = decompose(build(SpaceSpec::parse("ou:" + std::to_string(n))));
    double gap = dec.eigenvalues[dec.n() - 2];
    double err = std::abs(gap + 1.0);
    CHECK(err < prev_err + 1e-12);
    prev_err = err;
  }
  CHECK(prev_err < 1e-3);
}

TEST_CASE("decompose rejects oversized spaces with guidance") {
  MarkovTriple t(2, Eigen::Vector2d(1, 1), {{0, 1, 1.0}});
  t.n = kSpectralStateCap + 1; // shape check only; not finalized further
  CHECK_THROWS_AS(decompose(t), invalid_parameter);
}

TEST_CASE("heat_apply: closed form on the two-point chain") {
  auto t = build(SpaceSpec::parse("two_point"));
  auto dec = decompose(t);
  Field f(2);
  f << 0, 1;
  for (double s : {0.0, 0.05, 0.3, 1.5, 20.0}) {
    Field got = heat_apply(dec, s, f);
    Field want = oracle::two_point_heat(s, f);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
  // series-summation oracle: P_t = sum_k (tL)^k/k! on the dense generator
  Eigen::MatrixXd L = oracle::dense_generator(t);
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(2, 2), term = E;
  double s = 0.3;
  for (int k = 1; k < 40; ++k) {
    term = term * (s * L) / k;
    E += term;
  }
  CHECK(((E * f) - heat_apply(dec, s, f)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(heat_apply(dec, -0.1, f), invalid_parameter);
}

TEST_CASE("heat_apply: semigroup law, bounds, mass, long-time limit") {
  auto t = build(SpaceSpec::parse("ou:60"));
  auto dec = decompose(t);
  auto fb = field_battery(t, 8, 5);
  for (const auto& f : fb) {
    Field a = heat_apply(dec, 0.7, f);
    Field b = heat_apply(dec, 0.3, heat_apply(dec, 0.4, f));
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff()));
    // one-sided bounds
    CHECK(a.maxCoeff() <= f.maxCoeff() + 1e-12);
    CHECK(a.minCoeff() >= f.minCoeff() - 1e-12);
    // mass preservation
    CHECK(a.dot(t.measure) == doctest::Approx(f.dot(t.measure)).epsilon(1e-12));
    // L2 contraction along a time grid
    double prev = std::sqrt(f.cwiseAbs2().dot(t.measure));
    for (double s : {0.1, 0.2, 0.5, 1.0}) {
      double now = std::sqrt(heat_apply(dec, s, f).cwiseAbs2().dot(t.measure));
      CHECK(now <= prev + 1e-12);
      prev = now;
    }
  }
  // t -> infinity: mean against m
  Field f = fb[3];
  double mean = f.dot(t.measure) / t.total_mass();
  Field late = heat_apply(dec, 200.0, f);
  CHECK((late.array() - mean).abs().maxCoeff() < 1e-10);
}

TEST_CASE("heat_apply derivative at zero approaches Lf at first order") {
  auto t = build(SpaceSpec::parse("two_point"));
  auto dec = decompose(t);
  Field f(2);
  f << 0.3, -1.2;
  Field lf = generator_apply(t, f);
  double e3 = ((heat_apply(dec, 1e-3, f) - f) / 1e-3 - lf).cwiseAbs().maxCoeff();
  double e4 = ((heat_apply(dec, 1e-4, f) - f) / 1e-4 - lf).cwiseAbs().maxCoeff();
  CHECK(e3 / e4 == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("heat_kernel: stochasticity, symmetry, closed form, equilibrium") {
  auto t = build(SpaceSpec::parse("two_point"));
  auto dec = decompose(t);
  for (double s : {0.05, 0.4, 2.0}) {
    auto hk = heat_kernel(dec, s);
    CHECK(hk.u(0, 1) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0 * s))).epsilon(1e-12));
    Eigen::VectorXd mass = hk.u * t.measure;
    CHECK((mass.array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  auto tr = oracle::random_graph(17, 9);
  auto dr = decompose(tr);
  auto hk = heat_kernel(dr, 0.37);
  CHECK((hk.u - hk.u.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((hk.u * tr.measure).array() - 1.0).abs().maxCoeff() < 1e-11);
  // kernel pairing vs heat_apply
  auto fb = field_battery(tr, 4, 7);
  for (const auto& f : fb) {
    Field via_kernel = hk.u * f.cwiseProduct(tr.measure);
    CHECK((via_kernel - heat_apply(dr, 0.37, f)).cwiseAbs().maxCoeff() < 1e-12);
  }
  // equilibrium limit
  auto hk_inf = heat_kernel(dr, 500.0);
  CHECK((hk_inf.u.array() - 1.0 / tr.total_mass()).abs().maxCoeff() < 1e-10);
  // t = 0 returns the identity kernel with the singularity note
  auto hk0 = heat_kernel(dr, 0.0);
  CHECK(hk0.diagonal_singularity);
  CHECK(hk0.u(1, 1) == doctest::Approx(1.0 / tr.measure[1]));
}

TEST_CASE("dual_apply: equilibrium fixed point, atoms, duality identity") {
  auto tr = oracle::random_graph(23, 8);
  auto dec = decompose(tr);
  // equilibrium is a fixed point
  Field eq = Field::Constant(tr.n, 1.0 / tr.total_mass());
  auto eq2 = dual_apply(dec, 0.8, ProbabilityDensity{eq});
  CHECK((eq2.density - eq).cwiseAbs().maxCoeff() < 1e-12);
  // delta_x evolves to the kernel row
  auto hk = heat_kernel(dec, 0.45);
  auto from_atom =
      dual_apply(dec, 0.45, std::vector<std::pair<int, double>>{{3, 1.0}});
  CHECK((from_atom.density - hk.u.row(3).transpose()).cwiseAbs().maxCoeff() < 1e-11);
  // duality: int f dH_t mu = int P_t f dmu on 20 random pairs
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    Field f(tr.n), g(tr.n);
    for (int i = 0; i < tr.n; ++i) {
      f[i] = rng.normal();
      g[i] = std::exp(0.7 * rng.normal());
    }
    g /= g.dot(tr.measure);
    auto mu = ProbabilityDensity{g};
    double lhs = dual_apply(dec, 0.6, mu).density.cwiseProduct(tr.measure).dot(f);
    double rhs = heat_apply(dec, 0.6, f).cwiseProduct(tr.measure).dot(g);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
  Field bad = eq * 1.5;
  CHECK_THROWS_AS(dual_apply(dec, 0.1, ProbabilityDensity{bad}), invalid_measure);
}

TEST_CASE("mollifier transform matches the closed form of the default bump") {
  MollifierKernel k;
  for (double s : {0.0, -1e-7, -0.5, -3.0, -20.0}) {
    CHECK(k.transform(s) == doctest::Approx(oracle::bump_transform(s)).epsilon(1e-8));
  }
  CHECK(k.transform(0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS((MollifierKernel{-1.0, 2.0}.validate()), catalog_error);
}

TEST_CASE("mollify: constants, commutation, mass, first-order convergence") {
  auto t = build(SpaceSpec::parse("two_point"));
  auto dec = decompose(t);
  Field c = Field::Constant(2, 4.2);
  CHECK((mollify(dec, 0.3, c) - c).cwiseAbs().maxCoeff() < 1e-10);
  Field f(2);
  f << 0, 1;
  // commutation with the semigroup
  Field a = mollify(dec, 0.2, heat_apply(dec, 0.4, f));
  Field b = heat_apply(dec, 0.4, mollify(dec, 0.2, f));
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  // mass preserved
  CHECK(mollify(dec, 0.2, f).dot(t.measure) == doctest::Approx(f.dot(t.measure)).epsilon(1e-12));
  // eps -> 0 at first order: khat(eps lambda_1) = 1 + eps lambda_1 m1 + ...
  auto err = [&](double eps) {
    return (mollify(dec, eps, f) - f).norm();
  };
  CHECK(err(0.02) / err(0.01) == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(mollify(dec, -1.0, f), invalid_parameter);
}
