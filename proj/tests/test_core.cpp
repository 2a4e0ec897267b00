#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "curvelab/battery.hpp"
#include "curvelab/gamma.hpp"
#include "curvelab/spaces.hpp"
#include "oracles.hpp"

using namespace curvelab;

namespace {
MarkovTriple two_point() { return build(SpaceSpec::parse("two_point")); }
Field F2(double a, double b) {
  Field f(2);
  f << a, b;
  return f;
}
} // namespace

TEST_CASE("dirichlet energy: constants, two-point values, bilinearity") {
  auto t = two_point();
  Field c = Field::Constant(2, 3.7), g = F2(0.4, -1.1);
  CHECK(dirichlet_energy(t, c, g) == doctest::Approx(0.0));
  // frozen from the double-sum oracle (and forced by <Lf,g>_m = -E(f,g))
  Field f = F2(0, 1);
  CHECK(dirichlet_energy(t, f, f) == doctest::Approx(oracle::energy(t, f, f)));
  CHECK(dirichlet_energy(t, f, f) == doctest::Approx(1.0));
  Field h = F2(1, 0);
  CHECK(dirichlet_energy(t, f, h) == doctest::Approx(oracle::energy(t, f, h)));
  CHECK(dirichlet_energy(t, f, h) == doctest::Approx(-1.0));
  Field bad(3);
  CHECK_THROWS_AS(dirichlet_energy(t, bad, f), invalid_field);
}

TEST_CASE("generator: constants, two-point, pairing with the energy") {
  auto t = two_point();
  Field c = Field::Constant(2, -2.5);
  CHECK(generator_apply(t, c).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  Field f = F2(0, 1);
  Field lf = generator_apply(t, f);
  CHECK(lf[0] == doctest::Approx(1.0));
  CHECK(lf[1] == doctest::Approx(-1.0));
  // <Lf, g>_m = -E(f,g) over a random battery
  for (std::uint64_t s = 1; s <= 5; ++s) {
    auto g = oracle::random_graph(s, 7);
    auto fb = field_battery(g, 8, s);
    for (const auto& u : fb)
      for (const auto& v : fb) {
        double lhs = generator_apply(g, u).cwiseProduct(g.measure).dot(v);
        CHECK(lhs == doctest::Approx(-dirichlet_energy(g, u, v)).epsilon(1e-11));
      }
  }
}

TEST_CASE("OU grid generator consistency: Lf ~ f'' - x f' at O(h^2)") {
  auto spec = SpaceSpec::parse("ou:200");
  auto t = build(spec);
  const auto& x = *t.positions;
  Field f(t.n), exact(t.n);
  for (int i = 0; i < t.n; ++i) {
    f[i] = std::sin(x[i]);
    exact[i] = -std::sin(x[i]) - x[i] * std::cos(x[i]);
  }
  Field lf = generator_apply(t, f);
  double h = *t.grid_h;
  double worst = 0.0;
  for (int i = 2; i + 2 < t.n; ++i) worst = std::max(worst, std::abs(lf[i] - exact[i]));
  CHECK(worst < 5.0 * h * h);

  auto t2 = build([&] { auto s = spec; s.n = 400; return s; }());
  const auto& x2 = *t2.positions;
  Field f2(t2.n), exact2(t2.n);
  for (int i = 0; i < t2.n; ++i) {
    f2[i] = std::sin(x2[i]);
    exact2[i] = -std::sin(x2[i]) - x2[i] * std::cos(x2[i]);
  }
  Field lf2 = generator_apply(t2, f2);
  double worst2 = 0.0;
  for (int i = 2; i + 2 < t2.n; ++i) worst2 = std::max(worst2, std::abs(lf2[i] - exact2[i]));
  CHECK(worst / worst2 > 3.0); // second order
  CHECK(worst / worst2 < 5.0);
}

TEST_CASE("carre du champ: two-point, integral identity, polarization") {
  auto t = two_point();
  Field f = F2(0, 1);
  Field g = carre_du_champ(t, f);
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.5));
  for (std::uint64_t s = 11; s <= 14; ++s) {
    auto tr = oracle::random_graph(s, 9);
    auto fb = field_battery(tr, 6, s);
    for (const auto& u : fb)
      for (const auto& v : fb) {
        // sum_x Gamma(u,v) m = E(u,v) to 1e-12 relative
        double lhs = carre_du_champ(tr, u, v).dot(tr.measure);
        double rhs = dirichlet_energy(tr, u, v);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        // polarization
        Field pol = 0.25 * (carre_du_champ(tr, u + v) - carre_du_champ(tr, u - v));
        CHECK((pol - carre_du_champ(tr, u, v)).cwiseAbs().maxCoeff() < 1e-12);
      }
  }
}

TEST_CASE("gamma2: two-point value, evenness, quadratic scaling") {
  auto t = two_point();
  Field f = F2(0, 1);
  Field g2 = gamma2(t, f);
  CHECK(g2[0] == doctest::Approx(1.0));
  CHECK(g2[1] == doctest::Approx(1.0));
  auto tr = oracle::random_graph(3, 8);
  auto fb = field_battery(tr, 4, 3);
  for (const auto& u : fb) {
    CHECK((gamma2(tr, u) - gamma2(tr, Field(-u))).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((gamma2(tr, Field(3.0 * u)) - 9.0 * gamma2(tr, u)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((gamma2(tr, u) - oracle::gamma2_field(tr, u)).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("markov property: normal contractions do not increase the energy") {
  for (std::uint64_t s = 21; s <= 24; ++s) {
    auto tr = oracle::random_graph(s, 10);
    auto fb = field_battery(tr, 8, s);
    for (const auto& u : fb) {
      Field f = 2.0 * u;
      for (const char* name : {"identity", "clamp", "tanh"}) {
        auto eta = EtaSpec::parse(name);
        Field ef(tr.n);
        for (int i = 0; i < tr.n; ++i) ef[i] = eta.eval(f[i]);
        CHECK(dirichlet_energy(tr, ef) <= dirichlet_energy(tr, f) + 1e-12);
      }
    }
  }
}

TEST_CASE("chain rule defect: identity exact, square nonzero, O(h) decay") {
  auto t = two_point();
  Field f = F2(0, 1);
  CHECK(chain_rule_defect(t, f, EtaSpec::parse("identity")).worst_residual ==
        doctest::Approx(0.0));
  CHECK(chain_rule_defect(t, f, EtaSpec::parse("square")).worst_residual > 0.1);
  CHECK_THROWS_AS(EtaSpec::parse("cubic"), catalog_error);

  auto coarse = build(SpaceSpec::parse("ou:100"));
  auto fine = build(SpaceSpec::parse("ou:200"));
  auto smooth_profile = [](const MarkovTriple& tr) {
    Field f(tr.n);
    for (int i = 0; i < tr.n; ++i) f[i] = std::tanh((*tr.positions)[i] / 2.0);
    return f;
  };
  // battery of 8 on a grid = the Chebyshev profiles, identical physical
  // functions at every n, so the ratio isolates the refinement order. The
  // defect decays at second order here (the symmetric interior stencil
  // cancels the odd term), comfortably within the required O(h) decay.
  double dc = chain_rule_defect(coarse, smooth_profile(coarse), EtaSpec::parse("square"), 8)
                  .worst_residual;
  double df = chain_rule_defect(fine, smooth_profile(fine), EtaSpec::parse("square"), 8)
                  .worst_residual;
  CHECK(dc / df > 1.8);
  CHECK(dc / df < 5.0);
}

TEST_CASE("pointwise BE: two-point exact values") {
  auto t = two_point();
  auto be = pointwise_be_optimal_K(t, kInfiniteN);
  CHECK(be.K_star == doctest::Approx(2.0).epsilon(1e-12));
  // finite N: the quotient is 2 - 2/N for every field (frozen from the
  // full-space bisection oracle)
  for (double N : {2.0, 4.0, 10.0}) {
    auto beN = pointwise_be_optimal_K(t, N);
    CHECK(beN.K_star == doctest::Approx(2.0 - 2.0 / N).epsilon(1e-10));
    CHECK(beN.K_star == doctest::Approx(oracle::min_pointwise_K_bisect(t, N)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(pointwise_be_optimal_K(t, -3.0), invalid_parameter);
}

TEST_CASE("pointwise BE agrees with the full-space bisection oracle") {
  for (std::uint64_t s = 31; s <= 36; ++s) {
    auto tr = oracle::random_graph(s, 6);
    for (double N : {kInfiniteN, 8.0, 3.0}) {
      auto be = pointwise_be_optimal_K(tr, N);
      double ref = oracle::min_pointwise_K_bisect(tr, N);
      CHECK(be.K_star == doctest::Approx(ref).epsilon(5e-7));
      // extremal field attains the quotient at the argmin state
      int x = be.argmin_state;
      double nu = std::isinf(N) ? 0.0 : 1.0 / N;
      double num = gamma2(tr, be.extremal)[x] -
                   nu * std::pow(generator_apply(tr, be.extremal)[x], 2);
      double den = carre_du_champ(tr, be.extremal)[x];
      REQUIRE(den > 0);
      CHECK(num / den == doctest::Approx(be.K_star).epsilon(1e-7));
    }
  }
}

TEST_CASE("pointwise BE on the OU grid approaches the diffusion value") {
  auto t = build(SpaceSpec::parse("ou:100"));
  auto be = pointwise_be_optimal_K(t, kInfiniteN);
  CHECK(be.K_star > 0.99);
  CHECK(be.K_star < 1.0);
  // sanity against the exhaustive oracle at one interior state of a small grid
  auto t8 = build(SpaceSpec::parse("ou:8"));
  auto be8 = pointwise_be_optimal_K(t8, kInfiniteN);
  CHECK(be8.K_star == doctest::Approx(oracle::min_pointwise_K_bisect(t8, kInfiniteN))
                          .epsilon(1e-7));
}

TEST_CASE("K* is monotone in N") {
  for (std::uint64_t s = 41; s <= 43; ++s) {
    auto tr = oracle::random_graph(s, 8);
    double prev = -std::numeric_limits<double>::infinity();
    for (double N : {1.5, 2.0, 4.0, 16.0, kInfiniteN}) {
      double K = pointwise_be_optimal_K(tr, N).K_star;
      CHECK(K >= prev - 1e-10);
      prev = K;
    }
  }
}

TEST_CASE("be_check verdicts and the always-admissible huge negative K") {
  auto t = two_point();
  CHECK(be_check(t, 2.0, kInfiniteN, 1e-9).verdict);
  CHECK_FALSE(be_check(t, 2.1, kInfiniteN, 1e-9).verdict);
  auto tr = oracle::random_graph(5, 9);
  CHECK(be_check(tr, -1e6, kInfiniteN, 1e-9).verdict);
}

TEST_CASE("isolated states are skipped with a warning entry") {
  MarkovTriple t(3, Eigen::Vector3d(1, 1, 1), {{0, 1, 1.0}});
  auto be = pointwise_be_optimal_K(t, kInfiniteN);
  REQUIRE(be.skipped.size() == 1);
  CHECK(be.skipped[0] == 2);
  CHECK(be.K_star == doctest::Approx(2.0));
}

TEST_CASE("triple JSON round trip and validation") {
  auto t = build(SpaceSpec::parse("ou:12"));
  auto back = MarkovTriple::from_json_text(t.to_json_text());
  CHECK(back.n == t.n);
  CHECK((back.measure - t.measure).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.edges.size() == t.edges.size());
  CHECK(back.grid_h.has_value());

  CHECK_THROWS(MarkovTriple::from_json_text(
      R"({"n":2,"measure":[1,1],"edges":[[0,1,1],[1,0,2]]})")); // duplicate
  CHECK_THROWS_AS(MarkovTriple::from_json_text(
                      R"({"n":2,"measure":[1,-1],"edges":[[0,1,1]]})"),
                  invalid_measure);
}
