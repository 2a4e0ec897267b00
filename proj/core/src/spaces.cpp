#include "curvelab/spaces.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvelab/battery.hpp"
#include "curvelab/metric.hpp"
#include "curvelab/parallel.hpp"
#include "curvelab/report.hpp"
#include "curvelab/spectral.hpp"
#include "curvelab/transport.hpp"

namespace curvelab {

namespace {

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

std::string kind_name(SpaceSpec::Kind k) {
  switch (k) {
    case SpaceSpec::Kind::IntervalDiffusion: return "interval_diffusion";
    case SpaceSpec::Kind::CircleDiffusion: return "circle_diffusion";
    case SpaceSpec::Kind::TwoPoint: return "two_point";
    case SpaceSpec::Kind::CompleteGraph: return "complete_graph";
    case SpaceSpec::Kind::Custom: return "custom";
    case SpaceSpec::Kind::Product: return "product";
  }
  return "?";
}

} // namespace

SpaceSpec SpaceSpec::parse(const std::string& text) {
  auto starts = [&](const char* p) { return text.rfind(p, 0) == 0; };
  SpaceSpec s;
  if (text == "two_point") {
    s.kind = Kind::TwoPoint;
    return s;
  }
  if (starts("ou:")) {
    s.kind = Kind::IntervalDiffusion;
    s.potential = {0.0, 0.0, 0.5};
    s.a = -5.0;
    s.b = 5.0;
    s.n = std::stoi(text.substr(3));
    return s;
  }
  if (starts("circle:")) {
    s.kind = Kind::CircleDiffusion;
    s.a = 0.0;
    s.b = 6.283185307179586476925286766559; // circumference 2*pi
    s.n = std::stoi(text.substr(7));
    return s;
  }
  if (starts("complete:")) {
    s.kind = Kind::CompleteGraph;
    s.n = std::stoi(text.substr(9));
    return s;
  }
  if (starts("product(") && text.back() == ')') {
    std::string inner = text.substr(8, text.size() - 9);
    int depth = 0;
    std::size_t comma = std::string::npos;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] == '(') ++depth;
      else if (inner[i] == ')') --depth;
      else if (inner[i] == ',' && depth == 0) {
        comma = i;
        break;
      }
    }
    if (comma == std::string::npos) throw invalid_parameter("product needs two factors");
    s.kind = Kind::Product;
    s.x = std::make_shared<SpaceSpec>(parse(inner.substr(0, comma)));
    s.y = std::make_shared<SpaceSpec>(parse(inner.substr(comma + 1)));
    return s;
  }
  // otherwise: a JSON file (spec if it has "kind", inline triple otherwise)
  std::ifstream in(text);
  if (!in) throw invalid_parameter("unknown space spec: " + text);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string body = ss.str();
  if (body.find("\"kind\"") != std::string::npos) return from_json_text(body);
  s.kind = Kind::Custom;
  s.custom_json = body;
  return s;
}

SpaceSpec SpaceSpec::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SpaceSpec s;
  std::string k = j.at("kind").get<std::string>();
  if (k == "interval_diffusion") s.kind = Kind::IntervalDiffusion;
  else if (k == "circle_diffusion") s.kind = Kind::CircleDiffusion;
  else if (k == "two_point") s.kind = Kind::TwoPoint;
  else if (k == "complete_graph") s.kind = Kind::CompleteGraph;
  else if (k == "custom") s.kind = Kind::Custom;
  else if (k == "product") s.kind = Kind::Product;
  else throw invalid_parameter("unknown space kind: " + k);
  if (j.contains("potential")) s.potential = j["potential"].get<std::vector<double>>();
  if (j.contains("bounds")) {
    s.a = j["bounds"][0].get<double>();
    s.b = j["bounds"][1].get<double>();
  }
  if (j.contains("n")) s.n = j["n"].get<int>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("triple")) s.custom_json = j["triple"].dump();
  if (s.kind == Kind::Product) {
    s.x = std::make_shared<SpaceSpec>(from_json_text(j.at("x").dump()));
    s.y = std::make_shared<SpaceSpec>(from_json_text(j.at("y").dump()));
  }
  return s;
}

std::string SpaceSpec::to_json_text() const {
  JsonWriter w;
  w.begin_object();
  w.key("kind").value(kind_name(kind));
  if (!potential.empty()) {
    w.key("potential");
    w.begin_array();
    for (double c : potential) w.value(c);
    w.end_array();
  }
  w.key("bounds");
  w.begin_array();
  w.value(a);
  w.value(b);
  w.end_array();
  w.key("n").value(static_cast<long long>(n));
  w.key("seed").value(static_cast<long long>(seed));
  if (kind == Kind::Product && x && y) {
    // factors serialized recursively
    w.key("x");
    w.raw(x->to_json_text());
    w.key("y");
    w.raw(y->to_json_text());
  }
  w.end_object();
  return w.str();
}

std::string SpaceSpec::describe() const {
  if (kind == Kind::Product && x && y)
    return "product(" + x->describe() + "," + y->describe() + ")";
  return kind_name(kind) + ":" + std::to_string(n);
}

MarkovTriple build(const SpaceSpec& spec) {
  switch (spec.kind) {
    case SpaceSpec::Kind::TwoPoint: {
      MarkovTriple t(2, Eigen::Vector2d(1.0, 1.0), {{0, 1, 1.0}});
      return t;
    }
    case SpaceSpec::Kind::CompleteGraph: {
      if (spec.n < 2) throw invalid_parameter("complete graph needs n >= 2");
      std::vector<Edge> es;
      for (int i = 0; i < spec.n; ++i)
        for (int j = i + 1; j < spec.n; ++j) es.push_back({i, j, 1.0});
      return MarkovTriple(spec.n, Eigen::VectorXd::Ones(spec.n), std::move(es));
    }
    case SpaceSpec::Kind::Custom:
      return MarkovTriple::from_json_text(spec.custom_json);
    case SpaceSpec::Kind::IntervalDiffusion: {
      if (spec.n < 2) throw invalid_parameter("grid needs n >= 2");
      if (!(spec.a < spec.b) || !std::isfinite(spec.a) || !std::isfinite(spec.b))
        throw invalid_parameter("interval bounds must be finite with a < b");
      double h = (spec.b - spec.a) / spec.n;
      Eigen::VectorXd x(spec.n), m(spec.n);
      for (int i = 0; i < spec.n; ++i) {
        x[i] = spec.a + (i + 0.5) * h;
        m[i] = std::exp(-poly_eval(spec.potential, x[i])) * h;
      }
      std::vector<Edge> es;
      for (int i = 0; i + 1 < spec.n; ++i) {
        double w = std::exp(-0.5 * (poly_eval(spec.potential, x[i]) +
                                    poly_eval(spec.potential, x[i + 1]))) / h;
        es.push_back({i, i + 1, w});
      }
      MarkovTriple t(spec.n, m, std::move(es));
      t.grid_h = h;
      t.positions = x;
      return t;
    }
    case SpaceSpec::Kind::CircleDiffusion: {
      if (spec.n < 3) throw invalid_parameter("circle needs n >= 3");
      double circ = spec.b - spec.a;
      if (!(circ > 0)) throw invalid_parameter("circle circumference must be positive");
      double h = circ / spec.n;
      Eigen::VectorXd x(spec.n), m(spec.n);
      for (int i = 0; i < spec.n; ++i) {
        x[i] = spec.a + (i + 0.5) * h;
        m[i] = std::exp(-poly_eval(spec.potential, x[i])) * h;
      }
      std::vector<Edge> es;
      for (int i = 0; i < spec.n; ++i) {
        int j = (i + 1) % spec.n;
        double w = std::exp(-0.5 * (poly_eval(spec.potential, x[i]) +
                                    poly_eval(spec.potential, x[j]))) / h;
        es.push_back({std::min(i, j), std::max(i, j), w});
      }
      MarkovTriple t(spec.n, m, std::move(es));
      t.grid_h = h;
      t.positions = x;
      return t;
    }
    case SpaceSpec::Kind::Product: {
      if (!spec.x || !spec.y) throw invalid_parameter("product spec needs two factors");
      return product(build(*spec.x), build(*spec.y));
    }
  }
  throw invalid_parameter("unhandled space kind");
}

MarkovTriple product(const MarkovTriple& X, const MarkovTriple& Y) {
  long total = static_cast<long>(X.n) * Y.n;
  if (total > kSpectralStateCap)
    throw invalid_parameter("product would have " + std::to_string(total) +
                            " states, beyond the cap of " +
                            std::to_string(kSpectralStateCap));
  const int n = static_cast<int>(total);
  auto id = [&](int i, int j) { return i * Y.n + j; };
  Eigen::VectorXd m(n);
  for (int i = 0; i < X.n; ++i)
    for (int j = 0; j < Y.n; ++j) m[id(i, j)] = X.measure[i] * Y.measure[j];
  std::vector<Edge> es;
  for (const auto& e : X.edges)
    for (int j = 0; j < Y.n; ++j)
      es.push_back({id(e.i, j), id(e.j, j), e.w * Y.measure[j]});
  for (const auto& e : Y.edges)
    for (int i = 0; i < X.n; ++i)
      es.push_back({id(i, e.i), id(i, e.j), e.w * X.measure[i]});
  return MarkovTriple(n, m, std::move(es));
}

TensorizationReport tensorization_check(const MarkovTriple& X, double KX, double NX,
                                        const MarkovTriple& Y, double KY, double NY,
                                        double tol) {
  TensorizationReport rep;
  rep.factor_x = be_check(X, KX, NX, tol);
  rep.factor_y = be_check(Y, KY, NY, tol);
  MarkovTriple Z = product(X, Y);
  double K = std::min(KX, KY);
  double NZ = (std::isinf(NX) || std::isinf(NY)) ? kInfiniteN : NX + NY;
  rep.product_check = be_check(Z, K, NZ, tol);
  rep.product_K_star = pointwise_be_optimal_K(Z, NZ).K_star;
  for (double N : {NZ, 2.0 * (std::isinf(NZ) ? 1.0 : NZ), kInfiniteN}) {
    if (std::isinf(N) && !rep.dimension_sweep.empty() &&
        std::isinf(rep.dimension_sweep.back().first))
      continue;
    rep.dimension_sweep.push_back({N, pointwise_be_optimal_K(Z, N).K_star});
  }
  rep.verdict = rep.factor_x.verdict && rep.factor_y.verdict && rep.product_check.verdict;
  return rep;
}

std::string StudyTable::to_csv() const {
  std::string out =
      "n,K_star,de_defect,evi_residual,contraction_residual,log_harnack_residual\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + ',';
    out += JsonWriter::format_double(r.K_star) + ',';
    out += JsonWriter::format_double(r.de_defect) + ',';
    out += JsonWriter::format_double(r.evi_residual) + ',';
    out += JsonWriter::format_double(r.contraction_residual) + ',';
    out += JsonWriter::format_double(r.log_harnack_residual) + '\n';
  }
  return out;
}

namespace {

// least-squares slope of log2(defect) against log2(n); sign flipped so a
// first-order decay reports +1
double fitted_order(const std::vector<std::pair<int, double>>& pts) {
  std::vector<std::pair<double, double>> xy;
  for (auto [n, v] : pts)
    if (v > 0) xy.push_back({std::log2(static_cast<double>(n)), std::log2(v)});
  if (xy.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : xy) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double k = xy.size();
  double denom = k * sxx - sx * sx;
  if (denom == 0) return 0.0;
  return -(k * sxy - sx * sy) / denom;
}

} // namespace

StudyTable refinement_study(const SpaceSpec& family, const std::vector<int>& n_list,
                            const StudyConfig& cfg) {
  if (n_list.size() < 3) throw invalid_parameter("refinement study needs >= 3 sizes");
  for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
    if (n_list[i + 1] < n_list[i]) throw invalid_parameter("n_list must be increasing");

  StudyTable table;
  table.rows.resize(n_list.size());
  parallel_for(n_list.size(), [&](std::size_t idx) {
    SpaceSpec spec = family;
    spec.n = n_list[idx];
    MarkovTriple t = build(spec);
    StudyRow row;
    row.n = spec.n;
    row.K_star = pointwise_be_optimal_K(t, cfg.N).K_star;

    auto dres = intrinsic_distance(t);
    const auto& d = dres.metric;
    // continuum distance comparison on interior pairs when positions exist
    if (t.positions) {
      const auto& x = *t.positions;
      bool circle = (family.kind == SpaceSpec::Kind::CircleDiffusion);
      double circ = family.b - family.a;
      double worst = 0.0;
      for (int i = 1; i + 1 < t.n; i += 1)
        for (int j = i + 1; j + 1 < t.n; ++j) {
          double cont = std::abs(x[i] - x[j]);
          if (circle) cont = std::min(cont, circ - cont);
          worst = std::max(worst, std::abs(d.d(i, j) - cont));
        }
      row.de_defect = worst;
    } else {
      row.de_defect = length_defect(d).worst_residual;
    }

    SpectralDecomposition dec = decompose(t);
    auto dens = density_battery(t, 2 * cfg.pairs, cfg.seed);
    std::vector<std::pair<ProbabilityDensity, ProbabilityDensity>> pairs;
    for (int k = 0; k < cfg.pairs; ++k) pairs.push_back({dens[2 * k], dens[2 * k + 1]});
    row.contraction_residual =
        contraction_check(dec, d, pairs, cfg.t_grid, cfg.K_contraction, 0.0).worst_residual;

    double worst_evi = -std::numeric_limits<double>::infinity();
    std::vector<double> evi_grid;
    for (int k = 0; k < 12; ++k) evi_grid.push_back(0.02 + 0.08 * k);
    for (int k = 0; k + 1 < 2 * cfg.pairs; k += 2)
      worst_evi = std::max(worst_evi,
                           evi_residual(dec, d, dens[k], dens[k + 1], evi_grid, cfg.K_evi)
                               .worst_residual);
    row.evi_residual = std::max(worst_evi, 0.0);

    double worst_lh = -std::numeric_limits<double>::infinity();
    auto fb = field_battery(t, 6, cfg.seed + 1);
    for (const auto& f : fb) {
      Field pos = f.array() - f.minCoeff() + 0.1;
      for (double tt : {0.1, 0.25})
        worst_lh = std::max(
            worst_lh, log_harnack_check(dec, d, pos, tt, cfg.K_harnack, 0.0).worst_residual);
    }
    row.log_harnack_residual = worst_lh;
    table.rows[idx] = row;
  });

  std::vector<std::pair<int, double>> de_pts, evi_pts;
  for (const auto& r : table.rows) {
    de_pts.push_back({r.n, r.de_defect});
    evi_pts.push_back({r.n, std::max(r.evi_residual, 0.0)});
  }
  table.fitted_order_de = fitted_order(de_pts);
  table.fitted_order_evi = fitted_order(evi_pts);
  return table;
}

} // namespace curvelab
