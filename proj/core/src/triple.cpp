#include "curvelab/triple.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvelab/report.hpp"

namespace curvelab {

MarkovTriple::MarkovTriple(int n_states, Eigen::VectorXd m, std::vector<Edge> es)
    : n(n_states), measure(std::move(m)), edges(std::move(es)) {
  finalize();
}

void MarkovTriple::finalize() {
  if (n <= 0) throw invalid_parameter("state count must be positive");
  if (measure.size() != n) throw invalid_measure("measure length does not match state count");
  for (int x = 0; x < n; ++x)
    if (!(measure[x] > 0.0))
      throw invalid_measure("measure must be strictly positive at every state");
  std::set<std::pair<int, int>> seen;
  for (auto& e : edges) {
    if (e.i == e.j) throw invalid_parameter("self-loop edge (diagonal must be zero)");
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw invalid_parameter("edge endpoint out of range");
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.w < 0.0) throw invalid_parameter("edge weight must be nonnegative");
    if (!seen.insert({e.i, e.j}).second)
      throw invalid_parameter("duplicate edge");
  }
  adjacency.assign(n, {});
  for (const auto& e : edges) {
    if (e.w == 0.0) continue;
    adjacency[e.i].push_back({e.j, e.w});
    adjacency[e.j].push_back({e.i, e.w});
  }
}

std::vector<int> MarkovTriple::components() const {
  std::vector<int> comp(n, -1);
  int c = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    stack.push_back(s);
    comp[s] = c;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (auto [y, w] : adjacency[x])
        if (comp[y] < 0) {
          comp[y] = c;
          stack.push_back(y);
        }
    }
    ++c;
  }
  return comp;
}

int MarkovTriple::component_count() const {
  auto c = components();
  return c.empty() ? 0 : 1 + *std::max_element(c.begin(), c.end());
}

MarkovTriple MarkovTriple::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MarkovTriple t;
  t.n = j.at("n").get<int>();
  auto mv = j.at("measure").get<std::vector<double>>();
  t.measure = Eigen::Map<Eigen::VectorXd>(mv.data(), static_cast<long>(mv.size()));
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3)
      throw invalid_parameter("edge entries must be [i, j, w]");
    t.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  if (j.contains("labels")) t.labels = j["labels"].get<std::vector<std::string>>();
  if (j.contains("h") && !j["h"].is_null()) t.grid_h = j["h"].get<double>();
  if (j.contains("positions") && !j["positions"].is_null()) {
    auto pv = j["positions"].get<std::vector<double>>();
    t.positions = Eigen::Map<Eigen::VectorXd>(pv.data(), static_cast<long>(pv.size()));
  }
  t.finalize();
  return t;
}

MarkovTriple MarkovTriple::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triple file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string MarkovTriple::to_json_text() const {
  JsonWriter w;
  w.begin_object();
  w.key("n").value(static_cast<long long>(n));
  w.key("measure").value(measure);
  w.key("edges");
  w.begin_array();
  for (const auto& e : edges) {
    w.begin_array();
    w.value(static_cast<long long>(e.i));
    w.value(static_cast<long long>(e.j));
    w.value(e.w);
    w.end_array();
  }
  w.end_array();
  if (!labels.empty()) {
    w.key("labels");
    w.begin_array();
    for (const auto& s : labels) w.value(s);
    w.end_array();
  }
  if (grid_h) w.key("h").value(*grid_h);
  if (positions) w.key("positions").value(*positions);
  w.end_object();
  return w.str();
}

void MarkovTriple::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write triple file: " + path);
  out << to_json_text() << "\n";
}

double density_mass(const MarkovTriple& triple, const Field& f) {
  triple.check_field(f);
  return f.dot(triple.measure);
}

ProbabilityDensity make_density(const MarkovTriple& triple, const Field& f) {
  triple.check_field(f);
  for (int x = 0; x < triple.n; ++x)
    if (f[x] < 0.0) throw invalid_measure("density must be nonnegative");
  double mass = f.dot(triple.measure);
  if (std::abs(mass - 1.0) > 1e-10)
    throw invalid_measure("density mass differs from 1 beyond 1e-10");
  return ProbabilityDensity{f};
}

ProbabilityDensity atomic_density(const MarkovTriple& triple,
                                  const std::vector<std::pair<int, double>>& atoms) {
  Field f = Field::Zero(triple.n);
  for (auto [x, a] : atoms) {
    if (x < 0 || x >= triple.n) throw invalid_parameter("atom index out of range");
    if (a < 0.0) throw invalid_measure("atom mass must be nonnegative");
    f[x] += a / triple.measure[x];
  }
  return make_density(triple, f);
}

} // namespace curvelab
