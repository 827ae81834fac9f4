#include "qgt/graph_function.hpp"

#include <cmath>
#include <functional>

namespace qgt {

double GraphFunction::step(int ei) const {
  const Edge& e = graph->edges()[ei];
  return e.length / cells(ei);
}

bool GraphFunction::continuous_at_vertices(double rel_tol) const {
  double scale = 1.0;
  for (const auto& ev : edge_values) scale = std::max(scale, ev.cwiseAbs().maxCoeff());
  for (size_t ei = 0; ei < edge_values.size(); ++ei) {
    const Edge& e = graph->edges()[ei];
    if (e.external) continue;
    auto check = [&](VertexId v, double sample) {
      auto it = vertex_values.find(v);
      if (it == vertex_values.end()) return false;
      return std::abs(sample - it->second) <= rel_tol * scale;
    };
    if (!check(e.from, edge_values[ei](0))) return false;
    if (!check(e.to, edge_values[ei](edge_values[ei].size() - 1))) return false;
  }
  return true;
}

GraphFunction zero_function(const MetricGraph& graph, const std::vector<int>& divisions) {
  GraphFunction f;
  f.graph = &graph;
  const auto& edges = graph.edges();
  if (divisions.size() != edges.size())
    throw std::invalid_argument("divisions size does not match edge count");
  for (size_t i = 0; i < edges.size(); ++i) {
    if (divisions[i] < 1) throw std::invalid_argument("each edge needs at least one cell");
    f.edge_values.emplace_back(Eigen::VectorXd::Zero(divisions[i] + 1));
  }
  for (VertexId v : graph.vertices()) f.vertex_values[v] = 0.0;
  return f;
}

GraphFunction sample_function(const MetricGraph& graph, const std::vector<int>& divisions,
                              const std::function<double(int, double)>& fn) {
  GraphFunction f = zero_function(graph, divisions);
  const auto& edges = graph.edges();
  for (size_t i = 0; i < edges.size(); ++i) {
    const int n = divisions[i];
    const double h = edges[i].length / n;
    for (int j = 0; j <= n; ++j) f.edge_values[i](j) = fn(static_cast<int>(i), j * h);
  }
  for (size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    f.vertex_values[e.from] = f.edge_values[i](0);
    if (!e.external) f.vertex_values[e.to] = f.edge_values[i](divisions[i]);
  }
  return f;
}

// Exact integral of the square of the piecewise-linear interpolant:
// per cell h*(a^2 + a*b + b^2)/3.
double l2_norm_sq(const GraphFunction& f) {
  double total = 0.0;
  for (size_t ei = 0; ei < f.edge_values.size(); ++ei) {
    const Eigen::VectorXd& v = f.edge_values[ei];
    const double h = f.step(static_cast<int>(ei));
    for (int j = 0; j + 1 < v.size(); ++j) {
      const double a = v(j), b = v(j + 1);
      total += h * (a * a + a * b + b * b) / 3.0;
    }
  }
  return total;
}

double h1_seminorm_sq(const GraphFunction& f) {
  double total = 0.0;
  for (size_t ei = 0; ei < f.edge_values.size(); ++ei) {
    const Eigen::VectorXd& v = f.edge_values[ei];
    const double h = f.step(static_cast<int>(ei));
    for (int j = 0; j + 1 < v.size(); ++j) {
      const double d = v(j + 1) - v(j);
      total += d * d / h;
    }
  }
  return total;
}

double h1_norm_sq(const GraphFunction& f) {
  if (!f.continuous_at_vertices())
    throw std::invalid_argument("h1_norm_sq: function discontinuous at a vertex");
  return l2_norm_sq(f) + h1_seminorm_sq(f);
}

double rayleigh(const GraphFunction& f) {
  const double mass = l2_norm_sq(f);
  if (mass == 0.0) throw std::invalid_argument("rayleigh: zero function");
  return h1_seminorm_sq(f) / mass;
}

} // namespace qgt
