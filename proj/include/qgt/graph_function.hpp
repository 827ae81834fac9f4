#pragma once

#include <Eigen/Dense>
#include <functional>
#include <unordered_map>
#include <vector>

#include "qgt/metric_graph.hpp"

namespace qgt {

/// Piecewise-linear function on a compact metric graph: one uniform sample
/// grid per edge (endpoints included) plus explicit vertex values. The edge
/// arrays are stored in the graph's edge order; edge_values[i] has
/// n_i + 1 samples for n_i grid cells.
struct GraphFunction {
  const MetricGraph* graph = nullptr;
  std::vector<Eigen::VectorXd> edge_values;
  std::unordered_map<VertexId, double> vertex_values;

  /// Grid step of edge with index `ei` in graph edge order.
  double step(int ei) const;
  int cells(int ei) const { return static_cast<int>(edge_values[ei].size()) - 1; }

  /// True when every edge endpoint sample agrees with the stored vertex
  /// value to `rel_tol` relative accuracy.
  bool continuous_at_vertices(double rel_tol = 1e-12) const;
};

/// Zero function on per-edge grids with `divisions[i]` cells on edge i.
GraphFunction zero_function(const MetricGraph& graph, const std::vector<int>& divisions);

/// Samples callables f_e(edge_index, x) onto the given grids and fills
/// vertex values from the edge endpoints (must be consistent).
GraphFunction sample_function(const MetricGraph& graph, const std::vector<int>& divisions,
                              const std::function<double(int, double)>& f);

/// Exact integrals of the piecewise-linear interpolant.
double l2_norm_sq(const GraphFunction& f);
double h1_seminorm_sq(const GraphFunction& f);

/// ||f||^2 + sum_e ||f'_e||^2 for the piecewise-linear interpolant.
/// Requires vertex continuity.
double h1_norm_sq(const GraphFunction& f);

/// sum_e ||f'_e||^2 / ||f||^2. Throws on the zero function.
double rayleigh(const GraphFunction& f);

} // namespace qgt
