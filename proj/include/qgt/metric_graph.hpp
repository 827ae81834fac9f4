#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace qgt {

using VertexId = int;
using EdgeId = int;

inline constexpr double kInfiniteLength = std::numeric_limits<double>::infinity();

/// One edge of a metric graph. Orientation is fixed at construction; the
/// edge coordinate runs from 0 at `from` to `length` at `to`. External
/// edges (leads) have infinite length and only the initial vertex.
struct Edge {
  EdgeId id = -1;
  VertexId from = -1;
  VertexId to = -1; // -1 for external edges
  double length = 0.0;
  bool external = false;

  static Edge internal(EdgeId id, VertexId from, VertexId to, double length) {
    return Edge{id, from, to, length, false};
  }
  static Edge lead(EdgeId id, VertexId from) {
    return Edge{id, from, -1, kInfiniteLength, true};
  }
  bool is_loop() const { return !external && from == to; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Edges incident to a vertex, split by orientation. A loop at v appears
/// once in each list, so |outgoing| + |incoming| = deg v.
struct Incidence {
  std::vector<EdgeId> outgoing; // edges starting at v
  std::vector<EdgeId> incoming; // edges ending at v
  int degree() const { return static_cast<int>(outgoing.size() + incoming.size()); }
};

/// A connected metric graph with uniformity bounds: max degree d0 and
/// minimum edge length l0 (0 < l0 <= 1). Structural errors (dangling ids,
/// finite leads, duplicate ids) throw at construction; admissibility with
/// respect to the bounds is checked by validate(), which reports rather
/// than throws.
class MetricGraph {
public:
  MetricGraph(std::vector<VertexId> vertices, std::vector<Edge> edges,
              int d0, double l0);

  const std::vector<VertexId>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int d0() const { return d0_; }
  double l0() const { return l0_; }

  const Edge& edge(EdgeId id) const;
  bool has_vertex(VertexId v) const { return vertex_pos_.count(v) > 0; }
  int vertex_index(VertexId v) const;
  int edge_index(EdgeId id) const;

  Incidence incidence(VertexId v) const;
  int degree(VertexId v) const { return incidence(v).degree(); }

  std::vector<EdgeId> internal_edges() const;
  std::vector<EdgeId> external_edges() const;
  bool is_compact() const;
  bool is_connected() const;
  /// Sum of internal edge lengths.
  double total_internal_length() const;

  ValidationReport validate() const;

private:
  std::vector<VertexId> vertices_;
  std::vector<Edge> edges_;
  int d0_;
  double l0_;
  std::unordered_map<VertexId, int> vertex_pos_;
  std::unordered_map<EdgeId, int> edge_pos_;
};

/// Interior/exterior split of a non-compact graph for exterior scaling.
/// Each lead is cut at arclength `cut_distance` from its vertex; the cut
/// points are not vertices of the graph.
struct GraphPartition {
  std::vector<EdgeId> internal_edges;
  std::vector<EdgeId> external_edges; // one cut point per entry
  double cut_distance = 1.0;

  int cut_point_count() const { return static_cast<int>(external_edges.size()); }
};

/// Splits a finite non-compact graph at unit distance along each lead.
/// Throws if the graph has no external edges.
GraphPartition split_external(const MetricGraph& graph);

namespace graphs {

/// Single vertex with one loop of length `len`.
MetricGraph loop(double len = 1.0);
/// Two vertices joined by one edge.
MetricGraph interval(double len = 1.0);
/// Central vertex with `arms` pendant edges of length `len`.
MetricGraph star(int arms, double len = 1.0);
/// Loop of length `len` with one lead attached at its vertex.
MetricGraph loop_with_lead(double len = 1.0);
/// One vertex with a single lead (no internal edges).
MetricGraph single_lead();

} // namespace graphs

} // namespace qgt
