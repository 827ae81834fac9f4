#include "qgt/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qgt {

MetricGraph::MetricGraph(std::vector<VertexId> vertices, std::vector<Edge> edges,
                         int d0, double l0)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), d0_(d0), l0_(l0) {
  if (vertices_.empty()) throw std::invalid_argument("metric graph needs at least one vertex");
  if (!(l0_ > 0.0) || l0_ > 1.0) throw std::invalid_argument("l0 must lie in (0, 1]");
  if (d0_ < 1) throw std::invalid_argument("d0 must be >= 1");
  for (size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertex_pos_.emplace(vertices_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vertex id " + std::to_string(vertices_[i]));
  }
  for (size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!edge_pos_.emplace(e.id, static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate edge id " + std::to_string(e.id));
    if (!vertex_pos_.count(e.from))
      throw std::invalid_argument("edge " + std::to_string(e.id) + " references unknown vertex");
    if (e.external) {
      if (std::isfinite(e.length))
        throw std::invalid_argument("external edge " + std::to_string(e.id) + " must have infinite length");
      if (e.to != -1)
        throw std::invalid_argument("external edge " + std::to_string(e.id) + " has a terminal vertex");
    } else {
      if (!vertex_pos_.count(e.to))
        throw std::invalid_argument("edge " + std::to_string(e.id) + " references unknown vertex");
      if (!(e.length > 0.0) || !std::isfinite(e.length))
        throw std::invalid_argument("internal edge " + std::to_string(e.id) + " needs finite positive length");
    }
  }
}

const Edge& MetricGraph::edge(EdgeId id) const {
  auto it = edge_pos_.find(id);
  if (it == edge_pos_.end()) throw std::out_of_range("unknown edge id " + std::to_string(id));
  return edges_[it->second];
}

int MetricGraph::vertex_index(VertexId v) const {
  auto it = vertex_pos_.find(v);
  if (it == vertex_pos_.end()) throw std::out_of_range("unknown vertex id " + std::to_string(v));
  return it->second;
}

int MetricGraph::edge_index(EdgeId id) const {
  auto it = edge_pos_.find(id);
  if (it == edge_pos_.end()) throw std::out_of_range("unknown edge id " + std::to_string(id));
  return it->second;
}

Incidence MetricGraph::incidence(VertexId v) const {
  if (!vertex_pos_.count(v)) throw std::out_of_range("unknown vertex id " + std::to_string(v));
  Incidence inc;
  for (const Edge& e : edges_) {
    if (e.from == v) inc.outgoing.push_back(e.id);
    if (!e.external && e.to == v) inc.incoming.push_back(e.id);
  }
  return inc;
}

std::vector<EdgeId> MetricGraph::internal_edges() const {
  std::vector<EdgeId> out;
  for (const Edge& e : edges_)
    if (!e.external) out.push_back(e.id);
  return out;
}

std::vector<EdgeId> MetricGraph::external_edges() const {
  std::vector<EdgeId> out;
  for (const Edge& e : edges_)
    if (e.external) out.push_back(e.id);
  return out;
}

bool MetricGraph::is_compact() const { return external_edges().empty(); }

bool MetricGraph::is_connected() const {
  // Union-find over vertices; external edges touch only their initial vertex.
  std::vector<int> parent(vertices_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Edge& e : edges_) {
    if (e.external) continue;
    int a = find(vertex_index(e.from));
    int b = find(vertex_index(e.to));
    if (a != b) parent[a] = b;
  }
  int root = find(0);
  for (size_t i = 1; i < vertices_.size(); ++i)
    if (find(static_cast<int>(i)) != root) return false;
  return true;
}

double MetricGraph::total_internal_length() const {
  double total = 0.0;
  for (const Edge& e : edges_)
    if (!e.external) total += e.length;
  return total;
}

ValidationReport MetricGraph::validate() const {
  ValidationReport report;
  auto add = [&](const std::string& msg) { report.violations.push_back(msg); };
  if (!is_connected()) add("not connected");
  for (VertexId v : vertices_) {
    int deg = degree(v);
    if (deg < 1) add("vertex " + std::to_string(v) + ": isolated (deg 0)");
    if (deg > d0_)
      add("vertex " + std::to_string(v) + ": degree " + std::to_string(deg) +
          " exceeds d0 = " + std::to_string(d0_));
  }
  for (const Edge& e : edges_) {
    if (!e.external && e.length < l0_) {
      std::ostringstream os;
      os << "edge " << e.id << ": length " << e.length << " < l0 = " << l0_;
      add(os.str());
    }
  }
  return report;
}

GraphPartition split_external(const MetricGraph& graph) {
  auto ext = graph.external_edges();
  if (ext.empty())
    throw std::invalid_argument("split_external: no external edges");
  GraphPartition part;
  part.internal_edges = graph.internal_edges();
  part.external_edges = std::move(ext);
  part.cut_distance = 1.0;
  return part;
}

namespace graphs {

MetricGraph loop(double len) {
  return MetricGraph({0}, {Edge::internal(0, 0, 0, len)}, 2, std::min(1.0, len));
}

MetricGraph interval(double len) {
  return MetricGraph({0, 1}, {Edge::internal(0, 0, 1, len)}, 1, std::min(1.0, len));
}

MetricGraph star(int arms, double len) {
  if (arms < 1) throw std::invalid_argument("star needs at least one arm");
  std::vector<VertexId> vs = {0};
  std::vector<Edge> es;
  for (int i = 0; i < arms; ++i) {
    vs.push_back(i + 1);
    es.push_back(Edge::internal(i, 0, i + 1, len));
  }
  return MetricGraph(vs, es, arms, std::min(1.0, len));
}

MetricGraph loop_with_lead(double len) {
  return MetricGraph({0}, {Edge::internal(0, 0, 0, len), Edge::lead(1, 0)}, 3,
                     std::min(1.0, len));
}

MetricGraph single_lead() {
  return MetricGraph({0}, {Edge::lead(0, 0)}, 1, 1.0);
}

} // namespace graphs

} // namespace qgt
