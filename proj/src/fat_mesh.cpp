#include "qgt/fat_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qgt {

Eigen::Index FatGraphMesh::strip_node(int edge_index, int ix, int iy) const {
  const MeshRegion& r = regions[edge_region[edge_index]];
  return r.offset + static_cast<Eigen::Index>(ix) * (r.ny + 1) + iy;
}

Eigen::VectorXd FatGraphMesh::prolong(const Eigen::VectorXd& conf) const {
  Eigen::VectorXd out(n_broken);
  for (Eigen::Index i = 0; i < n_broken; ++i) out(i) = conf(conf_of_broken[i]);
  return out;
}

double FatGraphMesh::area() const {
  double total = 0.0;
  for (const MeshRegion& r : regions) total += r.mesh.area();
  return total;
}

bool FatGraphMesh::connected() const {
  std::vector<Eigen::Index> parent(n_conf);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const MeshRegion& r : regions)
    for (Eigen::Index t = 0; t < r.mesh.tris.rows(); ++t)
      for (int c = 0; c < 3; ++c) {
        const Eigen::Index a = find(conf_of_broken[r.offset + r.mesh.tris(t, c)]);
        const Eigen::Index b = find(conf_of_broken[r.offset + r.mesh.tris(t, (c + 1) % 3)]);
        if (a != b) parent[a] = b;
      }
  const Eigen::Index root = find(0);
  for (Eigen::Index i = 1; i < n_conf; ++i)
    if (find(i) != root) return false;
  return true;
}

namespace {

FatGraphMesh build_mesh_divisions(const MetricGraph& graph, double eps, double h_mesh, int ny,
                                  const std::vector<int>& edge_nx) {
  FatGraphMesh fm;
  fm.graph = &graph;
  fm.eps = eps;
  fm.h_mesh = h_mesh;
  fm.ny = ny;

  const auto& edges = graph.edges();
  const auto& vertices = graph.vertices();
  fm.edge_region.assign(edges.size(), -1);
  fm.vertex_region.assign(vertices.size(), -1);

  Eigen::Index offset = 0;
  // Edge strips: full edge length for internal edges, the initial unit
  // segment for leads (free far end).
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const Edge& e = edges[ei];
    const double len = e.external ? 1.0 : e.length;
    MeshRegion r;
    r.kind = MeshRegion::Kind::EdgeStrip;
    r.owner = static_cast<int>(ei);
    r.nx = edge_nx[ei];
    r.ny = ny;
    r.hx = len / r.nx;
    r.mesh = mesh_rectangle(len, eps, r.nx, r.ny);
    r.offset = offset;
    offset += r.mesh.n_nodes();
    fm.edge_region[ei] = static_cast<int>(fm.regions.size());
    fm.regions.push_back(std::move(r));
  }
  // Vertex regions: template triangulated at interface resolution ny, then
  // scaled by eps.
  std::vector<TemplateMesh> tmeshes(vertices.size());
  for (size_t vi = 0; vi < vertices.size(); ++vi) {
    const int deg = graph.degree(vertices[vi]);
    VertexTemplate t = build_vertex_template(deg, graph.l0());
    TemplateMesh tm = t.triangulate(ny);
    MeshRegion r;
    r.kind = MeshRegion::Kind::VertexRegion;
    r.owner = static_cast<int>(vi);
    r.mesh = tm.mesh;
    r.mesh.nodes *= eps;
    r.offset = offset;
    offset += r.mesh.n_nodes();
    fm.vertex_region[vi] = static_cast<int>(fm.regions.size());
    fm.regions.push_back(std::move(r));
    fm.templates.push_back(std::move(t));
    tmeshes[vi] = std::move(tm);
  }
  fm.n_broken = offset;

  // Glue strip end columns to template interface chains: slot s of vertex v
  // serves the s-th incidence (outgoing first, then incoming), matching the
  // template stub order.
  for (size_t vi = 0; vi < vertices.size(); ++vi) {
    const VertexId v = vertices[vi];
    const Incidence inc = graph.incidence(v);
    std::vector<std::pair<EdgeId, bool>> slots; // (edge, at_start)
    for (EdgeId id : inc.outgoing) slots.emplace_back(id, true);
    for (EdgeId id : inc.incoming) slots.emplace_back(id, false);
    const TemplateMesh& tm = tmeshes[vi];
    if (slots.size() != tm.interfaces.size())
      throw std::logic_error("build_mesh: slot/interface count mismatch");
    const Eigen::Index reg_off = fm.regions[fm.vertex_region[vi]].offset;
    for (size_t s = 0; s < slots.size(); ++s) {
      const int ei = graph.edge_index(slots[s].first);
      const bool at_start = slots[s].second;
      const int ix = at_start ? 0 : fm.regions[fm.edge_region[ei]].nx;
      InterfaceGlue glue;
      glue.edge_index = ei;
      glue.at_start = at_start;
      glue.vertex_index = static_cast<int>(vi);
      for (int iy = 0; iy <= ny; ++iy)
        glue.pairs.emplace_back(fm.strip_node(ei, ix, iy), reg_off + tm.interfaces[s][iy]);
      fm.interfaces.push_back(std::move(glue));
    }
  }

  // Conforming index: union-find over the interface identifications.
  std::vector<Eigen::Index> parent(fm.n_broken);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const InterfaceGlue& g : fm.interfaces)
    for (const auto& [a, b] : g.pairs) {
      const Eigen::Index ra = find(a), rb = find(b);
      if (ra != rb) parent[ra] = rb;
    }
  fm.conf_of_broken.assign(fm.n_broken, -1);
  Eigen::Index next_conf = 0;
  for (Eigen::Index i = 0; i < fm.n_broken; ++i) {
    const Eigen::Index r = find(i);
    if (fm.conf_of_broken[r] < 0) fm.conf_of_broken[r] = next_conf++;
    fm.conf_of_broken[i] = fm.conf_of_broken[r];
  }
  fm.n_conf = next_conf;

  // Assemble both pictures.
  std::vector<Eigen::Triplet<double>> ta_c, tm_c, ta_b, tm_b;
  for (const MeshRegion& r : fm.regions) {
    std::vector<Eigen::Index> broken_ids(r.mesh.n_nodes());
    std::vector<Eigen::Index> conf_ids(r.mesh.n_nodes());
    for (Eigen::Index i = 0; i < r.mesh.n_nodes(); ++i) {
      broken_ids[i] = r.offset + i;
      conf_ids[i] = fm.conf_of_broken[r.offset + i];
    }
    assemble_p1(r.mesh, 1.0, 1.0, broken_ids, ta_b, tm_b);
    assemble_p1(r.mesh, 1.0, 1.0, conf_ids, ta_c, tm_c);
  }
  fm.A_broken.resize(fm.n_broken, fm.n_broken);
  fm.M_broken.resize(fm.n_broken, fm.n_broken);
  fm.A_conf.resize(fm.n_conf, fm.n_conf);
  fm.M_conf.resize(fm.n_conf, fm.n_conf);
  fm.A_broken.setFromTriplets(ta_b.begin(), ta_b.end());
  fm.M_broken.setFromTriplets(tm_b.begin(), tm_b.end());
  fm.A_conf.setFromTriplets(ta_c.begin(), ta_c.end());
  fm.M_conf.setFromTriplets(tm_c.begin(), tm_c.end());
  return fm;
}

} // namespace

FatGraphMesh build_mesh(const MetricGraph& graph, double eps, double h_mesh) {
  if (!(eps > 0.0) || eps > graph.l0() / 2.0 + 1e-15)
    throw std::invalid_argument("build_mesh: need 0 < eps <= l0/2");
  if (!(h_mesh > 0.0) || h_mesh > eps / 4.0 + 1e-15)
    throw std::invalid_argument("build_mesh: need h_mesh <= eps/4");
  const int ny = std::max(4, static_cast<int>(std::ceil(eps / h_mesh - 1e-12)));
  std::vector<int> edge_nx;
  for (const Edge& e : graph.edges()) {
    const double len = e.external ? 1.0 : e.length;
    edge_nx.push_back(std::max(1, static_cast<int>(std::ceil(len / h_mesh - 1e-12))));
  }
  return build_mesh_divisions(graph, eps, h_mesh, ny, edge_nx);
}

FatGraphMesh build_mesh_refined(const FatGraphMesh& mesh) {
  std::vector<int> edge_nx;
  for (size_t ei = 0; ei < mesh.graph->edges().size(); ++ei)
    edge_nx.push_back(2 * mesh.regions[mesh.edge_region[ei]].nx);
  return build_mesh_divisions(*mesh.graph, mesh.eps, mesh.h_mesh / 2.0, 2 * mesh.ny, edge_nx);
}

FemResult neumann_eigs(const FatGraphMesh& mesh, double lambda_max, const SymEigsOptions& opts) {
  SymEigsResult r = eigenpairs_below(mesh.A_conf, mesh.M_conf, lambda_max, opts);
  FemResult out;
  out.values = r.values;
  out.vectors = r.vectors;
  out.residuals = r.residuals;
  out.transverse_guard = 0.5 * CrossSection::lambda2() / (mesh.eps * mesh.eps);
  out.spectrum.method = SpectralMethod::Fem;
  // Cluster nearly equal discrete values into multiplicities. Triangle
  // diagonals break exact mesh symmetries, so degenerate pairs split at
  // the 1e-6 relative level; physical gaps sit far above 1e-5.
  const double tol_scale = 1e-5;
  Eigen::Index i = 0;
  while (i < r.values.size()) {
    EigenvalueEntry entry;
    entry.lambda = r.values(i);
    entry.multiplicity = 1;
    Eigen::Index j = i + 1;
    while (j < r.values.size() &&
           r.values(j) - r.values(i) <= tol_scale * (1.0 + std::abs(r.values(i)))) {
      ++entry.multiplicity;
      ++j;
    }
    entry.flagged = entry.lambda > out.transverse_guard;
    out.spectrum.entries.push_back(entry);
    i = j;
  }
  if (!out.spectrum.entries.empty() && out.values.size() > 0 &&
      out.values(out.values.size() - 1) > out.transverse_guard)
    out.spectrum.warnings.push_back(
        "eigenvalues above 0.5*pi^2/eps^2 may mix transverse modes; flagged untrusted");
  return out;
}

} // namespace qgt
