#pragma once

#include <vector>

#include "qgt/mesh2d.hpp"
#include "qgt/metric_graph.hpp"
#include "qgt/secular.hpp"
#include "qgt/sym_eigs.hpp"
#include "qgt/vertex_template.hpp"

namespace qgt {

/// The transverse factor of every edge neighborhood: the unit interval
/// with unit weight, so cross-section volume is 1 and the first nonzero
/// Neumann eigenvalue is pi^2. Fat graphs here are two-dimensional.
struct CrossSection {
  static constexpr int dim = 1;          // m = d - 1
  static constexpr int ambient_dim = 2;  // d
  static constexpr double volume = 1.0;
  static double lambda2() { return M_PI * M_PI; }
};

/// One glued piece of the fat graph: an edge strip (l_e x eps tensor grid,
/// full edge length) or an eps-scaled vertex template. Node coordinates are
/// chart coordinates of the piece; the manifold structure lives in the
/// interface identifications.
struct MeshRegion {
  enum class Kind { EdgeStrip, VertexRegion };
  Kind kind = Kind::EdgeStrip;
  int owner = -1; // edge index or vertex index in graph order
  TriMesh2D mesh;
  Eigen::Index offset = 0; // first broken DOF of this region
  int nx = 0, ny = 0;      // strips only
  double hx = 0.0;         // strips only
};

/// Node-to-node identification between a strip end column and a vertex
/// template interface chain.
struct InterfaceGlue {
  int edge_index = -1;
  bool at_start = true;
  int vertex_index = -1;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs; // (strip, region) broken ids
};

/// Glued 2D triangulation of the fat graph X_eps. Two DOF pictures coexist:
/// the "broken" space keeps every region's nodes separate (interface nodes
/// are doubled), the conforming space identifies them. Eigenvalue solves
/// use the conforming pencil; the identification operators of the coupling
/// module act on broken vectors, where transversally-constant-on-strips /
/// zero-on-vertex-regions fields are exactly representable.
struct FatGraphMesh {
  const MetricGraph* graph = nullptr;
  double eps = 0.0;
  double h_mesh = 0.0;
  int ny = 0;

  std::vector<MeshRegion> regions;
  std::vector<int> edge_region;   // per graph edge index; lead strips cover [0,1]
  std::vector<int> vertex_region; // per graph vertex index
  std::vector<VertexTemplate> templates; // per vertex
  std::vector<InterfaceGlue> interfaces;

  Eigen::Index n_broken = 0, n_conf = 0;
  std::vector<Eigen::Index> conf_of_broken;

  SparseMat A_conf, M_conf;
  SparseMat A_broken, M_broken;

  Eigen::Index strip_node(int edge_index, int ix, int iy) const;
  int strip_divisions(int edge_index) const { return regions[edge_region[edge_index]].nx; }

  /// Duplicates interface values: broken vector from a conforming one.
  Eigen::VectorXd prolong(const Eigen::VectorXd& conf) const;
  /// Total mesh area (sum over regions).
  double area() const;
  bool connected() const;
};

/// Builds the glued mesh: n_y = ceil(eps/h_mesh) transverse cells, strips
/// of n_x = ceil(l_e/h_mesh) cells, vertex templates triangulated at
/// matching interface resolution and scaled by eps. For non-compact graphs
/// the leads contribute their initial unit segment as a strip with a free
/// far end (the interior part of the exterior split). Requires
/// eps <= l0/2 and h_mesh <= eps/4.
FatGraphMesh build_mesh(const MetricGraph& graph, double eps, double h_mesh);

/// Same mesh with every cell count doubled (nested refinement h -> h/2).
FatGraphMesh build_mesh_refined(const FatGraphMesh& mesh);

/// Neumann eigenpairs of the fat graph up to lambda_max.
struct FemResult {
  Eigen::VectorXd values;   // ascending, conforming eigenvectors below
  Eigen::MatrixXd vectors;  // M_conf-orthonormal
  Eigen::VectorXd residuals;
  SpectralResult spectrum;  // clustered, method = Fem
  double transverse_guard = 0.0; // 0.5 * pi^2 / eps^2
};
FemResult neumann_eigs(const FatGraphMesh& mesh, double lambda_max,
                       const SymEigsOptions& opts = {});

} // namespace qgt
