#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qgt/fat_mesh.hpp"
#include "qgt/fd_graph.hpp"
#include "qgt/graph_function.hpp"
#include "qgt/metric_graph.hpp"

namespace qgt {

/// Cubic smoothstep cutoff: rho(0) = 1, rho(r) = 0 for r >= l0/2, with
/// vanishing derivative at both ends.
struct Cutoff {
  double l0 = 1.0;

  double rho(double r) const;
  double drho(double r) const;
};

/// Identification machinery between a compact metric graph and its fat
/// graph. The graph side is discretized on exactly the strip x-grids, so
/// the transverse-constant extension J is an exact M-isometry:
/// J^T M_broken J = M_graph holds to roundoff and J*J = id is structural.
class Coupler {
public:
  Coupler(const MetricGraph& graph, const FatGraphMesh& mesh);

  const GraphPencil& graph_pencil() const { return pencil_; }
  const FatGraphMesh& mesh() const { return *mesh_; }
  double eps() const { return mesh_->eps; }

  /// Jf: transverse-constant extension scaled by eps^{-1/2} on strips, zero
  /// on vertex regions (broken vector).
  Eigen::VectorXd apply_J(const Eigen::VectorXd& graph_dofs) const;
  Eigen::VectorXd apply_J(const GraphFunction& f) const;
  /// J^1 f: like J but vertex regions carry the constant eps^{-1/2} f(v).
  Eigen::VectorXd apply_J1(const Eigen::VectorXd& graph_dofs) const;
  /// J* u = M0^{-1} J^T M_broken u (adjoint w.r.t. the mass inner products).
  Eigen::VectorXd apply_Jstar(const Eigen::VectorXd& broken) const;

  /// Transverse average N_e u at strip column ix (exact for P1 sections).
  double transverse_average(const Eigen::VectorXd& broken, int edge_index, int ix) const;
  /// Mean value C_v u over the vertex region.
  double vertex_average(const Eigen::VectorXd& broken, int vertex_index) const;

  /// (J^1' u)_e(x) = eps^{1/2} (N_e u(x) + sum_v rho(dist(x,v)) (C_v u -
  /// N_e u(v))); continuous at vertices by construction.
  GraphFunction apply_J1prime(const Eigen::VectorXd& broken) const;

  double graph_norm(const Eigen::VectorXd& graph_dofs) const;  // M0-norm
  double broken_norm(const Eigen::VectorXd& broken) const;     // M_broken-norm
  /// ||u||_1^2 = u^T (A + M) u on the broken space.
  double broken_h1_norm_sq(const Eigen::VectorXd& broken) const;

  /// max over the first n_modes manifold eigenvectors above the kernel of
  /// ||(JJ* - id) u|| / ||u||_1. Requires n_modes >= 5. The kernel mode is
  /// excluded: its defect is the exact volume artifact
  /// sqrt(eps V / (L + eps V)), which would mask the trace-driven scaling.
  double quasi_unitarity_defect(int n_modes) const;

  /// (R_eps - J R_0 J*) u on the broken space.
  Eigen::VectorXd apply_resolvent_difference(const Eigen::VectorXd& broken) const;

  /// M-weighted operator norm of R_eps - J R_0 J* restricted to the span
  /// of the first n_modes manifold eigenvectors above the kernel, by power
  /// iteration (deterministic start, tolerance 1e-8, at most 10^4 steps).
  double sandwich_defect(int n_modes = 6) const;

  struct ProjectionDefects {
    double projection = 0.0;
    double eigenfunction = 0.0;
    int graph_dim = 0;
    int manifold_dim = 0;
    std::vector<std::string> warnings;
  };
  /// Spectral-projection comparison on the interval I = [lo, hi] plus the
  /// eigenfunction transfer defect min over the discrete eigenspace of
  /// ||J u(0) - u(eps)||. Endpoints must stay >= 1e-3 away from the graph
  /// spectrum. Degenerate eigenvalues are handled by minimizing over the
  /// whole eigenspace.
  ProjectionDefects projection_and_eigenfunction_defect(double lo, double hi) const;

  /// Manifold eigenpairs (cached; grows on demand).
  const FemResult& manifold_eigs(double lambda_max) const;
  /// Graph FD eigenpairs on the aligned grid (cached).
  const FdEigenpairs& graph_eigs(double lambda_max) const;

  /// Optionally takes ownership of the mesh so the coupler can outlive the
  /// scope that built it.
  void keep_mesh(std::unique_ptr<FatGraphMesh> owned) { owned_mesh_ = std::move(owned); }

private:
  const MetricGraph* graph_;
  const FatGraphMesh* mesh_;
  std::unique_ptr<FatGraphMesh> owned_mesh_;
  GraphPencil pencil_;
  SparseMat J_, J1_;
  double sqrt_eps_inv_ = 0.0;
  std::vector<Eigen::VectorXd> region_weights_; // exact P1 integral weights
  Eigen::SimplicialLDLT<SparseMat> M0_solver_;
  Eigen::SimplicialLDLT<SparseMat> H0_solver_;   // A0 + M0
  Eigen::SimplicialLDLT<SparseMat> Heps_solver_; // A_conf + M_conf
  mutable std::optional<FemResult> fem_cache_;
  mutable double fem_cache_max_ = 0.0;
  mutable std::optional<FdEigenpairs> fd_cache_;
  mutable double fd_cache_max_ = 0.0;

  Eigen::VectorXd restrict_conf(const Eigen::VectorXd& broken) const; // P^T
};

/// Two-sided Hausdorff distance of the point sets spec() intersected with
/// [0, lambda_max]. Returns lambda_max and records a warning if either set
/// is empty in the window.
double hausdorff_distance(const SpectralResult& a, const SpectralResult& b, double lambda_max,
                          std::vector<std::string>* warnings = nullptr);

/// Uniform constants of the mesh's vertex templates used by the
/// quantitative inequalities: lambda2 = min over templates of the first
/// nonzero Neumann eigenvalue, c_vol = max template area.
struct TemplateSummary {
  double lambda2_min = 0.0;
  double c_vol = 0.0;
  std::vector<std::pair<int, TemplateConstants>> per_degree;
};
TemplateSummary compute_template_constants(const FatGraphMesh& mesh, double h = 1.0 / 12.0);

struct InequalityReport {
  std::string mode;
  std::vector<double> margins; // rhs - lhs, one per checked instance
  double min_margin = 0.0;
};

/// Vertex-average versus edge-trace comparison (per incident pair):
/// eps |C_v u - N_e u(v)|^2 <= (8/l0)(1 + 1/lambda2) eps ||du||^2_{U_eps,v}.
InequalityReport check_cn(const Coupler& coupler, const Eigen::VectorXd& broken,
                          const TemplateSummary& consts);

/// Vertex-region mass bound (per incident pair):
/// ||u||^2_{U_eps,v} <= c_vx eps (||du||^2_{U_eps,v} + ||u||^2_{U_eps,e} +
/// ||du||^2_{U_eps,e}) with the explicit constant assembled from the trace
/// and Poincare pieces.
InequalityReport check_vx(const Coupler& coupler, const Eigen::VectorXd& broken,
                          const TemplateSummary& consts);

/// 1D Sobolev trace bound |f(0)|^2 <= (8/l0) int_0^{l0/2} (f^2 + f'^2) for
/// samples of f on a uniform grid over [0, l0/2].
InequalityReport check_trace(const Eigen::VectorXd& samples, double l0);

} // namespace qgt
