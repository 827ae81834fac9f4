#pragma once

#include <optional>
#include <vector>

#include "qgt/mesh2d.hpp"

namespace qgt {

/// Template mesh in unscaled (template) coordinates plus the ordered node
/// chains of the attachment interfaces, one chain per stub.
struct TemplateMesh {
  TriMesh2D mesh;
  std::vector<std::vector<Eigen::Index>> interfaces;
};

/// Unscaled vertex-region geometry: a core (unit square for deg 1 and 2, a
/// regular deg-gon of circumradius 1 otherwise) with `deg` collar stubs of
/// cross-width 1 and length l0/2 centered on distinct sides. Each stub end
/// is a unit interface segment where an edge strip attaches. The region is
/// intrinsic: stub chart coordinates may overlap in the plane for high
/// degrees without affecting anything.
struct VertexTemplate {
  enum class CoreKind { Square, Polygon, PlainRectangle };
  CoreKind kind = CoreKind::Square;
  int deg = 1;
  double collar_len = 0.5;
  double rect_w = 1.0, rect_h = 1.0; // PlainRectangle only
  double volume = 0.0;               // exact polygon area
  std::optional<double> lambda2;     // cached first nonzero Neumann eigenvalue

  /// Conforming triangulation with interface chains of exactly n_y cells.
  TemplateMesh triangulate(int n_y) const;
};

/// Builds the template for a vertex of the given degree. Throws for
/// deg < 1.
VertexTemplate build_vertex_template(int deg, double l0);

/// Stub-less rectangular region, used as a test harness geometry.
VertexTemplate rectangle_template(double w, double h);

struct TemplateConstants {
  double volume = 0.0;
  double lambda2 = 0.0;
  bool converged = true; // extrapolation correction below 1e-3 relative
};

/// Exact area plus the first nonzero Neumann eigenvalue by P1 FEM on the
/// grids (h) and (h/2), Richardson-extrapolated. Caches lambda2 in the
/// template.
TemplateConstants template_constants(VertexTemplate& t, double h);

/// First nonzero Neumann eigenvalue of an assembled mesh (helper shared
/// with the tests).
double neumann_lambda2(const TriMesh2D& mesh);

} // namespace qgt
