#include "qgt/vertex_template.hpp"

#include <cmath>
#include <stdexcept>

#include "qgt/sym_eigs.hpp"

namespace qgt {

namespace {

// Appends a tensor-meshed stub (width 1, length `collar`, n_y x n_l cells)
// whose inner row is the existing boundary chain `attach` (ordered points
// of spacing 1/n_y). Grows `mesh` in place and returns the outer interface
// chain.
std::vector<Eigen::Index> append_stub(TriMesh2D& mesh, const std::vector<Eigen::Index>& attach,
                                      Eigen::Vector2d outward, double collar, int n_y) {
  const int n_l = std::max(1, static_cast<int>(std::ceil(collar * n_y - 1e-12)));
  const double dl = collar / n_l;
  const Eigen::Index base = mesh.nodes.rows();
  mesh.nodes.conservativeResize(base + static_cast<Eigen::Index>(n_l) * (n_y + 1), 2);
  auto node = [&](int iy, int il) -> Eigen::Index {
    if (il == 0) return attach[iy];
    return base + static_cast<Eigen::Index>(il - 1) * (n_y + 1) + iy;
  };
  for (int il = 1; il <= n_l; ++il)
    for (int iy = 0; iy <= n_y; ++iy)
      mesh.nodes.row(node(iy, il)) =
          mesh.nodes.row(attach[iy]) + (il * dl) * outward.transpose();
  const Eigen::Index t0 = mesh.tris.rows();
  mesh.tris.conservativeResize(t0 + 2 * static_cast<Eigen::Index>(n_l) * n_y, 3);
  Eigen::Index t = t0;
  for (int il = 0; il < n_l; ++il)
    for (int iy = 0; iy < n_y; ++iy) {
      mesh.tris.row(t++) << static_cast<int>(node(iy, il)), static_cast<int>(node(iy + 1, il)),
          static_cast<int>(node(iy + 1, il + 1));
      mesh.tris.row(t++) << static_cast<int>(node(iy, il)), static_cast<int>(node(iy + 1, il + 1)),
          static_cast<int>(node(iy, il + 1));
    }
  std::vector<Eigen::Index> outer(n_y + 1);
  for (int iy = 0; iy <= n_y; ++iy) outer[iy] = node(iy, n_l);
  return outer;
}

// Fan triangulation of a regular polygon (circumradius R, `sides` corners)
// whose boundary partition per side is: m1 uniform cells, then n_y cells of
// exactly 1/n_y (the centered stub attachment), then m1 cells. Row j of
// each fan sector interpolates the base partition by index quantiles, so
// ring r reproduces the prescribed boundary nodes exactly and radial edges
// between sectors conform.
struct PolygonCore {
  TriMesh2D mesh;
  std::vector<std::vector<Eigen::Index>> attach_chains; // per side
  std::vector<Eigen::Vector2d> outward;                 // per side
};

PolygonCore mesh_polygon_core(int sides, double R, int n_y) {
  const double side_len = 2.0 * R * std::sin(M_PI / sides);
  if (side_len < 1.0 - 1e-12)
    throw std::invalid_argument("vertex template: core side shorter than the unit stub");
  const double head = 0.5 * (side_len - 1.0);
  const int m1 = (head < 1e-12) ? 0 : std::max(1, static_cast<int>(std::ceil(head * n_y - 1e-12)));
  const int r = 2 * m1 + n_y; // boundary cells per side

  // Base partition parameters (arclength along one side).
  std::vector<double> params(r + 1);
  for (int i = 0; i <= m1; ++i) params[i] = head * i / std::max(1, m1);
  for (int i = 1; i <= n_y; ++i) params[m1 + i] = head + static_cast<double>(i) / n_y;
  for (int i = 1; i <= m1; ++i) params[m1 + n_y + i] = head + 1.0 + head * i / m1;
  params[r] = side_len;

  std::vector<Eigen::Vector2d> corners(sides);
  for (int s = 0; s < sides; ++s) {
    const double ang = 2.0 * M_PI * s / sides;
    corners[s] = {R * std::cos(ang), R * std::sin(ang)};
  }

  PolygonCore core;
  const Eigen::Index n_nodes = 1 + static_cast<Eigen::Index>(sides) * r * (r + 1) / 2;
  core.mesh.nodes.resize(n_nodes, 2);
  core.mesh.nodes.row(0).setZero(); // center

  auto ring_id = [&](int j, int s, int i) -> Eigen::Index {
    if (j == 0) return 0;
    if (i == j) {
      s = (s + 1) % sides;
      i = 0;
    }
    return 1 + static_cast<Eigen::Index>(sides) * j * (j - 1) / 2 + static_cast<Eigen::Index>(s) * j + i;
  };
  auto chain_point = [&](int s, double u) -> Eigen::Vector2d {
    // u in [0, r] indexes the base partition of side s.
    const int i0 = std::min(r - 1, static_cast<int>(u));
    const double frac = u - i0;
    const double arc = params[i0] * (1.0 - frac) + params[i0 + 1] * frac;
    const Eigen::Vector2d a = corners[s], b = corners[(s + 1) % sides];
    return a + (arc / side_len) * (b - a);
  };

  for (int j = 1; j <= r; ++j)
    for (int s = 0; s < sides; ++s)
      for (int i = 0; i < j; ++i) {
        const Eigen::Vector2d q = chain_point(s, static_cast<double>(i) * r / j);
        core.mesh.nodes.row(ring_id(j, s, i)) = (static_cast<double>(j) / r) * q.transpose();
      }

  core.mesh.tris.resize(static_cast<Eigen::Index>(sides) * r * r, 3);
  Eigen::Index t = 0;
  for (int s = 0; s < sides; ++s)
    for (int j = 1; j <= r; ++j) {
      for (int i = 0; i < j; ++i)
        core.mesh.tris.row(t++) << static_cast<int>(ring_id(j, s, i)),
            static_cast<int>(ring_id(j, s, i + 1)), static_cast<int>(ring_id(j - 1, s, i));
      for (int i = 0; i + 1 < j; ++i)
        core.mesh.tris.row(t++) << static_cast<int>(ring_id(j - 1, s, i)),
            static_cast<int>(ring_id(j, s, i + 1)), static_cast<int>(ring_id(j - 1, s, i + 1));
    }

  for (int s = 0; s < sides; ++s) {
    std::vector<Eigen::Index> chain(n_y + 1);
    for (int i = 0; i <= n_y; ++i) chain[i] = ring_id(r, s, m1 + i);
    core.attach_chains.push_back(std::move(chain));
    const Eigen::Vector2d a = corners[s], b = corners[(s + 1) % sides];
    Eigen::Vector2d n(b(1) - a(1), a(0) - b(0)); // outward for CCW corners
    core.outward.push_back(n.normalized());
  }
  return core;
}

} // namespace

TemplateMesh VertexTemplate::triangulate(int n_y) const {
  if (n_y < 1) throw std::invalid_argument("VertexTemplate::triangulate: n_y must be >= 1");
  TemplateMesh out;
  if (kind == CoreKind::PlainRectangle) {
    const int nx = std::max(1, static_cast<int>(std::ceil(rect_w * n_y - 1e-12)));
    const int ny = std::max(1, static_cast<int>(std::ceil(rect_h * n_y - 1e-12)));
    out.mesh = mesh_rectangle(rect_w, rect_h, nx, ny);
    return out;
  }
  if (kind == CoreKind::Square) {
    out.mesh = mesh_rectangle(1.0, 1.0, n_y, n_y);
    auto side_chain = [&](bool top) {
      std::vector<Eigen::Index> chain(n_y + 1);
      for (int i = 0; i <= n_y; ++i)
        chain[i] = static_cast<Eigen::Index>(i) * (n_y + 1) + (top ? n_y : 0);
      return chain;
    };
    out.interfaces.push_back(
        append_stub(out.mesh, side_chain(false), {0.0, -1.0}, collar_len, n_y));
    if (deg == 2)
      out.interfaces.push_back(
          append_stub(out.mesh, side_chain(true), {0.0, 1.0}, collar_len, n_y));
    return out;
  }
  // Polygon core. The circumradius grows past degree 6 so unit stubs fit.
  const double R = std::max(1.0, 1.0 / (2.0 * std::sin(M_PI / deg)) + 1e-12);
  PolygonCore core = mesh_polygon_core(deg, R, n_y);
  out.mesh = std::move(core.mesh);
  for (int s = 0; s < deg; ++s)
    out.interfaces.push_back(
        append_stub(out.mesh, core.attach_chains[s], core.outward[s], collar_len, n_y));
  return out;
}

VertexTemplate build_vertex_template(int deg, double l0) {
  if (deg < 1) throw std::invalid_argument("build_vertex_template: degree must be >= 1");
  if (!(l0 > 0.0) || l0 > 1.0) throw std::invalid_argument("build_vertex_template: l0 in (0,1]");
  VertexTemplate t;
  t.deg = deg;
  t.collar_len = l0 / 2.0;
  if (deg <= 2) {
    t.kind = VertexTemplate::CoreKind::Square;
    t.volume = 1.0 + deg * t.collar_len;
  } else {
    t.kind = VertexTemplate::CoreKind::Polygon;
    const double R = std::max(1.0, 1.0 / (2.0 * std::sin(M_PI / deg)) + 1e-12);
    t.volume = 0.5 * deg * R * R * std::sin(2.0 * M_PI / deg) + deg * t.collar_len;
  }
  return t;
}

VertexTemplate rectangle_template(double w, double h) {
  if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("rectangle_template: bad dimensions");
  VertexTemplate t;
  t.kind = VertexTemplate::CoreKind::PlainRectangle;
  t.deg = 0;
  t.collar_len = 0.0;
  t.rect_w = w;
  t.rect_h = h;
  t.volume = w * h;
  return t;
}

double neumann_lambda2(const TriMesh2D& mesh) {
  std::vector<Eigen::Index> ident(mesh.n_nodes());
  for (Eigen::Index i = 0; i < mesh.n_nodes(); ++i) ident[i] = i;
  std::vector<Eigen::Triplet<double>> ta, tm;
  assemble_p1(mesh, 1.0, 1.0, ident, ta, tm);
  SparseMat A(mesh.n_nodes(), mesh.n_nodes()), M(mesh.n_nodes(), mesh.n_nodes());
  A.setFromTriplets(ta.begin(), ta.end());
  M.setFromTriplets(tm.begin(), tm.end());
  SymEigsResult r = smallest_eigenpairs(A, M, 2);
  return r.values(1);
}

TemplateConstants template_constants(VertexTemplate& t, double h) {
  if (!(h > 0.0) || h > 0.5) throw std::invalid_argument("template_constants: h in (0, 1/2]");
  const int n = std::max(2, static_cast<int>(std::lround(1.0 / h)));
  const double coarse = neumann_lambda2(t.triangulate(n).mesh);
  const double fine = neumann_lambda2(t.triangulate(2 * n).mesh);
  TemplateConstants c;
  c.volume = t.volume;
  c.lambda2 = (4.0 * fine - coarse) / 3.0;
  c.converged = std::abs(c.lambda2 - fine) <= 1e-3 * (1.0 + std::abs(c.lambda2));
  t.lambda2 = c.lambda2;
  return c;
}

} // namespace qgt
