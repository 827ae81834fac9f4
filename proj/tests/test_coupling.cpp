#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qgt/convergence.hpp"
#include "qgt/coupling.hpp"
#include "qgt/secular.hpp"

using namespace qgt;

namespace {

struct LoopSetup {
  MetricGraph graph = graphs::loop();
  double eps = 0.1;
  FatGraphMesh mesh;
  Coupler coupler;
  LoopSetup() : mesh(build_mesh(graph, eps, eps / 8.0)), coupler(graph, mesh) {}
};

Eigen::VectorXd random_broken(const FatGraphMesh& mesh, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd u(mesh.n_broken);
  for (Eigen::Index i = 0; i < mesh.n_broken; ++i) u(i) = uni(rng);
  return u;
}

} // namespace

TEST_CASE("cutoff endpoint values and derivatives are exact") {
  Cutoff rho{1.0};
  CHECK(rho.rho(0.0) == 1.0);
  CHECK(rho.rho(0.5) == 0.0);
  CHECK(rho.rho(0.7) == 0.0);
  CHECK(rho.drho(0.0) == 0.0);
  CHECK(rho.drho(0.5) == 0.0);
  for (double r = 0.0; r <= 0.6; r += 0.01) {
    CHECK(rho.rho(r) >= 0.0);
    CHECK(rho.rho(r) <= 1.0);
  }
  // Monotone decreasing on the support.
  for (double r = 0.0; r < 0.49; r += 0.01) CHECK(rho.rho(r + 0.01) <= rho.rho(r));
}

TEST_CASE("J maps the constant function to eps^{-1/2} on strips, zero on regions") {
  LoopSetup s;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.coupler.graph_pencil().dofs.n_dofs);
  Eigen::VectorXd ju = s.coupler.apply_J(ones);
  const double expected = 1.0 / std::sqrt(s.eps);
  for (const MeshRegion& r : s.mesh.regions) {
    for (Eigen::Index i = 0; i < r.mesh.n_nodes(); ++i) {
      if (r.kind == MeshRegion::Kind::EdgeStrip)
        CHECK(ju(r.offset + i) == doctest::Approx(expected));
      else
        CHECK(ju(r.offset + i) == 0.0);
    }
  }
  CHECK(s.coupler.broken_norm(ju) ==
        doctest::Approx(s.coupler.graph_norm(ones)).epsilon(1e-12));
}

TEST_CASE("J is an exact isometry on eigenfunctions") {
  LoopSetup s;
  GraphFunction f = eigenfunction(s.graph, 2.0 * M_PI, 0, s.coupler.graph_pencil().dofs.divisions);
  const Eigen::VectorXd x = to_dof_vector(s.coupler.graph_pencil(), f);
  const Eigen::VectorXd xn = x / s.coupler.graph_norm(x);
  CHECK(std::abs(s.coupler.broken_norm(s.coupler.apply_J(xn)) - 1.0) <= 1e-10);
}

TEST_CASE("J preserves support inside a single edge") {
  MetricGraph g = graphs::star(3);
  FatGraphMesh mesh = build_mesh(g, 0.1, 0.1 / 8.0);
  Coupler c(g, mesh);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(c.graph_pencil().dofs.n_dofs);
  // A bump on interior nodes of edge 0 only.
  const auto& dofs = c.graph_pencil().dofs.edge_dofs[0];
  for (size_t j = 2; j + 2 < dofs.size(); ++j) f(dofs[j]) = 1.0;
  const Eigen::VectorXd ju = c.apply_J(f);
  for (const MeshRegion& r : mesh.regions) {
    if (r.kind == MeshRegion::Kind::EdgeStrip && r.owner == 0) continue;
    for (Eigen::Index i = 0; i < r.mesh.n_nodes(); ++i) CHECK(ju(r.offset + i) == 0.0);
  }
}

TEST_CASE("J*J = id to roundoff for random functions") {
  LoopSetup s;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd f(s.coupler.graph_pencil().dofs.n_dofs);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = uni(rng);
    const Eigen::VectorXd r = s.coupler.apply_Jstar(s.coupler.apply_J(f)) - f;
    CHECK(s.coupler.graph_norm(r) <= 1e-10 * s.coupler.graph_norm(f));
  }
}

TEST_CASE("norm of J is one (power iteration on J^T M J against M0)") {
  LoopSetup s;
  const auto& pencil = s.coupler.graph_pencil();
  Eigen::VectorXd x(pencil.dofs.n_dofs);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::cos(1.3 * i) + 0.2;
  double lam = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd z = s.coupler.apply_Jstar(s.coupler.apply_J(x));
    lam = x.dot(pencil.M * z) / x.dot(pencil.M * x);
    x = z / s.coupler.graph_norm(z);
  }
  CHECK(std::abs(lam - 1.0) <= 1e-8);
}

TEST_CASE("transverse and vertex averages of constants") {
  LoopSetup s;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(s.mesh.n_broken, 3.25);
  CHECK(s.coupler.transverse_average(u, 0, 3) == doctest::Approx(3.25).epsilon(1e-13));
  CHECK(s.coupler.vertex_average(u, 0) == doctest::Approx(3.25).epsilon(1e-13));
  CHECK_THROWS_AS(s.coupler.transverse_average(u, 0, -1), std::out_of_range);
  CHECK_THROWS_AS(s.coupler.transverse_average(u, 0, 10000), std::out_of_range);
}

TEST_CASE("transverse average of an odd section vanishes") {
  LoopSetup s;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(s.mesh.n_broken);
  const MeshRegion& r = s.mesh.regions[s.mesh.edge_region[0]];
  for (int iy = 0; iy <= r.ny; ++iy)
    u(s.mesh.strip_node(0, 2, iy)) = iy - 0.5 * r.ny; // antisymmetric about the midline
  CHECK(std::abs(s.coupler.transverse_average(u, 0, 2)) <= 1e-13);
}

TEST_CASE("N_e recovers the graph function from Jf") {
  LoopSetup s;
  GraphFunction f = sample_function(s.graph, s.coupler.graph_pencil().dofs.divisions,
                                    [](int, double x) { return std::sin(2.0 * M_PI * x); });
  const Eigen::VectorXd ju = s.coupler.apply_J(f);
  const double scale = std::sqrt(s.eps);
  for (int ix = 0; ix <= s.mesh.regions[0].nx; ix += 7)
    CHECK(scale * s.coupler.transverse_average(ju, 0, ix) ==
          doctest::Approx(f.edge_values[0](ix)).epsilon(1e-12));
}

TEST_CASE("J1' inverts J exactly for vertex-vanishing functions") {
  LoopSetup s;
  GraphFunction f = sample_function(s.graph, s.coupler.graph_pencil().dofs.divisions,
                                    [](int, double x) { return std::sin(2.0 * M_PI * x); });
  const Eigen::VectorXd ju = s.coupler.apply_J(f);
  GraphFunction back = s.coupler.apply_J1prime(ju);
  for (Eigen::Index i = 0; i < back.edge_values[0].size(); ++i)
    CHECK(back.edge_values[0](i) == doctest::Approx(f.edge_values[0](i)).epsilon(1e-11));
}

TEST_CASE("J1' of a constant manifold function is constant") {
  LoopSetup s;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(s.mesh.n_broken, 2.0);
  GraphFunction g = s.coupler.apply_J1prime(u);
  const double expected = std::sqrt(s.eps) * 2.0;
  for (Eigen::Index i = 0; i < g.edge_values[0].size(); ++i)
    CHECK(g.edge_values[0](i) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(g.continuous_at_vertices());
}

TEST_CASE("J1' output is always continuous at vertices") {
  MetricGraph g = graphs::star(3);
  FatGraphMesh mesh = build_mesh(g, 0.1, 0.1 / 8.0);
  Coupler c(g, mesh);
  for (unsigned seed : {1u, 2u, 3u}) {
    GraphFunction out = c.apply_J1prime(random_broken(mesh, seed));
    CHECK(out.continuous_at_vertices(1e-11));
  }
}

TEST_CASE("J1' carries manifold eigenfunctions to near-limit Rayleigh quotients") {
  // The transverse average plus vertex correction recovers a graph function
  // whose Rayleigh quotient sits at the limit eigenvalue, much closer than
  // lambda_2(eps) itself.
  MetricGraph g = graphs::loop();
  const double lambda2_limit = 4.0 * M_PI * M_PI;
  for (double eps : {0.1, 0.05}) {
    FatGraphMesh mesh = build_mesh(g, eps, eps / 8.0);
    Coupler c(g, mesh);
    SymEigsResult modes = smallest_eigenpairs(mesh.A_conf, mesh.M_conf, 3);
    GraphFunction back = c.apply_J1prime(mesh.prolong(modes.vectors.col(1)));
    CHECK(std::abs(rayleigh(back) - lambda2_limit) <= 0.05 * lambda2_limit);
    CHECK(std::abs(modes.values(1) - lambda2_limit) > 0.15 * lambda2_limit);
  }
}

TEST_CASE("J1 equals eps^{-1/2} everywhere on the constant function") {
  LoopSetup s;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.coupler.graph_pencil().dofs.n_dofs);
  const Eigen::VectorXd j1 = s.coupler.apply_J1(ones);
  const double expected = 1.0 / std::sqrt(s.eps);
  for (Eigen::Index i = 0; i < j1.size(); ++i) CHECK(j1(i) == doctest::Approx(expected));
}

TEST_CASE("the J vs J1 gap is exactly the vertex-region mass") {
  LoopSetup s;
  GraphFunction f = sample_function(s.graph, s.coupler.graph_pencil().dofs.divisions,
                                    [](int, double x) { return std::cos(2.0 * M_PI * x) + 0.7; });
  const Eigen::VectorXd x = to_dof_vector(s.coupler.graph_pencil(), f);
  const Eigen::VectorXd diff = s.coupler.apply_J(x) - s.coupler.apply_J1(x);
  const double fv = f.vertex_values.at(0);
  const double expected = s.eps * s.mesh.templates[0].volume * fv * fv;
  const double got = diff.dot(s.mesh.M_broken.selfadjointView<Eigen::Lower>() * diff);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));

  // Vanishing vertex values collapse the gap entirely.
  GraphFunction f0 = sample_function(s.graph, s.coupler.graph_pencil().dofs.divisions,
                                     [](int, double x) { return std::sin(2.0 * M_PI * x); });
  const Eigen::VectorXd x0 = to_dof_vector(s.coupler.graph_pencil(), f0);
  CHECK((s.coupler.apply_J(x0) - s.coupler.apply_J1(x0)).norm() <= 1e-13);
}

TEST_CASE("kernel-mode defect follows the exact volume artifact") {
  LoopSetup s;
  // For the constant mode the quasi-unitarity residual is exactly
  // sqrt(eps V / (L + eps V)).
  SymEigsResult modes = smallest_eigenpairs(s.mesh.A_conf, s.mesh.M_conf, 2);
  const Eigen::VectorXd u = s.mesh.prolong(modes.vectors.col(0));
  const Eigen::VectorXd w = s.coupler.apply_J(s.coupler.apply_Jstar(u)) - u;
  const double V = s.mesh.templates[0].volume;
  const double expected = std::sqrt(s.eps * V / (1.0 + s.eps * V));
  const double got = s.coupler.broken_norm(w) / std::sqrt(s.coupler.broken_h1_norm_sq(u));
  CHECK(got == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("JJ* is the identity on the range of J") {
  LoopSetup s;
  GraphFunction f = eigenfunction(s.graph, 2.0 * M_PI, 1, s.coupler.graph_pencil().dofs.divisions);
  const Eigen::VectorXd u = s.coupler.apply_J(f);
  const Eigen::VectorXd w = s.coupler.apply_J(s.coupler.apply_Jstar(u)) - u;
  CHECK(s.coupler.broken_norm(w) <= 1e-10 * s.coupler.broken_norm(u));
}

TEST_CASE("quasi-unitarity defect preconditions and basic size") {
  LoopSetup s;
  CHECK_THROWS_AS(s.coupler.quasi_unitarity_defect(3), std::invalid_argument);
  const double d = s.coupler.quasi_unitarity_defect(6);
  CHECK(d > 0.0);
  CHECK(d < 1.0);
}

TEST_CASE("sandwich defect coarse sanity on a single edge") {
  MetricGraph g = graphs::interval();
  FatGraphMesh mesh = build_mesh(g, 0.2, 0.2 / 4.0);
  Coupler c(g, mesh);
  const double d = c.sandwich_defect(6);
  CHECK(d >= 0.0);
  CHECK(d <= 2.0); // triangle inequality on two contractions
}

TEST_CASE("defects are stable under one mesh refinement") {
  MetricGraph g = graphs::loop();
  FatGraphMesh mesh = build_mesh(g, 0.2, 0.2 / 8.0);
  FatGraphMesh fine = build_mesh_refined(mesh);
  Coupler c0(g, mesh), c1(g, fine);
  const double q0 = c0.quasi_unitarity_defect(6), q1 = c1.quasi_unitarity_defect(6);
  const double s0 = c0.sandwich_defect(6), s1 = c1.sandwich_defect(6);
  CHECK(std::abs(q0 - q1) <= 0.10 * q1);
  CHECK(std::abs(s0 - s1) <= 0.10 * s1);
}

TEST_CASE("projection defect vanishes on spectral gaps") {
  LoopSetup s;
  auto pd = s.coupler.projection_and_eigenfunction_defect(60.0, 100.0);
  CHECK(pd.graph_dim == 0);
  CHECK(pd.manifold_dim == 0);
  CHECK(pd.projection <= 1e-8);
}

TEST_CASE("ground-state interval gives the volume-artifact defect size") {
  LoopSetup s;
  auto pd = s.coupler.projection_and_eigenfunction_defect(-0.5, 0.5);
  CHECK(pd.graph_dim == 1);
  CHECK(pd.manifold_dim == 1);
  const double bound = 1.2 * std::sqrt(s.eps * s.mesh.templates[0].volume);
  CHECK(pd.projection <= bound);
  CHECK(pd.eigenfunction <= bound);
  CHECK(pd.projection > 0.0);
}

TEST_CASE("interval endpoints near the spectrum are rejected") {
  LoopSetup s;
  CHECK_THROWS_AS(s.coupler.projection_and_eigenfunction_defect(-1e-5, 50.0),
                  std::invalid_argument);
}

TEST_CASE("hausdorff distance basics") {
  SpectralResult a, b;
  a.entries = {{0.0, 1}, {4.0 * M_PI * M_PI, 2}};
  b = a;
  CHECK(hausdorff_distance(a, b, 50.0) == 0.0);
  b.entries[1].lambda += 0.1;
  CHECK(hausdorff_distance(a, b, 50.0) == doctest::Approx(0.1));
  SpectralResult empty;
  std::vector<std::string> warnings;
  CHECK(hausdorff_distance(a, empty, 50.0, &warnings) == 50.0);
  CHECK_FALSE(warnings.empty());
}

TEST_CASE("constant fields satisfy the vertex-trace inequality trivially") {
  MetricGraph g = graphs::star(3);
  FatGraphMesh mesh = build_mesh(g, 0.1, 0.1 / 8.0);
  Coupler c(g, mesh);
  TemplateSummary consts = compute_template_constants(mesh);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(mesh.n_broken, 1.7);
  InequalityReport rep = check_cn(c, u, consts);
  for (double m : rep.margins) CHECK(m >= -1e-10);
  // lhs = 0 for constants, so each margin equals the (zero) rhs: both sides vanish.
  CHECK(rep.min_margin >= -1e-10);
}

TEST_CASE("random conforming fields keep every inequality margin nonnegative") {
  MetricGraph g = graphs::star(3);
  FatGraphMesh mesh = build_mesh(g, 0.1, 0.1 / 8.0);
  Coupler c(g, mesh);
  TemplateSummary consts = compute_template_constants(mesh);
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd uc(mesh.n_conf);
    for (Eigen::Index i = 0; i < mesh.n_conf; ++i) uc(i) = uni(rng);
    const Eigen::VectorXd u = mesh.prolong(uc);
    CHECK(check_cn(c, u, consts).min_margin >= -1e-10);
    CHECK(check_vx(c, u, consts).min_margin >= -1e-10);
  }
  // A field with an interface jump is not H^1 and must be rejected.
  CHECK_THROWS_AS(check_cn(c, random_broken(mesh, 5), consts), std::invalid_argument);
}

TEST_CASE("trace inequality closed form for the linear ramp") {
  // f(s) = 1 - 2 s / l0 on [0, l0/2] with l0 = 1:
  // int f^2 = 1/6, int f'^2 = 2, rhs = 8 (1/6 + 2) = 52/3, lhs = 1.
  const int n = 64;
  Eigen::VectorXd f(n + 1);
  for (int i = 0; i <= n; ++i) f(i) = 1.0 - static_cast<double>(i) / n;
  InequalityReport rep = check_trace(f, 1.0);
  CHECK(rep.min_margin == doctest::Approx(52.0 / 3.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("a single-eps study produces the table but no slopes") {
  MetricGraph g = graphs::interval();
  ConvergenceOptions opts;
  opts.eps_list = {0.2};
  opts.k_max = 2;
  opts.compute_defects = false;
  opts.compute_projection = false;
  opts.refinement_gate = false;
  ConvergenceStudy s = run_convergence_study(g, opts);
  CHECK(s.rows.size() == 2);
  CHECK(s.slope_per_k.empty());
  CHECK(s.rows[1].lambda_eps <= s.rows[1].lambda0 + 1e-6);
}
