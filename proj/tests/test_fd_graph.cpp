#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qgt/fd_graph.hpp"
#include "qgt/graph_function.hpp"

using namespace qgt;

namespace {

GraphFunction sampled(const MetricGraph& g, int n, double (*f)(double)) {
  std::vector<int> div(g.edges().size(), n);
  return sample_function(g, div, [&](int, double x) { return f(x); });
}

} // namespace

TEST_CASE("constant function has zero Rayleigh quotient") {
  MetricGraph g = graphs::loop();
  GraphFunction f = sampled(g, 32, [](double) { return 1.0; });
  CHECK(rayleigh(f) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(h1_norm_sq(f) == doctest::Approx(l2_norm_sq(f)));
}

TEST_CASE("Fourier mode on the loop converges to 4 pi^2") {
  MetricGraph g = graphs::loop();
  const double exact = 4.0 * M_PI * M_PI;
  GraphFunction coarse = sampled(g, 64, [](double x) { return std::sin(2.0 * M_PI * x); });
  GraphFunction fine = sampled(g, 128, [](double x) { return std::sin(2.0 * M_PI * x); });
  const double ec = rayleigh(coarse) - exact;
  const double ef = rayleigh(fine) - exact;
  CHECK(std::abs(ef) < std::abs(ec));
  CHECK(std::abs(ef) < exact * 1e-3);
  // Second-order quadrature: halving the step divides the error by about 4.
  CHECK(ec / ef == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("random piecewise-linear function: nonnegativity bounds") {
  MetricGraph g = graphs::star(3);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> div(g.edges().size(), 16);
    GraphFunction f = zero_function(g, div);
    for (auto& ev : f.edge_values)
      for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = uni(rng);
    // restore vertex continuity structurally
    const double center = uni(rng);
    for (size_t ei = 0; ei < f.edge_values.size(); ++ei) {
      f.edge_values[ei](0) = center;
      f.vertex_values[g.edges()[ei].to] = f.edge_values[ei](16);
    }
    f.vertex_values[0] = center;
    CHECK(rayleigh(f) >= 0.0);
    CHECK(h1_norm_sq(f) >= l2_norm_sq(f));
  }
}

TEST_CASE("rayleigh of the zero function throws") {
  MetricGraph g = graphs::loop();
  GraphFunction f = sampled(g, 8, [](double) { return 0.0; });
  CHECK_THROWS_AS(rayleigh(f), std::invalid_argument);
}

TEST_CASE("rayleigh equals the FD matrix quotient exactly") {
  MetricGraph g = graphs::star(3);
  GraphPencil pencil = fd_discretize(g, 1.0 / 8.0);
  GraphFunction f = sampled(g, 8, [](double x) { return x * x - 0.3 * x + 0.1; });
  const Eigen::VectorXd x = to_dof_vector(pencil, f);
  const double matrix_quotient = x.dot(pencil.A * x) / x.dot(pencil.M * x);
  CHECK(rayleigh(f) == doctest::Approx(matrix_quotient).epsilon(1e-14));
  const double matrix_h1 = x.dot(pencil.A * x) + x.dot(pencil.M * x);
  CHECK(h1_norm_sq(f) == doctest::Approx(matrix_h1).epsilon(1e-14));
}

TEST_CASE("unit interval at h = 1/4: 5 DOFs, second-difference form, constant kernel") {
  MetricGraph g = graphs::interval();
  GraphPencil p = fd_discretize(g, 0.25);
  CHECK(p.dofs.n_dofs == 5);
  // Interior row of A: (-1/h, 2/h, -1/h).
  const Eigen::MatrixXd A(p.A);
  const Eigen::Index mid = p.dofs.edge_dofs[0][2];
  CHECK(A(mid, mid) == doctest::Approx(8.0));
  CHECK(A(mid, p.dofs.edge_dofs[0][1]) == doctest::Approx(-4.0));
  CHECK(A(mid, p.dofs.edge_dofs[0][3]) == doctest::Approx(-4.0));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
  CHECK((p.A * ones).norm() <= 1e-12);
}

TEST_CASE("unit loop at h = 1/4: 4 DOFs and circulant stiffness") {
  MetricGraph g = graphs::loop();
  GraphPencil p = fd_discretize(g, 0.25);
  CHECK(p.dofs.n_dofs == 4);
  const Eigen::MatrixXd A(p.A);
  for (int i = 0; i < 4; ++i) {
    CHECK(A(i, i) == doctest::Approx(8.0));
    double offsum = 0.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) offsum += A(i, j);
    CHECK(offsum == doctest::Approx(-8.0));
  }
}

TEST_CASE("3-star at h = 1/4 has 13 DOFs, matching the count formula") {
  MetricGraph g = graphs::star(3);
  GraphPencil p = fd_discretize(g, 0.25);
  // ceil(1/h) - 1 = 3 interior nodes per edge, plus 4 vertices.
  Eigen::Index expected = 4;
  for (int n : p.dofs.divisions) expected += n - 1;
  CHECK(p.dofs.n_dofs == 13);
  CHECK(p.dofs.n_dofs == expected);
  // Cross-check by walking the DOF map.
  std::vector<int> seen(p.dofs.n_dofs, 0);
  for (const auto& dofs : p.dofs.edge_dofs)
    for (Eigen::Index d : dofs) seen[d] = 1;
  Eigen::Index covered = 0;
  for (int s : seen) covered += s;
  CHECK(covered == p.dofs.n_dofs);
}

TEST_CASE("discretization rejects leads and oversized steps") {
  MetricGraph lead = graphs::loop_with_lead();
  CHECK_THROWS_AS(fd_discretize(lead, 0.1), std::invalid_argument);
  MetricGraph g = graphs::loop();
  CHECK_THROWS_AS(fd_discretize(g, 0.3), std::invalid_argument);
}

TEST_CASE("pencil is PSD/SPD with constants in the stiffness kernel") {
  for (const MetricGraph& g : {graphs::loop(), graphs::star(3), graphs::interval(1.4)}) {
    GraphPencil p = fd_discretize(g, 1.0 / 8.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea((Eigen::MatrixXd(p.A)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em((Eigen::MatrixXd(p.M)));
    CHECK(ea.eigenvalues()(0) >= -1e-10);
    CHECK(em.eigenvalues()(0) > 0.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.dofs.n_dofs);
    CHECK((p.A * ones).norm() <= 1e-10 * Eigen::MatrixXd(p.A).norm());
  }
}

TEST_CASE("Richardson FD eigenvalues hit the exact 3-star spectrum") {
  MetricGraph g = graphs::star(3);
  const Eigen::VectorXd lam = richardson_fd_eigenvalues(g, 1.0 / 64.0, 50.0);
  // Exact: 0, (pi/2)^2 double, pi^2, (3pi/2)^2 double, (2pi)^2.
  const double q = M_PI * M_PI / 4.0;
  std::vector<double> exact = {0.0, q, q, 4.0 * q, 9.0 * q, 9.0 * q, 16.0 * q};
  REQUIRE(lam.size() >= static_cast<Eigen::Index>(exact.size()));
  for (size_t i = 0; i < exact.size(); ++i)
    CHECK(std::abs(lam(static_cast<Eigen::Index>(i)) - exact[i]) <= 1e-6 * (1.0 + exact[i]));
}

TEST_CASE("h1 norm requires vertex continuity") {
  MetricGraph g = graphs::star(3);
  std::vector<int> div(3, 8);
  GraphFunction f = zero_function(g, div);
  f.edge_values[0](0) = 1.0; // breaks continuity at the center
  CHECK_THROWS_AS(h1_norm_sq(f), std::invalid_argument);
}

TEST_CASE("the FD-oracle spectrum carries clustered multiplicities") {
  MetricGraph g = graphs::star(3);
  SpectralResult res = richardson_fd_spectrum(g, 1.0 / 32.0, 50.0);
  REQUIRE(res.entries.size() >= 3);
  CHECK(res.method == SpectralMethod::FdOracle);
  CHECK(res.entries[0].multiplicity == 1);
  CHECK(res.entries[1].multiplicity == 2); // the (pi/2)^2 pair
}

TEST_CASE("dof vector round trip preserves a graph function") {
  MetricGraph g = graphs::star(3);
  GraphPencil p = fd_discretize(g, 1.0 / 8.0);
  // Continuous at the shared center: every edge starts there with value 1.
  GraphFunction f = sample_function(g, p.dofs.divisions,
                                    [](int e, double x) { return std::cos(x) + e * x; });
  GraphFunction back = from_dof_vector(g, p, to_dof_vector(p, f));
  for (size_t ei = 0; ei < f.edge_values.size(); ++ei)
    CHECK((f.edge_values[ei] - back.edge_values[ei]).norm() <= 1e-15);
  CHECK(back.continuous_at_vertices());
}
