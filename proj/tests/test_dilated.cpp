#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qgt/dilated.hpp"
#include "qgt/resonance.hpp"

using namespace qgt;

namespace {
const Complex kRes1(2.0 * M_PI, -std::log(3.0)); // first resonance momentum
const Complex kTheta(0.0, 0.5);
} // namespace

TEST_CASE("dilated pencil preconditions") {
  MetricGraph g = graphs::loop_with_lead();
  CHECK_THROWS_AS(dilated_fd_matrix(g, Complex(0.0, -0.1), 20.0, 1.0 / 64), std::invalid_argument);
  CHECK_THROWS_AS(dilated_fd_matrix(g, kTheta, 5.0, 1.0 / 64), std::invalid_argument);
  CHECK_THROWS_AS(dilated_fd_matrix(g, kTheta, 20.0, 0.5), std::invalid_argument);
  MetricGraph compact = graphs::loop();
  CHECK_THROWS_AS(dilated_fd_matrix(compact, kTheta, 20.0, 1.0 / 64), std::invalid_argument);
}

TEST_CASE("pencil is complex symmetric") {
  MetricGraph g = graphs::loop_with_lead();
  DilatedPencil p = dilated_fd_matrix(g, kTheta, 12.0, 1.0 / 16);
  const Eigen::MatrixXcd A(p.A), M(p.M);
  CHECK((A - A.transpose()).norm() <= 1e-14 * A.norm());
  CHECK((M - M.transpose()).norm() <= 1e-14 * M.norm());
}

TEST_CASE("oracle reproduces the first resonance to 1e-3") {
  MetricGraph g = graphs::loop_with_lead();
  const Complex exact = kRes1 * kRes1;
  const DilatedEig eig = dilated_eigenvalue(g, kTheta, 20.0, 1.0 / 64, exact);
  CHECK(std::abs(eig.lambda - exact) <= 1e-3);
  CHECK(eig.residual <= 1e-8);
}

TEST_CASE("embedded eigenvalue stays real for any positive Im theta") {
  MetricGraph g = graphs::loop_with_lead();
  const Complex exact(4.0 * M_PI * M_PI, 0.0);
  for (double im : {0.3, 0.5}) {
    const DilatedEig eig =
        dilated_eigenvalue(g, Complex(0.0, im), 20.0, 1.0 / 64, exact + Complex(1e-4, -1e-4));
    CHECK(std::abs(eig.lambda.imag()) <= 1e-6);
    CHECK(std::abs(eig.lambda - exact) <= 1e-3);
  }
}

TEST_CASE("spectrum splits into ray surrogates and revealed roots") {
  // On compact windows clear of truncation box modes, everything off the
  // rotated-continuum ray is a revealed root.
  MetricGraph g = graphs::loop_with_lead();
  DilatedPencil p = dilated_fd_matrix(g, kTheta, 14.0, 1.0 / 24);
  const Eigen::VectorXcd spectrum = dense_spectrum(p);
  const EssentialRay ray = essential_ray(kTheta, 45.0);
  const Complex res = kRes1 * kRes1;
  const Complex embedded(4.0 * M_PI * M_PI, 0.0);
  int off_ray = 0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const Complex lam = spectrum(i);
    if (std::abs(lam) > 45.0) continue;
    const bool near_root = std::abs(lam - res) < 0.5 || std::abs(lam - embedded) < 0.5;
    if (!ray.masks(lam, 0.12)) {
      ++off_ray;
      CHECK(near_root);
    }
  }
  CHECK(off_ray == 2); // the resonance and the embedded eigenvalue are revealed
}

TEST_CASE("secular roots and dilated eigenvalues agree both ways") {
  MetricGraph g = graphs::loop_with_lead();
  const auto roots = find_resonances(g, {0.1, 8.0, -2.0, 0.0});
  REQUIRE(roots.size() == 2);
  // Every secular root is matched by a pencil eigenvalue.
  for (const Resonance& r : roots) {
    const DilatedEig eig = dilated_eigenvalue(g, kTheta, 20.0, 1.0 / 64, r.lambda);
    CHECK(std::abs(eig.lambda - r.lambda) <= 1e-3);
  }
  // Conversely, off-ray eigenvalues of the pencil sit near secular roots.
  DilatedPencil p = dilated_fd_matrix(g, kTheta, 14.0, 1.0 / 24);
  const Eigen::VectorXcd spectrum = dense_spectrum(p);
  const EssentialRay ray = essential_ray(kTheta, 45.0);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const Complex lam = spectrum(i);
    if (std::abs(lam) > 45.0 || ray.masks(lam, 0.12)) continue;
    double best = 1e300;
    for (const Resonance& r : roots) best = std::min(best, std::abs(lam - r.lambda));
    CHECK(best <= 0.5);
  }
}

TEST_CASE("theta independence of the first resonance") {
  MetricGraph g = graphs::loop_with_lead();
  const auto r = theta_independence(g, kRes1 * kRes1,
                                    {Complex(0, 0.4), Complex(0, 0.6), Complex(0, 0.8)});
  REQUIRE(r.values.size() == 3);
  CHECK(r.max_deviation <= 1e-6);
}

TEST_CASE("theta independence with a single theta is zero") {
  MetricGraph g = graphs::loop_with_lead();
  const auto r = theta_independence(g, kRes1 * kRes1, {Complex(0, 0.5)});
  CHECK(r.max_deviation == 0.0);
  CHECK(r.values.size() == 1);
}

TEST_CASE("embedded eigenvalue drift across small thetas") {
  MetricGraph g = graphs::loop_with_lead();
  const auto r = theta_independence(g, Complex(4.0 * M_PI * M_PI, 0.0),
                                    {Complex(0, 0.2), Complex(0, 0.4)});
  REQUIRE(r.values.size() == 2);
  CHECK(r.max_deviation <= 1e-6);
}

TEST_CASE("masked thetas are skipped with a warning") {
  MetricGraph g = graphs::loop_with_lead();
  // A target sitting on the ray of the first theta.
  const Complex lam = 30.0 * std::polar(1.0, -0.8);
  ThetaIndependenceOptions opts;
  const auto r = theta_independence(g, lam, {Complex(0, 0.4), Complex(0, 1.2)}, opts);
  CHECK(r.values.size() < 2);
  CHECK_FALSE(r.warnings.empty());
}
