#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qgt/resonance.hpp"

using namespace qgt;

namespace {

const double kLn3 = std::log(3.0);

// Hand-derived secular function of the unit loop with one lead: eliminating
// the amplitudes from the vertex conditions leaves
// 2 sin(k/2) * (2 sin(k/2) + i cos(k/2)) = 0, i.e. embedded eigenvalues at
// k = 2 pi n and resonances at k = 2 pi n - i ln 3.
Complex loop_lead_closed_form(Complex k) {
  return 2.0 * std::sin(0.5 * k) * (2.0 * std::sin(0.5 * k) + Complex(0, 1) * std::cos(0.5 * k));
}

} // namespace

TEST_CASE("outgoing secular matrix shape and domain errors") {
  MetricGraph g = graphs::loop_with_lead();
  Eigen::MatrixXcd S = outgoing_secular(g, Complex(1.0, -0.2));
  CHECK(S.rows() == 3); // 2 per internal edge + 1 per lead
  CHECK_THROWS_AS(outgoing_secular(g, Complex(0.0, 0.0)), std::invalid_argument);
  MetricGraph compact = graphs::loop();
  CHECK_THROWS_AS(outgoing_secular(compact, Complex(1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("loop-plus-lead determinant matches the hand-derived factorization") {
  MetricGraph g = graphs::loop_with_lead();
  for (Complex k : {Complex(1.0, 0.0), Complex(3.7, -0.4), Complex(6.283, -1.1),
                    Complex(0.5, -1.9), Complex(12.0, -0.05)}) {
    const Complex det = outgoing_secular(g, k).determinant();
    const Complex closed = loop_lead_closed_form(k);
    CHECK(std::abs(det + closed) <= 1e-12 * (1.0 + std::abs(closed)));
  }
}

TEST_CASE("embedded eigenvalue at k = 2 pi has a one-dimensional kernel") {
  MetricGraph g = graphs::loop_with_lead();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(outgoing_secular(g, Complex(2.0 * M_PI, 0.0)));
  const auto& s = svd.singularValues();
  int dim = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) < 1e-10 * std::max(s(0), 1.0)) ++dim;
  CHECK(dim == 1);
}

TEST_CASE("a bare lead has no resonances in any bounded window") {
  MetricGraph g = graphs::single_lead();
  CHECK(count_zeros(g, {0.3, 15.0, -3.0, 0.0}) == 0);
  CHECK(count_zeros(g, {1.0, 8.0, -1.5, -0.1}) == 0);
  CHECK(find_resonances(g, {0.3, 15.0, -3.0, 0.0}).empty());
}

TEST_CASE("loop-plus-lead root set over the standard window") {
  MetricGraph g = graphs::loop_with_lead();
  const KWindow window{0.1, 20.0, -2.0, 0.0};
  const auto roots = find_resonances(g, window);
  // Closed form: embedded at 2pi, 4pi, 6pi; resonances at these minus i ln 3.
  REQUIRE(roots.size() == 6);
  CHECK(count_zeros(g, window) == 6);
  int embedded = 0, complex_roots = 0;
  for (const Resonance& r : roots) {
    const double re = r.k.real();
    const double n = std::round(re / (2.0 * M_PI));
    CHECK(std::abs(re - 2.0 * M_PI * n) <= 1e-8);
    if (r.embedded) {
      ++embedded;
      CHECK(std::abs(r.k.imag()) <= 1e-10);
      CHECK(std::abs(r.lambda.imag()) <= 1e-8);
      CHECK(r.residual <= 1e-8);
    } else {
      ++complex_roots;
      CHECK(std::abs(r.k.imag() + kLn3) <= 1e-8);
      CHECK(r.lambda.imag() < 0.0);
    }
    CHECK(r.multiplicity == 1);
  }
  CHECK(embedded == 3);
  CHECK(complex_roots == 3);
}

TEST_CASE("window shifted by 2 pi finds the translated resonance") {
  MetricGraph g = graphs::loop_with_lead();
  const auto roots = find_resonances(g, {0.1 + 2.0 * M_PI, 8.0 + 2.0 * M_PI, -2.0, -0.5});
  REQUIRE(roots.size() == 1);
  CHECK(std::abs(roots[0].k - Complex(4.0 * M_PI, -kLn3)) <= 1e-8);
}

TEST_CASE("window below every root comes back empty") {
  MetricGraph g = graphs::loop_with_lead();
  CHECK(find_resonances(g, {0.1, 20.0, -1.9, -1.5}).empty());
}

TEST_CASE("window validation") {
  MetricGraph g = graphs::loop_with_lead();
  CHECK_THROWS_AS(find_resonances(g, {-1.0, 1.0, -1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(find_resonances(g, {0.1, 20.0, -1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(find_resonances(g, {5.0, 2.0, -1.0, 0.0}), std::invalid_argument);
  MetricGraph compact = graphs::loop();
  CHECK_THROWS_AS(find_resonances(compact, {0.1, 10.0, -1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("reported roots satisfy the sign convention Im lambda <= 0") {
  MetricGraph g = graphs::loop_with_lead();
  for (const Resonance& r : find_resonances(g, {0.1, 14.0, -2.0, 0.0}))
    CHECK(r.lambda.imag() <= 1e-8);
}

TEST_CASE("momentum reflection symmetry of the secular determinant") {
  // For real-coefficient graphs the root set is symmetric under
  // k -> -conj(k) (conjugation of the energy lambda = k^2):
  // |det S(-conj k)| = |det S(k)| pointwise.
  MetricGraph g = graphs::loop_with_lead();
  for (Complex k : {Complex(2.0, -0.3), Complex(6.1, -1.2), Complex(9.4, -0.01)}) {
    const double a = std::abs(outgoing_secular(g, k).determinant());
    const double b = std::abs(outgoing_secular(g, -std::conj(k)).determinant());
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("argument-principle count equals refined roots with multiplicity") {
  MetricGraph g = graphs::loop_with_lead();
  const KWindow w{0.5, 13.0, -1.6, 0.0};
  const auto roots = find_resonances(g, w);
  int total = 0;
  for (const Resonance& r : roots) total += r.multiplicity;
  CHECK(total == count_zeros(g, w));
}

TEST_CASE("a second lead at the loop vertex opens every resonance") {
  // Eliminating the lead amplitudes leaves det S = -2[(1 - cos k) + i sin k]
  // = -4 i sin(k/2) e^{-i k/2}: the only roots are the embedded k = 2 pi n;
  // the extra decay channel removes the complex resonances entirely.
  MetricGraph g({0}, {Edge::internal(0, 0, 0, 1.0), Edge::lead(1, 0), Edge::lead(2, 0)}, 4, 1.0);
  for (Complex k : {Complex(1.5, -0.3), Complex(5.0, -1.0), Complex(9.3, -0.7)}) {
    const Complex det = outgoing_secular(g, k).determinant();
    const Complex closed = -2.0 * ((1.0 - std::cos(k)) + Complex(0, 1) * std::sin(k));
    CHECK(std::abs(det - closed) <= 1e-12 * (1.0 + std::abs(closed)));
  }
  const auto roots = find_resonances(g, {0.1, 8.0, -2.0, 0.0});
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].embedded);
  CHECK(std::abs(roots[0].k - Complex(2.0 * M_PI, 0.0)) <= 1e-8);
}

TEST_CASE("an open interval with a lead at each end has no roots") {
  MetricGraph g({0, 1}, {Edge::internal(0, 0, 1, 1.0), Edge::lead(1, 0), Edge::lead(2, 1)}, 2,
                1.0);
  CHECK(count_zeros(g, {0.1, 12.0, -2.5, 0.0}) == 0);
  CHECK(find_resonances(g, {0.1, 12.0, -2.5, 0.0}).empty());
}

TEST_CASE("essential ray angles") {
  CHECK(essential_ray(Complex(0.0, 0.0), 10.0).angle == doctest::Approx(0.0));
  CHECK(essential_ray(Complex(0.0, M_PI / 6.0), 10.0).angle == doctest::Approx(-M_PI / 3.0));
  CHECK(essential_ray(Complex(0.2, 0.3), 10.0).angle == doctest::Approx(-0.6));
}

TEST_CASE("essential ray distance and masking") {
  EssentialRay ray = essential_ray(Complex(0.0, 0.25), 100.0);
  // Points on the ray itself.
  const Complex on_ray = 5.0 * std::polar(1.0, ray.angle);
  CHECK(ray.distance(on_ray) <= 1e-12);
  CHECK(ray.masks(on_ray));
  // A resonance well off the ray.
  const Complex off(38.0, -14.0);
  CHECK_FALSE(ray.masks(off));
  // Behind the origin the distance is the modulus.
  const Complex behind = -2.0 * std::polar(1.0, ray.angle);
  CHECK(ray.distance(behind) == doctest::Approx(2.0));
}
