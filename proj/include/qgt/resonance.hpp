#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "qgt/metric_graph.hpp"
#include "qgt/secular.hpp"

namespace qgt {

/// Complex dilation parameter theta inside the strip |Im theta| <
/// sector_half_width / 2.
struct DilationParams {
  Complex theta{0.0, 0.0};
  double sector_half_width = M_PI / 2.0; // the angle bound of the sector

  bool valid() const { return std::abs(theta.imag()) < sector_half_width / 2.0; }
};

/// A located resonance or embedded eigenvalue of the outgoing-wave secular
/// problem. lambda = k^2; the sign convention keeps Im lambda <= 0.
struct Resonance {
  Complex k{0.0, 0.0};
  Complex lambda{0.0, 0.0};
  int multiplicity = 1;
  double residual = 0.0; // sigma_min/sigma_max of S(k) at the root
  Complex theta_used{0.0, 0.0};
  bool embedded = false;   // |Im lambda| below the classification threshold
  bool borderline = false; // |Im lambda| within a decade of the threshold
};

/// Rectangle in the k-plane, Re in [re_min, re_max], Im in [im_min, im_max].
struct KWindow {
  double re_min = 0.0, re_max = 0.0;
  double im_min = 0.0, im_max = 0.0;

  bool contains(Complex k, double slack = 0.0) const {
    return k.real() >= re_min - slack && k.real() <= re_max + slack &&
           k.imag() >= im_min - slack && k.imag() <= im_max + slack;
  }
  double diameter() const { return std::hypot(re_max - re_min, im_max - im_min); }
};

/// Outgoing-wave secular matrix S(k): internal edges carry the ansatz
/// a_e cos(kx) + b_e sin(kx), each lead carries c_e e^{ikx}. Unknown
/// order: (a, b) pairs for internal edges in graph order, then lead
/// amplitudes. Size 2|E_int| + |E_ext|. Entire in k; resonances and
/// embedded eigenvalues are its kernel points.
Eigen::MatrixXcd outgoing_secular(const MetricGraph& graph, Complex k);
void outgoing_secular_with_derivative(const MetricGraph& graph, Complex k,
                                      Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS);

/// d/dk log det S(k) = tr(S^{-1} S'(k)).
Complex outgoing_logdet_derivative(const MetricGraph& graph, Complex k);

struct ResonanceOptions {
  int gauss_points = 512;        // Gauss-Legendre nodes per rectangle side
  double isolation_diameter = 1e-2; // stop bisecting below this size
  double newton_tol = 1e-10;     // |dk| stopping for Newton polish
  double embedded_imag_tol = 1e-7; // |Im lambda| threshold for "embedded"
  int max_contour_retries = 5;
};

/// Number of secular zeros (with multiplicity) strictly inside the window,
/// by the argument principle. Windows touching the real axis are padded
/// slightly upward so real-axis roots are enclosed.
int count_zeros(const MetricGraph& graph, const KWindow& window,
                const ResonanceOptions& opts = {});

/// Locates all resonances / embedded eigenvalues in the window: contour
/// counting, recursive bisection, Newton refinement on det S. The window
/// must avoid k = 0 and lie in the closed lower half-plane.
std::vector<Resonance> find_resonances(const MetricGraph& graph, const KWindow& window,
                                       const ResonanceOptions& opts = {});

/// The rotated essential-spectrum ray e^{-2 theta}[0, inf) clipped to
/// |lambda| <= lambda_max: a half-line from the origin at angle
/// -2 Im(theta).
struct EssentialRay {
  double angle = 0.0;
  double lambda_max = 0.0;

  /// Euclidean distance from lambda to the (unclipped) ray.
  double distance(Complex lambda) const;
  /// True when lambda sits within `width * (1 + |lambda|)` of the ray.
  bool masks(Complex lambda, double width = 0.05) const;
};
EssentialRay essential_ray(Complex theta, double lambda_max);

} // namespace qgt
