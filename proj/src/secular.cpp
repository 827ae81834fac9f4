#include "qgt/secular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qgt {

std::vector<double> SpectralResult::expanded() const {
  std::vector<double> out;
  for (const auto& e : entries)
    for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.lambda);
  return out;
}

int SpectralResult::total_multiplicity() const {
  int n = 0;
  for (const auto& e : entries) n += e.multiplicity;
  return n;
}

namespace {

// Endpoint slots of an internal edge in vertex order. `at_start` selects
// the x = 0 end.
struct Slot {
  int edge_index;
  bool at_start;
};

std::vector<std::vector<Slot>> vertex_slots(const MetricGraph& graph) {
  std::vector<std::vector<Slot>> slots(graph.vertices().size());
  const auto& edges = graph.edges();
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const Edge& e = edges[ei];
    slots[graph.vertex_index(e.from)].push_back({static_cast<int>(ei), true});
    if (!e.external) slots[graph.vertex_index(e.to)].push_back({static_cast<int>(ei), false});
  }
  return slots;
}

} // namespace

void secular_matrix_with_derivative(const MetricGraph& graph, Complex k,
                                    Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS) {
  if (!graph.is_compact())
    throw std::invalid_argument("secular_matrix: graph must be compact");
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("secular_matrix: k = 0 is degenerate (handled analytically)");

  const auto& edges = graph.edges();
  const int n = 2 * static_cast<int>(edges.size());
  S = Eigen::MatrixXcd::Zero(n, n);
  dS = Eigen::MatrixXcd::Zero(n, n);

  // Value and (1/k)-scaled inward derivative of the ansatz at a slot, as
  // rows over (a_e, b_e), plus their k-derivatives.
  auto value_row = [&](const Slot& s, Eigen::Vector2cd& row, Eigen::Vector2cd& drow) {
    if (s.at_start) {
      row = {1.0, 0.0};
      drow = {0.0, 0.0};
    } else {
      const double l = edges[s.edge_index].length;
      row = {std::cos(k * l), std::sin(k * l)};
      drow = {-l * std::sin(k * l), l * std::cos(k * l)};
    }
  };
  auto deriv_row = [&](const Slot& s, Eigen::Vector2cd& row, Eigen::Vector2cd& drow) {
    if (s.at_start) {
      row = {0.0, -1.0}; // -f'(0)/k
      drow = {0.0, 0.0};
    } else {
      const double l = edges[s.edge_index].length;
      row = {-std::sin(k * l), std::cos(k * l)}; // +f'(l)/k
      drow = {-l * std::cos(k * l), -l * std::sin(k * l)};
    }
  };

  int row = 0;
  for (const auto& slots : vertex_slots(graph)) {
    // deg-1 continuity rows
    for (size_t i = 0; i + 1 < slots.size(); ++i) {
      Eigen::Vector2cd va, dva, vb, dvb;
      value_row(slots[i], va, dva);
      value_row(slots[i + 1], vb, dvb);
      S.block<1, 2>(row, 2 * slots[i].edge_index) += va.transpose();
      dS.block<1, 2>(row, 2 * slots[i].edge_index) += dva.transpose();
      S.block<1, 2>(row, 2 * slots[i + 1].edge_index) -= vb.transpose();
      dS.block<1, 2>(row, 2 * slots[i + 1].edge_index) -= dvb.transpose();
      ++row;
    }
    // Kirchhoff row
    for (const Slot& s : slots) {
      Eigen::Vector2cd r, dr;
      deriv_row(s, r, dr);
      S.block<1, 2>(row, 2 * s.edge_index) += r.transpose();
      dS.block<1, 2>(row, 2 * s.edge_index) += dr.transpose();
    }
    ++row;
  }
  if (row != n) throw std::logic_error("secular_matrix: row count mismatch");
}

Eigen::MatrixXcd secular_matrix(const MetricGraph& graph, Complex k) {
  Eigen::MatrixXcd S, dS;
  secular_matrix_with_derivative(graph, k, S, dS);
  return S;
}

namespace {

double sigma_min(const MetricGraph& graph, double k) {
  Eigen::MatrixXcd S = secular_matrix(graph, Complex(k, 0.0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
  return svd.singularValues().tail(1)(0);
}

// Golden-section minimization of sigma_min on [a, b] down to width tol.
double refine_root(const MetricGraph& graph, double a, double b, double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = sigma_min(graph, c);
  double fd = sigma_min(graph, d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = sigma_min(graph, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = sigma_min(graph, d);
    }
  }
  return 0.5 * (a + b);
}

} // namespace

SpectralResult eigenvalues(const MetricGraph& graph, double lambda_max,
                           const SecularOptions& opts) {
  if (!(lambda_max > 0.0)) throw std::invalid_argument("eigenvalues: lambda_max must be positive");
  if (!graph.is_compact()) throw std::invalid_argument("eigenvalues: graph must be compact");
  if (!graph.is_connected()) throw std::invalid_argument("eigenvalues: graph must be connected");

  SpectralResult result;
  result.method = SpectralMethod::Secular;
  result.entries.push_back({0.0, 1, false}); // constants

  const double total_len = graph.total_internal_length();
  const double step = M_PI / (opts.scan_step_factor * total_len);
  const double k_max = std::sqrt(lambda_max);

  // sigma_min scan over (0, k_max] plus one step of overshoot so boundary
  // roots still get a bracket. The scan also tracks ||dS/dk||_F, a
  // Lipschitz bound for sigma_min: a cell can contain a root only if one
  // of its endpoint values is below L * cell width, and exactly those
  // cells are subscanned at 32x resolution. This keeps root pairs closer
  // than the nominal step from hiding inside a single monotone descent.
  std::vector<double> ks, sig;
  double lipschitz = 0.0;
  for (double k = step; k <= k_max + step; k += step) {
    Eigen::MatrixXcd S, dS;
    secular_matrix_with_derivative(graph, Complex(k, 0.0), S, dS);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
    ks.push_back(k);
    sig.push_back(svd.singularValues().tail(1)(0));
    lipschitz = std::max(lipschitz, dS.norm());
  }

  auto is_root = [&](double k) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(secular_matrix(graph, Complex(k, 0.0)));
    const auto& s = svd.singularValues();
    return s(s.size() - 1) < opts.multiplicity_rel_tol * std::max(s(0), 1.0);
  };

  // Runs of consecutive flagged cells merge into one interval, so a root
  // near a shared cell endpoint is interior to its subscan and found once.
  std::vector<std::pair<double, double>> intervals;
  {
    size_t i = 0;
    while (i + 1 < ks.size()) {
      if (std::min(sig[i], sig[i + 1]) > 1.2 * lipschitz * step) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j + 1 < ks.size() && std::min(sig[j], sig[j + 1]) <= 1.2 * lipschitz * step) ++j;
      intervals.emplace_back(ks[i], ks[j]);
      i = j;
    }
  }

  std::vector<double> roots;
  for (const auto& [a, b] : intervals) {
    const int n_sub = std::max(2, static_cast<int>(std::ceil(32.0 * (b - a) / step)));
    std::vector<double> fk(n_sub + 1), fs(n_sub + 1);
    for (int j = 0; j <= n_sub; ++j) {
      fk[j] = a + (b - a) * j / n_sub;
      fs[j] = sigma_min(graph, fk[j]);
    }
    for (int j = 0; j <= n_sub; ++j) {
      const double left = (j == 0) ? std::numeric_limits<double>::infinity() : fs[j - 1];
      const double right = (j == n_sub) ? std::numeric_limits<double>::infinity() : fs[j + 1];
      if (!(fs[j] < left && fs[j] <= right)) continue;
      const double lo = (j == 0) ? fk[0] : fk[j - 1];
      const double hi = (j == n_sub) ? fk[n_sub] : fk[j + 1];
      const double k_star = refine_root(graph, lo, hi, opts.refine_tol);
      if (is_root(k_star)) roots.push_back(k_star);
    }
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique_roots;
  for (double k : roots) {
    if (!unique_roots.empty() && k - unique_roots.back() < 1e-9) {
      result.warnings.push_back("scan step too coarse: refined roots collided near k = " +
                                std::to_string(k));
      continue;
    }
    unique_roots.push_back(k);
  }

  for (double k : unique_roots) {
    if (k * k > lambda_max * (1.0 + 1e-14)) continue;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(secular_matrix(graph, Complex(k, 0.0)));
    const auto& s = svd.singularValues();
    int mult = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) < opts.multiplicity_rel_tol * std::max(s(0), 1.0)) ++mult;
    bool flagged = false;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      // Borderline: singular value within a decade of the threshold.
      const double r = s(i) / (opts.multiplicity_rel_tol * std::max(s(0), 1.0));
      if (r >= 1.0 && r < 10.0) flagged = true;
    }
    result.entries.push_back({k * k, std::max(1, mult), flagged});
  }
  return result;
}

std::vector<SecularMode> secular_kernel(const MetricGraph& graph, double k,
                                        double multiplicity_rel_tol) {
  Eigen::MatrixXcd S = secular_matrix(graph, Complex(k, 0.0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const int n = static_cast<int>(s.size());
  std::vector<SecularMode> modes;
  for (int i = 0; i < n; ++i) {
    if (s(i) >= multiplicity_rel_tol * std::max(s(0), 1.0)) continue;
    // The matrix at a real root has a real kernel; rotate the phase so the
    // dominant component is real, then drop the imaginary part.
    Eigen::VectorXcd v = svd.matrixV().col(i);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::abs(v(imax)) / v(imax);
    SecularMode mode;
    mode.k = k;
    for (int e = 0; e < n / 2; ++e)
      mode.coeffs.push_back(Eigen::Vector2d(v(2 * e).real(), v(2 * e + 1).real()));
    modes.push_back(std::move(mode));
  }
  // Exact L2 Gram-Schmidt so degenerate kernels come out orthonormal.
  std::vector<SecularMode> ortho;
  for (auto& m : modes) {
    for (const auto& p : ortho) {
      const double c = exact_inner(graph, m, p);
      for (size_t e = 0; e < m.coeffs.size(); ++e) m.coeffs[e] -= c * p.coeffs[e];
    }
    const double nrm = std::sqrt(exact_norm_sq(graph, m));
    if (nrm < 1e-10) continue;
    for (auto& c : m.coeffs) c /= nrm;
    ortho.push_back(std::move(m));
  }
  return ortho;
}

namespace {

// Exact integrals of products of cos(kx), sin(kx) over [0, l].
struct TrigIntegrals {
  double cc, ss, cs;
};

TrigIntegrals trig_integrals(double k, double l) {
  TrigIntegrals t;
  const double s2 = std::sin(2.0 * k * l), c2 = std::cos(2.0 * k * l);
  t.cc = 0.5 * l + s2 / (4.0 * k);
  t.ss = 0.5 * l - s2 / (4.0 * k);
  t.cs = (1.0 - c2) / (4.0 * k);
  return t;
}

} // namespace

double exact_inner(const MetricGraph& graph, const SecularMode& f, const SecularMode& g) {
  if (f.k != g.k) throw std::invalid_argument("exact_inner: modes at different k");
  double total = 0.0;
  const auto& edges = graph.edges();
  for (size_t e = 0; e < edges.size(); ++e) {
    const TrigIntegrals t = trig_integrals(f.k, edges[e].length);
    const double a1 = f.coeffs[e](0), b1 = f.coeffs[e](1);
    const double a2 = g.coeffs[e](0), b2 = g.coeffs[e](1);
    total += a1 * a2 * t.cc + (a1 * b2 + b1 * a2) * t.cs + b1 * b2 * t.ss;
  }
  return total;
}

double exact_norm_sq(const MetricGraph& graph, const SecularMode& f) {
  return exact_inner(graph, f, f);
}

double exact_energy(const MetricGraph& graph, const SecularMode& f, const SecularMode& g) {
  if (f.k != g.k) throw std::invalid_argument("exact_energy: modes at different k");
  double total = 0.0;
  const double k2 = f.k * f.k;
  const auto& edges = graph.edges();
  for (size_t e = 0; e < edges.size(); ++e) {
    const TrigIntegrals t = trig_integrals(f.k, edges[e].length);
    const double a1 = f.coeffs[e](0), b1 = f.coeffs[e](1);
    const double a2 = g.coeffs[e](0), b2 = g.coeffs[e](1);
    total += k2 * (a1 * a2 * t.ss - (a1 * b2 + b1 * a2) * t.cs + b1 * b2 * t.cc);
  }
  return total;
}

double exact_rayleigh(const MetricGraph& graph, const SecularMode& f) {
  return exact_energy(graph, f, f) / exact_norm_sq(graph, f);
}

GraphFunction eigenfunction(const MetricGraph& graph, double k, int index,
                            const std::vector<int>& divisions) {
  const auto modes = secular_kernel(graph, k);
  if (index < 0 || index >= static_cast<int>(modes.size()))
    throw std::out_of_range("eigenfunction: kernel index exceeds multiplicity");
  const SecularMode& m = modes[index];
  return sample_function(graph, divisions, [&](int e, double x) {
    return m.coeffs[e](0) * std::cos(k * x) + m.coeffs[e](1) * std::sin(k * x);
  });
}

GraphFunction eigenfunction(const MetricGraph& graph, double k, int index) {
  std::vector<int> divisions;
  for (const Edge& e : graph.edges())
    divisions.push_back(std::max(16, static_cast<int>(std::ceil(e.length * 16 / graph.l0()))));
  return eigenfunction(graph, k, index, divisions);
}

ComparisonBracket comparison_bounds(double lambda_k0, double delta1, double delta2) {
  if (delta1 < 0.0 || delta2 < 0.0)
    throw std::invalid_argument("comparison_bounds: defects must be nonnegative");
  const double w = 1.0 + lambda_k0;
  const double den_upper = 1.0 - delta1 * w;
  const double den_lower = 1.0 - (delta1 + delta2 * (1.0 + delta1)) * w;
  if (den_upper <= 0.0 || den_lower <= 0.0)
    throw std::domain_error("comparison_bounds: bound not applicable at this lambda");
  ComparisonBracket b;
  b.upper = 2.0 * w * delta1 / den_upper;
  b.lower = -2.0 * w * (1.0 + delta1) * delta2 / den_lower;
  return b;
}

} // namespace qgt
