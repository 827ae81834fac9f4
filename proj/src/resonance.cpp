#include "qgt/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qgt {

namespace {

struct ColumnLayout {
  std::vector<int> pair_col;  // edge index -> first column of (a, b), or -1
  std::vector<int> lead_col;  // edge index -> lead amplitude column, or -1
  int size = 0;
};

ColumnLayout layout_columns(const MetricGraph& graph) {
  ColumnLayout lay;
  const auto& edges = graph.edges();
  lay.pair_col.assign(edges.size(), -1);
  lay.lead_col.assign(edges.size(), -1);
  int col = 0;
  for (size_t ei = 0; ei < edges.size(); ++ei)
    if (!edges[ei].external) {
      lay.pair_col[ei] = col;
      col += 2;
    }
  for (size_t ei = 0; ei < edges.size(); ++ei)
    if (edges[ei].external) lay.lead_col[ei] = col++;
  lay.size = col;
  return lay;
}

} // namespace

void outgoing_secular_with_derivative(const MetricGraph& graph, Complex k,
                                      Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS) {
  if (graph.is_compact())
    throw std::invalid_argument("outgoing_secular: graph has no leads (use secular_matrix)");
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("outgoing_secular: k = 0 is degenerate");

  const auto& edges = graph.edges();
  const ColumnLayout lay = layout_columns(graph);
  S = Eigen::MatrixXcd::Zero(lay.size, lay.size);
  dS = Eigen::MatrixXcd::Zero(lay.size, lay.size);
  const Complex i1(0.0, 1.0);

  // Value rows and (1/k)-scaled inward-derivative rows at an edge endpoint.
  // Lead ansatz contributes value 1 and scaled inward derivative -i at its
  // vertex, both k-independent.
  struct SlotRef {
    int edge_index;
    bool at_start;
  };
  auto add_value = [&](int row, const SlotRef& s, double sign) {
    const Edge& e = edges[s.edge_index];
    if (e.external) {
      S(row, lay.lead_col[s.edge_index]) += sign;
      return;
    }
    const int c = lay.pair_col[s.edge_index];
    if (s.at_start) {
      S(row, c) += sign;
    } else {
      const double l = e.length;
      S(row, c) += sign * std::cos(k * l);
      S(row, c + 1) += sign * std::sin(k * l);
      dS(row, c) += sign * (-l * std::sin(k * l));
      dS(row, c + 1) += sign * (l * std::cos(k * l));
    }
  };
  auto add_deriv = [&](int row, const SlotRef& s) {
    const Edge& e = edges[s.edge_index];
    if (e.external) {
      S(row, lay.lead_col[s.edge_index]) += -i1;
      return;
    }
    const int c = lay.pair_col[s.edge_index];
    if (s.at_start) {
      S(row, c + 1) += -1.0;
    } else {
      const double l = e.length;
      S(row, c) += -std::sin(k * l);
      S(row, c + 1) += std::cos(k * l);
      dS(row, c) += -l * std::cos(k * l);
      dS(row, c + 1) += -l * std::sin(k * l);
    }
  };

  int row = 0;
  for (VertexId v : graph.vertices()) {
    std::vector<SlotRef> slots;
    for (size_t ei = 0; ei < edges.size(); ++ei) {
      if (edges[ei].from == v) slots.push_back({static_cast<int>(ei), true});
      if (!edges[ei].external && edges[ei].to == v) slots.push_back({static_cast<int>(ei), false});
    }
    for (size_t i = 0; i + 1 < slots.size(); ++i) {
      add_value(row, slots[i], 1.0);
      add_value(row, slots[i + 1], -1.0);
      ++row;
    }
    for (const SlotRef& s : slots) add_deriv(row, s);
    ++row;
  }
  if (row != lay.size) throw std::logic_error("outgoing_secular: row count mismatch");
}

Eigen::MatrixXcd outgoing_secular(const MetricGraph& graph, Complex k) {
  Eigen::MatrixXcd S, dS;
  outgoing_secular_with_derivative(graph, k, S, dS);
  return S;
}

Complex outgoing_logdet_derivative(const MetricGraph& graph, Complex k) {
  Eigen::MatrixXcd S, dS;
  outgoing_secular_with_derivative(graph, k, S, dS);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
  return lu.solve(dS).trace();
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1], cached per point count.
struct GaussRule {
  std::vector<double> nodes, weights;
};

const GaussRule& gauss_rule(int n) {
  static std::vector<std::pair<int, GaussRule>> cache;
  for (const auto& entry : cache)
    if (entry.first == n) return entry.second;
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration from the Chebyshev estimate.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  cache.emplace_back(n, std::move(rule));
  return cache.back().second;
}

// Known roots removed from the log-derivative so a contour may pass
// through them: integrand = tr(S^{-1} S') - sum m_j / (k - z_j).
using Deflation = std::vector<std::pair<Complex, int>>;

Complex deflated_logdet_derivative(const MetricGraph& graph, Complex k, const Deflation& defl) {
  Complex v = outgoing_logdet_derivative(graph, k);
  for (const auto& [z, m] : defl) v -= static_cast<double>(m) / (k - z);
  return v;
}

Complex integrate_segment(const MetricGraph& graph, Complex z0, Complex z1, int npts,
                          const Deflation& defl) {
  const GaussRule& rule = gauss_rule(npts);
  const Complex half = 0.5 * (z1 - z0);
  const Complex mid = 0.5 * (z0 + z1);
  Complex sum(0.0, 0.0);
  for (int i = 0; i < npts; ++i)
    sum += rule.weights[i] * deflated_logdet_derivative(graph, mid + rule.nodes[i] * half, defl);
  return sum * half;
}

// Winding integral over the rectangle boundary divided by 2*pi*i. Returns
// the raw (complex) value; the caller decides whether it is close enough
// to an integer.
Complex winding(const MetricGraph& graph, const KWindow& w, int npts, const Deflation& defl) {
  const Complex bl(w.re_min, w.im_min), br(w.re_max, w.im_min);
  const Complex tr(w.re_max, w.im_max), tl(w.re_min, w.im_max);
  Complex total =
      integrate_segment(graph, bl, br, npts, defl) + integrate_segment(graph, br, tr, npts, defl) +
      integrate_segment(graph, tr, tl, npts, defl) + integrate_segment(graph, tl, bl, npts, defl);
  return total / Complex(0.0, 2.0 * M_PI);
}

// Integer winding count with retry-on-perturbation when a root sits on or
// near the contour.
int robust_count(const MetricGraph& graph, KWindow w, const ResonanceOptions& opts,
                 const Deflation& defl) {
  double grow = 0.0;
  for (int attempt = 0; attempt <= opts.max_contour_retries; ++attempt) {
    KWindow wp{w.re_min - grow, w.re_max + grow, w.im_min - grow, w.im_max + grow};
    const Complex c = winding(graph, wp, opts.gauss_points, defl);
    const double n = std::round(c.real());
    if (std::abs(c - Complex(n, 0.0)) < 0.05 && n >= 0.0) return static_cast<int>(n);
    grow = (grow == 0.0) ? 1e-6 * (1.0 + w.diameter()) : grow * 10.0;
  }
  throw std::runtime_error("find_resonances: contour integral failed to settle near a root");
}

struct Cluster {
  Complex center;
  int count;
};

void isolate(const MetricGraph& graph, const KWindow& w, int count, const ResonanceOptions& opts,
             const Deflation& defl, std::vector<Cluster>& out) {
  if (count == 0) return;
  if (w.diameter() <= opts.isolation_diameter) {
    out.push_back({Complex(0.5 * (w.re_min + w.re_max), 0.5 * (w.im_min + w.im_max)), count});
    return;
  }
  const bool split_re = (w.re_max - w.re_min) >= (w.im_max - w.im_min);
  // Shift the split line when a root happens to sit on it.
  for (int attempt = 0; attempt <= opts.max_contour_retries; ++attempt) {
    const double frac = 0.5 + 0.07 * attempt;
    KWindow a = w, b = w;
    if (split_re) {
      const double c = w.re_min + frac * (w.re_max - w.re_min);
      a.re_max = c;
      b.re_min = c;
    } else {
      const double c = w.im_min + frac * (w.im_max - w.im_min);
      a.im_max = c;
      b.im_min = c;
    }
    int na, nb;
    try {
      na = robust_count(graph, a, opts, defl);
      nb = robust_count(graph, b, opts, defl);
    } catch (const std::runtime_error&) {
      continue;
    }
    if (na + nb != count) continue;
    isolate(graph, a, na, opts, defl, out);
    isolate(graph, b, nb, opts, defl, out);
    return;
  }
  throw std::runtime_error("find_resonances: could not isolate roots by bisection");
}

double outgoing_sigma_min(const MetricGraph& graph, Complex k) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(outgoing_secular(graph, k));
  return svd.singularValues().tail(1)(0);
}

double axis_golden_refine(const MetricGraph& graph, double a, double b) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = outgoing_sigma_min(graph, Complex(c, 0.0));
  double fd = outgoing_sigma_min(graph, Complex(d, 0.0));
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = outgoing_sigma_min(graph, Complex(c, 0.0));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = outgoing_sigma_min(graph, Complex(d, 0.0));
    }
  }
  return 0.5 * (a + b);
}

// Real-axis roots of det S (embedded eigenvalues) by the same certified
// sigma_min scan as the compact solver: a Lipschitz bound on dS/dk clears
// cells that provably hold no root; flagged runs are subscanned finely.
// These are located before any contour work so the contour integrand can
// be deflated and run along the axis itself.
std::vector<std::pair<double, int>> axis_roots(const MetricGraph& graph, double re_min,
                                               double re_max) {
  const double scan_len = 1.0 + graph.total_internal_length();
  const double step = M_PI / (4.0 * scan_len);
  std::vector<double> ks, sig;
  double lipschitz = 0.0;
  for (double k = re_min; k <= re_max + 1e-12; k += step) {
    Eigen::MatrixXcd S, dS;
    outgoing_secular_with_derivative(graph, Complex(k, 0.0), S, dS);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
    ks.push_back(k);
    sig.push_back(svd.singularValues().tail(1)(0));
    lipschitz = std::max(lipschitz, dS.norm());
  }
  std::vector<std::pair<double, double>> intervals;
  for (size_t i = 0; i + 1 < ks.size();) {
    if (std::min(sig[i], sig[i + 1]) > 1.2 * lipschitz * step) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < ks.size() && std::min(sig[j], sig[j + 1]) <= 1.2 * lipschitz * step) ++j;
    intervals.emplace_back(ks[i], ks[j]);
    i = j;
  }

  std::vector<std::pair<double, int>> out;
  for (const auto& [a, b] : intervals) {
    const int n_sub = std::max(2, static_cast<int>(std::ceil(32.0 * (b - a) / step)));
    std::vector<double> fk(n_sub + 1), fs(n_sub + 1);
    for (int j = 0; j <= n_sub; ++j) {
      fk[j] = a + (b - a) * j / n_sub;
      fs[j] = outgoing_sigma_min(graph, Complex(fk[j], 0.0));
    }
    for (int j = 0; j <= n_sub; ++j) {
      const double left = (j == 0) ? std::numeric_limits<double>::infinity() : fs[j - 1];
      const double right = (j == n_sub) ? std::numeric_limits<double>::infinity() : fs[j + 1];
      if (!(fs[j] < left && fs[j] <= right)) continue;
      const double k_star =
          axis_golden_refine(graph, (j == 0) ? fk[0] : fk[j - 1], (j == n_sub) ? fk[n_sub] : fk[j + 1]);
      if (k_star < re_min - 1e-9 || k_star > re_max + 1e-9) continue;
      if (!out.empty() && std::abs(k_star - out.back().first) < 1e-9) continue;
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(outgoing_secular(graph, Complex(k_star, 0.0)));
      const auto& s = svd.singularValues();
      const double scale = std::max(s(0), 1.0);
      int mult = 0;
      for (Eigen::Index jj = 0; jj < s.size(); ++jj)
        if (s(jj) < 1e-8 * scale) ++mult;
      if (mult > 0) out.emplace_back(k_star, mult);
    }
  }
  return out;
}

Resonance polish_root(const MetricGraph& graph, Complex seed, int mult,
                      const ResonanceOptions& opts, const Deflation& defl = {}) {
  // Newton on the (deflated) log-derivative with multiplicity m:
  // k <- k - m / (log det)'(k). Deflation keeps already-located roots from
  // capturing the iteration.
  Complex k = seed;
  for (int iter = 0; iter < 100; ++iter) {
    const Complex lder = deflated_logdet_derivative(graph, k, defl);
    const Complex dk = Complex(mult, 0.0) / lder;
    k -= dk;
    if (std::abs(dk) < opts.newton_tol) break;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(outgoing_secular(graph, k));
  const auto& s = svd.singularValues();
  Resonance r;
  r.k = k;
  r.lambda = k * k;
  r.multiplicity = mult;
  r.residual = s(s.size() - 1) / std::max(s(0), 1.0);
  r.embedded = std::abs(r.lambda.imag()) <= opts.embedded_imag_tol;
  const double im = std::abs(r.lambda.imag());
  r.borderline = im > 0.1 * opts.embedded_imag_tol && im < 10.0 * opts.embedded_imag_tol;
  return r;
}

void validate_window(const MetricGraph& graph, const KWindow& window) {
  if (graph.is_compact())
    throw std::invalid_argument("find_resonances: graph has no leads");
  if (window.im_max > 1e-12)
    throw std::invalid_argument("find_resonances: window must lie in the closed lower half-plane");
  if (window.re_min >= window.re_max || window.im_min >= window.im_max)
    throw std::invalid_argument("find_resonances: empty window");
  if (window.re_min <= 0.0 && window.re_max >= 0.0)
    throw std::invalid_argument("find_resonances: window must avoid k = 0");
}

} // namespace

int count_zeros(const MetricGraph& graph, const KWindow& window, const ResonanceOptions& opts) {
  validate_window(graph, window);
  Deflation defl;
  int axis_count = 0;
  KWindow w = window;
  if (window.im_max >= -1e-8) {
    w.im_max = 0.0;
    for (const auto& [k, m] : axis_roots(graph, window.re_min, window.re_max)) {
      defl.emplace_back(Complex(k, 0.0), m);
      axis_count += m;
    }
  }
  return axis_count + robust_count(graph, w, opts, defl);
}

std::vector<Resonance> find_resonances(const MetricGraph& graph, const KWindow& window,
                                       const ResonanceOptions& opts) {
  validate_window(graph, window);

  // Real-axis roots first (sigma_min scan); the contour integrand is then
  // deflated by them so the rectangle may run along the axis itself.
  Deflation defl;
  std::vector<Resonance> roots;
  KWindow w = window;
  if (window.im_max >= -1e-8) {
    w.im_max = 0.0;
    for (const auto& [k, m] : axis_roots(graph, window.re_min, window.re_max)) {
      defl.emplace_back(Complex(k, 0.0), m);
      roots.push_back(polish_root(graph, Complex(k, 0.0), m, opts));
    }
  }

  const int total = robust_count(graph, w, opts, defl);
  std::vector<Cluster> clusters;
  isolate(graph, w, total, opts, defl, clusters);

  int refined_total = 0;
  for (const Cluster& c : clusters) {
    const Resonance r = polish_root(graph, c.center, c.count, opts, defl);
    refined_total += c.count;
    if (window.contains(r.k, 1e-8)) roots.push_back(r);
  }
  if (refined_total != total)
    throw std::runtime_error("find_resonances: count mismatch after refinement");

  std::sort(roots.begin(), roots.end(),
            [](const Resonance& a, const Resonance& b) { return a.k.real() < b.k.real(); });
  return roots;
}

double EssentialRay::distance(Complex lambda) const {
  const Complex w = lambda * std::polar(1.0, -angle);
  if (w.real() <= 0.0) return std::abs(w);
  return std::abs(w.imag());
}

bool EssentialRay::masks(Complex lambda, double width) const {
  return distance(lambda) <= width * (1.0 + std::abs(lambda));
}

EssentialRay essential_ray(Complex theta, double lambda_max) {
  EssentialRay ray;
  ray.angle = -2.0 * theta.imag();
  ray.lambda_max = lambda_max;
  return ray;
}

} // namespace qgt
