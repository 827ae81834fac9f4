#include "qgt/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "qgt/secular.hpp"

namespace qgt {

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

constexpr double kNoiseFloor = 1e-9;

// Secular spectrum expanded to at least k_max + cluster margin entries.
std::vector<double> reference_spectrum(const MetricGraph& graph, int k_max) {
  const double total = graph.total_internal_length();
  double lambda_max = std::pow((k_max + 2) * M_PI / total, 2) + 10.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    SpectralResult res = eigenvalues(graph, lambda_max);
    std::vector<double> ex = res.expanded();
    if (static_cast<int>(ex.size()) >= k_max + 2) return ex;
    lambda_max *= 2.0;
  }
  throw std::runtime_error("reference_spectrum: could not cover the requested index range");
}

double slope_or_inf(const std::vector<double>& eps, const std::vector<double>& vals,
                    std::vector<std::string>& warnings, const std::string& label) {
  double vmax = 0.0;
  for (double v : vals) vmax = std::max(vmax, std::abs(v));
  if (vmax <= kNoiseFloor) {
    warnings.push_back(label + ": differences at solver noise level; slope reported as inf");
    return std::numeric_limits<double>::infinity();
  }
  std::vector<double> abs_vals;
  for (double v : vals) abs_vals.push_back(std::max(std::abs(v), 1e-300));
  return fit_loglog_slope(eps, abs_vals);
}

} // namespace

ConvergenceStudy run_convergence_study(const MetricGraph& graph, const ConvergenceOptions& opts) {
  if (opts.eps_list.empty()) throw std::invalid_argument("run_convergence_study: empty eps list");
  for (size_t i = 1; i < opts.eps_list.size(); ++i)
    if (opts.eps_list[i] >= opts.eps_list[i - 1])
      throw std::invalid_argument("run_convergence_study: eps list must be decreasing");
  if (opts.k_max < 1) throw std::invalid_argument("run_convergence_study: k_max must be >= 1");

  ConvergenceStudy study;
  const std::vector<double> lambda0 = reference_spectrum(graph, opts.k_max);
  const double lambda_need = lambda0[opts.k_max - 1] * 1.5 + 5.0;

  struct PerEps {
    double eps;
    Eigen::VectorXd fine, coarse;
    double quasi = 0, quasi_c = 0, sandwich = 0, sandwich_c = 0, proj = 0, eigfun = 0;
  };
  std::vector<PerEps> data;
  std::vector<std::unique_ptr<Coupler>> fine_couplers;

  bool templates_done = false;
  for (double eps : opts.eps_list) {
    PerEps row;
    row.eps = eps;
    auto mesh = std::make_unique<FatGraphMesh>(build_mesh(graph, eps, eps / opts.h_divisor));
    if (!templates_done) {
      study.templates = compute_template_constants(*mesh);
      templates_done = true;
    }
    auto coupler = std::make_unique<Coupler>(graph, *mesh);
    row.fine = coupler->manifold_eigs(lambda_need).values;
    if (opts.compute_defects) {
      row.quasi = coupler->quasi_unitarity_defect(opts.defect_modes);
      row.sandwich = coupler->sandwich_defect(opts.defect_modes);
    }

    if (opts.refinement_gate) {
      // The gate compares the coarse run (h) against the refined run (h/2);
      // the refined values are the reported ones. The refined coupler owns
      // its mesh so it can serve the projection defects afterwards.
      auto refined = std::make_unique<FatGraphMesh>(build_mesh_refined(*mesh));
      auto fine_coupler = std::make_unique<Coupler>(graph, *refined);
      fine_coupler->keep_mesh(std::move(refined));
      row.coarse = row.fine;
      row.fine = fine_coupler->manifold_eigs(lambda_need).values;
      if (opts.compute_defects) {
        row.quasi_c = row.quasi;
        row.sandwich_c = row.sandwich;
        row.quasi = fine_coupler->quasi_unitarity_defect(opts.defect_modes);
        row.sandwich = fine_coupler->sandwich_defect(opts.defect_modes);
      }
      fine_couplers.push_back(std::move(fine_coupler));
    } else {
      coupler->keep_mesh(std::move(mesh));
      fine_couplers.push_back(std::move(coupler));
    }
    data.push_back(std::move(row));
  }

  if (opts.compute_projection) {
    // One interval around the first nonzero graph eigenvalue cluster, fixed
    // across the sweep and separated from every computed spectrum.
    double cluster = 0.0;
    for (double v : lambda0)
      if (v > 1e-9) {
        cluster = v;
        break;
      }
    double cluster_top = cluster;
    double next_distinct = lambda0.back();
    for (double v : lambda0)
      if (v > cluster_top + 1e-6 * (1.0 + cluster_top)) {
        next_distinct = v;
        break;
      } else if (v > 1e-9) {
        cluster_top = std::max(cluster_top, v);
      }
    const int m0 = static_cast<int>(std::count_if(lambda0.begin(), lambda0.end(), [&](double v) {
      return v > 1e-9 && v <= cluster_top + 1e-6 * (1.0 + cluster_top);
    }));
    double lo = 0.5 * cluster;
    double hi = 0.5 * (cluster_top + next_distinct);
    for (const PerEps& d : data) {
      Eigen::Index i2 = 0;
      while (i2 < d.fine.size() && d.fine(i2) <= 1e-6) ++i2;
      if (i2 < d.fine.size()) lo = std::min(lo, 0.5 * d.fine(i2));
      const Eigen::Index inext = i2 + m0;
      if (inext < d.fine.size())
        hi = std::min(hi, 0.5 * (d.fine(inext - 1) + d.fine(inext)));
    }
    for (size_t i = 0; i < data.size(); ++i) {
      auto pd = fine_couplers[i]->projection_and_eigenfunction_defect(lo, hi);
      data[i].proj = pd.projection;
      data[i].eigfun = pd.eigenfunction;
      for (const auto& w : pd.warnings) study.warnings.push_back(w);
    }
  }
  fine_couplers.clear();

  for (const PerEps& d : data) {
    for (int k = 1; k <= opts.k_max; ++k) {
      StudyRow row;
      row.eps = d.eps;
      row.k = k;
      row.lambda0 = lambda0[k - 1];
      row.lambda_eps = (k - 1 < d.fine.size()) ? d.fine(k - 1) : std::nan("");
      row.lambda_eps_coarse =
          (d.coarse.size() > 0 && k - 1 < d.coarse.size()) ? d.coarse(k - 1) : row.lambda_eps;
      row.diff = row.lambda_eps - row.lambda0;
      const double dc = row.lambda_eps_coarse - row.lambda0;
      row.gate_ratio = (std::abs(row.diff) > kNoiseFloor)
                           ? std::abs(dc - row.diff) / std::abs(row.diff)
                           : 0.0;
      if (opts.refinement_gate && row.gate_ratio > 0.10)
        study.warnings.push_back("refinement gate exceeded 10% at eps = " +
                                 std::to_string(d.eps) + ", k = " + std::to_string(k));
      study.rows.push_back(row);
    }
    DefectRow drow;
    drow.eps = d.eps;
    drow.modes_used = opts.defect_modes;
    drow.quasi = d.quasi;
    drow.quasi_coarse = d.quasi_c;
    drow.sandwich = d.sandwich;
    drow.sandwich_coarse = d.sandwich_c;
    drow.proj = d.proj;
    drow.eigfun = d.eigfun;
    study.defects.push_back(drow);
  }

  if (opts.eps_list.size() >= 2) {
    std::vector<double> eps(opts.eps_list.begin(), opts.eps_list.end());
    for (int k = 1; k <= opts.k_max; ++k) {
      std::vector<double> diffs;
      bool covered = true;
      for (const PerEps& d : data) {
        if (k - 1 >= d.fine.size()) {
          covered = false;
          break;
        }
        diffs.push_back(d.fine(k - 1) - lambda0[k - 1]);
      }
      if (!covered) {
        study.slope_per_k.push_back(std::nan(""));
        study.warnings.push_back("k = " + std::to_string(k) +
                                 ": eigenvalue missing on a mesh; slope not fitted");
        continue;
      }
      study.slope_per_k.push_back(
          slope_or_inf(eps, diffs, study.warnings, "k = " + std::to_string(k)));
    }
    if (opts.compute_defects) {
      std::vector<double> q, s;
      for (const PerEps& d : data) {
        q.push_back(d.quasi);
        s.push_back(d.sandwich);
      }
      study.slope_quasi = slope_or_inf(eps, q, study.warnings, "quasi-unitarity defect");
      study.slope_sandwich = slope_or_inf(eps, s, study.warnings, "sandwich defect");
    }
    if (opts.compute_projection) {
      std::vector<double> e;
      for (const PerEps& d : data) e.push_back(d.eigfun);
      study.slope_eigfun = slope_or_inf(eps, e, study.warnings, "eigenfunction defect");
    }
  }
  return study;
}

} // namespace qgt
