// qgt: spectra and resonances of quantum graphs and their fat-graph
// approximations. Subcommands: graph-spec, graph-res, fat-spec, converge,
// check. Outputs are CSV/JSON files plus a run manifest; numeric fields
// carry 12 significant digits and runs with the same manifest reproduce
// them byte for byte.

#include <chrono>
#include <complex>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "qgt/convergence.hpp"
#include "qgt/coupling.hpp"
#include "qgt/dilated.hpp"
#include "qgt/fat_mesh.hpp"
#include "qgt/io.hpp"
#include "qgt/resonance.hpp"
#include "qgt/secular.hpp"
#include "qgt/version.hpp"

namespace {

using namespace qgt;
namespace fs = std::filesystem;

struct GlobalOpts {
  int threads = 1;
  std::uint64_t seed = 12345;
  std::string outdir = ".";
  std::string log_level = "info";
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

MetricGraph load_and_validate(const std::string& path) {
  MetricGraph g = load_graph(path);
  const ValidationReport report = g.validate();
  if (!report.ok()) {
    std::cerr << "graph validation failed:\n";
    for (const auto& v : report.violations) std::cerr << "  - " << v << "\n";
    throw std::invalid_argument("invalid graph");
  }
  return g;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int run_graph_spec(const GlobalOpts& gopts, const std::string& graph_path, double lambda_max,
                   const std::string& emit) {
  Timer timer;
  MetricGraph g = load_and_validate(graph_path);
  SpectralResult res = eigenvalues(g, lambda_max);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  const fs::path out = fs::path(gopts.outdir) / (stem_of(graph_path) + "_spectrum.csv");
  CsvWriter csv({"index", "lambda", "multiplicity"});
  int index = 1;
  for (const auto& e : res.entries) {
    csv.add_row({std::to_string(index), format_sig(e.lambda), std::to_string(e.multiplicity)});
    index += e.multiplicity;
  }
  RunManifest manifest;
  manifest.command = "graph-spec";
  manifest.graph_file = graph_path;
  manifest.graph_hash = file_hash(graph_path);
  manifest.parameters = {{"lambda_max", lambda_max}};
  manifest.tolerances = {{"root_refine", 1e-12}, {"multiplicity_rel", 1e-8}};
  manifest.seed = gopts.seed;

  if (emit.find("csv") != std::string::npos) {
    csv.write(out);
    manifest.outputs.push_back(out.string());
    std::cout << "wrote " << out.string() << "\n";
  }
  if (emit.find("json") != std::string::npos) {
    nlohmann::json j = nlohmann::json::array();
    int idx = 1;
    for (const auto& e : res.entries) {
      j.push_back({{"index", idx}, {"lambda", e.lambda}, {"multiplicity", e.multiplicity}});
      idx += e.multiplicity;
    }
    const fs::path jout = fs::path(gopts.outdir) / (stem_of(graph_path) + "_spectrum.json");
    write_text_atomic(jout, j.dump(2) + "\n");
    manifest.outputs.push_back(jout.string());
    std::cout << "wrote " << jout.string() << "\n";
  }
  manifest.wall_seconds = timer.seconds();
  const fs::path mpath = fs::path(gopts.outdir) / (stem_of(graph_path) + "_spectrum.manifest.json");
  manifest.write(mpath);
  return 0;
}

int run_graph_res(const GlobalOpts& gopts, const std::string& graph_path,
                  const std::string& window_spec, const std::string& theta_spec, bool oracle,
                  double oracle_L, double oracle_h) {
  Timer timer;
  MetricGraph g = load_and_validate(graph_path);
  const auto w = parse_list(window_spec);
  if (w.size() != 4)
    throw std::invalid_argument("--window needs re_min,re_max,im_min,im_max");
  KWindow window{w[0], w[1], w[2], w[3]};
  const auto th = parse_list(theta_spec);
  const Complex theta(th.size() > 0 ? th[0] : 0.0, th.size() > 1 ? th[1] : 0.5);

  std::vector<Resonance> roots = find_resonances(g, window);
  CsvWriter csv({"re_k", "im_k", "re_lambda", "im_lambda", "multiplicity", "residual", "method"});
  for (const Resonance& r : roots)
    csv.add_row({format_sig(r.k.real()), format_sig(r.k.imag()), format_sig(r.lambda.real()),
                 format_sig(r.lambda.imag()), std::to_string(r.multiplicity),
                 format_sig(r.residual), r.embedded ? "secular-embedded" : "secular"});
  if (oracle) {
    for (const Resonance& r : roots) {
      const Complex lam =
          dilated_eigenvalue_extrapolated(g, theta, oracle_L, oracle_h, r.lambda, 3);
      Complex k = std::sqrt(lam);
      if (k.real() < 0.0) k = -k;
      csv.add_row({format_sig(k.real()), format_sig(k.imag()), format_sig(lam.real()),
                   format_sig(lam.imag()), std::to_string(r.multiplicity),
                   format_sig(std::abs(lam - r.lambda)), "dilated-fd"});
    }
  }

  const fs::path out = fs::path(gopts.outdir) / (stem_of(graph_path) + "_resonances.csv");
  csv.write(out);
  std::cout << "wrote " << out.string() << " (" << roots.size() << " roots)\n";

  RunManifest manifest;
  manifest.command = "graph-res";
  manifest.graph_file = graph_path;
  manifest.graph_hash = file_hash(graph_path);
  manifest.parameters = {{"window", w},
                         {"theta", {theta.real(), theta.imag()}},
                         {"oracle", oracle},
                         {"oracle_L", oracle_L},
                         {"oracle_h", oracle_h}};
  manifest.tolerances = {{"newton", 1e-10}, {"embedded_imag", 1e-7}};
  manifest.seed = gopts.seed;
  manifest.wall_seconds = timer.seconds();
  manifest.outputs.push_back(out.string());
  manifest.write(fs::path(gopts.outdir) / (stem_of(graph_path) + "_resonances.manifest.json"));
  return 0;
}

int run_fat_spec(const GlobalOpts& gopts, const std::string& graph_path, double eps, double hmesh,
                 double lambda_max, bool dump_mesh) {
  Timer timer;
  MetricGraph g = load_and_validate(graph_path);
  if (hmesh <= 0.0) hmesh = eps / 8.0;
  FatGraphMesh mesh = build_mesh(g, eps, hmesh);
  FemResult fem = neumann_eigs(mesh, lambda_max);
  for (const auto& w : fem.spectrum.warnings) std::cerr << "warning: " << w << "\n";

  const std::string stem = stem_of(graph_path);
  CsvWriter csv({"index", "lambda", "multiplicity", "flagged"});
  int index = 1;
  for (const auto& e : fem.spectrum.entries) {
    csv.add_row({std::to_string(index), format_sig(e.lambda), std::to_string(e.multiplicity),
                 e.flagged ? "1" : "0"});
    index += e.multiplicity;
  }
  const fs::path out = fs::path(gopts.outdir) / (stem + "_fat_spectrum.csv");
  csv.write(out);
  std::cout << "wrote " << out.string() << "\n";

  RunManifest manifest;
  manifest.command = "fat-spec";
  manifest.graph_file = graph_path;
  manifest.graph_hash = file_hash(graph_path);
  manifest.parameters = {{"eps", eps}, {"hmesh", hmesh}, {"lambda_max", lambda_max}};
  manifest.tolerances = {{"eig_residual", 1e-10}};
  manifest.seed = gopts.seed;
  manifest.outputs.push_back(out.string());

  if (dump_mesh) {
    CsvWriter nodes({"region", "kind", "owner", "node", "conf", "x", "y"});
    CsvWriter tris({"region", "n0", "n1", "n2"});
    for (size_t ri = 0; ri < mesh.regions.size(); ++ri) {
      const MeshRegion& r = mesh.regions[ri];
      for (Eigen::Index i = 0; i < r.mesh.n_nodes(); ++i)
        nodes.add_row({std::to_string(ri),
                       r.kind == MeshRegion::Kind::EdgeStrip ? "edge" : "vertex",
                       std::to_string(r.owner), std::to_string(r.offset + i),
                       std::to_string(mesh.conf_of_broken[r.offset + i]),
                       format_sig(r.mesh.nodes(i, 0)), format_sig(r.mesh.nodes(i, 1))});
      for (Eigen::Index t = 0; t < r.mesh.tris.rows(); ++t)
        tris.add_row({std::to_string(ri), std::to_string(r.offset + r.mesh.tris(t, 0)),
                      std::to_string(r.offset + r.mesh.tris(t, 1)),
                      std::to_string(r.offset + r.mesh.tris(t, 2))});
    }
    CsvWriter glue({"edge", "at_start", "vertex", "strip_node", "region_node"});
    for (const InterfaceGlue& gl : mesh.interfaces)
      for (const auto& [a, b] : gl.pairs)
        glue.add_row({std::to_string(gl.edge_index), gl.at_start ? "1" : "0",
                      std::to_string(gl.vertex_index), std::to_string(a), std::to_string(b)});
    const fs::path pn = fs::path(gopts.outdir) / (stem + "_mesh_nodes.csv");
    const fs::path pt = fs::path(gopts.outdir) / (stem + "_mesh_triangles.csv");
    const fs::path pg = fs::path(gopts.outdir) / (stem + "_mesh_interfaces.csv");
    nodes.write(pn);
    tris.write(pt);
    glue.write(pg);
    manifest.outputs.insert(manifest.outputs.end(), {pn.string(), pt.string(), pg.string()});
    std::cout << "wrote mesh dump (" << mesh.n_broken << " broken / " << mesh.n_conf
              << " conforming nodes)\n";
  }
  manifest.wall_seconds = timer.seconds();
  manifest.write(fs::path(gopts.outdir) / (stem + "_fat_spectrum.manifest.json"));
  return 0;
}

int run_converge(const GlobalOpts& gopts, const std::string& graph_path, const std::string& eps_csv,
                 int kmax, const std::string& checks, const std::string& emit) {
  Timer timer;
  MetricGraph g = load_and_validate(graph_path);
  ConvergenceOptions opts;
  opts.eps_list = parse_list(eps_csv);
  opts.k_max = kmax;
  ConvergenceStudy study = run_convergence_study(g, opts);
  for (const auto& w : study.warnings) std::cerr << "warning: " << w << "\n";

  const std::string stem = stem_of(graph_path);
  RunManifest manifest;
  manifest.command = "converge";
  manifest.graph_file = graph_path;
  manifest.graph_hash = file_hash(graph_path);
  manifest.parameters = {{"eps", opts.eps_list},
                         {"kmax", kmax},
                         {"h_divisor", opts.h_divisor},
                         {"checks", checks}};
  manifest.tolerances = {{"eig_residual", 1e-10}, {"power_iteration", 1e-8}};
  manifest.seed = gopts.seed;
  nlohmann::json tconsts = nlohmann::json::array();
  for (const auto& [deg, c] : study.templates.per_degree)
    tconsts.push_back({{"deg", deg}, {"volume", c.volume}, {"lambda2", c.lambda2}});
  manifest.parameters["template_constants"] = tconsts;

  if (emit.find("csv") != std::string::npos) {
    CsvWriter csv({"eps", "k", "lambda0", "lambda_eps", "diff", "slope"});
    for (const StudyRow& r : study.rows)
      csv.add_row({format_sig(r.eps), std::to_string(r.k), format_sig(r.lambda0),
                   format_sig(r.lambda_eps), format_sig(r.diff),
                   format_sig(study.slope_per_k.empty() ? std::nan("")
                                                        : study.slope_per_k[r.k - 1])});
    const fs::path p1 = fs::path(gopts.outdir) / (stem + "_study.csv");
    csv.write(p1);
    manifest.outputs.push_back(p1.string());

    CsvWriter dcsv({"eps", "delta_quasi", "delta_sandwich", "delta_proj", "delta_eigfun"});
    for (const DefectRow& r : study.defects)
      dcsv.add_row({format_sig(r.eps), format_sig(r.quasi), format_sig(r.sandwich),
                    format_sig(r.proj), format_sig(r.eigfun)});
    const fs::path p2 = fs::path(gopts.outdir) / (stem + "_defects.csv");
    dcsv.write(p2);
    manifest.outputs.push_back(p2.string());
    std::cout << "wrote " << p1.string() << " and " << p2.string() << "\n";
  }
  if (emit.find("json") != std::string::npos) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const StudyRow& r : study.rows)
      j["rows"].push_back({{"eps", r.eps},
                           {"k", r.k},
                           {"lambda0", r.lambda0},
                           {"lambda_eps", r.lambda_eps},
                           {"diff", r.diff},
                           {"gate_ratio", r.gate_ratio}});
    j["defects"] = nlohmann::json::array();
    for (const DefectRow& r : study.defects)
      j["defects"].push_back({{"eps", r.eps},
                              {"quasi", r.quasi},
                              {"sandwich", r.sandwich},
                              {"proj", r.proj},
                              {"eigfun", r.eigfun},
                              {"modes_used", r.modes_used}});
    j["slopes"] = study.slope_per_k;
    j["slope_quasi"] = study.slope_quasi;
    j["slope_sandwich"] = study.slope_sandwich;
    j["slope_eigfun"] = study.slope_eigfun;
    const fs::path p3 = fs::path(gopts.outdir) / (stem + "_study.json");
    write_text_atomic(p3, j.dump(2) + "\n");
    manifest.outputs.push_back(p3.string());
    std::cout << "wrote " << p3.string() << "\n";
  }

  // Optional inequality spot checks on the finest mesh.
  if (!checks.empty()) {
    const double eps = opts.eps_list.back();
    FatGraphMesh mesh = build_mesh(g, eps, eps / opts.h_divisor);
    Coupler coupler(g, mesh);
    std::mt19937_64 rng(gopts.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd uc(mesh.n_conf);
    for (Eigen::Index i = 0; i < mesh.n_conf; ++i) uc(i) = uni(rng);
    const Eigen::VectorXd u = mesh.prolong(uc);
    int violations = 0;
    if (checks.find("cn") != std::string::npos)
      violations += check_cn(coupler, u, study.templates).min_margin < -1e-10;
    if (checks.find("vx") != std::string::npos)
      violations += check_vx(coupler, u, study.templates).min_margin < -1e-10;
    if (checks.find("trace") != std::string::npos) {
      Eigen::VectorXd f(33);
      for (int i = 0; i < 33; ++i) f(i) = uni(rng);
      violations += check_trace(f, g.l0()).min_margin < -1e-10;
    }
    if (violations > 0) {
      std::cerr << "inequality checks: " << violations << " violation(s)\n";
      return 2;
    }
  }
  manifest.wall_seconds = timer.seconds();
  manifest.write(fs::path(gopts.outdir) / (stem + "_study.manifest.json"));
  return 0;
}

int run_check(const GlobalOpts& gopts, int n_samples) {
  // Full inequality suite on seeded random FEM functions over a 3-star fat
  // graph; reports the worst margin per mode.
  MetricGraph g = graphs::star(3);
  const double eps = 0.1;
  FatGraphMesh mesh = build_mesh(g, eps, eps / 8.0);
  Coupler coupler(g, mesh);
  TemplateSummary consts = compute_template_constants(mesh);
  std::mt19937_64 rng(gopts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  double worst_cn = std::numeric_limits<double>::infinity();
  double worst_vx = worst_cn, worst_trace = worst_cn;
  Eigen::SimplicialLDLT<SparseMat> smoother(mesh.A_conf + mesh.M_conf);
  int violations = 0;
  for (int s = 0; s < n_samples; ++s) {
    // Random conforming fields; every other sample smoothed.
    Eigen::VectorXd uc(mesh.n_conf);
    for (Eigen::Index i = 0; i < mesh.n_conf; ++i) uc(i) = uni(rng);
    if (s % 2 == 1) uc = smoother.solve(mesh.M_conf * uc);
    const Eigen::VectorXd u = mesh.prolong(uc);
    const double mcn = check_cn(coupler, u, consts).min_margin;
    const double mvx = check_vx(coupler, u, consts).min_margin;
    worst_cn = std::min(worst_cn, mcn);
    worst_vx = std::min(worst_vx, mvx);
    if (mcn < -1e-10 || mvx < -1e-10) ++violations;

    Eigen::VectorXd f(49);
    for (int i = 0; i < 49; ++i) f(i) = uni(rng);
    const double mtr = check_trace(f, g.l0()).min_margin;
    worst_trace = std::min(worst_trace, mtr);
    if (mtr < -1e-10) ++violations;
  }
  std::cout << "check: " << n_samples << " samples/mode, worst margins: cn=" << format_sig(worst_cn)
            << " vx=" << format_sig(worst_vx) << " trace=" << format_sig(worst_trace) << "\n";
  if (violations > 0) {
    std::cerr << "check: " << violations << " violations\n";
    return 2;
  }
  std::cout << "check: zero violations\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum graph spectra, resonances, and fat-graph convergence"};
  app.set_version_flag("--version", qgt::kVersion);
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand

  GlobalOpts gopts;
  app.add_option("--threads", gopts.threads, "worker threads (runs are sequential)");
  app.add_option("--seed", gopts.seed, "seed for randomized checks");
  app.add_option("--outdir", gopts.outdir, "output directory");
  app.add_option("--log-level", gopts.log_level, "log level");

  std::string graph_path, emit = "csv", window_spec, theta_spec = "0,0.5";
  std::string eps_csv = "0.2,0.1,0.05", checks;
  double lambda_max = 50.0, eps = 0.1, hmesh = 0.0, oracle_L = 20.0, oracle_h = 1.0 / 64.0;
  int kmax = 4, n_samples = 100;
  bool oracle = false, dump_mesh = false;

  auto* spec = app.add_subcommand("graph-spec", "eigenvalues of a compact quantum graph");
  spec->add_option("--graph", graph_path, "graph json file")->required();
  spec->add_option("--lambda-max", lambda_max, "spectral window upper end")->required();
  spec->add_option("--emit", emit, "csv, json, or csv,json");

  auto* res = app.add_subcommand("graph-res", "resonances via the outgoing secular function");
  res->add_option("--graph", graph_path, "graph json file")->required();
  res->add_option("--window", window_spec, "re_min,re_max,im_min,im_max in the k-plane")->required();
  res->add_option("--theta", theta_spec, "dilation parameter re,im for the oracle");
  res->add_flag("--oracle", oracle, "verify each root with the dilated FD pencil");
  res->add_option("--oracle-L", oracle_L, "oracle truncation length");
  res->add_option("--oracle-h", oracle_h, "oracle grid step");

  auto* fat = app.add_subcommand("fat-spec", "Neumann eigenvalues of the fat graph");
  fat->add_option("--graph", graph_path, "graph json file")->required();
  fat->add_option("--eps", eps, "cross-section width")->required();
  fat->add_option("--hmesh", hmesh, "target mesh size (default eps/8)");
  fat->add_option("--lambda-max", lambda_max, "spectral window upper end")->required();
  fat->add_flag("--dump-mesh", dump_mesh, "emit node/triangle/interface CSVs");

  auto* conv = app.add_subcommand("converge", "eps-sweep convergence study");
  conv->add_option("--graph", graph_path, "graph json file")->required();
  conv->add_option("--eps", eps_csv, "decreasing eps list");
  conv->add_option("--kmax", kmax, "eigenvalue indices to track");
  conv->add_option("--checks", checks, "inequality spot checks: cn,vx,trace");
  conv->add_option("--emit", emit, "csv, json, or csv,json");

  auto* chk = app.add_subcommand("check", "inequality suite on seeded random inputs");
  chk->add_option("--n", n_samples, "samples per mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (spec->parsed()) return run_graph_spec(gopts, graph_path, lambda_max, emit);
    if (res->parsed())
      return run_graph_res(gopts, graph_path, window_spec, theta_spec, oracle, oracle_L, oracle_h);
    if (fat->parsed())
      return run_fat_spec(gopts, graph_path, eps, hmesh, lambda_max, dump_mesh);
    if (conv->parsed()) return run_converge(gopts, graph_path, eps_csv, kmax, checks, emit);
    if (chk->parsed()) return run_check(gopts, n_samples);
  } catch (const qgt::GraphFormatError& e) {
    std::cerr << "graph format error: " << e.what() << "\n";
    return 65;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  }
  return 64;
}
