#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qgt/io.hpp"

using namespace qgt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / ("qgt_test_" + std::to_string(::getpid()) + "_" +
                                              std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QGT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("graph json round trip is lossless") {
  const fs::path dir = temp_dir();
  MetricGraph g = graphs::loop_with_lead();
  save_graph(g, dir / "g.json");
  MetricGraph back = load_graph(dir / "g.json");
  CHECK(back.vertices() == g.vertices());
  REQUIRE(back.edges().size() == g.edges().size());
  for (size_t i = 0; i < g.edges().size(); ++i) {
    CHECK(back.edges()[i].id == g.edges()[i].id);
    CHECK(back.edges()[i].from == g.edges()[i].from);
    CHECK(back.edges()[i].to == g.edges()[i].to);
    CHECK(back.edges()[i].external == g.edges()[i].external);
    if (!g.edges()[i].external) CHECK(back.edges()[i].length == g.edges()[i].length);
  }
  CHECK(back.d0() == g.d0());
  CHECK(back.l0() == g.l0());
  // Second save is byte-identical.
  save_graph(back, dir / "g2.json");
  CHECK(slurp(dir / "g.json") == slurp(dir / "g2.json"));
}

TEST_CASE("fractional lengths survive the round trip exactly") {
  const fs::path dir = temp_dir();
  MetricGraph g({0, 1}, {Edge::internal(0, 0, 1, 0.1 + 0.2)}, 2, 0.05);
  save_graph(g, dir / "g.json");
  CHECK(load_graph(dir / "g.json").edges()[0].length == 0.1 + 0.2);
}

TEST_CASE("parse errors carry a byte offset") {
  const fs::path dir = temp_dir();
  write_text_atomic(dir / "bad.json", "{\"vertices\": [0], \"edges\": [}");
  try {
    load_graph(dir / "bad.json");
    FAIL("expected GraphFormatError");
  } catch (const GraphFormatError& e) {
    CHECK(e.byte_offset > 0);
  }
}

TEST_CASE("semantic errors are format errors") {
  const fs::path dir = temp_dir();
  write_text_atomic(dir / "bad.json", "{\"vertices\": [0], \"edges\": [{\"id\":0}]}");
  CHECK_THROWS_AS(load_graph(dir / "bad.json"), GraphFormatError);
  write_text_atomic(dir / "bad2.json",
                    R"({"vertices":[0],"edges":[{"id":0,"from":0,"to":0,"length":"inf"}],"d0":2,"l0":1})");
  CHECK_THROWS_AS(load_graph(dir / "bad2.json"), GraphFormatError);
}

TEST_CASE("csv formatting uses 12 significant digits") {
  CHECK(format_sig(M_PI) == "3.14159265359");
  CHECK(format_sig(0.0) == "0");
  CHECK(format_sig(-1.0 / 3.0) == "-0.333333333333");
  CsvWriter csv({"a", "b"});
  csv.add_row(csv.num_row({1.0, 2.5}));
  CHECK(csv.str() == "a,b\n1,2.5\n");
  CHECK_THROWS_AS(csv.add_row({"only-one"}), std::invalid_argument);
}

TEST_CASE("manifest serialization") {
  RunManifest m;
  m.command = "graph-spec";
  m.graph_hash = "abc";
  m.parameters = {{"lambda_max", 180.0}};
  const auto j = m.to_json();
  CHECK(j["command"] == "graph-spec");
  CHECK(j["version"] == "0.1.0");
}

TEST_CASE("cli: graph-spec produces the loop spectrum deterministically") {
  const fs::path dir = temp_dir();
  save_graph(graphs::loop(), dir / "loop.json");
  const std::string base = "--outdir " + dir.string() + " graph-spec --graph " +
                           (dir / "loop.json").string() + " --lambda-max 180";
  REQUIRE(run_cli(base) == 0);
  const std::string first = slurp(dir / "loop_spectrum.csv");
  CHECK(first.find("index,lambda,multiplicity") == 0);
  CHECK(first.find("39.4784176044,2") != std::string::npos);
  CHECK(first.find("157.913670417,2") != std::string::npos);
  REQUIRE(run_cli(base) == 0);
  CHECK(slurp(dir / "loop_spectrum.csv") == first);
  CHECK(fs::exists(dir / "loop_spectrum.manifest.json"));
}

TEST_CASE("cli: graph-spec json emission") {
  const fs::path dir = temp_dir();
  save_graph(graphs::interval(), dir / "iv.json");
  REQUIRE(run_cli("--outdir " + dir.string() + " graph-spec --graph " + (dir / "iv.json").string() +
                  " --lambda-max 15 --emit csv,json") == 0);
  const std::string j = slurp(dir / "iv_spectrum.json");
  CHECK(j.find("9.8696044") != std::string::npos);
  CHECK(fs::exists(dir / "iv_spectrum.csv"));
}

TEST_CASE("cli: graph-res finds the loop-plus-lead roots") {
  const fs::path dir = temp_dir();
  save_graph(graphs::loop_with_lead(), dir / "ll.json");
  REQUIRE(run_cli("--outdir " + dir.string() + " graph-res --graph " + (dir / "ll.json").string() +
                  " --window 0.1,8,-2,0") == 0);
  const std::string csv = slurp(dir / "ll_resonances.csv");
  CHECK(csv.find("secular-embedded") != std::string::npos);
  CHECK(csv.find("-1.09861228867") != std::string::npos); // -ln 3
}

TEST_CASE("cli: fat-spec emits a spectrum and optional mesh dump") {
  const fs::path dir = temp_dir();
  save_graph(graphs::interval(), dir / "iv.json");
  REQUIRE(run_cli("--outdir " + dir.string() + " fat-spec --graph " + (dir / "iv.json").string() +
                  " --eps 0.2 --lambda-max 30 --dump-mesh") == 0);
  CHECK(fs::exists(dir / "iv_fat_spectrum.csv"));
  CHECK(fs::exists(dir / "iv_mesh_nodes.csv"));
  CHECK(fs::exists(dir / "iv_mesh_triangles.csv"));
  CHECK(fs::exists(dir / "iv_mesh_interfaces.csv"));
}

TEST_CASE("cli: converge writes study, defects, and manifest") {
  const fs::path dir = temp_dir();
  save_graph(graphs::interval(), dir / "iv.json");
  REQUIRE(run_cli("--outdir " + dir.string() + " converge --graph " + (dir / "iv.json").string() +
                  " --eps 0.2,0.1 --kmax 2 --emit csv,json") == 0);
  CHECK(fs::exists(dir / "iv_study.csv"));
  CHECK(fs::exists(dir / "iv_defects.csv"));
  CHECK(fs::exists(dir / "iv_study.json"));
  const std::string manifest = slurp(dir / "iv_study.manifest.json");
  CHECK(manifest.find("template_constants") != std::string::npos);
  CHECK(manifest.find("graph_hash") != std::string::npos);
}

TEST_CASE("cli: check subcommand reports zero violations") {
  REQUIRE(run_cli("check --n 4 --seed 99") == 0);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = temp_dir();
  CHECK(run_cli("no-such-subcommand") == 64);
  CHECK(run_cli("graph-spec --lambda-max 2") == 64); // missing required option
  write_text_atomic(dir / "broken.json", "{not json");
  CHECK(run_cli("graph-spec --graph " + (dir / "broken.json").string() + " --lambda-max 5") == 65);
  // A structurally fine but inadmissible graph: validation failure.
  write_text_atomic(
      dir / "short.json",
      R"({"vertices":[0,1],"edges":[{"id":0,"from":0,"to":1,"length":0.4}],"d0":2,"l0":1.0})");
  CHECK(run_cli("graph-spec --graph " + (dir / "short.json").string() + " --lambda-max 5") == 2);
}
