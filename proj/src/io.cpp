#include "qgt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qgt/version.hpp"

namespace qgt {

using nlohmann::json;

MetricGraph graph_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
      throw GraphFormatError("graph file needs 'vertices' and 'edges'");
    std::vector<VertexId> vertices;
    for (const auto& v : j.at("vertices")) vertices.push_back(v.get<VertexId>());
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      Edge edge;
      edge.id = e.at("id").get<EdgeId>();
      edge.from = e.at("from").get<VertexId>();
      if (e.value("external", false)) {
        edge.external = true;
        edge.to = -1;
        edge.length = kInfiniteLength;
        if (e.contains("length") && e.at("length").is_number())
          throw GraphFormatError("external edge " + std::to_string(edge.id) +
                                 " must have length \"inf\"");
      } else {
        edge.to = e.at("to").get<VertexId>();
        const auto& len = e.at("length");
        if (len.is_string()) {
          if (len.get<std::string>() != "inf")
            throw GraphFormatError("bad length string on edge " + std::to_string(edge.id));
          throw GraphFormatError("edge " + std::to_string(edge.id) +
                                 " has infinite length but no \"external\":true");
        }
        edge.length = len.get<double>();
      }
      edges.push_back(edge);
    }
    const int d0 = j.value("d0", 0);
    const double l0 = j.value("l0", 0.0);
    try {
      return MetricGraph(std::move(vertices), std::move(edges), d0, l0);
    } catch (const std::invalid_argument& e) {
      throw GraphFormatError(e.what());
    }
  } catch (const json::exception& e) {
    throw GraphFormatError(std::string("graph json: ") + e.what());
  }
}

MetricGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphFormatError("cannot open graph file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw GraphFormatError("parse error at byte " + std::to_string(e.byte) + ": " + e.what(),
                           e.byte);
  }
  return graph_from_json(j);
}

json graph_to_json(const MetricGraph& graph) {
  json j;
  j["vertices"] = graph.vertices();
  j["edges"] = json::array();
  for (const Edge& e : graph.edges()) {
    json je;
    je["id"] = e.id;
    je["from"] = e.from;
    if (e.external) {
      je["external"] = true;
      je["length"] = "inf";
    } else {
      je["to"] = e.to;
      je["length"] = e.length;
    }
    j["edges"].push_back(je);
  }
  j["d0"] = graph.d0();
  j["l0"] = graph.l0();
  return j;
}

void save_graph(const MetricGraph& graph, const std::filesystem::path& path) {
  write_text_atomic(path, graph_to_json(graph).dump(2) + "\n");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string format_sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: row width mismatch");
  rows_.push_back(cells);
}

std::vector<std::string> CsvWriter::num_row(const std::vector<double>& values) const {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(format_sig(v));
  return cells;
}

std::string CsvWriter::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < columns_.size(); ++i) os << columns_[i] << (i + 1 < columns_.size() ? "," : "");
  os << "\n";
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) os << row[i] << (i + 1 < row.size() ? "," : "");
    os << "\n";
  }
  return os.str();
}

void CsvWriter::write(const std::filesystem::path& path) const { write_text_atomic(path, str()); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::ostringstream buf;
  buf << in.rdbuf();
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(fnv1a64(buf.str())));
  return out;
}

json RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["graph_file"] = graph_file;
  j["graph_hash"] = graph_hash;
  j["parameters"] = parameters;
  j["tolerances"] = tolerances;
  j["seed"] = seed;
  j["version"] = version.empty() ? std::string(kVersion) : version;
  j["wall_seconds"] = wall_seconds;
  j["outputs"] = outputs;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_text_atomic(path, to_json().dump(2) + "\n");
}

} // namespace qgt
