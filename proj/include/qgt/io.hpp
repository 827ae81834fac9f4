#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgt/metric_graph.hpp"

namespace qgt {

/// Malformed graph description; carries the byte offset when the JSON
/// itself failed to parse.
class GraphFormatError : public std::runtime_error {
public:
  GraphFormatError(const std::string& msg, std::size_t byte = 0)
      : std::runtime_error(msg), byte_offset(byte) {}
  std::size_t byte_offset = 0;
};

/// Graph description file:
/// {"vertices":[ids], "edges":[{"id","from","to"|"external":true,
///  "length":number|"inf"}], "d0":int, "l0":number}
MetricGraph load_graph(const std::filesystem::path& path);
MetricGraph graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const MetricGraph& graph);
void save_graph(const MetricGraph& graph, const std::filesystem::path& path);

/// Writes content to the path atomically (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Numeric formatting used by every emitted CSV: 12 significant digits,
/// '.' decimal separator.
std::string format_sig(double v);

/// Header + rows of formatted numbers; strings pass through unchanged.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  std::vector<std::string> num_row(const std::vector<double>& values) const;
  std::string str() const;
  void write(const std::filesystem::path& path) const;

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// FNV-1a hash of a file's bytes, hex-encoded; identifies graph inputs in
/// run manifests.
std::string file_hash(const std::filesystem::path& path);
std::uint64_t fnv1a64(const std::string& bytes);

/// Reproducibility record emitted next to every output set.
struct RunManifest {
  std::string command;
  std::string graph_file;
  std::string graph_hash;
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json tolerances = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

} // namespace qgt
