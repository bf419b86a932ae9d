#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgasmix/em.hpp"

namespace sgasmix {

// CSV: comma-separated, dot decimals, UTF-8; a non-numeric first row is
// treated as a header and reported separately
struct CsvTable {
  std::vector<std::string> header;  // empty when the file had none
  Eigen::MatrixXd values;
};

CsvTable read_csv(const std::string& path);
Eigen::MatrixXd read_csv_matrix(const std::string& path);
std::vector<int> read_csv_labels(const std::string& path);

void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header = {});
void write_labels_csv(const std::string& path, const std::vector<int>& labels);

// model files carry a redundant dimension field checked on load
std::string model_to_json(const MixtureModel& model);
MixtureModel model_from_json(const std::string& text);
void save_model(const std::string& path, const MixtureModel& model);
MixtureModel load_model(const std::string& path);

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> timings;  // phase, seconds
  std::vector<std::string> events;
  std::vector<std::string> outputs;

  bool operator==(const RunManifest&) const = default;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void save_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace sgasmix
