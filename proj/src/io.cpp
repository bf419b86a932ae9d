#include "sgasmix/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgasmix/errors.hpp"

namespace sgasmix {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write " + path);
  out << text;
  if (!out) throw input_error("write failed for " + path);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    std::string field = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t a = field.find_first_not_of(" \t");
    std::size_t b = field.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? std::string()
                                         : field.substr(a, b - a + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& field, double* out) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::string text = slurp(path);
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF)
    text.erase(0, 3);

  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(split_fields(line));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw input_error(path + " has no rows");

  const std::size_t width = rows[0].size();
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != width)
      throw input_error(path + " line " + std::to_string(line_numbers[r]) +
                        ": expected " + std::to_string(width) + " fields, got " +
                        std::to_string(rows[r].size()));

  CsvTable table;
  std::size_t first_data = 0;
  double probe;
  for (const std::string& f : rows[0])
    if (!parse_double(f, &probe)) {
      table.header = rows[0];
      first_data = 1;
      break;
    }

  table.values.resize(rows.size() - first_data, width);
  for (std::size_t r = first_data; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      if (!parse_double(rows[r][c], &v))
        throw input_error(path + " line " + std::to_string(line_numbers[r]) +
                          ": cannot parse '" + rows[r][c] + "' as a number");
      table.values(r - first_data, c) = v;
    }
  return table;
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  return read_csv(path).values;
}

std::vector<int> read_csv_labels(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.values.cols() != 1)
    throw input_error(path + ": label files must have exactly one column");
  std::vector<int> labels(table.values.rows());
  for (long i = 0; i < table.values.rows(); ++i) {
    double v = table.values(i, 0);
    double r = std::round(v);
    if (!(std::abs(v - r) < 1e-9))
      throw input_error(path + ": non-integer label at row " +
                        std::to_string(i + 1));
    labels[i] = static_cast<int>(r);
  }
  return labels;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    if (static_cast<long>(header.size()) != values.cols() && values.rows() > 0)
      throw input_error("header width does not match matrix");
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
  }
  for (long r = 0; r < values.rows(); ++r) {
    for (long c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  spill(path, out);
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::string out = "label\n";
  for (int v : labels) {
    out += std::to_string(v);
    out += '\n';
  }
  spill(path, out);
}

std::string model_to_json(const MixtureModel& model) {
  model.validate();
  nlohmann::ordered_json root;
  root["d"] = model.d;
  root["k"] = model.k();
  root["components"] = nlohmann::ordered_json::array();
  for (const auto& c : model.components) {
    nlohmann::ordered_json comp;
    comp["w"] = c.w;
    comp["alpha"] = c.alpha;
    comp["mu"] = std::vector<double>(c.mu.data(), c.mu.data() + c.mu.size());
    std::vector<double> sigma;
    sigma.reserve(static_cast<std::size_t>(model.d) * model.d);
    for (int r = 0; r < model.d; ++r)
      for (int col = 0; col < model.d; ++col) sigma.push_back(c.sigma(r, col));
    comp["sigma"] = sigma;
    root["components"].push_back(std::move(comp));
  }
  return root.dump(2) + "\n";
}

MixtureModel model_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("model json parse failure: ") + e.what());
  }
  try {
    MixtureModel model;
    model.d = root.at("d").get<int>();
    int k = root.at("k").get<int>();
    const auto& comps = root.at("components");
    if (static_cast<int>(comps.size()) != k)
      throw input_error("model json: k does not match component count");
    for (const auto& comp : comps) {
      SgasComponent c;
      c.w = comp.at("w").get<double>();
      c.alpha = comp.at("alpha").get<double>();
      auto mu = comp.at("mu").get<std::vector<double>>();
      auto sigma = comp.at("sigma").get<std::vector<double>>();
      if (static_cast<int>(mu.size()) != model.d)
        throw input_error("model json: mu length disagrees with d");
      if (static_cast<int>(sigma.size()) != model.d * model.d)
        throw input_error("model json: sigma length disagrees with d");
      c.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), model.d);
      c.sigma.resize(model.d, model.d);
      for (int r = 0; r < model.d; ++r)
        for (int col = 0; col < model.d; ++col)
          c.sigma(r, col) = sigma[static_cast<std::size_t>(r) * model.d + col];
      model.components.push_back(std::move(c));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("model json schema failure: ") + e.what());
  }
}

void save_model(const std::string& path, const MixtureModel& model) {
  spill(path, model_to_json(model));
}

MixtureModel load_model(const std::string& path) {
  return model_from_json(slurp(path));
}

std::string manifest_to_json(const RunManifest& manifest) {
  nlohmann::ordered_json root;
  root["command"] = manifest.command;
  root["config"] = manifest.config;
  root["seed"] = manifest.seed;
  root["timings"] = nlohmann::ordered_json::array();
  for (const auto& [phase, secs] : manifest.timings)
    root["timings"].push_back({{"phase", phase}, {"seconds", secs}});
  root["events"] = manifest.events;
  root["outputs"] = manifest.outputs;
  return root.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    nlohmann::ordered_json root = nlohmann::ordered_json::parse(text);
    RunManifest m;
    m.command = root.at("command").get<std::string>();
    m.config = root.at("config");
    m.seed = root.at("seed").get<std::uint64_t>();
    for (const auto& t : root.at("timings"))
      m.timings.push_back({t.at("phase").get<std::string>(),
                           t.at("seconds").get<double>()});
    m.events = root.at("events").get<std::vector<std::string>>();
    m.outputs = root.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("manifest parse failure: ") + e.what());
  }
}

void save_manifest(const std::string& path, const RunManifest& manifest) {
  spill(path, manifest_to_json(manifest));
}

}  // namespace sgasmix
