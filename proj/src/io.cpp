#include "robcomp/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace robcomp {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_json(std::string& out, const Json& j, int indent, int level) {
  const auto newline = [&](int lvl) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * lvl), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += Json(key).dump();
        out += indent < 0 ? ":" : ": ";
        write_json(out, value, indent, level + 1);
      }
      newline(level);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line so weight blocks remain compact.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_number(); });
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) newline(level + 1);
        write_json(out, value, indent, level + 1);
      }
      if (!flat) newline(level);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

void flatten(const Json& j, const std::string& path, std::string& out) {
  if (j.is_object() || j.is_array()) {
    if (j.empty()) {
      out += path + "," + (j.is_object() ? "{}" : "[]") + "\n";
      return;
    }
    std::size_t index = 0;
    for (const auto& [key, value] : j.items()) {
      const std::string segment = j.is_array() ? std::to_string(index++) : key;
      flatten(value, path.empty() ? segment : path + "." + segment, out);
    }
    return;
  }
  std::string value;
  if (j.is_string()) {
    value = j.get<std::string>();
    if (value.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      value = quoted + "\"";
    }
  } else {
    write_json(value, j, -1, 0);
  }
  out += path + "," + value + "\n";
}

std::vector<double> numbers(const Json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(ErrorKind::FormatError, where + ": data must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw Error(ErrorKind::FormatError, where + ": non-finite or non-numeric entry");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorKind::FormatError, where + ": non-finite entry");
    out.push_back(d);
  }
  return out;
}

Json matrix_json(const WeightMatrix& w) {
  Json j;
  j["rows"] = w.rows();
  j["cols"] = w.cols();
  Json data = Json::array();
  for (double v : w.row_major()) data.push_back(v);
  j["data"] = std::move(data);
  return j;
}

WeightMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw Error(ErrorKind::FormatError, where + ": expected rows, cols and data");
  }
  if (!j["rows"].is_number_unsigned() || !j["cols"].is_number_unsigned()) {
    throw Error(ErrorKind::FormatError, where + ": rows and cols must be non-negative integers");
  }
  const auto rows = j["rows"].get<std::size_t>();
  const auto cols = j["cols"].get<std::size_t>();
  const auto data = numbers(j["data"], where);
  if (rows == 0 || cols == 0 || rows * cols != data.size()) {
    throw Error(ErrorKind::FormatError, where + ": " + std::to_string(data.size()) +
                                            " values for shape " + std::to_string(rows) + "x" +
                                            std::to_string(cols));
  }
  return WeightMatrix(rows, cols, data);
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  write_json(out, j, indent, 0);
  out += '\n';
  return out;
}

std::string json_to_csv(const Json& j) {
  std::string out = "field,value\n";
  flatten(j, "", out);
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const Json& config) { return fnv1a_hex(dump_json(config, -1)); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json model_to_json(const Network& net, const ModelMetadata& meta) {
  Json j;
  j["format"] = kModelFormat;
  j["metadata"] = {{"seed", meta.seed}, {"config_digest", meta.config_digest}, {"created", meta.created}};
  Json layers = Json::array();
  for (const auto& w : net.hidden) layers.push_back(matrix_json(w));
  j["layers"] = std::move(layers);
  j["head"] = matrix_json(net.head);
  return j;
}

Network model_from_json(const Json& j, ModelMetadata* meta) {
  if (!j.is_object() || !j.contains("format") || j["format"] != kModelFormat) {
    throw Error(ErrorKind::FormatError, "format tag is not " + std::string(kModelFormat));
  }
  if (!j.contains("layers") || !j["layers"].is_array() || !j.contains("head")) {
    throw Error(ErrorKind::FormatError, "model needs a layers array and a head");
  }
  Network net;
  std::size_t index = 1;
  for (const auto& layer : j["layers"]) {
    net.hidden.push_back(matrix_from_json(layer, "layer " + std::to_string(index++)));
  }
  net.head = matrix_from_json(j["head"], "head");
  try {
    net.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.detail());
  }
  if (meta != nullptr && j.contains("metadata")) {
    const Json& m = j["metadata"];
    meta->seed = m.value("seed", std::uint64_t{0});
    meta->config_digest = m.value("config_digest", std::string{});
    meta->created = m.value("created", std::string{});
  }
  return net;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path);
}

void save_model(const std::string& path, const Network& net, const ModelMetadata& meta) {
  write_file(path, dump_json(model_to_json(net, meta)));
}

Network load_model(const std::string& path, ModelMetadata* meta) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, path + ": " + e.what());
  }
  return model_from_json(j, meta);
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "label";
  for (std::size_t j = 1; j <= data.dim(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels[i]);
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      out += ',';
      out += format_double(data.features(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  return out;
}

Json dataset_to_json(const Dataset& data) {
  Json j;
  j["num_classes"] = data.num_classes;
  j["labels"] = data.labels;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) row.push_back(data.features(i, c));
    rows.push_back(std::move(row));
  }
  j["features"] = std::move(rows);
  return j;
}

namespace {

Dataset dataset_from_json(const Json& j) {
  if (!j.contains("labels") || !j.contains("features")) {
    throw Error(ErrorKind::FormatError, "dataset JSON needs labels and features");
  }
  Dataset d;
  d.labels = j["labels"].get<std::vector<int>>();
  const Json& rows = j["features"];
  if (!rows.is_array() || rows.size() != d.labels.size() || rows.empty()) {
    throw Error(ErrorKind::FormatError, "features and labels disagree in length");
  }
  const std::size_t dim = rows[0].size();
  d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto vals = numbers(rows[i], "row " + std::to_string(i + 1));
    if (vals.size() != dim) throw Error(ErrorKind::FormatError, "ragged feature row " + std::to_string(i + 1));
    for (std::size_t c = 0; c < dim; ++c) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = vals[c];
    }
  }
  d.num_classes = j.value("num_classes", 2);
  return d;
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, "empty dataset CSV");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw Error(ErrorKind::FormatError, "dataset CSV needs a label and features");
  std::vector<int> labels;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || !std::isfinite(v)) {
        throw Error(ErrorKind::FormatError, "bad value on line " + std::to_string(lineno));
      }
      if (col == 0) {
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
      ++col;
    }
    if (col != columns) throw Error(ErrorKind::FormatError, "wrong column count on line " + std::to_string(lineno));
  }
  if (labels.empty()) throw Error(ErrorKind::FormatError, "dataset CSV has no rows");
  Dataset d;
  d.labels = std::move(labels);
  d.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(d.labels.size()),
                                  static_cast<Eigen::Index>(columns - 1));
  d.num_classes = std::max(2, *std::max_element(d.labels.begin(), d.labels.end()) + 1);
  return d;
}

}  // namespace

Dataset load_dataset_file(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return dataset_from_json(Json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::FormatError, path + ": " + e.what());
    }
  }
  return dataset_from_csv(text);
}

}  // namespace robcomp
