#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "robcomp/dataset.hpp"
#include "robcomp/network.hpp"

namespace robcomp {

using Json = nlohmann::ordered_json;

/// %.17g, which round-trips every finite double. Non-finite values become "null".
std::string format_double(double v);

/// Deterministic JSON text: insertion key order, floats at 17 significant digits.
std::string dump_json(const Json& j, int indent = 2);

/// Flattens leaves to "path,value" rows (dotted paths, array indices as segments).
std::string json_to_csv(const Json& j);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string config_digest(const Json& config);

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string created;  // ISO-8601 UTC
};

std::string utc_timestamp();

inline constexpr std::string_view kModelFormat = "nnwb-v1";

Json model_to_json(const Network& net, const ModelMetadata& meta);
/// Throws FormatError (bad tag, shapes, non-finite values) naming the offending layer.
Network model_from_json(const Json& j, ModelMetadata* meta = nullptr);

void save_model(const std::string& path, const Network& net, const ModelMetadata& meta);
Network load_model(const std::string& path, ModelMetadata* meta = nullptr);

/// CSV with header "label,x1,..,xd" or JSON {"num_classes", "labels", "features"}.
std::string dataset_to_csv(const Dataset& data);
Json dataset_to_json(const Dataset& data);
/// Chooses the parser from the first non-space character ('{' means JSON).
Dataset load_dataset_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace robcomp
