#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robcomp/linalg.hpp"

namespace robcomp {

/// Row-major feature matrix (one example per row) with integer class labels.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 2;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool empty() const { return labels.empty(); }

  Dataset subset(std::span<const std::size_t> indices) const;
};

enum class DatasetSource { GaussianBlobs, TwoMoons, MnistIdx };

struct DatasetSpec {
  DatasetSource source = DatasetSource::GaussianBlobs;
  std::size_t samples = 1000;
  std::size_t dim = 2;
  int classes = 2;
  /// Blob centers per class; classes made of several modes need several feature directions.
  int centers_per_class = 1;
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  /// Maps original labels (index) to new labels; used for the 0-4 / 5-9 MNIST split.
  std::optional<std::vector<int>> label_map;
  std::string images_path;
  std::string labels_path;
  std::optional<std::size_t> limit;
};

/// Digits 0-4 -> 0 and 5-9 -> 1.
std::vector<int> binarized_digit_map();

/// Deterministic per seed with balanced classes. Throws BadSpec.
Dataset generate_synthetic(const DatasetSpec& spec);

/// IDX image (magic 0x00000803) and label (0x00000801) files; pixels scaled to [0,1].
Dataset parse_idx(const std::string& images_path, const std::string& labels_path,
                  const std::optional<std::vector<int>>& label_map = std::nullopt);

Dataset load_dataset(const DatasetSpec& spec);

struct Split {
  Dataset train;
  Dataset validation;
};

/// Seeded shuffle then holdout of round(fraction * n) examples (at least one when fraction > 0).
Split split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed);

}  // namespace robcomp
