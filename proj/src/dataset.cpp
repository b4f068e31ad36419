#include "robcomp/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace robcomp {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

std::vector<int> binarized_digit_map() { return {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}; }

namespace {

void shuffle_rows(Dataset& d, std::mt19937_64& rng) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  d = d.subset(order);
}

Dataset gaussian_blobs(const DatasetSpec& spec, std::mt19937_64& rng) {
  const auto dim = static_cast<Eigen::Index>(spec.dim);
  const int total_centers = spec.classes * spec.centers_per_class;
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(total_centers, dim);
  if (spec.classes == 2 && spec.centers_per_class == 1) {
    Vector u(dim);
    for (Eigen::Index j = 0; j < dim; ++j) u(j) = normal(rng);
    u.normalize();
    centers.row(0) = -0.5 * spec.separation * u.transpose();
    centers.row(1) = 0.5 * spec.separation * u.transpose();
  } else {
    for (int c = 0; c < total_centers; ++c) {
      Vector u(dim);
      for (Eigen::Index j = 0; j < dim; ++j) u(j) = normal(rng);
      centers.row(c) = 0.5 * spec.separation * u.normalized().transpose();
    }
  }

  Dataset d;
  d.num_classes = spec.classes;
  d.features.resize(static_cast<Eigen::Index>(spec.samples), dim);
  d.labels.resize(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const int cls = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    const int mode = static_cast<int>((i / static_cast<std::size_t>(spec.classes)) %
                                      static_cast<std::size_t>(spec.centers_per_class));
    const int center = cls * spec.centers_per_class + mode;
    for (Eigen::Index j = 0; j < dim; ++j) {
      d.features(static_cast<Eigen::Index>(i), j) = centers(center, j) + spec.noise * normal(rng);
    }
    d.labels[i] = cls;
  }
  shuffle_rows(d, rng);
  return d;
}

Dataset two_moons(const DatasetSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.num_classes = 2;
  d.features = Matrix::Zero(static_cast<Eigen::Index>(spec.samples), static_cast<Eigen::Index>(spec.dim));
  d.labels.resize(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double t = angle(rng);
    double x = cls == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double y = cls == 0 ? std::sin(t) : 0.5 - std::sin(t);
    if (spec.noise > 0.0) {
      x += spec.noise * normal(rng);
      y += spec.noise * normal(rng);
    }
    d.features(static_cast<Eigen::Index>(i), 0) = x;
    d.features(static_cast<Eigen::Index>(i), 1) = y;
    d.labels[i] = cls;
  }
  shuffle_rows(d, rng);
  return d;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorKind::FormatError, "truncated IDX header in " + path);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t count, const std::string& path) {
  std::vector<unsigned char> bytes(count);
  if (count > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count))) {
    throw Error(ErrorKind::FormatError, "truncated IDX payload in " + path);
  }
  return bytes;
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return in;
}

}  // namespace

Dataset generate_synthetic(const DatasetSpec& spec) {
  if (spec.samples == 0) throw Error(ErrorKind::BadSpec, "samples must be positive");
  if (spec.dim == 0) throw Error(ErrorKind::BadSpec, "dim must be positive");
  if (spec.noise < 0.0) throw Error(ErrorKind::BadSpec, "noise must be non-negative");
  std::mt19937_64 rng(spec.seed);
  switch (spec.source) {
    case DatasetSource::GaussianBlobs:
      if (spec.classes < 2 || spec.centers_per_class < 1) {
        throw Error(ErrorKind::BadSpec, "blobs need >= 2 classes and >= 1 center per class");
      }
      return gaussian_blobs(spec, rng);
    case DatasetSource::TwoMoons:
      if (spec.dim < 2) throw Error(ErrorKind::BadSpec, "two_moons needs dim >= 2");
      return two_moons(spec, rng);
    case DatasetSource::MnistIdx:
      break;
  }
  throw Error(ErrorKind::BadSpec, "mnist_idx is parsed, not generated");
}

Dataset parse_idx(const std::string& images_path, const std::string& labels_path,
                  const std::optional<std::vector<int>>& label_map) {
  auto images = open_binary(images_path);
  auto labels = open_binary(labels_path);

  const std::uint32_t image_magic = read_be32(images, images_path);
  if (image_magic != 0x00000803U) {
    throw Error(ErrorKind::FormatError, "bad image magic in " + images_path + ", expected 0x00000803");
  }
  const std::uint32_t count = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);

  const std::uint32_t label_magic = read_be32(labels, labels_path);
  if (label_magic != 0x00000801U) {
    throw Error(ErrorKind::FormatError, "bad label magic in " + labels_path + ", expected 0x00000801");
  }
  const std::uint32_t label_count = read_be32(labels, labels_path);
  if (label_count != count) {
    throw Error(ErrorKind::FormatError, "image count " + std::to_string(count) +
                                            " != label count " + std::to_string(label_count));
  }

  const std::size_t pixels = std::size_t{rows} * cols;
  const auto pixel_bytes = read_payload(images, std::size_t{count} * pixels, images_path);
  const auto label_bytes = read_payload(labels, count, labels_path);

  Dataset d;
  d.features.resize(count, static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < pixel_bytes.size(); ++i) d.features.data()[i] = pixel_bytes[i] / 255.0;
  d.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    int y = label_bytes[i];
    if (label_map) {
      if (static_cast<std::size_t>(y) >= label_map->size()) {
        throw Error(ErrorKind::FormatError, "label " + std::to_string(y) + " not covered by label map");
      }
      y = (*label_map)[static_cast<std::size_t>(y)];
    }
    d.labels[i] = y;
    max_label = std::max(max_label, y);
  }
  d.num_classes = std::max(2, max_label + 1);
  return d;
}

Dataset load_dataset(const DatasetSpec& spec) {
  if (spec.source != DatasetSource::MnistIdx) return generate_synthetic(spec);
  Dataset d = parse_idx(spec.images_path, spec.labels_path, spec.label_map);
  if (spec.limit && *spec.limit < d.size()) {
    std::vector<std::size_t> head(*spec.limit);
    std::iota(head.begin(), head.end(), std::size_t{0});
    d = d.subset(head);
  }
  return d;
}

Split split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t held = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(data.size())));
  if (validation_fraction > 0.0) held = std::max<std::size_t>(held, 1);
  held = std::min(held, data.size() > 0 ? data.size() - 1 : 0);
  Split s;
  s.validation = data.subset(std::span(order).subspan(0, held));
  s.train = data.subset(std::span(order).subspan(held));
  return s;
}

}  // namespace robcomp
