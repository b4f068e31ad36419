#include "robcomp/compressibility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace robcomp {

std::string_view to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::Row: return "row";
    case StructureKind::Spectral: return "spectral";
    case StructureKind::WithinRow: return "within-row";
    case StructureKind::Unstructured: return "unstructured";
  }
  return "row";
}

StructureKind structure_kind_from_string(std::string_view name) {
  if (name == "row") return StructureKind::Row;
  if (name == "spectral") return StructureKind::Spectral;
  if (name == "within-row") return StructureKind::WithinRow;
  if (name == "unstructured") return StructureKind::Unstructured;
  throw Error(ErrorKind::BadSpec, "unknown structure kind '" + std::string(name) + "'");
}

namespace {

std::vector<std::size_t> magnitude_order(std::span<const double> theta) {
  std::vector<std::size_t> idx(theta.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(theta[a]) > std::abs(theta[b]);
  });
  return idx;
}

void check_k(std::size_t k, std::size_t len) {
  if (k > len) {
    throw Error(ErrorKind::BadK,
                "k = " + std::to_string(k) + " exceeds vector length " + std::to_string(len));
  }
}

// sum_i |x_i / scale|^q over the given entries
double scaled_power_sum(std::span<const double> theta, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t end, double q, double scale) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += std::pow(std::abs(theta[idx[i]]) / scale, q);
  return acc;
}

Vector flatten(const WeightMatrix& w) {
  auto flat = w.row_major();
  return Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

}  // namespace

std::vector<std::size_t> top_k_indices(std::span<const double> theta, std::size_t k) {
  check_k(k, theta.size());
  auto idx = magnitude_order(theta);
  idx.resize(k);
  return idx;
}

std::vector<double> compressed_topk(std::span<const double> theta, std::size_t k) {
  std::vector<double> out(theta.size(), 0.0);
  for (std::size_t i : top_k_indices(theta, k)) out[i] = theta[i];
  return out;
}

double lq_norm(std::span<const double> theta, double q) {
  double scale = 0.0;
  for (double v : theta) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : theta) acc += std::pow(std::abs(v) / scale, q);
  return scale * std::pow(acc, 1.0 / q);
}

double residual_ratio(std::span<const double> theta, double q, std::size_t k) {
  check_k(k, theta.size());
  const auto idx = magnitude_order(theta);
  const double scale = theta.empty() ? 0.0 : std::abs(theta[idx.front()]);
  if (scale == 0.0) throw Error(ErrorKind::ZeroVector, "residual ratio of a zero vector");
  const double total = scaled_power_sum(theta, idx, 0, idx.size(), q, scale);
  const double tail = scaled_power_sum(theta, idx, k, idx.size(), q, scale);
  return std::clamp(std::pow(tail / total, 1.0 / q), 0.0, 1.0);
}

double strict_norm_identity_check(std::span<const double> theta, double q, std::size_t k) {
  const double eps = residual_ratio(theta, q, k);
  const auto kept = compressed_topk(theta, k);
  const double lhs = lq_norm(kept, q);
  const double rhs = std::pow(1.0 - std::pow(eps, q), 1.0 / q) * lq_norm(theta, q);
  return std::abs(lhs - rhs);
}

double spread(std::span<const double> theta, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::BadK, "spread needs k >= 1");
  check_k(k, theta.size());
  const auto idx = magnitude_order(theta);
  const double leader = std::abs(theta[idx.front()]);
  if (leader == 0.0) throw Error(ErrorKind::ZeroLeader, "largest-magnitude entry is zero");
  return std::clamp(1.0 - std::abs(theta[idx[k - 1]]) / leader, 0.0, 1.0);
}

StructureVectors structure_vectors(const WeightMatrix& w) {
  const Matrix& m = w.values();
  Vector l1 = m.cwiseAbs().rowwise().sum();
  Vector l2 = m.rowwise().norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(l1.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return l1(a) > l1(b); });
  StructureVectors sv;
  sv.nu.resize(l1.size());
  sv.nu_hat.resize(l2.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sv.nu(static_cast<Eigen::Index>(i)) = l1(order[i]);
    sv.nu_hat(static_cast<Eigen::Index>(i)) = l2(order[i]);
  }
  sv.sigma = svd(w).singular_values;
  return sv;
}

double pq_index(std::span<const double> w, double p, double q) {
  if (!(p > 0.0) || !(p < q)) {
    throw Error(ErrorKind::BadOrders, "PQ index requires 0 < p < q");
  }
  const double norm_q = lq_norm(w, q);
  if (norm_q == 0.0) throw Error(ErrorKind::ZeroVector, "PQ index of a zero vector");
  const double d = static_cast<double>(w.size());
  return 1.0 - std::pow(d, 1.0 / q - 1.0 / p) * lq_norm(w, p) / norm_q;
}

double pq_index_lower_bound(double epsilon, std::size_t k, std::size_t d, double p, double q) {
  const double kappa = static_cast<double>(k) / static_cast<double>(d);
  return 1.0 - epsilon - std::pow(kappa, 1.0 / p - 1.0 / q);
}

CompressibilityProfile profile(const StructureVectors& sv, const WeightMatrix& w,
                               StructureKind kind, std::size_t k) {
  CompressibilityProfile p;
  p.kind = kind;
  p.k = k;
  auto fill = [&](const Vector& theta, double q) {
    p.q = q;
    if (k == 0) throw Error(ErrorKind::BadK, "profile needs k >= 1");
    p.epsilon = residual_ratio(as_span(theta), q, k);
    p.beta = spread(as_span(theta), k);
  };
  switch (kind) {
    case StructureKind::Row: fill(sv.nu, 1.0); break;
    case StructureKind::Spectral: fill(sv.sigma, 1.0); break;
    case StructureKind::WithinRow: fill(sv.nu_hat, 2.0); break;
    case StructureKind::Unstructured: fill(flatten(w), 1.0); break;
  }
  return p;
}

CompressibilityProfile profile(const WeightMatrix& w, StructureKind kind, std::size_t k) {
  if (kind == StructureKind::Unstructured) {
    return profile(StructureVectors{}, w, kind, k);
  }
  if (kind == StructureKind::Spectral) {
    StructureVectors sv;
    sv.sigma = svd(w).singular_values;
    return profile(sv, w, kind, k);
  }
  StructureVectors sv;
  sv.nu = w.values().cwiseAbs().rowwise().sum();
  sv.nu_hat = w.values().rowwise().norm();
  return profile(sv, w, kind, k);
}

}  // namespace robcomp
