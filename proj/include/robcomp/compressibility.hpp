#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "robcomp/linalg.hpp"

namespace robcomp {

enum class StructureKind { Row, Spectral, WithinRow, Unstructured };

std::string_view to_string(StructureKind kind);
StructureKind structure_kind_from_string(std::string_view name);

/// (q, k, epsilon) compressibility of one structure vector plus its spread.
/// epsilon is always the achieved (strict) residual ratio.
struct CompressibilityProfile {
  double q = 1.0;
  std::size_t k = 0;
  double epsilon = 0.0;
  double beta = 0.0;
  StructureKind kind = StructureKind::Row;
};

struct StructureVectors {
  Vector nu;      // row l1 norms, descending
  Vector nu_hat;  // row l2 norms, same row order as nu
  Vector sigma;   // singular values, descending
};

/// Indices of the k largest-magnitude entries; ties go to the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> theta, std::size_t k);

/// Same length as theta with only the k largest-magnitude entries kept.
std::vector<double> compressed_topk(std::span<const double> theta, std::size_t k);

double lq_norm(std::span<const double> theta, double q);

/// ||theta - theta_k||_q / ||theta||_q. Throws ZeroVector, BadK.
double residual_ratio(std::span<const double> theta, double q, std::size_t k);

/// | ||theta_k||_q - (1 - eps^q)^(1/q) ||theta||_q |, which vanishes for strict compressibility.
double strict_norm_identity_check(std::span<const double> theta, double q, std::size_t k);

/// 1 - |theta_(k)| / |theta_(1)| over magnitude-sorted entries. Throws ZeroLeader, BadK.
double spread(std::span<const double> theta, std::size_t k);

StructureVectors structure_vectors(const WeightMatrix& w);

/// 1 - d^(1/q - 1/p) ||w||_p / ||w||_q for 0 < p < q.
double pq_index(std::span<const double> w, double p, double q);

/// Lower bound 1 - eps - (k/d)^(1/p - 1/q) implied by (q, k, eps) compressibility.
double pq_index_lower_bound(double epsilon, std::size_t k, std::size_t d, double p, double q);

/// Row profiles use nu with q = 1, spectral sigma with q = 1, within-row nu_hat
/// with q = 2, unstructured the flattened entries with q = 1.
CompressibilityProfile profile(const WeightMatrix& w, StructureKind kind, std::size_t k);
CompressibilityProfile profile(const StructureVectors& sv, const WeightMatrix& w,
                               StructureKind kind, std::size_t k);

}  // namespace robcomp
