#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "robcomp/dataset.hpp"
#include "robcomp/linalg.hpp"
#include "robcomp/network.hpp"

namespace robcomp {

enum class NormKind { Inf, Two };

std::string_view to_string(NormKind kind);
NormKind norm_kind_from_string(std::string_view name);

/// Strict rejects non-square layers; Permissive uses h = max(rows, cols) and
/// marks the result as a conservative extension.
enum class SquarePolicy { Strict, Permissive };

struct LayerBound {
  std::size_t layer = 0;  // 1-based
  double bound = 0.0;
  double actual = 0.0;    // true operator norm
  double epsilon = 0.0;   // eps_nu or eps_sigma
  double beta = 0.0;
  double epsilon_r = 0.0; // l_inf only
  std::size_t k = 0;
  std::size_t k_r = 0;
  bool conservative = false;
};

/// (1 - eps_nu)/(1 - beta_nu) (sqrt(h k_r) + h eps_r) / k_nu ||W||_F with
/// eps_r the l2 residual ratio of the row l2 norms.
LayerBound layer_bound_inf(const WeightMatrix& w, std::size_t k_nu, std::size_t k_r,
                           SquarePolicy policy = SquarePolicy::Strict);
/// (1 - eps_sigma)/(1 - beta_sigma) sqrt(h) / k_sigma ||W||_F.
LayerBound layer_bound_2(const WeightMatrix& w, std::size_t k_sigma,
                         SquarePolicy policy = SquarePolicy::Strict);

double bound_opnorm_inf(const WeightMatrix& w, std::size_t k_nu, std::size_t k_r,
                        SquarePolicy policy = SquarePolicy::Strict);
double bound_opnorm_2(const WeightMatrix& w, std::size_t k_sigma,
                      SquarePolicy policy = SquarePolicy::Strict);

/// a + b + ab with a = nu_{k+1}/nu_1, b = nu'_{k+1}/nu'_1 (1-based; past the end is 0).
double remainder_inf(std::span<const double> nu, std::span<const double> nu_next, std::size_t k);
/// sqrt(a) + sqrt(b) + sqrt(ab) with the same ratios over singular values.
double remainder_2(std::span<const double> sigma, std::span<const double> sigma_next,
                   std::size_t k);

enum class SearchMethod { Exact, Greedy };
std::string_view to_string(SearchMethod method);

struct SearchConfig {
  enum class Mode { Auto, Exact, Greedy };
  Mode mode = Mode::Auto;
  std::size_t exact_threshold = 14;
  std::size_t restarts = 16;
  std::uint64_t seed = 0;
};

struct AlignmentFactor {
  double value = 0.0;
  double remainder = 0.0;
  double raw_max = 0.0;
  SearchMethod method = SearchMethod::Exact;
  std::size_t evaluations = 0;
};

/// Max over 0/1 diagonals D of ||W'_k D W_k||_inf / (||W'||_inf ||W||_inf), where
/// W_k keeps the k rows with the largest l1 norm. W' follows W (W'.cols == W.rows).
AlignmentFactor alignment_inf(const WeightMatrix& w_next, const WeightMatrix& w, std::size_t k,
                              const SearchConfig& cfg = {});
/// Max over D of ||sqrt(S'_k) V'_k^T D U_k sqrt(S_k)||_2 / sqrt(||W'||_2 ||W||_2).
AlignmentFactor alignment_2(const WeightMatrix& w_next, const WeightMatrix& w, std::size_t k,
                            const SearchConfig& cfg = {});

struct ParsingSet {
  std::vector<std::size_t> indices;  // 1-based, increasing
  double product = 1.0;
};

/// Non-adjacent subset of the factors minimizing their product. Only factors
/// below 1 are candidates; ties go to the lexicographically smallest set.
ParsingSet optimal_parsing_set(std::span<const double> factors);

struct LayerK {
  std::size_t k = 0;    // k_nu or k_sigma, and the alignment truncation
  std::size_t k_r = 0;  // within-row truncation (l_inf only)
};

struct KConfig {
  std::optional<std::size_t> shared;
  std::vector<LayerK> per_layer;
  double default_fraction = 0.1;
  SquarePolicy square = SquarePolicy::Strict;

  /// per_layer entry, else shared, else ceil(default_fraction * h) capped to the layer.
  LayerK resolve(std::size_t layer_index, const WeightMatrix& w) const;
};

struct BoundReport {
  NormKind norm = NormKind::Inf;
  std::vector<LayerBound> per_layer;
  std::vector<AlignmentFactor> alignment_factors;  // pairs (l, l+1), l = 1..depth-1
  std::vector<std::size_t> s_opt;                  // l_inf only
  double alignment_product = 1.0;
  double layer_product = 1.0;
  double lipschitz_bound = 1.0;
  std::optional<double> risk_bound;
  std::optional<double> clean_risk;
  std::optional<double> head_dual_norm;
  bool conservative_extension = false;
};

/// prod_l bound_opnorm_inf(W^l) * prod_{l in S_opt} A_inf(W^{l+1}, W^l).
BoundReport lipschitz_bound_inf(const Network& net, const KConfig& kcfg = {},
                                const SearchConfig& scfg = {});
/// prod_l bound_opnorm_2(W^l) * prod_{l=1}^{depth-1} A_2(W^{l+1}, W^l).
BoundReport lipschitz_bound_2(const Network& net, const KConfig& kcfg = {},
                              const SearchConfig& scfg = {});
BoundReport lipschitz_bound(const Network& net, NormKind norm, const KConfig& kcfg = {},
                            const SearchConfig& scfg = {});

/// l1 norm of the head for l_inf attacks, l2 norm for l2 attacks.
double head_dual_norm(const Network& net, NormKind norm);

/// Mean binary cross-entropy + delta * lipschitz * ||C||_dual. Throws NonBinaryLabels.
double adversarial_risk_bound(const Network& net, const Dataset& data, double delta,
                              double lipschitz, NormKind norm);

/// Fills risk_bound, clean_risk and head_dual_norm of an existing report.
void attach_risk_bound(BoundReport& report, const Network& net, const Dataset& data,
                       double delta);

}  // namespace robcomp
