#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "robcomp/attacks.hpp"
#include "robcomp/dataset.hpp"
#include "robcomp/network.hpp"

namespace robcomp {

enum class PruneKind { Row, Spectral };

std::string_view to_string(PruneKind kind);
PruneKind prune_kind_from_string(std::string_view name);

struct PruningPlan {
  PruneKind kind = PruneKind::Row;
  std::vector<std::size_t> per_layer_k;  // one per hidden layer
  double target_ratio = 1.0;
  std::optional<double> epsilon;         // set by the eps-targeted search
  double achieved_ratio = 1.0;

  double gap() const { return achieved_ratio - target_ratio; }
};

/// Keeps the k rows with the largest l1 norm. Throws BadK.
WeightMatrix prune_rows(const WeightMatrix& w, std::size_t k);

/// Best rank-k approximation via the SVD. Throws BadK.
WeightMatrix prune_spectral(const WeightMatrix& w, std::size_t k);

/// Parameters kept by a layer: k * cols for rows, min(k (rows + cols + 1), rows * cols) for rank k.
double retained_parameters(const WeightMatrix& w, PruneKind kind, std::size_t k);

/// Retained parameters over total hidden parameters.
double achieved_ratio(const Network& net, PruneKind kind, const std::vector<std::size_t>& ks);

/// Applies the plan to every hidden layer; the head is left untouched.
Network apply_plan(const Network& net, const PruningPlan& plan);

struct PruneResult {
  Network net;
  PruningPlan plan;
};

/// k = max(1, round(ratio * dim)) per layer, dim = rows or min(rows, cols).
PruneResult layerwise_prune(const Network& net, PruneKind kind, double ratio);

/// 200 log-spaced points in [1e-6, 1].
std::vector<double> default_eps_grid();

/// Minimal k with residual_ratio(structure vector, 1, k) <= eps.
std::size_t minimal_k(const Vector& structure, double eps);

/// Scans eps (plus the eps = 0 endpoint) and keeps the plan whose achieved ratio is
/// closest to the target, ties toward more retention. Throws EmptyGrid.
PruneResult eps_targeted_global_prune(const Network& net, PruneKind kind, double target_ratio,
                                      const std::vector<double>& eps_grid = default_eps_grid());

enum class PruneMethod { Layerwise, Global };
std::string_view to_string(PruneMethod method);

struct RetentionPoint {
  double target_ratio = 0.0;
  double achieved_ratio = 0.0;
  double clean_acc = 0.0;
  std::optional<double> robust_acc;
};

/// Prunes at each ratio and evaluates without fine-tuning.
std::vector<RetentionPoint> retention_curve(const Network& net, const Dataset& data, PruneKind kind,
                                            PruneMethod method, const std::vector<double>& ratios,
                                            const std::optional<AttackConfig>& attack = std::nullopt);

}  // namespace robcomp
