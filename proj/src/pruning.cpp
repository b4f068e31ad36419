#include "robcomp/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robcomp/compressibility.hpp"

namespace robcomp {

std::string_view to_string(PruneKind kind) { return kind == PruneKind::Row ? "row" : "spectral"; }

PruneKind prune_kind_from_string(std::string_view name) {
  if (name == "row") return PruneKind::Row;
  if (name == "spectral") return PruneKind::Spectral;
  throw Error(ErrorKind::BadSpec, "unknown pruning kind '" + std::string(name) + "'");
}

std::string_view to_string(PruneMethod method) {
  return method == PruneMethod::Layerwise ? "layerwise" : "global";
}

namespace {

std::size_t prune_dim(const WeightMatrix& w, PruneKind kind) {
  return kind == PruneKind::Row ? w.rows() : std::min(w.rows(), w.cols());
}

void check_k(std::size_t k, std::size_t dim) {
  if (k == 0 || k > dim) {
    throw Error(ErrorKind::BadK, "k = " + std::to_string(k) + " outside [1, " + std::to_string(dim) + "]");
  }
}

Vector structure_of(const WeightMatrix& w, PruneKind kind) {
  return kind == PruneKind::Row ? Vector(w.values().cwiseAbs().rowwise().sum())
                                : svd(w).singular_values;
}

}  // namespace

WeightMatrix prune_rows(const WeightMatrix& w, std::size_t k) {
  check_k(k, w.rows());
  const Vector nu = w.values().cwiseAbs().rowwise().sum();
  Matrix out = Matrix::Zero(w.values().rows(), w.values().cols());
  for (std::size_t r : top_k_indices(as_span(nu), k)) {
    out.row(static_cast<Eigen::Index>(r)) = w.values().row(static_cast<Eigen::Index>(r));
  }
  return WeightMatrix(std::move(out));
}

WeightMatrix prune_spectral(const WeightMatrix& w, std::size_t k) {
  check_k(k, std::min(w.rows(), w.cols()));
  const SvdFactors f = svd(w);
  const auto kk = static_cast<Eigen::Index>(k);
  // Rank <= k up to roundoff: W already is its own best rank-k approximation.
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max(w.rows(), w.cols())) * f.singular_values(0);
  if (kk == f.singular_values.size() || f.singular_values(kk) <= roundoff) return w;
  return WeightMatrix(Matrix(f.left.leftCols(kk) * f.singular_values.head(kk).asDiagonal() *
                             f.right.leftCols(kk).transpose()));
}

double retained_parameters(const WeightMatrix& w, PruneKind kind, std::size_t k) {
  const auto r = static_cast<double>(w.rows());
  const auto c = static_cast<double>(w.cols());
  const auto kd = static_cast<double>(k);
  return kind == PruneKind::Row ? kd * c : std::min(kd * (r + c + 1.0), r * c);
}

double achieved_ratio(const Network& net, PruneKind kind, const std::vector<std::size_t>& ks) {
  double kept = 0.0;
  double total = 0.0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& w = net.hidden[l];
    kept += retained_parameters(w, kind, ks[l]);
    total += static_cast<double>(w.rows() * w.cols());
  }
  return total == 0.0 ? 1.0 : kept / total;
}

Network apply_plan(const Network& net, const PruningPlan& plan) {
  if (plan.per_layer_k.size() != net.depth()) {
    throw Error(ErrorKind::BadSpec, "plan covers " + std::to_string(plan.per_layer_k.size()) +
                                        " layers, network has " + std::to_string(net.depth()));
  }
  Network out = net;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const std::size_t k = plan.per_layer_k[l];
    // A full-size plan entry is the identity; skipping keeps the weights bitwise.
    if (k == prune_dim(net.hidden[l], plan.kind)) continue;
    out.hidden[l] = plan.kind == PruneKind::Row ? prune_rows(net.hidden[l], k)
                                                : prune_spectral(net.hidden[l], k);
  }
  return out;
}

PruneResult layerwise_prune(const Network& net, PruneKind kind, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorKind::BadSpec, "ratio must be in (0, 1]");
  PruningPlan plan;
  plan.kind = kind;
  plan.target_ratio = ratio;
  for (const auto& w : net.hidden) {
    const std::size_t dim = prune_dim(w, kind);
    const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(dim)));
    plan.per_layer_k.push_back(std::clamp<std::size_t>(k, 1, dim));
  }
  plan.achieved_ratio = achieved_ratio(net, kind, plan.per_layer_k);
  return {apply_plan(net, plan), plan};
}

std::vector<double> default_eps_grid() {
  std::vector<double> grid(200);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = std::pow(10.0, -6.0 + 6.0 * static_cast<double>(i) / 199.0);
  }
  return grid;
}

std::size_t minimal_k(const Vector& structure, double eps) {
  const auto len = static_cast<std::size_t>(structure.size());
  if (len == 0) throw Error(ErrorKind::BadK, "empty structure vector");
  if (structure.cwiseAbs().maxCoeff() == 0.0) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if (residual_ratio(as_span(structure), 1.0, k) <= eps) return k;
  }
  return len;
}

PruneResult eps_targeted_global_prune(const Network& net, PruneKind kind, double target_ratio,
                                      const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw Error(ErrorKind::EmptyGrid, "epsilon grid is empty");
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw Error(ErrorKind::BadSpec, "target ratio must be in (0, 1]");
  }
  std::vector<double> grid = eps_grid;
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<Vector> structures;
  for (const auto& w : net.hidden) structures.push_back(structure_of(w, kind));

  PruningPlan best;
  best.kind = kind;
  best.target_ratio = target_ratio;
  double best_dist = std::numeric_limits<double>::infinity();
  for (double eps : grid) {
    std::vector<std::size_t> ks;
    for (const auto& s : structures) ks.push_back(minimal_k(s, eps));
    const double ratio = achieved_ratio(net, kind, ks);
    const double dist = std::abs(ratio - target_ratio);
    if (dist < best_dist || (dist == best_dist && ratio > best.achieved_ratio)) {
      best_dist = dist;
      best.per_layer_k = ks;
      best.epsilon = eps;
      best.achieved_ratio = ratio;
    }
  }
  return {apply_plan(net, best), best};
}

std::vector<RetentionPoint> retention_curve(const Network& net, const Dataset& data, PruneKind kind,
                                            PruneMethod method, const std::vector<double>& ratios,
                                            const std::optional<AttackConfig>& attack) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "retention curve on an empty dataset");
  std::vector<RetentionPoint> out;
  for (double ratio : ratios) {
    const PruneResult pr = method == PruneMethod::Layerwise
                               ? layerwise_prune(net, kind, ratio)
                               : eps_targeted_global_prune(net, kind, ratio);
    RetentionPoint p;
    p.target_ratio = ratio;
    p.achieved_ratio = pr.plan.achieved_ratio;
    p.clean_acc = accuracy(pr.net, data);
    if (attack) {
      Dataset adv = data;
      adv.features += pgd(pr.net, data.features, data.labels, *attack);
      p.robust_acc = accuracy(pr.net, adv);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace robcomp
