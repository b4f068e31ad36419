#include "robcomp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "robcomp/compressibility.hpp"

namespace robcomp {

std::string_view to_string(NormKind kind) { return kind == NormKind::Inf ? "inf" : "two"; }

NormKind norm_kind_from_string(std::string_view name) {
  if (name == "inf" || name == "linf") return NormKind::Inf;
  if (name == "two" || name == "2" || name == "l2") return NormKind::Two;
  throw Error(ErrorKind::BadSpec, "unknown norm '" + std::string(name) + "'");
}

std::string_view to_string(SearchMethod method) {
  return method == SearchMethod::Exact ? "exact-enumeration" : "greedy";
}

namespace {

double effective_dim(const WeightMatrix& w, SquarePolicy policy, bool& conservative) {
  if (!w.is_square()) {
    if (policy == SquarePolicy::Strict) {
      throw Error(ErrorKind::NotSquare, "layer is " + std::to_string(w.rows()) + "x" +
                                            std::to_string(w.cols()));
    }
    conservative = true;
  }
  return static_cast<double>(std::max(w.rows(), w.cols()));
}

void require_spread_below_one(double beta) {
  if (beta >= 1.0) {
    throw Error(ErrorKind::DegenerateSpread, "spread is 1: the k-th structure entry is zero");
  }
}

Vector sorted_desc(Vector v) {
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

// Returns rows of w outside the top-k by l1 norm zeroed, plus the kept row indices.
Matrix keep_top_rows(const WeightMatrix& w, std::size_t k, std::vector<std::size_t>& kept) {
  const Vector l1 = w.values().cwiseAbs().rowwise().sum();
  kept = top_k_indices(as_span(l1), k);
  std::sort(kept.begin(), kept.end());
  Matrix out = Matrix::Zero(w.values().rows(), w.values().cols());
  for (std::size_t r : kept) {
    out.row(static_cast<Eigen::Index>(r)) = w.values().row(static_cast<Eigen::Index>(r));
  }
  return out;
}

// Maximizes f over 0/1 patterns of length n (the active coordinates).
struct PatternSearch {
  std::function<double(const std::vector<char>&)> eval;
  std::size_t evaluations = 0;

  double value(const std::vector<char>& d) {
    ++evaluations;
    return eval(d);
  }

  double exact(std::size_t n) {
    if (n >= 63) throw Error(ErrorKind::BadSpec, "exact enumeration over too many coordinates");
    std::vector<char> d(n, 0);
    double best = -1.0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (std::size_t j = 0; j < n; ++j) d[j] = static_cast<char>((mask >> j) & 1U);
      best = std::max(best, value(d));
    }
    return best;
  }

  double climb(std::vector<char> d) {
    double current = value(d);
    for (;;) {
      std::size_t best_j = d.size();
      double best = current;
      for (std::size_t j = 0; j < d.size(); ++j) {
        d[j] ^= 1;
        const double v = value(d);
        d[j] ^= 1;
        if (v > best) {
          best = v;
          best_j = j;
        }
      }
      if (best_j == d.size()) return current;
      d[best_j] ^= 1;
      current = best;
    }
  }

  double greedy(std::size_t n, std::size_t restarts, std::uint64_t seed) {
    double best = climb(std::vector<char>(n, 1));
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t r = 0; r < restarts; ++r) {
      std::vector<char> d(n);
      for (auto& b : d) b = static_cast<char>(coin(rng));
      best = std::max(best, climb(std::move(d)));
    }
    return best;
  }
};

AlignmentFactor run_search(PatternSearch& search, std::size_t active, const SearchConfig& cfg) {
  AlignmentFactor f;
  bool exact = cfg.mode == SearchConfig::Mode::Exact ||
               (cfg.mode == SearchConfig::Mode::Auto && active <= cfg.exact_threshold);
  if (exact) {
    f.raw_max = search.exact(active);
    f.method = SearchMethod::Exact;
  } else {
    f.raw_max = search.greedy(active, cfg.restarts, cfg.seed);
    f.method = SearchMethod::Greedy;
  }
  f.evaluations = search.evaluations;
  return f;
}

void check_pair(const WeightMatrix& w_next, const WeightMatrix& w) {
  if (w_next.cols() != w.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "next layer has " + std::to_string(w_next.cols()) + " inputs, layer has " +
                    std::to_string(w.rows()) + " outputs");
  }
}

double ratio_at(std::span<const double> v, std::size_t k) {
  if (v.empty() || !(v[0] > 0.0)) throw Error(ErrorKind::ZeroLeader, "leading entry is not positive");
  return k < v.size() ? v[k] / v[0] : 0.0;
}

LayerBound with_layer(LayerBound b, std::size_t layer) {
  b.layer = layer;
  return b;
}

template <typename F>
auto for_layer(std::size_t layer, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "layer " + std::to_string(layer) + ": " + e.detail());
  }
}

}  // namespace

LayerBound layer_bound_inf(const WeightMatrix& w, std::size_t k_nu, std::size_t k_r,
                           SquarePolicy policy) {
  if (k_nu == 0 || k_r == 0) throw Error(ErrorKind::BadK, "k_nu and k_r must be >= 1");
  LayerBound b;
  const double h = effective_dim(w, policy, b.conservative);
  const auto row = profile(w, StructureKind::Row, k_nu);
  const auto within = profile(w, StructureKind::WithinRow, k_r);
  require_spread_below_one(row.beta);
  b.epsilon = row.epsilon;
  b.beta = row.beta;
  b.epsilon_r = within.epsilon;
  b.k = k_nu;
  b.k_r = k_r;
  b.actual = op_norm_inf(w);
  b.bound = (1.0 - row.epsilon) / (1.0 - row.beta) *
            (std::sqrt(h * static_cast<double>(k_r)) + h * within.epsilon) /
            static_cast<double>(k_nu) * frobenius_norm(w);
  return b;
}

LayerBound layer_bound_2(const WeightMatrix& w, std::size_t k_sigma, SquarePolicy policy) {
  if (k_sigma == 0) throw Error(ErrorKind::BadK, "k_sigma must be >= 1");
  LayerBound b;
  const double h = effective_dim(w, policy, b.conservative);
  StructureVectors sv;
  sv.sigma = svd(w).singular_values;
  const auto spec = profile(sv, w, StructureKind::Spectral, k_sigma);
  require_spread_below_one(spec.beta);
  b.epsilon = spec.epsilon;
  b.beta = spec.beta;
  b.k = k_sigma;
  b.actual = sv.sigma(0);
  b.bound = (1.0 - spec.epsilon) / (1.0 - spec.beta) * std::sqrt(h) /
            static_cast<double>(k_sigma) * frobenius_norm(w);
  return b;
}

double bound_opnorm_inf(const WeightMatrix& w, std::size_t k_nu, std::size_t k_r,
                        SquarePolicy policy) {
  return layer_bound_inf(w, k_nu, k_r, policy).bound;
}

double bound_opnorm_2(const WeightMatrix& w, std::size_t k_sigma, SquarePolicy policy) {
  return layer_bound_2(w, k_sigma, policy).bound;
}

double remainder_inf(std::span<const double> nu, std::span<const double> nu_next, std::size_t k) {
  const double a = ratio_at(nu, k);
  const double b = ratio_at(nu_next, k);
  return a + b + a * b;
}

double remainder_2(std::span<const double> sigma, std::span<const double> sigma_next,
                   std::size_t k) {
  const double a = ratio_at(sigma, k);
  const double b = ratio_at(sigma_next, k);
  return std::sqrt(a) + std::sqrt(b) + std::sqrt(a * b);
}

AlignmentFactor alignment_inf(const WeightMatrix& w_next, const WeightMatrix& w, std::size_t k,
                              const SearchConfig& cfg) {
  check_pair(w_next, w);
  if (k == 0) throw Error(ErrorKind::BadK, "alignment needs k >= 1");
  const double norm = op_norm_inf(w_next) * op_norm_inf(w);
  if (norm == 0.0) throw Error(ErrorKind::ZeroMatrix, "alignment of a zero layer");

  std::vector<std::size_t> rows_next;
  std::vector<std::size_t> rows;
  const Matrix next_k = keep_top_rows(w_next, k, rows_next);
  const Matrix cur_k = keep_top_rows(w, k, rows);

  // Coordinates of D that can change the product: kept rows of W meeting nonzero columns of W'_k.
  std::vector<Eigen::Index> active;
  for (std::size_t j : rows) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (next_k.col(jj).cwiseAbs().maxCoeff() > 0.0 && cur_k.row(jj).cwiseAbs().maxCoeff() > 0.0) {
      active.push_back(jj);
    }
  }
  Matrix left(static_cast<Eigen::Index>(rows_next.size()), static_cast<Eigen::Index>(active.size()));
  Matrix right(static_cast<Eigen::Index>(active.size()), cur_k.cols());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t r = 0; r < rows_next.size(); ++r) {
      left(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) =
          next_k(static_cast<Eigen::Index>(rows_next[r]), active[a]);
    }
    right.row(static_cast<Eigen::Index>(a)) = cur_k.row(active[a]);
  }

  PatternSearch search;
  search.eval = [&](const std::vector<char>& d) {
    Matrix prod = Matrix::Zero(left.rows(), right.cols());
    for (std::size_t a = 0; a < d.size(); ++a) {
      if (d[a]) prod.noalias() += left.col(static_cast<Eigen::Index>(a)) * right.row(static_cast<Eigen::Index>(a));
    }
    return prod.rows() == 0 ? 0.0 : prod.cwiseAbs().rowwise().sum().maxCoeff() / norm;
  };
  AlignmentFactor f = run_search(search, active.size(), cfg);

  const Vector nu = sorted_desc(w.values().cwiseAbs().rowwise().sum());
  const Vector nu_next = sorted_desc(w_next.values().cwiseAbs().rowwise().sum());
  f.remainder = remainder_inf(as_span(nu), as_span(nu_next), k);
  f.value = f.raw_max + f.remainder;
  return f;
}

AlignmentFactor alignment_2(const WeightMatrix& w_next, const WeightMatrix& w, std::size_t k,
                            const SearchConfig& cfg) {
  check_pair(w_next, w);
  if (k == 0) throw Error(ErrorKind::BadK, "alignment needs k >= 1");
  const SvdFactors cur = svd(w);
  const SvdFactors next = svd(w_next);
  if (k > static_cast<std::size_t>(cur.singular_values.size()) ||
      k > static_cast<std::size_t>(next.singular_values.size())) {
    throw Error(ErrorKind::BadK, "k = " + std::to_string(k) + " exceeds a layer's rank dimension");
  }
  const double s1 = cur.singular_values(0);
  const double s1_next = next.singular_values(0);
  if (s1 == 0.0 || s1_next == 0.0) throw Error(ErrorKind::ZeroMatrix, "alignment of a zero layer");
  const auto kk = static_cast<Eigen::Index>(k);

  // A = sqrt(S'_k) V'_k^T (k x n), B = U_k sqrt(S_k) (n x k); product is sum_j d_j A_j B_j.
  const Matrix a_full = next.singular_values.head(kk).cwiseSqrt().asDiagonal() *
                        next.right.leftCols(kk).transpose();
  const Matrix b_full = cur.left.leftCols(kk) * cur.singular_values.head(kk).cwiseSqrt().asDiagonal();

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < a_full.cols(); ++j) {
    if (a_full.col(j).cwiseAbs().maxCoeff() > 0.0 && b_full.row(j).cwiseAbs().maxCoeff() > 0.0) {
      active.push_back(j);
    }
  }
  Matrix left(kk, static_cast<Eigen::Index>(active.size()));
  Matrix right(static_cast<Eigen::Index>(active.size()), kk);
  for (std::size_t a = 0; a < active.size(); ++a) {
    left.col(static_cast<Eigen::Index>(a)) = a_full.col(active[a]);
    right.row(static_cast<Eigen::Index>(a)) = b_full.row(active[a]);
  }
  const double norm = std::sqrt(s1 * s1_next);

  PatternSearch search;
  search.eval = [&](const std::vector<char>& d) {
    Matrix prod = Matrix::Zero(kk, kk);
    bool any = false;
    for (std::size_t a = 0; a < d.size(); ++a) {
      if (d[a]) {
        prod.noalias() += left.col(static_cast<Eigen::Index>(a)) * right.row(static_cast<Eigen::Index>(a));
        any = true;
      }
    }
    if (!any) return 0.0;
    return svd(prod).singular_values(0) / norm;
  };
  AlignmentFactor f = run_search(search, active.size(), cfg);
  f.remainder = remainder_2(as_span(cur.singular_values), as_span(next.singular_values), k);
  f.value = f.raw_max + f.remainder;
  return f;
}

ParsingSet optimal_parsing_set(std::span<const double> factors) {
  const std::size_t n = factors.size();
  auto candidate = [&](std::size_t i) { return factors[i] < 1.0; };

  // Smallest product reachable from a running product p when the next usable index is `from`.
  // Products are formed left to right, and rounding is monotone, so the DP is exact.
  auto min_extension = [&](double p, std::size_t from) {
    double two_back = p;
    double one_back = p;
    for (std::size_t i = from; i < n; ++i) {
      double best = one_back;
      if (candidate(i)) best = std::min(best, two_back * factors[i]);
      two_back = one_back;
      one_back = best;
    }
    return one_back;
  };

  ParsingSet out;
  const double target = min_extension(1.0, 0);
  double running = 1.0;
  std::size_t from = 0;
  // Lexicographically smallest optimal set: stop as soon as the target is met,
  // otherwise take the earliest index that keeps the target reachable.
  while (running != target) {
    std::size_t pick = n;
    for (std::size_t i = from; i < n; ++i) {
      if (candidate(i) && min_extension(running * factors[i], i + 2) == target) {
        pick = i;
        break;
      }
    }
    if (pick == n) break;
    running *= factors[pick];
    out.indices.push_back(pick + 1);
    from = pick + 2;
  }
  out.product = running;
  return out;
}

LayerK KConfig::resolve(std::size_t layer_index, const WeightMatrix& w) const {
  if (!per_layer.empty()) {
    if (layer_index >= per_layer.size()) {
      throw Error(ErrorKind::BadSpec, "k configuration has " + std::to_string(per_layer.size()) +
                                          " entries, layer " + std::to_string(layer_index + 1) +
                                          " requested");
    }
    return per_layer[layer_index];
  }
  if (shared) return {*shared, *shared};
  const std::size_t cap = std::min(w.rows(), w.cols());
  const auto h = static_cast<double>(std::max(w.rows(), w.cols()));
  const auto k = static_cast<std::size_t>(std::ceil(default_fraction * h - 1e-12));
  const std::size_t clamped = std::clamp<std::size_t>(k, 1, cap);
  return {clamped, clamped};
}

BoundReport lipschitz_bound_inf(const Network& net, const KConfig& kcfg, const SearchConfig& scfg) {
  net.validate();
  BoundReport report;
  report.norm = NormKind::Inf;
  std::vector<LayerK> ks;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& w = net.hidden[l];
    const LayerK k = kcfg.resolve(l, w);
    ks.push_back(k);
    auto b = for_layer(l + 1, [&] { return layer_bound_inf(w, k.k, k.k_r, kcfg.square); });
    report.per_layer.push_back(with_layer(b, l + 1));
    report.layer_product *= b.bound;
    report.conservative_extension = report.conservative_extension || b.conservative;
  }
  std::vector<double> values;
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    const std::size_t k = std::min(ks[l].k, ks[l + 1].k);
    auto f = for_layer(l + 1, [&] { return alignment_inf(net.hidden[l + 1], net.hidden[l], k, scfg); });
    report.alignment_factors.push_back(f);
    values.push_back(f.value);
  }
  const ParsingSet s = optimal_parsing_set(values);
  report.s_opt = s.indices;
  report.alignment_product = s.product;
  report.lipschitz_bound = report.layer_product * report.alignment_product;
  return report;
}

BoundReport lipschitz_bound_2(const Network& net, const KConfig& kcfg, const SearchConfig& scfg) {
  net.validate();
  BoundReport report;
  report.norm = NormKind::Two;
  std::vector<LayerK> ks;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& w = net.hidden[l];
    const LayerK k = kcfg.resolve(l, w);
    ks.push_back(k);
    auto b = for_layer(l + 1, [&] { return layer_bound_2(w, k.k, kcfg.square); });
    report.per_layer.push_back(with_layer(b, l + 1));
    report.layer_product *= b.bound;
    report.conservative_extension = report.conservative_extension || b.conservative;
  }
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    const std::size_t k = std::min(ks[l].k, ks[l + 1].k);
    auto f = for_layer(l + 1, [&] { return alignment_2(net.hidden[l + 1], net.hidden[l], k, scfg); });
    report.alignment_factors.push_back(f);
    report.alignment_product *= f.value;
  }
  report.lipschitz_bound = report.layer_product * report.alignment_product;
  return report;
}

BoundReport lipschitz_bound(const Network& net, NormKind norm, const KConfig& kcfg,
                            const SearchConfig& scfg) {
  return norm == NormKind::Inf ? lipschitz_bound_inf(net, kcfg, scfg)
                               : lipschitz_bound_2(net, kcfg, scfg);
}

double head_dual_norm(const Network& net, NormKind norm) {
  const Matrix& c = net.head.values();
  return norm == NormKind::Inf ? c.cwiseAbs().sum() : c.norm();
}

double adversarial_risk_bound(const Network& net, const Dataset& data, double delta,
                              double lipschitz, NormKind norm) {
  if (!net.is_binary()) {
    throw Error(ErrorKind::NonBinaryLabels, "risk bound needs a single-output binary head");
  }
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "risk bound over an empty dataset");
  if (delta < 0.0) throw Error(ErrorKind::BadSpec, "delta must be non-negative");
  const Vector losses = per_example_loss(net, data.features, data.labels, LossKind::BinaryCe);
  return losses.mean() + delta * lipschitz * head_dual_norm(net, norm);
}

void attach_risk_bound(BoundReport& report, const Network& net, const Dataset& data, double delta) {
  report.risk_bound = adversarial_risk_bound(net, data, delta, report.lipschitz_bound, report.norm);
  report.clean_risk = adversarial_risk_bound(net, data, 0.0, report.lipschitz_bound, report.norm);
  report.head_dual_norm = head_dual_norm(net, report.norm);
}

}  // namespace robcomp
