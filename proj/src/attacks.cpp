#include "robcomp/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace robcomp {

void AttackConfig::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error(ErrorKind::BadSpec, "delta must be >= 0");
  if (steps == 0) throw Error(ErrorKind::BadSpec, "steps must be >= 1");
  if (clip_box && clip_box->first > clip_box->second) {
    throw Error(ErrorKind::BadSpec, "clip box lower bound exceeds upper bound");
  }
}

double perturbation_norm(const Vector& a, NormKind norm) {
  return norm == NormKind::Inf ? (a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff()) : a.norm();
}

void project(Matrix& a, const Matrix& x, const AttackConfig& cfg) {
  // Box first, ball last.
  if (cfg.clip_box) {
    a = (x + a).cwiseMax(cfg.clip_box->first).cwiseMin(cfg.clip_box->second) - x;
  }
  if (cfg.norm == NormKind::Inf) {
    a = a.cwiseMax(-cfg.delta).cwiseMin(cfg.delta);
  } else {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double n = a.row(i).norm();
      if (n > cfg.delta) a.row(i) *= cfg.delta / n;
    }
  }
}

namespace {

// Ascent direction per row: sign for l_inf, unit l2 direction (1e-12 floor) for l2.
Matrix ascent_direction(const Matrix& g, NormKind norm) {
  if (norm == NormKind::Inf) return g.array().sign().matrix();
  Matrix d = g;
  for (Eigen::Index i = 0; i < d.rows(); ++i) d.row(i) /= std::max(d.row(i).norm(), 1e-12);
  return d;
}

void keep_better(Matrix& best, Vector& best_loss, const Matrix& cand, const Vector& cand_loss) {
  for (Eigen::Index i = 0; i < best.rows(); ++i) {
    if (cand_loss(i) > best_loss(i)) {
      best_loss(i) = cand_loss(i);
      best.row(i) = cand.row(i);
    }
  }
}

Matrix random_start(Eigen::Index n, Eigen::Index d, const AttackConfig& cfg, std::mt19937_64& rng) {
  Matrix a(n, d);
  if (cfg.norm == NormKind::Inf) {
    std::uniform_real_distribution<double> u(-cfg.delta, cfg.delta);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
    return a;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = g(rng);
    const double n2 = std::max(a.row(i).norm(), 1e-12);
    a.row(i) *= cfg.delta * std::pow(u(rng), 1.0 / static_cast<double>(d)) / n2;
  }
  return a;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Matrix fgsm(const Network& net, const Matrix& x, std::span<const int> labels,
            const AttackConfig& cfg) {
  cfg.validate();
  const Matrix g = input_gradients(net, x, labels, loss_kind_for(net));
  Matrix a = cfg.delta * ascent_direction(g, cfg.norm);
  if (cfg.norm == NormKind::Two) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (g.row(i).norm() == 0.0) a.row(i).setZero();
    }
  }
  project(a, x, cfg);
  return a;
}

Matrix pgd(const Network& net, const Matrix& x, std::span<const int> labels,
           const AttackConfig& cfg) {
  cfg.validate();
  const LossKind kind = loss_kind_for(net);
  Matrix best = Matrix::Zero(x.rows(), x.cols());
  Vector best_loss = per_example_loss(net, x, labels, kind);
  if (cfg.delta == 0.0) return best;

  const Matrix start = fgsm(net, x, labels, cfg);
  keep_better(best, best_loss, start, per_example_loss(net, x + start, labels, kind));

  std::mt19937_64 rng(cfg.seed);
  const double step = cfg.step();
  for (std::size_t run = 0; run <= cfg.restarts; ++run) {
    Matrix a = run == 0 ? start : random_start(x.rows(), x.cols(), cfg, rng);
    if (run > 0) project(a, x, cfg);
    Vector loss;
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      const Matrix g = input_gradients(net, x + a, labels, kind, &loss);
      keep_better(best, best_loss, a, loss);
      a += step * ascent_direction(g, cfg.norm);
      project(a, x, cfg);
    }
    keep_better(best, best_loss, a, per_example_loss(net, x + a, labels, kind));
  }
  return best;
}

SvAlignment sv_alignment(const WeightMatrix& layer, const Vector& a, std::size_t k) {
  if (static_cast<std::size_t>(a.size()) != layer.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "perturbation length " + std::to_string(a.size()) +
                                              " != layer input dim " + std::to_string(layer.cols()));
  }
  const SvdFactors f = svd(layer);
  SvAlignment out;
  out.projections = (f.right.transpose() * a).cwiseAbs();
  const double total = a.squaredNorm();
  if (total > 0.0) {
    const auto kk = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), out.projections.size());
    out.top_k_fraction = std::min(1.0, out.projections.head(kk).squaredNorm() / total);
  }
  return out;
}

double AttackOutcome::max_secant() const {
  return secants.empty() ? 0.0 : *std::max_element(secants.begin(), secants.end());
}

double AttackOutcome::mean_amplification() const { return mean_of(amplification); }

double AttackOutcome::mean_sv_top_fraction() const { return mean_of(sv_top_fraction); }

AttackOutcome evaluate_robustness(const Network& net, const Dataset& data, const AttackConfig& cfg,
                                  std::size_t sv_k) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "robustness evaluation on an empty dataset");
  const LossKind kind = loss_kind_for(net);
  AttackOutcome out;
  out.perturbations = pgd(net, data.features, data.labels, cfg);

  const Matrix x_adv = data.features + out.perturbations;
  out.clean_loss = per_example_loss(net, data.features, data.labels, kind).mean();
  out.adversarial_loss = per_example_loss(net, x_adv, data.labels, kind).mean();
  out.gap = out.adversarial_loss - out.clean_loss;
  out.clean_accuracy = accuracy(net, data);
  Dataset adv = data;
  adv.features = x_adv;
  out.robust_accuracy = accuracy(net, adv);

  const Matrix z = features(net, data.features);
  const Matrix z_adv = features(net, x_adv);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector a = out.perturbations.row(i).transpose();
    const double an = perturbation_norm(a, cfg.norm);
    if (an >= 1e-12) {
      const Vector dz = (z_adv.row(i) - z.row(i)).transpose();
      out.secants.push_back(perturbation_norm(dz, cfg.norm) / an);
    }
    const double zn = z.row(i).norm();
    if (zn > 0.0) out.amplification.push_back((z_adv.row(i) - z.row(i)).norm() / zn);
  }

  if (net.depth() > 0) {
    const WeightMatrix& first = net.hidden.front();
    const std::size_t k = sv_k > 0 ? sv_k
                                   : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                                                  0.1 * static_cast<double>(first.cols()))));
    const SvdFactors f = svd(first);
    out.sv_projections = (out.perturbations * f.right).cwiseAbs();
    const auto kk = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), out.sv_projections.cols());
    for (Eigen::Index i = 0; i < out.sv_projections.rows(); ++i) {
      const double total = out.perturbations.row(i).squaredNorm();
      if (total > 0.0) {
        out.sv_top_fraction.push_back(
            std::min(1.0, out.sv_projections.row(i).head(kk).squaredNorm() / total));
      }
    }
  }
  return out;
}

double fooling_rate(const Network& net, const Dataset& data, const Vector& u) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "fooling rate on an empty dataset");
  const auto clean = predict(net, data.features);
  const Matrix shifted = data.features.rowwise() + u.transpose();
  const auto fooled = predict(net, shifted);
  std::size_t correct = 0;
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const int y = net.is_binary() ? (data.labels[i] == 1 ? 1 : 0) : data.labels[i];
    if (clean[i] != y) continue;
    ++correct;
    if (fooled[i] != y) ++flipped;
  }
  return correct == 0 ? 0.0 : static_cast<double>(flipped) / static_cast<double>(correct);
}

UaeResult uae_fgsm(const Network& net, const Dataset& data, const AttackConfig& cfg,
                   std::size_t epochs, std::size_t batch_size) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "UAE on an empty dataset");
  if (epochs == 0 || batch_size == 0) throw Error(ErrorKind::BadSpec, "epochs and batch size must be >= 1");
  const LossKind kind = loss_kind_for(net);
  const double step = cfg.step();
  Matrix u = Matrix::Zero(1, data.features.cols());
  AttackConfig ball = cfg;
  ball.clip_box.reset();
  const Matrix origin = Matrix::Zero(1, data.features.cols());

  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
      const std::size_t len = std::min(batch_size, data.size() - start);
      const auto rows = static_cast<Eigen::Index>(len);
      const Matrix xb = data.features.middleRows(static_cast<Eigen::Index>(start), rows).rowwise() +
                        u.row(0);
      const std::span<const int> yb(data.labels.data() + start, len);
      const Matrix g = input_gradients(net, xb, yb, kind);
      const Matrix mean_grad = g.colwise().mean();
      u += step * ascent_direction(mean_grad, cfg.norm);
      project(u, origin, ball);
    }
  }
  UaeResult out;
  out.perturbation = u.row(0).transpose();
  out.fooling_rate = fooling_rate(net, data, out.perturbation);
  return out;
}

Vector random_perturbation(std::size_t dim, NormKind norm, double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector v(static_cast<Eigen::Index>(dim));
  if (norm == NormKind::Inf) {
    std::bernoulli_distribution coin(0.5);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = coin(rng) ? delta : -delta;
    return v;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  return delta * v / std::max(v.norm(), 1e-12);
}

}  // namespace robcomp
