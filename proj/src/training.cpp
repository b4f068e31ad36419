#include "robcomp/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "robcomp/compressibility.hpp"

namespace robcomp {

void TrainConfig::validate() const {
  if (!(optimizer.learning_rate > 0.0)) throw Error(ErrorKind::BadSpec, "learning rate must be > 0");
  if (batch_size == 0) throw Error(ErrorKind::BadSpec, "batch size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::BadSpec, "validation fraction must be in [0, 1)");
  }
  for (const auto& r : regularizers) {
    if (!(r.strength >= 0.0)) throw Error(ErrorKind::BadSpec, "regularizer strength must be >= 0");
    if (!(r.top_fraction > 0.0 && r.top_fraction <= 1.0)) {
      throw Error(ErrorKind::BadSpec, "top fraction must be in (0, 1]");
    }
  }
  if (adversarial) {
    if (!(adversarial->ratio >= 0.0 && adversarial->ratio <= 1.0)) {
      throw Error(ErrorKind::BadSpec, "adversarial ratio must be in [0, 1]");
    }
    adversarial->attack.validate();
  }
}

std::vector<std::optional<double>> frobenius_targets_of(const Network& net) {
  std::vector<std::optional<double>> out;
  for (const auto& w : net.hidden) out.emplace_back(frobenius_norm(w));
  return out;
}

namespace {

double residual_or_nan(const Vector& v, std::size_t k) {
  if (v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return residual_ratio(as_span(v), 1.0, std::min<std::size_t>(k, static_cast<std::size_t>(v.size())));
}

void record_profiles(const Network& net, std::size_t history_k, EpochRecord& rec) {
  for (const auto& w : net.hidden) {
    const std::size_t k =
        history_k > 0 ? history_k
                      : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                                     0.1 * static_cast<double>(std::max(w.rows(), w.cols())) - 1e-12)));
    rec.eps_sigma.push_back(residual_or_nan(svd(w).singular_values, k));
    rec.eps_nu.push_back(residual_or_nan(w.values().cwiseAbs().rowwise().sum(), k));
    rec.frobenius.push_back(frobenius_norm(w));
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "training on an empty dataset");
  const LossKind kind = loss_kind_for(net);

  Dataset train_set = data;
  Dataset val_set;
  const bool early = cfg.validation_fraction > 0.0 && data.size() > 1;
  if (early) {
    Split s = split_dataset(data, cfg.validation_fraction, cfg.seed);
    train_set = std::move(s.train);
    val_set = std::move(s.validation);
  }

  for (std::size_t l = 0; l < net.depth() && l < cfg.frobenius_targets.size(); ++l) {
    if (cfg.frobenius_targets[l]) net.hidden[l] = frobenius_project(net.hidden[l], *cfg.frobenius_targets[l]);
  }

  AdamState state = AdamState::for_network(net);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.net = net;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::uint64_t batch_counter = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const Dataset batch = train_set.subset(std::span(order).subspan(start, len));
      Matrix xb = batch.features;
      if (cfg.adversarial && cfg.adversarial->ratio > 0.0) {
        const auto m = std::min<std::size_t>(
            len, static_cast<std::size_t>(std::ceil(cfg.adversarial->ratio * static_cast<double>(len) - 1e-12)));
        AttackConfig attack = cfg.adversarial->attack;
        attack.seed = mix_seed(attack.seed, batch_counter);
        const auto rows = static_cast<Eigen::Index>(m);
        const Matrix head = xb.topRows(rows);
        xb.topRows(rows) = head + pgd(net, head, std::span(batch.labels).subspan(0, m), attack);
      }
      ++batch_counter;
      LossAndGrads lg = loss_and_grads(net, xb, batch.labels, kind);
      for (const auto& spec : cfg.regularizers) {
        if (spec.strength == 0.0) continue;
        const RegularizerValue r = regularizer_value_grad(spec, net);
        for (std::size_t l = 0; l < net.depth(); ++l) lg.params.hidden[l] += r.hidden[l];
      }
      adamw_step(net, lg.params, state, cfg.optimizer, cfg.frobenius_targets);
      loss_sum += lg.loss;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.clean_acc = accuracy(net, train_set);
    const Dataset& monitor = early ? val_set : train_set;
    rec.val_loss = per_example_loss(net, monitor.features, monitor.labels, kind).mean();
    if (cfg.history_attack) {
      const Matrix a = pgd(net, monitor.features, monitor.labels, *cfg.history_attack);
      Dataset adv = monitor;
      adv.features += a;
      rec.robust_acc = accuracy(net, adv);
    }
    record_profiles(net, cfg.history_k, rec);
    result.history.push_back(std::move(rec));

    if (!early) {
      result.net = net;
      result.best_epoch = epoch;
      continue;
    }
    const double val = result.history.back().val_loss;
    if (val < best_val) {
      best_val = val;
      result.net = net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  const std::size_t layers = history.empty() ? 0 : history.front().frobenius.size();
  out << "epoch,train_loss,val_loss,clean_acc,robust_acc";
  for (const char* name : {"eps_sigma_", "eps_nu_", "frob_"}) {
    for (std::size_t l = 1; l <= layers; ++l) out << ',' << name << l;
  }
  out << '\n';
  for (const auto& r : history) {
    out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_loss) << ',' << fmt(r.clean_acc)
        << ',' << (r.robust_acc ? fmt(*r.robust_acc) : "");
    for (const auto* col : {&r.eps_sigma, &r.eps_nu, &r.frobenius}) {
      for (double v : *col) out << ',' << fmt(v);
    }
    out << '\n';
  }
}

}  // namespace robcomp
