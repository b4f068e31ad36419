#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "robcomp/attacks.hpp"
#include "robcomp/dataset.hpp"
#include "robcomp/network.hpp"

namespace robcomp {

struct AdversarialTraining {
  AttackConfig attack;
  double ratio = 0.5;  // ceil(ratio * batch) examples per minibatch replaced by PGD examples
};

struct TrainConfig {
  AdamWConfig optimizer;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  std::vector<RegularizerSpec> regularizers;
  std::vector<std::optional<double>> frobenius_targets;  // per hidden layer
  std::optional<AdversarialTraining> adversarial;
  std::size_t patience = 10;
  double validation_fraction = 0.05;  // 0 disables the split and early stopping
  /// Attack used to fill robust_acc on the validation split each epoch.
  std::optional<AttackConfig> history_attack;
  /// Truncation used for the per-epoch eps_sigma / eps_nu columns; 0 picks ceil(0.1 h).
  std::size_t history_k = 0;

  /// Throws BadSpec on out-of-range settings.
  void validate() const;
};

/// Current Frobenius norms of every hidden layer, as projection targets.
std::vector<std::optional<double>> frobenius_targets_of(const Network& net);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean minibatch data loss
  double val_loss = 0.0;
  double clean_acc = 0.0;   // on the training split
  std::optional<double> robust_acc;
  std::vector<double> eps_sigma;  // per hidden layer
  std::vector<double> eps_nu;
  std::vector<double> frobenius;
};

struct TrainResult {
  Network net;  // the best-validation-loss parameters when early stopping is active
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg);

/// epoch,train_loss,val_loss,clean_acc,robust_acc,eps_sigma_1..,eps_nu_1..,frob_1..
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace robcomp
