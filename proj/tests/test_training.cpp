#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "robcomp/training.hpp"

using namespace robcomp;

namespace {

Dataset blobs(std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
  DatasetSpec spec;
  spec.samples = n;
  spec.dim = dim;
  spec.separation = separation;
  spec.noise = 1.0;
  spec.seed = seed;
  return generate_synthetic(spec);
}

bool same_history(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].train_loss != b[i].train_loss || a[i].val_loss != b[i].val_loss || a[i].clean_acc != b[i].clean_acc ||
        a[i].robust_acc != b[i].robust_acc || a[i].eps_sigma != b[i].eps_sigma || a[i].eps_nu != b[i].eps_nu ||
        a[i].frobenius != b[i].frobenius) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("separable blobs are learned") {
  const Dataset d = blobs(600, 2, 8.0, 1);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.optimizer.learning_rate = 0.01;
  const auto r = train(init_network(2, 16, 1, 1, 3), d, cfg);
  CHECK(r.history.size() <= 50);
  CHECK(accuracy(r.net, d) >= 0.99);
}

TEST_CASE("frobenius targets hold after every step") {
  const Dataset d = blobs(300, 6, 3.0, 4);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.batch_size = 16;
  cfg.frobenius_targets = {1.5, std::nullopt};
  cfg.regularizers = {{RegularizerKind::Nuclear, 0.05, 0.05}};
  const auto r = train(init_network(6, 6, 2, 1, 5), d, cfg);
  for (const auto& rec : r.history) {
    CHECK(std::abs(rec.frobenius[0] - 1.5) <= 1e-10 * 1.5);
    CHECK(rec.eps_sigma.size() == 2);
    CHECK(rec.eps_nu.size() == 2);
  }
  CHECK(std::abs(frobenius_norm(r.net.hidden[0]) - 1.5) <= 1e-10 * 1.5);
  const Network net = init_network(6, 6, 2, 1, 5);
  const auto targets = frobenius_targets_of(net);
  CHECK(*targets[1] == frobenius_norm(net.hidden[1]));
}

TEST_CASE("training is bitwise deterministic per seed") {
  const Dataset d = blobs(200, 4, 3.0, 6);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.batch_size = 32;
  cfg.seed = 9;
  cfg.regularizers = {{RegularizerKind::GroupLasso, 0.01, 0.05}};
  AdversarialTraining adv;
  adv.attack.delta = 0.1;
  adv.attack.steps = 3;
  adv.attack.restarts = 1;
  cfg.adversarial = adv;
  AttackConfig monitor;
  monitor.steps = 3;
  monitor.restarts = 0;
  cfg.history_attack = monitor;
  const auto a = train(init_network(4, 4, 2, 1, 1), d, cfg);
  const auto b = train(init_network(4, 4, 2, 1, 1), d, cfg);
  CHECK(same_history(a.history, b.history));
  CHECK(a.net == b.net);
  CHECK(a.history.front().robust_acc.has_value());
  cfg.seed = 10;
  CHECK(!same_history(a.history, train(init_network(4, 4, 2, 1, 1), d, cfg).history));
}

TEST_CASE("early stopping restores the best validation epoch") {
  const Dataset d = blobs(400, 4, 0.5, 7);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 3;
  cfg.batch_size = 8;
  cfg.validation_fraction = 0.2;
  cfg.optimizer.learning_rate = 0.05;
  const auto r = train(init_network(4, 32, 2, 1, 2), d, cfg);
  CHECK(r.stopped_early);
  CHECK(r.history.size() == r.best_epoch + 3);
  const Split s = split_dataset(d, 0.2, cfg.seed);
  const double val = per_example_loss(r.net, s.validation.features, s.validation.labels, LossKind::BinaryCe).mean();
  CHECK(val == r.history[r.best_epoch - 1].val_loss);
  for (const auto& rec : r.history) CHECK(rec.val_loss >= r.history[r.best_epoch - 1].val_loss);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.optimizer.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.adversarial = AdversarialTraining{};
  cfg.adversarial->ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.regularizers = {{RegularizerKind::L1, -1.0, 0.05}};
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(train(init_network(2, 2, 1, 1, 0), Dataset{}, TrainConfig{}), Error);
}

TEST_CASE("history csv") {
  EpochRecord r;
  r.epoch = 1;
  r.train_loss = 0.5;
  r.val_loss = 0.25;
  r.clean_acc = 1.0;
  r.eps_sigma = {0.1, 0.2};
  r.eps_nu = {0.3, 0.4};
  r.frobenius = {1.0, 2.0};
  std::ostringstream out;
  write_history_csv(out, {r});
  CHECK(out.str() ==
        "epoch,train_loss,val_loss,clean_acc,robust_acc,eps_sigma_1,eps_sigma_2,eps_nu_1,eps_nu_2,frob_1,frob_2\n"
        "1,0.5,0.25,1,,0.1,0.2,0.3,0.4,1,2\n");
}
