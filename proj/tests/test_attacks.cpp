#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robcomp/attacks.hpp"
#include "robcomp/bounds.hpp"
#include "support.hpp"

using namespace robcomp;

namespace {

Network linear_model(std::mt19937_64& rng, Eigen::Index dim) {
  Network net;
  net.head = WeightMatrix(testing::random_matrix(1, dim, rng));
  return net;
}

Dataset noise_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index dim, int classes = 2) {
  Dataset d;
  d.features = testing::random_matrix(n, dim, rng);
  d.num_classes = classes;
  for (Eigen::Index i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(i % classes));
  return d;
}

double linear_optimum(const Network& net, const Vector& x, int label, double delta, NormKind norm) {
  const Vector theta = net.head.values().row(0).transpose();
  const double y = label == 1 ? 1.0 : -1.0;
  const double dual = norm == NormKind::Inf ? theta.cwiseAbs().sum() : theta.norm();
  return std::log1p(std::exp(-y * theta.dot(x) + delta * dual));
}

Network square_net(std::mt19937_64& rng, Eigen::Index h, std::size_t depth, std::size_t outputs) {
  Network net;
  for (std::size_t l = 0; l < depth; ++l) {
    net.hidden.emplace_back(Matrix(testing::random_matrix(h, h, rng) / std::sqrt(static_cast<double>(h))));
  }
  net.head = WeightMatrix(testing::random_matrix(static_cast<Eigen::Index>(outputs), h, rng));
  return net;
}

}  // namespace

TEST_CASE("fgsm and pgd reach the linear closed form") {
  std::mt19937_64 rng(201);
  for (int t = 0; t < 20; ++t) {
    const Network net = linear_model(rng, 6);
    const Dataset d = noise_data(rng, 10, 6);
    for (NormKind norm : {NormKind::Inf, NormKind::Two}) {
      AttackConfig cfg;
      cfg.norm = norm;
      cfg.delta = 0.05 + 0.1 * (t % 5);
      cfg.seed = static_cast<std::uint64_t>(t);
      const Matrix a = fgsm(net, d.features, d.labels, cfg);
      const Matrix p = pgd(net, d.features, d.labels, cfg);
      const Vector la = per_example_loss(net, d.features + a, d.labels, LossKind::BinaryCe);
      const Vector lp = per_example_loss(net, d.features + p, d.labels, LossKind::BinaryCe);
      for (Eigen::Index i = 0; i < 10; ++i) {
        const double opt = linear_optimum(net, d.features.row(i).transpose(), d.labels[static_cast<std::size_t>(i)], cfg.delta, norm);
        CHECK(std::abs(la(i) - opt) <= 1e-12 * std::max(1.0, opt));
        CHECK(std::abs(lp(i) - opt) <= 1e-6);
        CHECK(perturbation_norm(a.row(i).transpose(), norm) == doctest::Approx(cfg.delta).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero budget leaves inputs alone") {
  std::mt19937_64 rng(202);
  const Network net = square_net(rng, 5, 2, 1);
  const Dataset d = noise_data(rng, 8, 5);
  AttackConfig cfg;
  cfg.delta = 0.0;
  CHECK(fgsm(net, d.features, d.labels, cfg) == Matrix::Zero(8, 5));
  CHECK(pgd(net, d.features, d.labels, cfg) == Matrix::Zero(8, 5));
  cfg.delta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.delta = 0.1;
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("feasibility and dominance on nonlinear nets") {
  std::mt19937_64 rng(203);
  for (int t = 0; t < 12; ++t) {
    const std::size_t outputs = t % 2 == 0 ? 1 : 3;
    const LossKind kind = outputs == 1 ? LossKind::BinaryCe : LossKind::SoftmaxCe;
    const Network net = square_net(rng, 6, 1 + static_cast<std::size_t>(t % 3), outputs);
    const Dataset d = noise_data(rng, 12, 6, outputs == 1 ? 2 : 3);
    for (NormKind norm : {NormKind::Inf, NormKind::Two}) {
      AttackConfig cfg;
      cfg.norm = norm;
      cfg.delta = 0.3;
      cfg.steps = 10;
      cfg.restarts = 2;
      cfg.seed = static_cast<std::uint64_t>(t);
      if (t % 4 == 3) cfg.clip_box = std::pair{-1.0, 1.0};
      const Matrix a = fgsm(net, d.features, d.labels, cfg);
      const Matrix p = pgd(net, d.features, d.labels, cfg);
      const Vector clean = per_example_loss(net, d.features, d.labels, kind);
      const Vector lf = per_example_loss(net, d.features + a, d.labels, kind);
      const Vector lp = per_example_loss(net, d.features + p, d.labels, kind);
      for (Eigen::Index i = 0; i < 12; ++i) {
        CHECK(perturbation_norm(p.row(i).transpose(), norm) <= cfg.delta + 1e-9);
        CHECK(perturbation_norm(a.row(i).transpose(), norm) <= cfg.delta + 1e-9);
        CHECK(lp(i) >= clean(i) - 1e-12);
        if (!cfg.clip_box) CHECK(lp(i) >= lf(i) - 1e-12);
        if (cfg.clip_box) {
          const Matrix z = d.features.row(i) + p.row(i);
          for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (std::abs(d.features(i, j)) <= 1.0) {
              CHECK(z(0, j) >= -1.0 - 1e-12);
              CHECK(z(0, j) <= 1.0 + 1e-12);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("adversarial loss is non-decreasing in the budget") {
  std::mt19937_64 rng(204);
  for (int t = 0; t < 6; ++t) {
    const Network lin = linear_model(rng, 5);
    const Dataset d = noise_data(rng, 10, 5);
    double prev = -1.0;
    for (double delta : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
      AttackConfig cfg;
      cfg.delta = delta;
      cfg.norm = t % 2 == 0 ? NormKind::Inf : NormKind::Two;
      const auto out = evaluate_robustness(lin, d, cfg);
      CHECK(out.adversarial_loss >= prev - 1e-12);
      prev = out.adversarial_loss;
    }
  }
  std::size_t violations = 0, pairs = 0;
  for (int t = 0; t < 6; ++t) {
    const Network net = square_net(rng, 6, 2, 1);
    const Dataset d = noise_data(rng, 20, 6);
    double prev = -1.0;
    for (double delta : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
      AttackConfig cfg;
      cfg.delta = delta;
      cfg.seed = 5;
      const auto out = evaluate_robustness(net, d, cfg);
      violations += out.adversarial_loss < prev - 1e-12 ? 1 : 0;
      ++pairs;
      prev = out.adversarial_loss;
    }
  }
  CHECK(violations == 0);
  CHECK(pairs == 36);
}

TEST_CASE("robustness outcome fields") {
  std::mt19937_64 rng(205);
  const Network net = square_net(rng, 6, 2, 1);
  const Dataset d = noise_data(rng, 30, 6);
  AttackConfig cfg;
  cfg.delta = 1e-12;
  auto out = evaluate_robustness(net, d, cfg);
  CHECK(out.robust_accuracy == out.clean_accuracy);
  CHECK(out.gap >= -1e-9);
  cfg.delta = 0.5;
  out = evaluate_robustness(net, d, cfg);
  CHECK(out.gap >= -1e-9);
  CHECK(out.gap == doctest::Approx(out.adversarial_loss - out.clean_loss));
  CHECK(out.perturbations.rows() == 30);
  CHECK(out.sv_projections.rows() == 30);
  CHECK(out.sv_projections.cols() == 6);
  CHECK(out.sv_top_fraction.size() == 30);
  for (double f : out.sv_top_fraction) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0 + 1e-12);
  }
  CHECK(!out.amplification.empty());
  CHECK_THROWS_AS(evaluate_robustness(net, Dataset{}, cfg), Error);
}

TEST_CASE("secants never exceed the lipschitz bound") {
  std::mt19937_64 rng(206);
  std::size_t checked = 0;
  for (int t = 0; t < 12; ++t) {
    const Network net = square_net(rng, 8, 1 + static_cast<std::size_t>(t % 3), 1);
    const Dataset d = noise_data(rng, 25, 8);
    for (NormKind norm : {NormKind::Inf, NormKind::Two}) {
      AttackConfig cfg;
      cfg.norm = norm;
      cfg.delta = 0.5;
      cfg.steps = 10;
      cfg.restarts = 1;
      const auto out = evaluate_robustness(net, d, cfg);
      const double bound = lipschitz_bound(net, norm).lipschitz_bound;
      for (double s : out.secants) {
        CHECK(s <= bound * (1 + 1e-12));
        ++checked;
      }
    }
  }
  CHECK(checked > 400);
}

TEST_CASE("singular direction alignment") {
  std::mt19937_64 rng(207);
  const WeightMatrix w(testing::random_matrix(6, 6, rng));
  const auto f = svd(w);
  const Vector v1 = f.right.col(0);
  auto s = sv_alignment(w, v1, 1);
  CHECK(s.top_k_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.projections(0) == doctest::Approx(1.0).epsilon(1e-12));
  const Vector tail = f.right.col(3) + 2.0 * f.right.col(5);
  s = sv_alignment(w, tail, 3);
  CHECK(s.top_k_fraction <= 1e-20);
  CHECK(sv_alignment(w, tail, 6).top_k_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(sv_alignment(w, Vector::Ones(4), 1), Error);
}

TEST_CASE("universal perturbation beats random directions") {
  std::mt19937_64 rng(208);
  Dataset d;
  d.features = testing::random_matrix(400, 10, rng);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const int y = static_cast<int>(i % 2);
    d.labels.push_back(y);
    d.features(i, 0) += y == 1 ? 1.5 : -1.5;
  }
  Network net;
  Matrix theta = Matrix::Zero(1, 10);
  theta(0, 0) = 2.0;
  theta(0, 1) = 0.3;
  net.head = WeightMatrix(theta);
  for (NormKind norm : {NormKind::Inf, NormKind::Two}) {
    AttackConfig cfg;
    cfg.norm = norm;
    cfg.delta = 0.8;
    cfg.step_size = 0.2;
    const auto uae = uae_fgsm(net, d, cfg, 5, 50);
    CHECK(perturbation_norm(uae.perturbation, norm) <= cfg.delta + 1e-9);
    CHECK(uae.fooling_rate == fooling_rate(net, d, uae.perturbation));
    double random = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Vector r = random_perturbation(10, norm, cfg.delta, s);
      CHECK(perturbation_norm(r, norm) == doctest::Approx(cfg.delta).epsilon(1e-12));
      random += fooling_rate(net, d, r);
    }
    random /= 10.0;
    CHECK(uae.fooling_rate >= random);
    CHECK(uae.fooling_rate > 0.0);
  }
  CHECK_THROWS_AS(uae_fgsm(net, Dataset{}, AttackConfig{}, 1), Error);
}

TEST_CASE("attacks are deterministic per seed") {
  std::mt19937_64 rng(209);
  const Network net = square_net(rng, 6, 2, 3);
  const Dataset d = noise_data(rng, 20, 6, 3);
  AttackConfig cfg;
  cfg.norm = NormKind::Two;
  cfg.seed = 11;
  CHECK(pgd(net, d.features, d.labels, cfg) == pgd(net, d.features, d.labels, cfg));
}
