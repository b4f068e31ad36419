#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robcomp/compressibility.hpp"
#include "support.hpp"

using namespace robcomp;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return v; }

// Independent residual: sort magnitudes directly, sum tail powers.
double residual_oracle(std::vector<double> theta, double q, std::size_t k) {
  for (auto& t : theta) t = std::abs(t);
  std::sort(theta.begin(), theta.end(), std::greater<>());
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    total += std::pow(theta[i], q);
    if (i >= k) tail += std::pow(theta[i], q);
  }
  return std::pow(tail / total, 1.0 / q);
}

}  // namespace

TEST_CASE("residual ratio on equal-error vectors with different spreads") {
  CHECK(residual_ratio(vec({10, 2, 1, 1}), 1.0, 2) == doctest::Approx(2.0 / 14.0).epsilon(1e-15));
  CHECK(residual_ratio(vec({6, 6, 1, 1}), 1.0, 2) == doctest::Approx(2.0 / 14.0).epsilon(1e-15));
  CHECK(residual_ratio(vec({3, -1, 2}), 2.0, 3) == 0.0);
  CHECK(residual_ratio(vec({3, -1, 2}), 1.0, 0) == 1.0);
  try {
    residual_ratio(vec({0, 0}), 1.0, 1);
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVector);
  }
  CHECK_THROWS_AS(residual_ratio(vec({1, 2}), 1.0, 3), Error);
}

TEST_CASE("top-k keeps magnitudes in place with index tie-break") {
  CHECK(compressed_topk(vec({3, 4}), 1) == vec({0, 4}));
  CHECK(compressed_topk(vec({3, 4}), 0) == vec({0, 0}));
  CHECK(compressed_topk(vec({5, -5, 1}), 2) == vec({5, -5, 0}));
  CHECK(top_k_indices(vec({1, 2, 2, 2}), 2) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("strict norm identity") {
  CHECK(residual_ratio(vec({3, 4}), 2.0, 1) == doctest::Approx(0.6));
  CHECK(strict_norm_identity_check(vec({3, 4}), 2.0, 1) <= 1e-15);
  CHECK(strict_norm_identity_check(vec({3, 4, 5}), 1.0, 3) == 0.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 2000; ++t) {
    const Vector theta = testing::random_vector(1 + t % 20, rng, static_cast<testing::Entries>(t % 3));
    const double q = t % 2 == 0 ? 1.0 : 2.0;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(theta.size()); ++k) {
      CHECK(strict_norm_identity_check(as_span(theta), q, k) <= 1e-10 * lq_norm(as_span(theta), q));
    }
  }
}

TEST_CASE("residual ratio matches an independent evaluation and is monotone in k") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    const Vector theta = testing::random_vector(1 + t % 15, rng, static_cast<testing::Entries>(t % 3));
    const std::vector<double> v(theta.data(), theta.data() + theta.size());
    for (double q : {1.0, 2.0, 3.0}) {
      double prev = 2.0;
      for (std::size_t k = 0; k <= v.size(); ++k) {
        const double r = residual_ratio(v, q, k);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        CHECK(r <= prev + 1e-15);
        CHECK(std::abs(r - residual_oracle(v, q, k)) <= 1e-12);
        prev = r;
      }
    }
  }
}

TEST_CASE("spread") {
  CHECK(spread(vec({10, 2, 1, 1}), 2) == doctest::Approx(0.8));
  CHECK(spread(vec({6, 6, 1, 1}), 2) == 0.0);
  CHECK(spread(vec({4, 4, 4}), 3) == 0.0);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vector theta = testing::random_vector(1 + t % 9, rng);
    CHECK(spread(as_span(theta), 1) == 0.0);
  }
  try {
    spread(vec({0, 0, 0}), 1);
    FAIL("expected ZeroLeader");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroLeader);
  }
}

TEST_CASE("structure vectors") {
  auto sv = structure_vectors(WeightMatrix::identity(3));
  CHECK(sv.nu == Vector::Ones(3));
  CHECK((sv.sigma - Vector::Ones(3)).cwiseAbs().maxCoeff() <= 1e-14);
  const double m[] = {1, 1, 10, 2};
  sv = structure_vectors(WeightMatrix(2, 2, m));
  CHECK(sv.nu(0) == 12.0);
  CHECK(sv.nu(1) == 2.0);
  CHECK(sv.nu_hat(0) == doctest::Approx(std::sqrt(104.0)));
  const double d[] = {3, 1};
  sv = structure_vectors(WeightMatrix::diagonal(d));
  CHECK(sv.sigma(0) == doctest::Approx(3.0));

  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const WeightMatrix w(testing::random_matrix(1 + t % 7, 1 + (t / 7) % 7, rng));
    sv = structure_vectors(w);
    CHECK(sv.nu.size() == static_cast<Eigen::Index>(w.rows()));
    CHECK(sv.sigma.size() == static_cast<Eigen::Index>(std::min(w.rows(), w.cols())));
    for (Eigen::Index i = 1; i < sv.nu.size(); ++i) CHECK(sv.nu(i) <= sv.nu(i - 1));
    const double f = frobenius_norm(w);
    CHECK(std::abs(sv.nu_hat.norm() - f) <= 1e-8 * f);
    CHECK(std::abs(sv.sigma.norm() - f) <= 1e-8 * f);
  }
}

TEST_CASE("pq index values and lower bound") {
  CHECK(std::abs(pq_index(vec({1, 1, 1, 1}), 1.0, 2.0)) <= 1e-15);
  CHECK(pq_index(vec({1, 0, 0, 0}), 1.0, 2.0) == doctest::Approx(0.5));
  try {
    pq_index(vec({1, 2}), 2.0, 1.0);
    FAIL("expected BadOrders");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BadOrders);
  }
  CHECK_THROWS_AS(pq_index(vec({0, 0}), 1.0, 2.0), Error);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  std::size_t draws = 0;
  for (int t = 0; t < 10000; ++t) {
    const Vector w = testing::random_vector(2 + t % 30, rng, static_cast<testing::Entries>(t % 3));
    double p = u(rng), q = u(rng);
    if (p == q) continue;
    if (p > q) std::swap(p, q);
    const auto d = static_cast<std::size_t>(w.size());
    const std::size_t k = 1 + static_cast<std::size_t>(t) % d;
    const double eps = residual_ratio(as_span(w), q, k);
    CHECK(pq_index_lower_bound(eps, k, d, p, q) <= pq_index(as_span(w), p, q) + 1e-12);
    ++draws;
  }
  CHECK(draws >= 9990);
}

TEST_CASE("pq lower bound needs the triangle inequality of the p-norm") {
  // (4,1,0), k=1, p=1/2, q=1: eps = 1/5, kappa^phi = 1/3, index = 1 - 9/15.
  const auto w = vec({4, 1, 0});
  const double eps = residual_ratio(w, 1.0, 1);
  CHECK(eps == doctest::Approx(0.2));
  CHECK(pq_index(w, 0.5, 1.0) == doctest::Approx(0.4));
  CHECK(pq_index_lower_bound(eps, 1, 3, 0.5, 1.0) == doctest::Approx(1.0 - 0.2 - 1.0 / 3.0));
  CHECK(pq_index_lower_bound(eps, 1, 3, 0.5, 1.0) > pq_index(w, 0.5, 1.0));
}

TEST_CASE("profiles select the right structure vector") {
  auto p = profile(WeightMatrix::identity(4), StructureKind::Row, 4);
  CHECK(p.epsilon == 0.0);
  CHECK(p.beta == 0.0);
  Matrix one_row = Matrix::Zero(3, 3);
  one_row.row(1) << 1, -2, 3;
  p = profile(WeightMatrix(one_row), StructureKind::Row, 1);
  CHECK(p.epsilon == 0.0);
  CHECK(p.beta == 0.0);
  const double m[] = {10, 2, 1, 1};
  p = profile(WeightMatrix(2, 2, m), StructureKind::Row, 1);
  CHECK(p.epsilon == doctest::Approx(2.0 / 14.0));
  CHECK(p.beta == 0.0);
  CHECK(p.q == 1.0);
  CHECK(profile(WeightMatrix(2, 2, m), StructureKind::WithinRow, 1).q == 2.0);
  CHECK(profile(WeightMatrix(2, 2, m), StructureKind::Unstructured, 1).epsilon == doctest::Approx(4.0 / 14.0));
  CHECK_THROWS_AS(profile(WeightMatrix(2, 2, m), StructureKind::Row, 0), Error);
  CHECK(structure_kind_from_string("within-row") == StructureKind::WithinRow);
  CHECK_THROWS_AS(structure_kind_from_string("diagonal"), Error);
}

TEST_CASE("profiles are scale invariant") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const WeightMatrix w(testing::random_matrix(6, 6, rng, static_cast<testing::Entries>(t % 3)));
    const double pow2 = std::ldexp(1.0, t % 40 - 20) * (t % 2 ? -1.0 : 1.0);
    const double alpha = g(rng);
    for (auto kind : {StructureKind::Row, StructureKind::WithinRow, StructureKind::Unstructured,
                      StructureKind::Spectral}) {
      const auto base = profile(w, kind, 2);
      const auto exact = profile(WeightMatrix(Matrix(pow2 * w.values())), kind, 2);
      const auto scaled = profile(WeightMatrix(Matrix(alpha * w.values())), kind, 2);
      if (kind != StructureKind::Spectral) {
        CHECK(exact.epsilon == base.epsilon);
        CHECK(exact.beta == base.beta);
      }
      CHECK(testing::close_rel(scaled.epsilon, base.epsilon, 1e-12, 1e-15));
      CHECK(testing::close_rel(scaled.beta, base.beta, 1e-12, 1e-15));
    }
  }
}
