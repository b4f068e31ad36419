#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "robcomp/linalg.hpp"
#include "robcomp/network.hpp"

namespace testing {

using robcomp::Matrix;
using robcomp::Vector;
using robcomp::WeightMatrix;

enum class Entries { Gaussian, LogNormal, Pareto };

inline double draw(Entries kind, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double sign = coin(rng) ? 1.0 : -1.0;
  switch (kind) {
    case Entries::Gaussian: return g(rng);
    case Entries::LogNormal: return sign * std::exp(1.5 * g(rng));
    case Entries::Pareto: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return sign * std::pow(1.0 - u(rng), -1.0 / 1.2);  // tail index 1.2
    }
  }
  return 0.0;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            Entries kind = Entries::Gaussian) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = draw(kind, rng);
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, Entries kind = Entries::Gaussian) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = draw(kind, rng);
  return v;
}

inline robcomp::Network random_network(std::size_t input, std::size_t width, std::size_t depth,
                                       std::size_t outputs, std::mt19937_64& rng) {
  robcomp::Network net;
  std::size_t in = input;
  for (std::size_t l = 0; l < depth; ++l) {
    net.hidden.emplace_back(random_matrix(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(in), rng));
    in = width;
  }
  net.head = WeightMatrix(random_matrix(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(in), rng));
  return net;
}

/// Average ranks (ties share the mean rank).
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = mean_rank;
    i = j + 1;
  }
  return r;
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

}  // namespace testing
