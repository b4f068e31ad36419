#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/SVD>

#include "robcomp/compressibility.hpp"
#include "robcomp/linalg.hpp"

namespace testing {

using robcomp::Matrix;
using robcomp::Vector;
using robcomp::as_span;
using robcomp::top_k_indices;

// Brute force over every 0/1 diagonal of the full dimension, straight from the definition.
inline double alignment_inf_oracle(const Matrix& wn, const Matrix& w, std::size_t k) {
  auto compress = [&](const Matrix& m) {
    Vector l1 = m.cwiseAbs().rowwise().sum();
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (std::size_t r : top_k_indices(as_span(l1), k)) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(r));
    return out;
  };
  const Matrix a = compress(wn);
  const Matrix b = compress(w);
  const double norm = wn.cwiseAbs().rowwise().sum().maxCoeff() * w.cwiseAbs().rowwise().sum().maxCoeff();
  double best = 0.0;
  const Eigen::Index h = w.rows();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << h); ++mask) {
    Vector d(h);
    for (Eigen::Index j = 0; j < h; ++j) d(j) = static_cast<double>((mask >> j) & 1U);
    const Matrix p = a * d.asDiagonal() * b;
    best = std::max(best, p.cwiseAbs().rowwise().sum().maxCoeff() / norm);
  }
  return best;
}

inline double alignment_2_oracle(const Matrix& wn, const Matrix& w, std::size_t k) {
  Eigen::JacobiSVD<Eigen::MatrixXd> sw(Eigen::MatrixXd(w), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::JacobiSVD<Eigen::MatrixXd> sn(Eigen::MatrixXd(wn), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd a = sn.singularValues().head(kk).cwiseSqrt().asDiagonal() *
                            sn.matrixV().leftCols(kk).transpose();
  const Eigen::MatrixXd b = sw.matrixU().leftCols(kk) * sw.singularValues().head(kk).cwiseSqrt().asDiagonal();
  const double norm = std::sqrt(sw.singularValues()(0) * sn.singularValues()(0));
  double best = 0.0;
  const Eigen::Index h = w.rows();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << h); ++mask) {
    Eigen::VectorXd d(h);
    for (Eigen::Index j = 0; j < h; ++j) d(j) = static_cast<double>((mask >> j) & 1U);
    const Eigen::MatrixXd p = a * d.asDiagonal() * b;
    Eigen::JacobiSVD<Eigen::MatrixXd> sp(p);
    best = std::max(best, sp.singularValues()(0) / norm);
  }
  return best;
}

inline double brute_force_parsing(const std::vector<double>& f, std::vector<std::size_t>* best_set) {
  const std::size_t n = f.size();
  double best = 1.0;
  std::vector<std::vector<std::size_t>> optimal{{}};
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    if (mask & (mask >> 1)) continue;
    double p = 1.0;
    std::vector<std::size_t> set;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        if (!(f[i] < 1.0)) ok = false;
        p *= f[i];
        set.push_back(i + 1);
      }
    }
    if (!ok) continue;
    if (p < best) {
      best = p;
      optimal = {set};
    } else if (p == best) {
      optimal.push_back(set);
    }
  }
  if (best_set != nullptr) *best_set = *std::min_element(optimal.begin(), optimal.end());
  return best;
}

}  // namespace testing
