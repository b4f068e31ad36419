#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "robcomp/error.hpp"

namespace robcomp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Dense real matrix with finite entries. The unit every bound is computed on.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  /// Throws ShapeMismatch on empty shapes and NonFinite on NaN/Inf entries.
  explicit WeightMatrix(Matrix values);
  WeightMatrix(std::size_t rows, std::size_t cols, std::span<const double> row_major);

  static WeightMatrix zeros(std::size_t rows, std::size_t cols);
  static WeightMatrix identity(std::size_t n);
  static WeightMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  bool is_square() const { return m_.rows() == m_.cols(); }
  bool empty() const { return m_.size() == 0; }

  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  const Matrix& values() const { return m_; }
  std::span<const double> row_major() const {
    return {m_.data(), static_cast<std::size_t>(m_.size())};
  }

  /// Mutable access for optimizers; callers must keep entries finite.
  Matrix& mutable_values() { return m_; }

  friend bool operator==(const WeightMatrix& a, const WeightMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Thin SVD W = U diag(sigma) V^T with sigma non-increasing.
struct SvdFactors {
  Matrix left;    // rows x r
  Vector singular_values;
  Matrix right;   // cols x r
};

struct SvdOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

double frobenius_norm(const WeightMatrix& w);

/// Max row l1 norm (the l_inf -> l_inf induced norm).
double op_norm_inf(const WeightMatrix& w);

/// One-sided Jacobi. Right singular vectors are sign-normalized so their first
/// component with magnitude above 1e-12 is positive; left vectors follow.
SvdFactors svd(const WeightMatrix& w, const SvdOptions& opts = {});
SvdFactors svd(const Matrix& w, const SvdOptions& opts = {});

enum class SpectralRoute { Svd, PowerIteration };

struct PowerOptions {
  double rel_tolerance = 1e-10;
  int max_iterations = 200000;
};

double op_norm_2(const WeightMatrix& w, SpectralRoute route = SpectralRoute::Svd);
double op_norm_2(const Matrix& w, SpectralRoute route = SpectralRoute::Svd);
double op_norm_2_power(const Matrix& w, const PowerOptions& opts = {});

}  // namespace robcomp
