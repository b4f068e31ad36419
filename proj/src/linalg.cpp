#include "robcomp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace robcomp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::ZeroLeader: return "ZeroLeader";
    case ErrorKind::BadOrders: return "BadOrders";
    case ErrorKind::DegenerateSpread: return "DegenerateSpread";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NonBinaryLabels: return "NonBinaryLabels";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

WeightMatrix::WeightMatrix(Matrix values) : m_(std::move(values)) {
  if (m_.rows() == 0 || m_.cols() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "weight matrix must have positive rows and cols");
  }
  if (!m_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "weight matrix contains NaN or Inf");
  }
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, std::span<const double> row_major) {
  if (rows * cols != row_major.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "data length " + std::to_string(row_major.size()) + " != " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(row_major.begin(), row_major.end(), m.data());
  *this = WeightMatrix(std::move(m));
}

WeightMatrix WeightMatrix::zeros(std::size_t rows, std::size_t cols) {
  return WeightMatrix(Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
}

WeightMatrix WeightMatrix::identity(std::size_t n) {
  return WeightMatrix(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

WeightMatrix WeightMatrix::diagonal(std::span<const double> diag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = diag[static_cast<std::size_t>(i)];
  return WeightMatrix(std::move(m));
}

double frobenius_norm(const WeightMatrix& w) { return w.values().norm(); }

double op_norm_inf(const WeightMatrix& w) {
  return w.values().cwiseAbs().rowwise().sum().maxCoeff();
}

namespace {

struct RawSvd {
  Matrix left;  // tall dimension x n
  Vector sigma;
  Matrix right;  // n x n
};

// One-sided Jacobi on a matrix with rows >= cols. Columns are stored as rows of
// the transposed working copies so every rotation touches contiguous memory.
RawSvd jacobi_tall(const Matrix& a, const SvdOptions& opts) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Matrix g = a.transpose();  // n x m, row j = column j of A
  Matrix vt = Matrix::Identity(n, n);

  bool converged = n < 2;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = g.row(i).squaredNorm();
        const double beta = g.row(j).squaredNorm();
        const double gamma = g.row(i).dot(g.row(j));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= opts.tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double gi = g(i, k);
          const double gj = g(j, k);
          g(i, k) = c * gi - s * gj;
          g(j, k) = s * gi + c * gj;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vi = vt(i, k);
          const double vj = vt(j, k);
          vt(i, k) = c * vi - s * vj;
          vt(j, k) = s * vi + c * vj;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw Error(ErrorKind::ConvergenceFailure,
                "one-sided Jacobi did not converge within " + std::to_string(opts.max_sweeps) +
                    " sweeps");
  }

  RawSvd out;
  out.sigma.resize(n);
  out.left = Matrix::Zero(m, n);
  std::vector<Eigen::Index> degenerate;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double norm = g.row(j).norm();
    out.sigma(j) = norm;
    if (norm > 1e-300) {
      out.left.col(j) = g.row(j).transpose() / norm;
    } else {
      degenerate.push_back(j);
    }
  }
  // Complete the left basis for exactly-zero singular values.
  Eigen::Index candidate = 0;
  for (Eigen::Index j : degenerate) {
    while (candidate < m) {
      Vector e = Vector::Zero(m);
      e(candidate++) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index q = 0; q < n; ++q) {
          if (q == j) continue;
          const double len = out.left.col(q).squaredNorm();
          if (len > 0.0) e -= out.left.col(q).dot(e) * out.left.col(q);
        }
      }
      const double len = e.norm();
      if (len > 0.5) {
        out.left.col(j) = e / len;
        break;
      }
    }
  }
  out.right = vt.transpose();
  return out;
}

}  // namespace

SvdFactors svd(const Matrix& w, const SvdOptions& opts) {
  if (w.rows() == 0 || w.cols() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "svd of an empty matrix");
  }
  const bool wide = w.rows() < w.cols();
  RawSvd raw = wide ? jacobi_tall(w.transpose(), opts) : jacobi_tall(w, opts);
  Matrix left = wide ? raw.right : raw.left;
  Matrix right = wide ? raw.left : raw.right;
  const Eigen::Index r = raw.sigma.size();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return raw.sigma(a) > raw.sigma(b); });

  SvdFactors f;
  f.left.resize(left.rows(), r);
  f.right.resize(right.rows(), r);
  f.singular_values.resize(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    f.singular_values(j) = raw.sigma(src);
    f.left.col(j) = left.col(src);
    f.right.col(j) = right.col(src);
    for (Eigen::Index k = 0; k < f.right.rows(); ++k) {
      const double v = f.right(k, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) {
          f.right.col(j) *= -1.0;
          f.left.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return f;
}

SvdFactors svd(const WeightMatrix& w, const SvdOptions& opts) { return svd(w.values(), opts); }

double op_norm_2_power(const Matrix& w, const PowerOptions& opts) {
  if (w.rows() == 0 || w.cols() == 0) return 0.0;
  if (w.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(w.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  x.normalize();

  double estimate = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector wx = w * x;
    Vector y = w.transpose() * wx;
    const double mu = wx.squaredNorm();  // Rayleigh quotient of W^T W
    const double next = std::sqrt(mu);
    const double residual = (y - mu * x).norm();
    const double ynorm = y.norm();
    if (ynorm == 0.0) return 0.0;
    x = y / ynorm;
    if (std::abs(next - estimate) <= opts.rel_tolerance * next && residual <= 1e-6 * mu) {
      return next;
    }
    estimate = next;
  }
  throw Error(ErrorKind::ConvergenceFailure, "power iteration did not converge");
}

double op_norm_2(const Matrix& w, SpectralRoute route) {
  if (route == SpectralRoute::PowerIteration) return op_norm_2_power(w);
  return svd(w).singular_values(0);
}

double op_norm_2(const WeightMatrix& w, SpectralRoute route) { return op_norm_2(w.values(), route); }

}  // namespace robcomp
