#pragma once

// Small dense linear-algebra kernels. Eigen does the factorizations; this
// header fixes the failure semantics the rest of the library relies on.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maxcrps/error.hpp"

namespace maxcrps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Square matrix that is symmetric by construction: only the lower triangle
/// of the source is read.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& source) {
    if (source.rows() != source.cols()) {
      throw ContractError("SymmetricMatrix: source must be square");
    }
    values_ = source.selfadjointView<Eigen::Lower>();
  }

  [[nodiscard]] Eigen::Index order() const noexcept { return values_.rows(); }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  [[nodiscard]] const Matrix& dense() const noexcept { return values_; }

 private:
  Matrix values_;
};

/// Lower Cholesky factor L with L L^T = m, or nullopt if a pivot is <= 0.
[[nodiscard]] inline std::optional<Matrix> cholesky(const SymmetricMatrix& m) {
  Eigen::LLT<Matrix> llt(m.dense());
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix lower = llt.matrixL();
  if (!lower.allFinite()) return std::nullopt;
  return lower;
}

/// Cholesky with the one-shot jitter policy: on failure add `jitter` to the
/// diagonal once, then fail hard.
[[nodiscard]] inline Matrix cholesky_with_jitter(const SymmetricMatrix& m, double jitter = 1e-10,
                                                 bool* jittered = nullptr) {
  if (jittered != nullptr) *jittered = false;
  if (auto lower = cholesky(m)) return *std::move(lower);
  Matrix shifted = m.dense();
  shifted.diagonal().array() += jitter;
  if (auto lower = cholesky(SymmetricMatrix(shifted))) {
    if (jittered != nullptr) *jittered = true;
    return *std::move(lower);
  }
  throw NumericalError("cholesky: matrix of order " + std::to_string(m.order()) +
                       " is not positive definite (jitter " + std::to_string(jitter) + " applied)");
}

/// Solves m x = b for symmetric positive definite m.
[[nodiscard]] inline Matrix solve_spd(const SymmetricMatrix& m, const Matrix& b) {
  if (b.rows() != m.order()) {
    throw ContractError("solve_spd: right-hand side has " + std::to_string(b.rows()) +
                        " rows, matrix has order " + std::to_string(m.order()));
  }
  auto lower = cholesky(m);
  if (!lower) throw NumericalError("solve_spd: matrix is not positive definite");
  const Matrix& l = *lower;
  Matrix y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

[[nodiscard]] inline double symmetric_eigen_min(const SymmetricMatrix& m) {
  if (m.order() == 0) throw ContractError("symmetric_eigen_min: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.dense(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Neumaier compensated accumulator; the summation order is the call order.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace maxcrps
