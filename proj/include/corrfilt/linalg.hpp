/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "corrfilt/error.hpp"

namespace corrfilt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back("V" + std::to_string(i + 1));
  return labels;
}

}  // namespace detail

/// T x N panel of observations: rows are time records, columns are elements.
///
/// Construction only rejects structurally broken input (empty panel, label
/// count mismatch, non-finite cells). The statistical invariants (T >= 2,
/// N >= 2, nonzero column variance) are checked by `validate()` and by the
/// estimators that need them, so degenerate panels such as a single-row
/// bootstrap replica can still be represented.
class DataMatrix {
 public:
  DataMatrix() = default;

  explicit DataMatrix(Matrix values, std::vector<std::string> labels = {})
      : values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw Error(ErrorKind::DimensionTooSmall, "data matrix must have at least one row and one column");
    }
    if (labels_.empty()) labels_ = detail::default_labels(static_cast<std::size_t>(values_.cols()));
    if (labels_.size() != static_cast<std::size_t>(values_.cols())) {
      throw Error(ErrorKind::DimensionMismatch, "label count " + std::to_string(labels_.size()) +
                                                    " does not match column count " +
                                                    std::to_string(values_.cols()));
    }
    if (!values_.allFinite()) throw Error(ErrorKind::NonNumericCell, "data matrix contains non-finite values");
  }

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t records() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t elements() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  bool column_is_constant(std::size_t column) const {
    const auto col = values_.col(static_cast<Eigen::Index>(column));
    return col.maxCoeff() == col.minCoeff();
  }

  void validate() const {
    if (records() < 2) throw Error(ErrorKind::DimensionTooSmall, "need at least 2 records, got " + std::to_string(records()));
    if (elements() < 2) throw Error(ErrorKind::DimensionTooSmall, "need at least 2 elements, got " + std::to_string(elements()));
    for (std::size_t j = 0; j < elements(); ++j) {
      if (column_is_constant(j)) throw Error(ErrorKind::ZeroVarianceColumn, "column " + std::to_string(j) + " (" + labels_[j] + ") is constant");
    }
  }

 private:
  Matrix values_;
  std::vector<std::string> labels_;
};

/// Symmetric N x N matrix with unit diagonal and entries in [-1, 1].
class CorrelationMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  CorrelationMatrix() = default;

  explicit CorrelationMatrix(Matrix values, std::vector<std::string> labels = {})
      : values_(std::move(values)), labels_(std::move(labels)) {
    check();
  }

  /// Builds a valid matrix from an almost-valid one: (A + A^T) / 2, unit
  /// diagonal, entries clamped into [-1, 1].
  static CorrelationMatrix symmetrized(const Matrix& values, std::vector<std::string> labels = {}) {
    if (values.rows() != values.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "correlation matrix must be square");
    }
    Matrix sym = (values + values.transpose()) * 0.5;
    sym = sym.cwiseMax(-1.0).cwiseMin(1.0);
    sym.diagonal().setOnes();
    return CorrelationMatrix(std::move(sym), std::move(labels));
  }

  static CorrelationMatrix identity(std::size_t n, std::vector<std::string> labels = {}) {
    return CorrelationMatrix(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                             std::move(labels));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  CorrelationMatrix with_labels(std::vector<std::string> labels) const {
    return CorrelationMatrix(values_, std::move(labels));
  }

 private:
  void check() {
    if (values_.rows() != values_.cols()) throw Error(ErrorKind::DimensionMismatch, "correlation matrix must be square");
    if (values_.rows() < 1) throw Error(ErrorKind::DimensionTooSmall, "correlation matrix is empty");
    if (!values_.allFinite()) throw Error(ErrorKind::NonNumericCell, "correlation matrix contains non-finite values");
    const auto n = values_.rows();
    if (labels_.empty()) labels_ = detail::default_labels(static_cast<std::size_t>(n));
    if (labels_.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorKind::DimensionMismatch, "label count does not match matrix dimension");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (values_(i, i) != 1.0) {
        throw Error(ErrorKind::InvalidArgument, "diagonal entry " + std::to_string(i) + " is not exactly 1");
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (std::abs(values_(i, j) - values_(j, i)) > kSymmetryTolerance) {
          throw Error(ErrorKind::InvalidArgument, "matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        if (values_(i, j) < -1.0 || values_(i, j) > 1.0) {
          throw Error(ErrorKind::InvalidArgument, "entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [-1, 1]");
        }
      }
    }
  }

  Matrix values_;
  std::vector<std::string> labels_;
};

/// Sample Pearson correlation of the columns of `data`.
inline CorrelationMatrix pearson_correlation(const DataMatrix& data) {
  if (data.records() < 2) {
    throw Error(ErrorKind::DimensionTooSmall, "Pearson correlation needs T >= 2, got T=" + std::to_string(data.records()));
  }
  for (std::size_t j = 0; j < data.elements(); ++j) {
    if (data.column_is_constant(j)) {
      throw Error(ErrorKind::ZeroVarianceColumn, "column " + std::to_string(j) + " (" + data.labels()[j] + ") is constant");
    }
  }
  const Matrix& x = data.values();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  Matrix cov = centered.transpose() * centered;
  const Vector scale = cov.diagonal().cwiseSqrt().cwiseInverse();
  Matrix corr = scale.asDiagonal() * cov * scale.asDiagonal();
  return CorrelationMatrix::symmetrized(corr, data.labels());
}

struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column k pairs with eigenvalues(k)
};

/// Eigendecomposition of a symmetric matrix (Householder tridiagonalization
/// followed by implicit-shift QR).
inline SymmetricEigen symmetric_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "eigendecomposition needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  SymmetricEigen out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline SymmetricEigen symmetric_eigen(const CorrelationMatrix& m) { return symmetric_eigen(m.values()); }

inline constexpr double kDefaultPdTolerance = 1e-10;

struct InverseLogdet {
  Matrix inverse;
  double logdet = 0.0;
};

/// Inverse and log-determinant of a positive definite matrix. Throws
/// NotPositiveDefinite when the smallest eigenvalue is <= `tolerance`.
inline InverseLogdet inverse_and_logdet(const Matrix& m, double tolerance = kDefaultPdTolerance) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "inverse needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "symmetric eigensolver did not converge");
  const double smallest = eig.eigenvalues()(0);
  if (!(smallest > tolerance)) {
    throw Error(ErrorKind::NotPositiveDefinite, "smallest eigenvalue " + std::to_string(smallest) +
                                                    " <= tolerance " + std::to_string(tolerance));
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  InverseLogdet out;
  out.inverse = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  out.inverse = (out.inverse + out.inverse.transpose()).eval() * 0.5;
  out.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return out;
}

inline InverseLogdet inverse_and_logdet(const CorrelationMatrix& m, double tolerance = kDefaultPdTolerance) {
  return inverse_and_logdet(m.values(), tolerance);
}

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "symmetric eigensolver did not converge");
  return eig.eigenvalues()(0);
}

}  // namespace corrfilt
