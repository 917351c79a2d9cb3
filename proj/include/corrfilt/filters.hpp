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
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "corrfilt/error.hpp"
#include "corrfilt/hclust.hpp"
#include "corrfilt/linalg.hpp"

namespace corrfilt {

/// Constant-correlation matrix: unit diagonal, every off-diagonal entry equal
/// to the mean off-diagonal entry of the source.
struct ShrinkageTarget {
  CorrelationMatrix values;
};

inline ShrinkageTarget shrinkage_target(const CorrelationMatrix& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  double mean = 0.0;
  if (n > 1) mean = (c.values().sum() - c.values().trace()) / static_cast<double>(n * (n - 1));
  Matrix t = Matrix::Constant(n, n, std::clamp(mean, -1.0, 1.0));
  t.diagonal().setOnes();
  return {CorrelationMatrix(t, c.labels())};
}

/// alpha * target + (1 - alpha) * c.
inline CorrelationMatrix shrink(const CorrelationMatrix& c, const ShrinkageTarget& target, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (target.values.size() != c.size()) throw Error(ErrorKind::DimensionMismatch, "shrinkage target size differs from matrix");
  const auto n = static_cast<Eigen::Index>(c.size());
  const Matrix& a = c.values();
  const Matrix& t = target.values.values();
  Matrix out = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = alpha * t(i, j) + (1.0 - alpha) * a(i, j);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return CorrelationMatrix(out, c.labels());
}

inline CorrelationMatrix shrink(const CorrelationMatrix& c, double alpha) { return shrink(c, shrinkage_target(c), alpha); }

struct RmtResult {
  CorrelationMatrix filtered;
  Matrix intermediate;  // cleaned spectrum before renormalization
  double lambda_max = 0.0;
  std::size_t replaced = 0;  // eigenvalues averaged
  std::size_t clamped = 0;   // entries pulled back into [-1, 1]
};

/// Random matrix edge for T records of N elements once the largest eigenvalue
/// is discounted: (1 - lambda_1 / N)(1 + 1/Q + 2 sqrt(1/Q)), Q = T / N.
inline double rmt_lambda_max(double lambda_1, std::size_t n, std::size_t t_len) {
  const double q = static_cast<double>(t_len) / static_cast<double>(n);
  const double sigma2 = 1.0 - lambda_1 / static_cast<double>(n);
  return sigma2 * (1.0 + 1.0 / q + 2.0 * std::sqrt(1.0 / q));
}

/// Eigenvalues strictly below the edge are replaced by their mean, the matrix
/// is rebuilt in the original eigenbasis and rescaled to unit diagonal.
inline RmtResult rmt_filter_detailed(const CorrelationMatrix& c, std::size_t t_len) {
  const std::size_t n = c.size();
  if (t_len < n) throw Error(ErrorKind::QBelowOne, "RMT filter needs T >= N, got N=" + std::to_string(n) + " T=" + std::to_string(t_len));
  const SymmetricEigen eig = symmetric_eigen(c);
  Vector lambda = eig.eigenvalues;
  RmtResult out{c, Matrix(), rmt_lambda_max(lambda(0), n, t_len), 0, 0};

  double sum = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) < out.lambda_max) {
      sum += lambda(k);
      ++out.replaced;
    }
  }
  if (out.replaced > 0) {
    const double mean = sum / static_cast<double>(out.replaced);
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
      if (lambda(k) < out.lambda_max) lambda(k) = mean;
    }
  }
  out.intermediate = eig.eigenvectors * lambda.asDiagonal() * eig.eigenvectors.transpose();
  out.intermediate = 0.5 * (out.intermediate + out.intermediate.transpose()).eval();

  const Vector d = out.intermediate.diagonal().cwiseSqrt().cwiseInverse();
  Matrix r = d.asDiagonal() * out.intermediate * d.asDiagonal();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (i != j && std::abs(r(i, j)) > 1.0) {
        r(i, j) = std::clamp(r(i, j), -1.0, 1.0);
        ++out.clamped;
      }
    }
  }
  out.filtered = CorrelationMatrix::symmetrized(r, c.labels());
  return out;
}

inline CorrelationMatrix rmt_filter(const CorrelationMatrix& c, std::size_t t_len) { return rmt_filter_detailed(c, t_len).filtered; }

inline CorrelationMatrix hierarchical_filter(const CorrelationMatrix& c, Linkage method) {
  return cluster(c, method).filtered.values;
}

/// A named correlation filter. `apply` receives a sample correlation matrix
/// and the number of records it was estimated from.
struct Filter {
  std::string label;
  std::function<CorrelationMatrix(const CorrelationMatrix&, std::size_t)> apply;
};

inline Filter identity_filter() {
  return {"identity", [](const CorrelationMatrix& c, std::size_t) { return c; }};
}

inline Filter hierarchical_filter(Linkage method) {
  return {std::string(to_string(method)), [method](const CorrelationMatrix& c, std::size_t) { return hierarchical_filter(c, method); }};
}

inline Filter rmt_filter() {
  return {"RMT", [](const CorrelationMatrix& c, std::size_t t_len) { return rmt_filter(c, t_len); }};
}

inline Filter shrink_filter(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  char buf[48];
  std::snprintf(buf, sizeof buf, "SHR(%.4g)", alpha);
  return {buf, [alpha](const CorrelationMatrix& c, std::size_t) { return shrink(c, alpha); }};
}

/// Ignores its input and returns `truth`; marks the ideal point of the plane
/// on synthetic data.
inline Filter oracle_filter(CorrelationMatrix truth) {
  return {"oracle", [truth = std::move(truth)](const CorrelationMatrix&, std::size_t) { return truth; }};
}

}  // namespace corrfilt
