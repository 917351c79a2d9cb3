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

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "corrfilt/corrfilt.hpp"

#ifndef CORRFILT_TEST_DATA_DIR
#error "CORRFILT_TEST_DATA_DIR must point at tests/data"
#endif

namespace fixtures {

using corrfilt::CorrelationMatrix;
using corrfilt::Matrix;

inline std::string data_path(const std::string& name) { return std::string(CORRFILT_TEST_DATA_DIR) + "/" + name; }

inline const std::vector<std::string>& ten_stock_labels() {
  static const std::vector<std::string> labels{"AIG", "IBM", "BAC", "AXP", "MER", "TXN", "SLB", "MOT", "RD", "OXY"};
  return labels;
}

inline Matrix from_upper(std::size_t n, const std::vector<double>& upper, double diag = 1.0) {
  Matrix m = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), diag);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = upper[k];
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = upper[k];
      ++k;
    }
  }
  return m;
}

inline CorrelationMatrix ten_stocks() {
  static const std::vector<double> upper{
      0.413, 0.518, 0.543, 0.529, 0.341, 0.271, 0.231, 0.412, 0.294,  //
      0.471, 0.537, 0.617, 0.552, 0.298, 0.475, 0.373, 0.270,         //
      0.547, 0.592, 0.400, 0.258, 0.349, 0.370, 0.276,                //
      0.664, 0.422, 0.347, 0.351, 0.414, 0.269,                       //
      0.533, 0.344, 0.462, 0.440, 0.318,                              //
      0.305, 0.582, 0.355, 0.245,                                     //
      0.193, 0.533, 0.591,                                            //
      0.258, 0.166,                                                   //
      0.590};
  return CorrelationMatrix(from_upper(10, upper), ten_stock_labels());
}

// Printed average linkage filtered matrix of the ten stocks.
inline Matrix ten_stocks_alca() {
  static const std::vector<double> upper{
      0.501, 0.501, 0.501, 0.501, 0.412, 0.308, 0.412, 0.308, 0.308,  //
      0.536, 0.577, 0.577, 0.412, 0.308, 0.412, 0.308, 0.308,         //
      0.536, 0.536, 0.412, 0.308, 0.412, 0.308, 0.308,                //
      0.664, 0.412, 0.308, 0.412, 0.308, 0.308,                       //
      0.412, 0.308, 0.412, 0.308, 0.308,                              //
      0.308, 0.582, 0.308, 0.308,                                     //
      0.308, 0.562, 0.591,                                            //
      0.308, 0.308,                                                   //
      0.562};
  return from_upper(10, upper);
}

// Printed single linkage filtered matrix of the ten stocks.
inline Matrix ten_stocks_slca() {
  static const std::vector<double> upper{
      0.543, 0.543, 0.543, 0.543, 0.543, 0.440, 0.543, 0.440, 0.440,  //
      0.592, 0.617, 0.617, 0.552, 0.440, 0.552, 0.440, 0.440,         //
      0.592, 0.592, 0.552, 0.440, 0.552, 0.440, 0.440,                //
      0.664, 0.552, 0.440, 0.552, 0.440, 0.440,                       //
      0.552, 0.440, 0.552, 0.440, 0.440,                              //
      0.440, 0.582, 0.440, 0.440,                                     //
      0.440, 0.590, 0.591,                                            //
      0.440, 0.440,                                                   //
      0.590};
  return from_upper(10, upper);
}

// Printed values carry three decimals.
inline constexpr double kPrintTolerance = 0.0005 + 1e-12;
// Averages of printed inputs: input rounding plus output rounding.
inline constexpr double kAveragedPrintTolerance = 0.001 + 1e-12;

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Random positive definite correlation matrix: Pearson matrix of T Gaussian
/// records mixed through a random loading matrix, so entries of both signs
/// occur unless `nonnegative` is set.
inline CorrelationMatrix random_correlation(std::size_t n, std::mt19937_64& rng, bool nonnegative = false) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(n);
  const Eigen::Index t = 3 * k + 10;
  Matrix load(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) load(i, j) = nonnegative ? u(rng) : z(rng);
  }
  Matrix x(t, k);
  for (Eigen::Index r = 0; r < t; ++r) {
    for (Eigen::Index j = 0; j < k; ++j) x(r, j) = z(rng);
  }
  x = x * load.transpose();
  if (nonnegative) {
    // Non-negative mixing of independent inputs cannot yield negative
    // population correlations, but sample noise can; take the population.
    Matrix cov = load * load.transpose();
    const corrfilt::Vector d = cov.diagonal().cwiseSqrt().cwiseInverse();
    return CorrelationMatrix::symmetrized(d.asDiagonal() * cov * d.asDiagonal());
  }
  return corrfilt::pearson_correlation(corrfilt::DataMatrix(x));
}

/// Factor model with `groups` blocks of `size` elements: correlation `inner`
/// inside a block and `outer` across blocks.
inline corrfilt::HnfmSpec block_model(std::size_t groups, std::size_t size, double inner, double outer) {
  using corrfilt::DendrogramNode;
  std::vector<DendrogramNode> nodes;
  const std::size_t n = groups * size;
  DendrogramNode root;
  root.rho = outer;
  for (std::size_t g = 0; g < groups; ++g) {
    DendrogramNode block;
    block.rho = inner;
    for (std::size_t i = 0; i < size; ++i) block.children.push_back(g * size + i);
    nodes.push_back(block);
    root.children.push_back(n + g);
  }
  nodes.push_back(root);
  return corrfilt::hnfm_from_dendrogram(corrfilt::Dendrogram(corrfilt::detail::default_labels(n), nodes));
}

/// Three-level model: blocks of `size`, pairs of blocks joined at `middle`,
/// everything joined at `outer`.
inline corrfilt::HnfmSpec nested_model(std::size_t pairs, std::size_t size, double inner, double middle, double outer) {
  using corrfilt::DendrogramNode;
  const std::size_t blocks = 2 * pairs;
  const std::size_t n = blocks * size;
  std::vector<DendrogramNode> nodes;
  for (std::size_t g = 0; g < blocks; ++g) {
    DendrogramNode block;
    block.rho = inner;
    for (std::size_t i = 0; i < size; ++i) block.children.push_back(g * size + i);
    nodes.push_back(block);
  }
  DendrogramNode root;
  root.rho = outer;
  for (std::size_t p = 0; p < pairs; ++p) {
    DendrogramNode mid;
    mid.rho = middle;
    mid.children = {n + 2 * p, n + 2 * p + 1};
    nodes.push_back(mid);
    root.children.push_back(n + blocks + p);
  }
  nodes.push_back(root);
  return corrfilt::hnfm_from_dendrogram(corrfilt::Dendrogram(corrfilt::detail::default_labels(n), nodes));
}

}  // namespace fixtures
