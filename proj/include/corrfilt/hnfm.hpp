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
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/random.hpp"

namespace corrfilt {

/// Hierarchically nested factor model: one independent unit-variance factor
/// per internal node of `tree`, loaded with `gamma` on every leaf below it,
/// plus an idiosyncratic term with loading `eta` per leaf.
///
/// When the root correlation is negative the root factor enters with sign
/// `root_sign[i]` (-1 for the leaves of the root's first child, +1 for the
/// rest) and `gamma` of the root holds its magnitude.
struct HnfmSpec {
  Dendrogram tree;
  std::vector<double> gamma;  // indexed like tree.nodes()
  std::vector<double> eta;    // indexed by leaf
  std::optional<std::vector<int>> root_sign;
  std::optional<double> mu;

  /// Signed loading of internal node k on leaf i (leaf must lie under k).
  double loading(std::size_t k, std::size_t leaf) const {
    const bool is_root = k + 1 == tree.internal_count();
    if (is_root && root_sign) return (*root_sign)[leaf] * gamma[k];
    return gamma[k];
  }

  void validate() const {
    if (gamma.size() != tree.internal_count()) throw Error(ErrorKind::DimensionMismatch, "gamma must have one entry per internal node");
    if (eta.size() != tree.leaf_count()) throw Error(ErrorKind::DimensionMismatch, "eta must have one entry per leaf");
    for (double e : eta) {
      if (!(e >= 0.0)) throw Error(ErrorKind::InvalidArgument, "eta must be non-negative");
    }
    if (root_sign) {
      if (root_sign->size() != tree.leaf_count()) throw Error(ErrorKind::DimensionMismatch, "root sign must cover every leaf");
      for (int s : *root_sign) {
        if (s != 1 && s != -1) throw Error(ErrorKind::InvalidArgument, "root signs must be +1 or -1");
      }
    }
    if (mu && !(*mu > 2.0)) throw Error(ErrorKind::InvalidMu, "degrees of freedom must exceed 2, got " + std::to_string(*mu));
  }
};

/// Factor loadings whose model correlation equals the tree's ultrametric
/// matrix: gamma(root) = sqrt(rho_root) and gamma(node) = sqrt(rho_node -
/// |rho_parent|), eta_i = sqrt(1 - sum of squared loadings on leaf i).
///
/// A negative root correlation is supported only when every other node is
/// non-negative, the root has exactly two children and |rho_root| is below
/// every other merge correlation; the two root groups then load the root
/// factor with opposite signs.
inline HnfmSpec hnfm_from_dendrogram(const Dendrogram& d) {
  const std::size_t n = d.leaf_count();
  const std::size_t m = d.internal_count();
  const std::size_t root_k = m - 1;
  const double rho_root = d.nodes()[root_k].rho;

  HnfmSpec spec;
  spec.tree = d;
  spec.gamma.assign(m, 0.0);
  if (rho_root < 0.0) {
    const auto& root_children = d.nodes()[root_k].children;
    if (root_children.size() != 2) {
      throw Error(ErrorKind::UnsupportedNegativeStructure, "negative root correlation needs a binary root split");
    }
    for (std::size_t k = 0; k < root_k; ++k) {
      const double r = d.nodes()[k].rho;
      if (r < 0.0) {
        throw Error(ErrorKind::UnsupportedNegativeStructure, "non-root node " + std::to_string(n + k) + " has negative correlation");
      }
      if (std::abs(rho_root) >= r) {
        throw Error(ErrorKind::UnsupportedNegativeStructure, "|rho_root| = " + std::to_string(std::abs(rho_root)) +
                                                                 " is not below node correlation " + std::to_string(r));
      }
    }
    std::vector<int> sign(n, 1);
    for (std::size_t leaf : d.leaves_under(root_children[0])) sign[leaf] = -1;
    spec.root_sign = std::move(sign);
  }
  spec.gamma[root_k] = std::sqrt(std::abs(rho_root));
  for (std::size_t k = 0; k < root_k; ++k) {
    const std::size_t parent = *d.parent(n + k) - n;
    const double diff = d.nodes()[k].rho - std::abs(d.nodes()[parent].rho);
    spec.gamma[k] = std::sqrt(std::max(diff, 0.0));
  }
  spec.eta.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t id : genealogy(d, i)) sum += spec.gamma[id - n] * spec.gamma[id - n];
    spec.eta[i] = std::sqrt(std::max(1.0 - sum, 0.0));
  }
  return spec;
}

/// <x_i x_j>: sum over the common genealogy of the signed loading products.
inline CorrelationMatrix model_correlation(const HnfmSpec& spec) {
  spec.validate();
  const Dendrogram& d = spec.tree;
  const std::size_t n = d.leaf_count();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < d.internal_count(); ++k) {
    const auto leaves = d.leaves_under(n + k);
    for (std::size_t a : leaves) {
      for (std::size_t b : leaves) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += spec.loading(k, a) * spec.loading(k, b);
      }
    }
  }
  out.diagonal().setOnes();
  return CorrelationMatrix::symmetrized(out, d.labels());
}

namespace detail {

inline constexpr std::size_t kSimulationChunk = 4096;

struct LeafLoadings {
  std::vector<std::vector<std::pair<std::size_t, double>>> per_leaf;  // (internal k, signed gamma)
};

inline LeafLoadings leaf_loadings(const HnfmSpec& spec) {
  const std::size_t n = spec.tree.leaf_count();
  LeafLoadings out;
  out.per_leaf.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t id : genealogy(spec.tree, i)) {
      const std::size_t k = id - n;
      const double g = spec.loading(k, i);
      if (g != 0.0) out.per_leaf[i].emplace_back(k, g);
    }
  }
  return out;
}

/// Rows are generated in fixed-size chunks, each from its own substream of
/// `seed`, so any chunk can be produced independently.
template <class RowScale>
DataMatrix simulate(const HnfmSpec& spec, std::size_t t_len, std::uint64_t seed, RowScale&& row_scale) {
  spec.validate();
  if (t_len < 2) throw Error(ErrorKind::DimensionTooSmall, "simulation length must be at least 2");
  const std::size_t n = spec.tree.leaf_count();
  const std::size_t m = spec.tree.internal_count();
  const LeafLoadings loadings = leaf_loadings(spec);
  Matrix x(static_cast<Eigen::Index>(t_len), static_cast<Eigen::Index>(n));
  std::vector<double> factor(m);
  for (std::size_t start = 0, chunk = 0; start < t_len; start += kSimulationChunk, ++chunk) {
    Rng rng = make_stream(seed, chunk);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t stop = std::min(t_len, start + kSimulationChunk);
    for (std::size_t t = start; t < stop; ++t) {
      for (auto& f : factor) f = normal(rng);
      const double scale = row_scale(rng);
      for (std::size_t i = 0; i < n; ++i) {
        double v = spec.eta[i] * normal(rng);
        for (const auto& [k, g] : loadings.per_leaf[i]) v += g * factor[k];
        x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = v * scale;
      }
    }
  }
  return DataMatrix(std::move(x), spec.tree.labels());
}

}  // namespace detail

inline DataMatrix simulate_gaussian(const HnfmSpec& spec, std::size_t t_len, std::uint64_t seed) {
  return detail::simulate(spec, t_len, seed, [](Rng&) { return 1.0; });
}

/// Multiplier applied to a whole row of the Student-t model:
/// sqrt((mu - 2) / (2 g)) with g ~ Gamma(mu / 2, 1). Its square has unit mean,
/// so every simulated column keeps unit variance.
inline double student_scale(double mu, Rng& rng) {
  std::gamma_distribution<double> gamma(mu / 2.0, 1.0);
  return std::sqrt((mu - 2.0) / (2.0 * gamma(rng)));
}

/// Multivariate Student-t rows with the model's correlation: every row of the
/// Gaussian model is multiplied by one shared `student_scale` draw.
inline DataMatrix simulate_student(const HnfmSpec& spec, std::size_t t_len, std::uint64_t seed) {
  if (!spec.mu) throw Error(ErrorKind::InvalidMu, "Student simulation needs degrees of freedom mu");
  const double mu = *spec.mu;
  if (!(mu > 2.0)) throw Error(ErrorKind::InvalidMu, "degrees of freedom must exceed 2, got " + std::to_string(mu));
  return detail::simulate(spec, t_len, seed, [mu](Rng& rng) { return student_scale(mu, rng); });
}

}  // namespace corrfilt
