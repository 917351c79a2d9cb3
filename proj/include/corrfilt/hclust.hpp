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
#include <cstddef>
#include <utility>
#include <vector>

#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/linalg.hpp"

namespace corrfilt {

struct ClusteringResult {
  Dendrogram tree;
  FilteredCorrelationMatrix filtered;
};

namespace detail {

/// Agglomerative clustering on a correlation (similarity) matrix.
///
/// Each active cluster lives in the slot of its smallest original element, so
/// scanning slots in (row, column) order and keeping the first strict maximum
/// resolves ties lexicographically on original indices. `on_merge` observes
/// every merge as (members of h, members of k, merge correlation) before the
/// working matrix is updated.
template <class OnMerge>
Dendrogram agglomerate(const CorrelationMatrix& c, Linkage linkage, OnMerge&& on_merge) {
  const std::size_t n = c.size();
  if (n < 2) throw Error(ErrorKind::DimensionTooSmall, "clustering needs at least 2 elements");
  Matrix b = c.values();
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node_id(n);
  std::vector<std::size_t> count(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    node_id[i] = i;
    members[i] = {i};
  }
  std::vector<DendrogramNode> nodes;
  nodes.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t h = n;
    std::size_t k = n;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double v = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (h == n || v > best) {
          best = v;
          h = i;
          k = j;
        }
      }
    }
    on_merge(std::as_const(members[h]), std::as_const(members[k]), best);

    DendrogramNode node;
    node.children = {node_id[h], node_id[k]};
    node.rho = best;
    nodes.push_back(std::move(node));

    const double nh = static_cast<double>(count[h]);
    const double nk = static_cast<double>(count[k]);
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == h || j == k) continue;
      const auto hj = static_cast<Eigen::Index>(j);
      const double bh = b(static_cast<Eigen::Index>(h), hj);
      const double bk = b(static_cast<Eigen::Index>(k), hj);
      const double merged = linkage == Linkage::Average ? (nh * bh + nk * bk) / (nh + nk) : std::max(bh, bk);
      b(static_cast<Eigen::Index>(h), hj) = merged;
      b(hj, static_cast<Eigen::Index>(h)) = merged;
    }
    active[k] = false;
    count[h] += count[k];
    members[h].insert(members[h].end(), members[k].begin(), members[k].end());
    members[k].clear();
    node_id[h] = n + step;
  }
  return Dendrogram(c.labels(), std::move(nodes), linkage);
}

}  // namespace detail

inline ClusteringResult cluster(const CorrelationMatrix& c, Linkage linkage) {
  Dendrogram tree = detail::agglomerate(c, linkage, [](const auto&, const auto&, double) {});
  FilteredCorrelationMatrix filtered = filtered_from_dendrogram(tree);
  return {std::move(tree), std::move(filtered)};
}

/// Average linkage: the merged cluster's correlation to any other cluster is
/// the leaf-count weighted mean of its parts.
inline ClusteringResult alca(const CorrelationMatrix& c) { return cluster(c, Linkage::Average); }

/// Single linkage: the merged cluster keeps the larger of its parts'
/// correlations to any other cluster.
inline ClusteringResult slca(const CorrelationMatrix& c) { return cluster(c, Linkage::Single); }

}  // namespace corrfilt
