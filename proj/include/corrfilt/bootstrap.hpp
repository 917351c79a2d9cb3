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
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/hclust.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/networks.hpp"
#include "corrfilt/random.hpp"

namespace corrfilt {

struct BootstrapConfig {
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  /// Node reduction threshold. The self-consistent selection of this value
  /// is not implemented; callers choose it.
  double threshold = 0.70;

  void validate() const {
    if (replicas < 1) throw Error(ErrorKind::ConfigError, "bootstrap needs at least one replica");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorKind::ConfigError, "bootstrap threshold must lie in [0, 1]");
  }
};

/// Per-internal-node bootstrap values, indexed like `Dendrogram::nodes()`.
struct NodeSupport {
  std::vector<double> values;
};

inline constexpr int kReplicaRetries = 100;

/// A resampled panel and the original row index of each of its rows.
struct ReplicaDraw {
  DataMatrix data;
  std::vector<std::size_t> rows;
};

/// T rows drawn uniformly with replacement. A draw that leaves some column
/// constant is redrawn; after `kReplicaRetries` failed draws DegenerateReplica
/// is thrown.
inline ReplicaDraw bootstrap_draw(const DataMatrix& data, Rng& rng) {
  const std::size_t t = data.records();
  const Matrix& x = data.values();
  std::uniform_int_distribution<std::size_t> pick(0, t - 1);
  Matrix rows(x.rows(), x.cols());
  std::vector<std::size_t> drawn(t);
  for (int attempt = 0; attempt < kReplicaRetries; ++attempt) {
    for (std::size_t r = 0; r < t; ++r) {
      drawn[r] = pick(rng);
      rows.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(drawn[r]));
    }
    bool degenerate = false;
    for (Eigen::Index j = 0; j < rows.cols() && !degenerate; ++j) {
      degenerate = rows.col(j).maxCoeff() == rows.col(j).minCoeff();
    }
    if (!degenerate) return {DataMatrix(std::move(rows), data.labels()), std::move(drawn)};
  }
  throw Error(ErrorKind::DegenerateReplica, "every one of " + std::to_string(kReplicaRetries) +
                                                " resamples left a constant column (T=" + std::to_string(t) + ")");
}

/// Draw `index` of the stream family `seed`.
inline ReplicaDraw bootstrap_draw(const DataMatrix& data, std::uint64_t seed, std::size_t index) {
  Rng rng = make_stream(seed, index);
  return bootstrap_draw(data, rng);
}

inline DataMatrix bootstrap_replica(const DataMatrix& data, Rng& rng) { return bootstrap_draw(data, rng).data; }

inline DataMatrix bootstrap_replica(const DataMatrix& data, std::uint64_t seed, std::size_t index) {
  return bootstrap_draw(data, seed, index).data;
}

namespace detail {

using LeafSet = std::vector<std::uint64_t>;

inline LeafSet to_leaf_set(const std::vector<std::size_t>& leaves, std::size_t n) {
  LeafSet bits((n + 63) / 64, 0);
  for (std::size_t leaf : leaves) bits[leaf / 64] |= std::uint64_t{1} << (leaf % 64);
  return bits;
}

inline std::vector<LeafSet> node_leaf_sets(const Dendrogram& d) {
  const std::size_t n = d.leaf_count();
  std::vector<LeafSet> sets(d.id_count(), LeafSet((n + 63) / 64, 0));
  for (std::size_t i = 0; i < n; ++i) sets[i][i / 64] |= std::uint64_t{1} << (i % 64);
  for (std::size_t k = 0; k < d.internal_count(); ++k) {
    auto& s = sets[n + k];
    for (std::size_t c : d.nodes()[k].children) {
      for (std::size_t w = 0; w < s.size(); ++w) s[w] |= sets[c][w];
    }
  }
  return {sets.begin() + static_cast<std::ptrdiff_t>(n), sets.end()};
}

}  // namespace detail

/// Fraction of replicas whose tree contains a node spanning exactly the same
/// leaves as each internal node of the tree built on the original data.
inline NodeSupport node_bootstrap_values(const DataMatrix& data, Linkage method, const BootstrapConfig& cfg) {
  cfg.validate();
  const Dendrogram original = cluster(pearson_correlation(data), method).tree;
  const auto target = detail::node_leaf_sets(original);
  std::vector<std::size_t> hits(target.size(), 0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const DataMatrix replica = bootstrap_replica(data, cfg.seed, r);
    const Dendrogram tree = cluster(pearson_correlation(replica), method).tree;
    const auto sets = detail::node_leaf_sets(tree);
    const std::set<detail::LeafSet> present(sets.begin(), sets.end());
    for (std::size_t k = 0; k < target.size(); ++k) hits[k] += present.count(target[k]);
  }
  NodeSupport out;
  out.values.reserve(hits.size());
  for (std::size_t h : hits) out.values.push_back(static_cast<double>(h) / static_cast<double>(cfg.replicas));
  return out;
}

/// Fraction of replicas whose graph of the same kind contains each link of
/// the graph built on the original data.
inline std::vector<double> link_bootstrap_values(const DataMatrix& data, GraphKind kind, const BootstrapConfig& cfg) {
  cfg.validate();
  const CorrelationGraph original = build_graph(pearson_correlation(data), kind);
  const std::size_t n = original.n;
  std::vector<std::size_t> hits(original.edges.size(), 0);
  std::vector<char> present(n * n, 0);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const DataMatrix replica = bootstrap_replica(data, cfg.seed, r);
    const CorrelationGraph g = build_graph(pearson_correlation(replica), kind);
    std::fill(present.begin(), present.end(), 0);
    for (const auto& e : g.edges) present[e.i * n + e.j] = 1;
    for (std::size_t k = 0; k < original.edges.size(); ++k) {
      hits[k] += present[original.edges[k].i * n + original.edges[k].j];
    }
  }
  std::vector<double> out;
  out.reserve(hits.size());
  for (std::size_t h : hits) out.push_back(static_cast<double>(h) / static_cast<double>(cfg.replicas));
  return out;
}

/// Graph of the original data with per-link bootstrap values attached.
inline CorrelationGraph graph_with_support(const DataMatrix& data, GraphKind kind, const BootstrapConfig& cfg) {
  CorrelationGraph g = build_graph(pearson_correlation(data), kind);
  const auto values = link_bootstrap_values(data, kind, cfg);
  for (std::size_t k = 0; k < g.edges.size(); ++k) g.edges[k].support = values[k];
  return g;
}

/// Removes every non-root internal node whose bootstrap value is below `b`,
/// attaching its children to the nearest surviving ancestor. Surviving nodes
/// keep their merge correlation and bootstrap value; the root always stays.
inline Dendrogram reduce_dendrogram(const Dendrogram& d, const NodeSupport& support, double b) {
  const std::size_t n = d.leaf_count();
  const std::size_t m = d.internal_count();
  if (support.values.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "support covers " + std::to_string(support.values.size()) +
                                                  " nodes, tree has " + std::to_string(m));
  }
  std::vector<bool> keep(m);
  for (std::size_t k = 0; k < m; ++k) keep[k] = (k + 1 == m) || support.values[k] >= b;

  std::vector<std::size_t> new_id(m, 0);
  std::size_t next = n;
  for (std::size_t k = 0; k < m; ++k) {
    if (keep[k]) new_id[k] = next++;
  }

  // Children of a surviving node, flattening dropped descendants in place so
  // the left-to-right leaf order is preserved.
  std::vector<DendrogramNode> nodes;
  nodes.reserve(next - n);
  for (std::size_t k = 0; k < m; ++k) {
    if (!keep[k]) continue;
    DendrogramNode out;
    out.rho = d.nodes()[k].rho;
    out.support = support.values[k];
    std::vector<std::size_t> stack(d.nodes()[k].children.rbegin(), d.nodes()[k].children.rend());
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      if (c < n) {
        out.children.push_back(c);
      } else if (keep[c - n]) {
        out.children.push_back(new_id[c - n]);
      } else {
        const auto& ch = d.nodes()[c - n].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
      }
    }
    nodes.push_back(std::move(out));
  }
  return Dendrogram(d.labels(), std::move(nodes), d.linkage());
}

}  // namespace corrfilt
