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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boyer_myrvold_planar_test.hpp>

#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/hclust.hpp"
#include "corrfilt/linalg.hpp"

namespace corrfilt {

enum class GraphKind { MST, ALMST, PMFG };

constexpr std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::MST: return "MST";
    case GraphKind::ALMST: return "ALMST";
    case GraphKind::PMFG: return "PMFG";
  }
  return "unknown";
}

/// Undirected link; always stored with i < j.
struct GraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;
  std::optional<double> support;

  friend bool operator==(const GraphEdge& a, const GraphEdge& b) { return a.i == b.i && a.j == b.j; }
};

struct CorrelationGraph {
  std::size_t n = 0;
  std::vector<std::string> labels;
  std::vector<GraphEdge> edges;
  GraphKind kind = GraphKind::MST;

  bool contains(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return std::any_of(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.i == a && e.j == b; });
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : edges) s += e.weight;
    return s;
  }
};

struct NetworkResult {
  CorrelationGraph graph;
  FilteredCorrelationMatrix filtered;
};

namespace detail {

inline NetworkResult spanning_tree(const CorrelationMatrix& c, Linkage linkage, GraphKind kind) {
  CorrelationGraph g;
  g.n = c.size();
  g.labels = c.labels();
  g.kind = kind;
  const Matrix& rho = c.values();
  // The link joining two merging components is their maximum-correlation
  // pair, ties broken on the smaller (low, high) original index pair.
  auto pick_link = [&](const std::vector<std::size_t>& sh, const std::vector<std::size_t>& sk, double) {
    GraphEdge best;
    bool found = false;
    for (std::size_t u : sh) {
      for (std::size_t p : sk) {
        const std::size_t lo = std::min(u, p);
        const std::size_t hi = std::max(u, p);
        const double w = rho(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi));
        if (!found || w > best.weight || (w == best.weight && std::pair(lo, hi) < std::pair(best.i, best.j))) {
          best = {lo, hi, w, std::nullopt};
          found = true;
        }
      }
    }
    g.edges.push_back(best);
  };
  Dendrogram tree = agglomerate(c, linkage, pick_link);
  FilteredCorrelationMatrix filtered = filtered_from_dendrogram(tree);
  return {std::move(g), std::move(filtered)};
}

using PlanarityGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS,
                                             boost::property<boost::vertex_index_t, int>>;

}  // namespace detail

/// Maximum-correlation spanning tree. Components merge exactly as clusters do
/// in single linkage, so the companion matrix is the SLCA filtered matrix.
inline NetworkResult mst(const CorrelationMatrix& c) { return detail::spanning_tree(c, Linkage::Single, GraphKind::MST); }

/// Average linkage spanning tree; companion matrix is the ALCA filtered matrix.
inline NetworkResult almst(const CorrelationMatrix& c) {
  return detail::spanning_tree(c, Linkage::Average, GraphKind::ALMST);
}

/// True iff the simple graph on `n` vertices with `edges` is planar.
inline bool is_planar(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  detail::PlanarityGraph g(static_cast<int>(n));
  for (const auto& [a, b] : edges) boost::add_edge(static_cast<int>(a), static_cast<int>(b), g);
  return boost::boyer_myrvold_planarity_test(g);
}

/// True iff `edges` plus `candidate` is still planar. `edges` is assumed planar.
inline bool is_planar_with(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           std::pair<std::size_t, std::size_t> candidate) {
  if (candidate.first >= n || candidate.second >= n) {
    throw Error(ErrorKind::IndexOutOfRange, "candidate edge references a vertex outside the graph");
  }
  detail::PlanarityGraph g(static_cast<int>(n));
  for (const auto& [a, b] : edges) boost::add_edge(static_cast<int>(a), static_cast<int>(b), g);
  boost::add_edge(static_cast<int>(candidate.first), static_cast<int>(candidate.second), g);
  return boost::boyer_myrvold_planarity_test(g);
}

/// Planar maximally filtered graph: links are taken in descending correlation
/// order (ties on the smaller index pair) and kept iff the graph stays planar,
/// until the maximal planar size 3(n - 2) is reached.
inline CorrelationGraph pmfg(const CorrelationMatrix& c) {
  const std::size_t n = c.size();
  if (n < 3) throw Error(ErrorKind::DimensionTooSmall, "PMFG needs at least 3 elements");
  std::vector<GraphEdge> candidates;
  candidates.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) candidates.push_back({i, j, c(i, j), std::nullopt});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const GraphEdge& a, const GraphEdge& b) { return a.weight > b.weight; });

  const std::size_t target = 3 * (n - 2);
  CorrelationGraph g;
  g.n = n;
  g.labels = c.labels();
  g.kind = GraphKind::PMFG;
  std::vector<std::pair<std::size_t, std::size_t>> accepted;
  accepted.reserve(target);
  for (const auto& e : candidates) {
    if (accepted.size() == target) break;
    if (is_planar_with(n, accepted, {e.i, e.j})) {
      accepted.emplace_back(e.i, e.j);
      g.edges.push_back(e);
    }
  }
  return g;
}

inline CorrelationGraph build_graph(const CorrelationMatrix& c, GraphKind kind) {
  switch (kind) {
    case GraphKind::MST: return mst(c).graph;
    case GraphKind::ALMST: return almst(c).graph;
    case GraphKind::PMFG: return pmfg(c);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown graph kind");
}

}  // namespace corrfilt
