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
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corrfilt/error.hpp"
#include "corrfilt/linalg.hpp"

namespace corrfilt {

enum class Linkage { Average, Single };

constexpr std::string_view to_string(Linkage linkage) {
  return linkage == Linkage::Average ? "ALCA" : "SLCA";
}

struct DendrogramNode {
  std::vector<std::size_t> children;
  double rho = 0.0;
  std::optional<double> support;
};

/// Rooted tree over `n` leaves. Leaves are ids 0..n-1; internal node k of
/// `nodes()` has id n + k. Children always carry smaller ids than their
/// parent, so the last internal node is the root and iterating internal
/// nodes in order visits every child before its parent.
///
/// Trees coming out of the clustering routines are binary; reduced trees
/// may have any fan-out >= 2.
class Dendrogram {
 public:
  static constexpr double kUltrametricSlack = 1e-12;

  Dendrogram() = default;

  Dendrogram(std::vector<std::string> leaf_labels, std::vector<DendrogramNode> nodes,
             std::optional<Linkage> linkage = std::nullopt)
      : labels_(std::move(leaf_labels)), nodes_(std::move(nodes)), linkage_(linkage) {
    build();
  }

  std::size_t leaf_count() const noexcept { return labels_.size(); }
  std::size_t internal_count() const noexcept { return nodes_.size(); }
  std::size_t id_count() const noexcept { return labels_.size() + nodes_.size(); }
  std::size_t root() const noexcept { return id_count() - 1; }
  bool is_leaf(std::size_t id) const noexcept { return id < labels_.size(); }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<DendrogramNode>& nodes() const noexcept { return nodes_; }
  std::optional<Linkage> linkage() const noexcept { return linkage_; }

  const DendrogramNode& node(std::size_t id) const {
    check_internal(id);
    return nodes_[id - labels_.size()];
  }

  std::optional<std::size_t> parent(std::size_t id) const {
    check_id(id);
    if (parent_[id] == kNone) return std::nullopt;
    return parent_[id];
  }

  double rho(std::size_t id) const { return node(id).rho; }

  /// Leaves under `id`, in ascending order.
  std::vector<std::size_t> leaves_under(std::size_t id) const {
    check_id(id);
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{id};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      if (is_leaf(cur)) {
        out.push_back(cur);
      } else {
        for (std::size_t c : nodes_[cur - labels_.size()].children) stack.push_back(c);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Leaves in left-to-right drawing order.
  std::vector<std::size_t> leaf_order() const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{root()};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      if (is_leaf(cur)) {
        out.push_back(cur);
      } else {
        const auto& ch = nodes_[cur - labels_.size()].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
      }
    }
    return out;
  }

  /// Copy with per-internal-node bootstrap values attached.
  Dendrogram with_support(const std::vector<double>& support) const {
    if (support.size() != nodes_.size()) {
      throw Error(ErrorKind::DimensionMismatch, "support vector covers " + std::to_string(support.size()) +
                                                    " nodes, tree has " + std::to_string(nodes_.size()));
    }
    auto nodes = nodes_;
    for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k].support = support[k];
    return Dendrogram(labels_, std::move(nodes), linkage_);
  }

  Dendrogram with_labels(std::vector<std::string> labels) const { return Dendrogram(std::move(labels), nodes_, linkage_); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  void check_id(std::size_t id) const {
    if (id >= id_count()) {
      throw Error(ErrorKind::IndexOutOfRange, "node id " + std::to_string(id) + " outside [0, " + std::to_string(id_count()) + ")");
    }
  }
  void check_internal(std::size_t id) const {
    check_id(id);
    if (is_leaf(id)) throw Error(ErrorKind::IndexOutOfRange, "id " + std::to_string(id) + " is a leaf, not an internal node");
  }

  void build() {
    const std::size_t n = labels_.size();
    if (n < 2) throw Error(ErrorKind::DimensionTooSmall, "a dendrogram needs at least 2 leaves");
    if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "a dendrogram needs at least one internal node");
    parent_.assign(id_count(), kNone);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const std::size_t id = n + k;
      const auto& nd = nodes_[k];
      if (nd.children.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "internal node " + std::to_string(id) + " has fewer than two children");
      }
      if (nd.support && !(*nd.support >= 0.0 && *nd.support <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "bootstrap value of node " + std::to_string(id) + " outside [0, 1]");
      }
      for (std::size_t c : nd.children) {
        if (c >= id) throw Error(ErrorKind::InvalidArgument, "child " + std::to_string(c) + " of node " + std::to_string(id) + " does not precede it");
        if (parent_[c] != kNone) throw Error(ErrorKind::InvalidArgument, "node " + std::to_string(c) + " has two parents");
        parent_[c] = id;
        if (c >= n && nodes_[c - n].rho < nd.rho - kUltrametricSlack) {
          throw Error(ErrorKind::InvalidArgument, "merge correlation increases toward the root at node " + std::to_string(id));
        }
      }
    }
    for (std::size_t id = 0; id + 1 < id_count(); ++id) {
      if (parent_[id] == kNone) throw Error(ErrorKind::InvalidArgument, "node " + std::to_string(id) + " is not connected to the root");
    }
  }

  std::vector<std::string> labels_;
  std::vector<DendrogramNode> nodes_;
  std::optional<Linkage> linkage_;
  std::vector<std::size_t> parent_;
};

struct FilteredCorrelationMatrix {
  CorrelationMatrix values;
  std::optional<Linkage> source;
};

/// Ultrametric matrix of a tree: entry (i, j) is the merge correlation of the
/// lowest common ancestor of leaves i and j.
inline FilteredCorrelationMatrix filtered_from_dendrogram(const Dendrogram& d) {
  const std::size_t n = d.leaf_count();
  Matrix out = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::vector<std::size_t>> members(d.id_count());
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  for (std::size_t k = 0; k < d.internal_count(); ++k) {
    const std::size_t id = n + k;
    const auto& nd = d.nodes()[k];
    auto& acc = members[id];
    for (std::size_t c : nd.children) {
      for (std::size_t a : acc) {
        for (std::size_t b : members[c]) {
          out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = nd.rho;
          out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = nd.rho;
        }
      }
      acc.insert(acc.end(), members[c].begin(), members[c].end());
      members[c].clear();
      members[c].shrink_to_fit();
    }
  }
  return {CorrelationMatrix(std::move(out), d.labels()), d.linkage()};
}

/// Internal nodes from `id` up to the root. For an internal node the list
/// starts with the node itself; for a leaf it starts with its parent.
inline std::vector<std::size_t> genealogy(const Dendrogram& d, std::size_t id) {
  std::vector<std::size_t> out;
  std::optional<std::size_t> cur = d.is_leaf(id) ? d.parent(id) : std::optional<std::size_t>(id);
  if (!d.is_leaf(id)) (void)d.node(id);
  while (cur) {
    out.push_back(*cur);
    cur = d.parent(*cur);
  }
  return out;
}

/// Root-first numbering of the internal nodes: the node with the lowest
/// merge correlation (the root) gets 1, the next lowest 2, and so on. Result
/// is indexed by internal position k (id - leaf_count()).
inline std::vector<std::size_t> root_first_labels(const Dendrogram& d) {
  std::vector<std::size_t> order(d.internal_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = d.nodes()[a].rho;
    const double rb = d.nodes()[b].rho;
    if (ra != rb) return ra < rb;
    return a > b;
  });
  std::vector<std::size_t> label(d.internal_count());
  for (std::size_t rank = 0; rank < order.size(); ++rank) label[order[rank]] = rank + 1;
  return label;
}

/// Internal id of the node carrying root-first label `alpha` (1-based).
inline std::size_t node_with_root_first_label(const Dendrogram& d, std::size_t alpha) {
  const auto labels = root_first_labels(d);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == alpha) return d.leaf_count() + k;
  }
  throw Error(ErrorKind::IndexOutOfRange, "no internal node with label " + std::to_string(alpha));
}

// ---------------------------------------------------------------------------
// Newick

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool newick_plain(std::string_view label) {
  if (label.empty()) return false;
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == ':' || c == ';' ||
        c == '\'' || c == '[' || c == ']') {
      return false;
    }
  }
  return true;
}

inline std::string newick_label(std::string_view label) {
  if (newick_plain(label)) return std::string(label);
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += "''";
    else out += c;
  }
  out += "'";
  return out;
}

}  // namespace detail

/// Serializes `d` as `(child,child)rho:support;`. Leaves are written by label,
/// internal nodes carry their merge correlation as the node name and, when
/// present, their bootstrap value as the branch annotation.
inline std::string to_newick(const Dendrogram& d) {
  std::string out;
  const std::size_t n = d.leaf_count();
  struct Frame {
    std::size_t id;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{d.root(), 0}};
  out += '(';
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& nd = d.nodes()[f.id - n];
    if (f.next_child < nd.children.size()) {
      if (f.next_child > 0) out += ',';
      const std::size_t c = nd.children[f.next_child++];
      if (d.is_leaf(c)) {
        out += detail::newick_label(d.labels()[c]);
      } else {
        out += '(';
        stack.push_back({c, 0});
      }
      continue;
    }
    out += ')';
    out += detail::format_number(nd.rho);
    if (nd.support) {
      out += ':';
      out += detail::format_number(*nd.support);
    }
    stack.pop_back();
  }
  out += ';';
  return out;
}

namespace detail {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_(text) {}

  struct Parsed {
    std::vector<std::string> labels;
    std::vector<DendrogramNode> nodes;  // postorder, ids assigned after parsing
    std::vector<std::vector<long>> raw_children;  // negative = leaf (-(i+1)), else index into nodes
  };

  Parsed parse() {
    skip_ws();
    expect('(');
    const long root = parse_internal();
    skip_ws();
    expect(';');
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    (void)root;
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ParseError, "Newick offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_label() {
    skip_ws();
    std::string label;
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated quoted label");
        if (text_[pos_] == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            label += '\'';
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        label += text_[pos_++];
      }
      return label;
    }
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == ':' || c == ';') break;
      label += c;
      ++pos_;
    }
    return label;
  }

  std::optional<double> parse_annotation() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      const std::string num = parse_label();
      return to_number(num, "branch annotation");
    }
    return std::nullopt;
  }

  double to_number(const std::string& s, const char* what) const {
    if (s.empty()) fail(std::string("missing ") + what);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail(std::string("malformed ") + what + " '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(std::string("malformed ") + what + " '" + s + "'");
    }
  }

  long parse_internal() {
    std::vector<long> children;
    while (true) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        ++pos_;
        children.push_back(parse_internal());
      } else {
        const std::string label = parse_label();
        if (label.empty()) fail("empty leaf label");
        (void)parse_annotation();
        out_.labels.push_back(label);
        children.push_back(-static_cast<long>(out_.labels.size()));
      }
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      expect(')');
      break;
    }
    const std::string name = parse_label();
    DendrogramNode node;
    node.rho = to_number(name, "merge correlation");
    node.support = parse_annotation();
    out_.nodes.push_back(std::move(node));
    out_.raw_children.push_back(std::move(children));
    return static_cast<long>(out_.nodes.size()) - 1;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Parsed out_;
};

}  // namespace detail

/// Parses the Newick dialect written by `to_newick`. Leaves are numbered in
/// order of appearance unless `leaf_order` is given, in which case leaf i is
/// the leaf labelled `leaf_order[i]`.
inline Dendrogram parse_newick(std::string_view text, const std::vector<std::string>& leaf_order = {}) {
  auto parsed = detail::NewickParser(text).parse();
  const std::size_t n = parsed.labels.size();
  std::vector<std::size_t> leaf_id(n);
  std::vector<std::string> labels = parsed.labels;
  if (leaf_order.empty()) {
    std::iota(leaf_id.begin(), leaf_id.end(), std::size_t{0});
  } else {
    if (leaf_order.size() != n) throw Error(ErrorKind::DimensionMismatch, "leaf order does not match the Newick leaf count");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < leaf_order.size(); ++i) {
      if (!index.emplace(leaf_order[i], i).second) throw Error(ErrorKind::InvalidArgument, "duplicate leaf label " + leaf_order[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto it = index.find(parsed.labels[i]);
      if (it == index.end()) throw Error(ErrorKind::InvalidArgument, "leaf " + parsed.labels[i] + " not in leaf order");
      leaf_id[i] = it->second;
    }
    labels = leaf_order;
  }
  std::vector<DendrogramNode> nodes = std::move(parsed.nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (long c : parsed.raw_children[k]) {
      nodes[k].children.push_back(c < 0 ? leaf_id[static_cast<std::size_t>(-c - 1)] : n + static_cast<std::size_t>(c));
    }
  }
  return Dendrogram(std::move(labels), std::move(nodes));
}

}  // namespace corrfilt
