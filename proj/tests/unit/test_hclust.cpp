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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "corrfilt/hclust.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corrfilt;

namespace {

std::vector<std::size_t> root_first(const Dendrogram& d, const std::vector<std::size_t>& ids) {
  const auto labels = root_first_labels(d);
  std::vector<std::size_t> out;
  for (auto id : ids) out.push_back(labels[id - d.leaf_count()]);
  return out;
}

std::size_t leaf_index(const std::string& label) {
  const auto& l = fixtures::ten_stock_labels();
  return static_cast<std::size_t>(std::find(l.begin(), l.end(), label) - l.begin());
}

}  // namespace

TEST(Hclust, TenStocksAverageLinkageMatchesPrintedMatrix) {
  const auto r = alca(fixtures::ten_stocks());
  EXPECT_LE(fixtures::max_abs_diff(r.filtered.values.values(), fixtures::ten_stocks_alca()), fixtures::kAveragedPrintTolerance);
  EXPECT_EQ(r.filtered.source, Linkage::Average);
  EXPECT_EQ(r.tree.internal_count(), 9u);
}

TEST(Hclust, TenStocksSingleLinkageMatchesPrintedMatrix) {
  const auto r = slca(fixtures::ten_stocks());
  EXPECT_LE(fixtures::max_abs_diff(r.filtered.values.values(), fixtures::ten_stocks_slca()), fixtures::kPrintTolerance);
}

TEST(Hclust, RootFirstLabelsAndGenealogyOfTenStockTree) {
  const Dendrogram d = alca(fixtures::ten_stocks()).tree;
  const auto labels = root_first_labels(d);
  std::vector<double> rho_by_label(10);
  for (std::size_t k = 0; k < 9; ++k) rho_by_label[labels[k]] = d.nodes()[k].rho;
  const double expected[] = {0, 0.308, 0.412, 0.501, 0.536, 0.562, 0.577, 0.582, 0.591, 0.664};
  for (std::size_t a = 1; a <= 9; ++a) EXPECT_NEAR(rho_by_label[a], expected[a], fixtures::kAveragedPrintTolerance) << "label " << a;

  EXPECT_EQ(root_first(d, genealogy(d, leaf_index("IBM"))), (std::vector<std::size_t>{6, 4, 3, 2, 1}));
  const std::size_t node7 = node_with_root_first_label(d, 7);
  EXPECT_EQ(root_first(d, genealogy(d, node7)), (std::vector<std::size_t>{7, 2, 1}));
  EXPECT_EQ(d.leaves_under(node7), (std::vector<std::size_t>{leaf_index("TXN"), leaf_index("MOT")}));
}

TEST(Hclust, TwoByTwoIsUnchanged) {
  Matrix m(2, 2);
  m << 1, -0.3, -0.3, 1;
  for (auto link : {Linkage::Average, Linkage::Single}) {
    const auto r = cluster(CorrelationMatrix(m), link);
    EXPECT_EQ(r.filtered.values.values(), m);
    EXPECT_EQ(r.tree.internal_count(), 1u);
  }
}

TEST(Hclust, TiesResolveOnSmallestIndexPair) {
  Matrix m = Matrix::Constant(4, 4, 0.5);
  m.diagonal().setOnes();
  const auto d = alca(CorrelationMatrix(m)).tree;
  EXPECT_EQ(d.nodes()[0].children, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(d.nodes()[1].children, (std::vector<std::size_t>{4, 2}));
  EXPECT_EQ(d.nodes()[2].children, (std::vector<std::size_t>{5, 3}));
}

TEST(Hclust, SingleLinkageEqualsMaximinPathCorrelation) {
  // Single linkage merge level between i and j equals the best bottleneck of
  // any path, which Kruskal's forest reveals.
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const auto c = fixtures::random_correlation(8, rng);
    const Matrix f = slca(c).filtered.values.values();
    const auto tree = oracles::kruskal_max_tree(c.values());
    for (std::size_t a = 0; a < 8; ++a) {
      for (std::size_t b = a + 1; b < 8; ++b) {
        // widest path in the tree by DFS
        std::vector<double> best(8, -2.0);
        std::vector<std::size_t> stack{a};
        best[a] = 2.0;
        while (!stack.empty()) {
          const auto v = stack.back();
          stack.pop_back();
          for (const auto& [p, q] : tree) {
            const std::size_t w = p == v ? q : (q == v ? p : 8);
            if (w == 8 || best[w] > -2.0) continue;
            best[w] = std::min(best[v], c(p, q));
            stack.push_back(w);
          }
        }
        EXPECT_NEAR(f(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), best[b], 1e-15);
      }
    }
  }
}

TEST(Hclust, FilteredMatricesAreUltrametric) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto c = fixtures::random_correlation(12, rng);
    EXPECT_TRUE(oracles::is_ultrametric(alca(c).filtered.values.values()));
    EXPECT_TRUE(oracles::is_ultrametric(slca(c).filtered.values.values()));
  }
}

TEST(Hclust, RejectsSingleElement) {
  try {
    alca(CorrelationMatrix::identity(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionTooSmall);
  }
}

TEST(Newick, RoundTripKeepsStructureAndValues) {
  auto d = alca(fixtures::ten_stocks()).tree;
  std::vector<double> support(9);
  for (std::size_t k = 0; k < 9; ++k) support[k] = 0.1 * static_cast<double>(k);
  d = d.with_support(support);
  const std::string text = to_newick(d);
  const Dendrogram back = parse_newick(text, d.labels());
  EXPECT_EQ(to_newick(back), text);
  EXPECT_EQ(filtered_from_dendrogram(back).values.values(), filtered_from_dendrogram(d).values.values());
}

TEST(Newick, QuotedLabelsAndErrors) {
  const Dendrogram d = parse_newick("('a b',c)0.5;");
  EXPECT_EQ(d.labels()[0], "a b");
  EXPECT_EQ(to_newick(d), "('a b',c)0.5;");
  for (const char* bad : {"(a,b)0.5", "(a,b;", "(a,b)x;", "((a,b)0.2,c)0.5;"}) {
    try {
      parse_newick(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::InvalidArgument) << bad << ": " << e.what();
    }
  }
}
