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

// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "corrfilt/corrfilt.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace corrfilt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Twelve blocks of 8 or 9 elements (100 in all) under one market node.
HnfmSpec twelve_block_model(double inner, double outer) {
  std::vector<DendrogramNode> nodes;
  DendrogramNode root;
  root.rho = outer;
  std::size_t next = 0;
  for (std::size_t g = 0; g < 12; ++g) {
    DendrogramNode block;
    block.rho = inner;
    const std::size_t size = g < 4 ? 9 : 8;
    for (std::size_t i = 0; i < size; ++i) block.children.push_back(next++);
    nodes.push_back(block);
    root.children.push_back(100 + g);
  }
  nodes.push_back(root);
  return hnfm_from_dendrogram(Dendrogram(detail::default_labels(100), nodes));
}

// Zero-mean second-moment matrix of the records.
Matrix moment_matrix(const DataMatrix& d) {
  return d.values().transpose() * d.values() / static_cast<double>(d.records());
}

bool ultrametric(const Matrix& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (m(i, j) < std::min(m(i, k), m(k, j)) - 1e-12) return false;
      }
    }
  }
  return true;
}

Outcome worked_example() {
  const auto c = fixtures::ten_stocks();
  const double da = fixtures::max_abs_diff(alca(c).filtered.values.values(), fixtures::ten_stocks_alca());
  const double ds = fixtures::max_abs_diff(slca(c).filtered.values.values(), fixtures::ten_stocks_slca());
  return {da <= fixtures::kAveragedPrintTolerance && ds <= fixtures::kPrintTolerance,
          "max |ALCA - printed| " + fmt("%.5f", da) + " (limit 0.001), max |SLCA - printed| " + fmt("%.5f", ds) + " (limit 0.0005)"};
}

Outcome graph_structure() {
  const auto c = fixtures::ten_stocks();
  const auto m = mst(c);
  const auto a = almst(c);
  const auto p = pmfg(c);
  bool subset = true;
  for (const auto& e : m.graph.edges) subset = subset && p.contains(e.i, e.j);
  const bool slca_eq = m.filtered.values.values() == slca(c).filtered.values.values();
  const bool alca_eq = a.filtered.values.values() == alca(c).filtered.values.values();
  const bool ok = m.graph.edges.size() == 9 && a.graph.edges.size() == 9 && p.edges.size() == 24 && subset && slca_eq && alca_eq;
  return {ok, "edges MST " + std::to_string(m.graph.edges.size()) + ", ALMST " + std::to_string(a.graph.edges.size()) + ", PMFG " +
                  std::to_string(p.edges.size()) + "; MST in PMFG " + (subset ? "yes" : "no") + "; companions bit-equal " +
                  (slca_eq && alca_eq ? "yes" : "no")};
}

Outcome ultrametric_properties() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(3, 20);
  std::size_t ultra_fail = 0, pd_checked = 0, pd_fail = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto c = fixtures::random_correlation(size(rng), rng, rep % 2 == 0);
    for (auto link : {Linkage::Average, Linkage::Single}) {
      const Matrix f = cluster(c, link).filtered.values.values();
      if (!ultrametric(f)) ++ultra_fail;
      if (f.minCoeff() >= 0.0) {
        ++pd_checked;
        if (!(min_eigenvalue(f) > 0.0)) ++pd_fail;
      }
    }
  }
  return {ultra_fail == 0 && pd_fail == 0 && pd_checked > 0,
          "1000 filtered matrices, ultrametric violations " + std::to_string(ultra_fail) + "; non-negative " +
              std::to_string(pd_checked) + ", not PD " + std::to_string(pd_fail)};
}

Outcome hnfm_round_trip() {
  const auto tree = alca(fixtures::ten_stocks()).tree;
  const auto spec = hnfm_from_dendrogram(tree);
  const Matrix model = model_correlation(spec).values();
  const double d_model = fixtures::max_abs_diff(model, filtered_from_dendrogram(tree).values.values());
  const double d_sim = fixtures::max_abs_diff(pearson_correlation(simulate_gaussian(spec, 1000000, 77)).values(), model);
  return {d_model <= 1e-12 && d_sim <= 0.005,
          "model vs filtered " + fmt("%.2e", d_model) + " (limit 1e-12), T=1e6 sample vs model " + fmt("%.5f", d_sim) + " (limit 0.005)"};
}

Outcome reduced_tree_coefficients() {
  std::ifstream in(fixtures::data_path("reduced_tree.nwk"));
  std::stringstream ss;
  ss << in.rdbuf();
  const Dendrogram d = parse_newick(ss.str());
  const auto spec = hnfm_from_dendrogram(d);
  auto leaf = [&](const std::string& s) {
    const auto& l = d.labels();
    return static_cast<std::size_t>(std::find(l.begin(), l.end(), s) - l.begin());
  };
  const std::size_t root = d.internal_count() - 1;
  const double g1_neg = spec.loading(root, leaf("NEM"));
  const double g1_pos = spec.loading(root, leaf("IBM"));
  const double g2 = spec.gamma[*d.parent(leaf("XOM")) - d.leaf_count()];
  double worst = std::max({std::abs(g1_neg + 0.063), std::abs(g1_pos - 0.063), std::abs(g2 - 0.44)});
  for (const char* s : {"TXN", "ADI"}) worst = std::max(worst, std::abs(spec.eta[leaf(s)] - 0.47));
  for (const char* s : {"EMC", "IBM", "MOT", "CA"}) worst = std::max(worst, std::abs(spec.eta[leaf(s)] - 0.74));
  return {worst <= 0.005 + 1e-12, "root loadings " + fmt("%+.4f", g1_neg) + "/" + fmt("%+.4f", g1_pos) + ", market " + fmt("%.4f", g2) +
                                      ", max deviation " + fmt("%.4f", worst) + " (limit 0.005)"};
}

Outcome wishart_expectations_check() {
  const std::size_t n = 10, t = 100, pairs = 200;
  const KlReference ref = wishart_expectations(n, t);
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, HnfmSpec>> models{{"one-factor", one_factor_model(10, 0.3)},
                                                              {"blocks", fixtures::block_model(2, 5, 0.7, 0.2)}};
  for (const auto& [name, spec] : models) {
    const KlOperand sigma(model_correlation(spec));
    std::vector<double> cc, sc, cs;
    for (std::size_t k = 0; k < pairs; ++k) {
      const KlOperand c1(moment_matrix(simulate_gaussian(spec, t, stream_seed(91, 2 * k))));
      const KlOperand c2(moment_matrix(simulate_gaussian(spec, t, stream_seed(91, 2 * k + 1))));
      cc.push_back(kl_gaussian(c1, c2));
      sc.push_back(kl_gaussian(sigma, c1));
      cs.push_back(kl_gaussian(c1, sigma));
    }
    for (const auto& [label, v, expected] : {std::tuple{"K(C1,C2)", &cc, ref.e_c_c}, std::tuple{"K(S,C)", &sc, ref.e_sigma_c},
                                             std::tuple{"K(C,S)", &cs, ref.e_c_sigma}}) {
      const auto est = detail::mean_se(*v);
      const double z = (est.mean - expected) / est.se;
      ok = ok && std::abs(z) <= 3.0;
      detail += std::string(detail.empty() ? "" : "; ") + name + " " + label + " " + fmt("%.4f", est.mean) + " vs " + fmt("%.4f", expected) +
                " (z " + fmt("%+.2f", z) + ")";
    }
  }
  return {ok, detail};
}

Outcome student_limits() {
  Matrix m(2, 2);
  m << 1, 0.5, 0.5, 1;
  const KlOperand a(CorrelationMatrix::identity(2));
  const KlOperand b{CorrelationMatrix(m)};
  const double big = kl_student_full(a, b, 1e4 * 2) / kl_gaussian(a, b) - 1.0;
  const double small = kl_student_full(a, b, 2.0 / 100) / kl_student_small_mu(a, b) - 1.0;

  std::mt19937_64 rng(6);
  const auto base = fixtures::random_correlation(5, rng);
  Matrix delta = Matrix::Zero(5, 5);
  std::normal_distribution<double> z;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) delta(i, j) = delta(j, i) = z(rng);
  }
  std::vector<double> gaps;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const CorrelationMatrix c(base.values() + eps * delta);
    gaps.push_back(std::abs(kl_student_small_mu(base, c) - kl_gaussian(base, c)));
  }
  const double slope1 = std::log10(gaps[0] / gaps[1]);
  const double slope2 = std::log10(gaps[1] / gaps[2]);
  const bool ok = std::abs(big) < 0.01 && std::abs(small) < 0.01 && std::abs(slope1 - 2.0) < 0.1 && std::abs(slope2 - 2.0) < 0.1;
  return {ok, "large-mu rel. gap " + fmt("%.2e", big) + ", small-mu rel. gap " + fmt("%.2e", small) + ", residual log-slopes " +
                  fmt("%.3f", slope1) + ", " + fmt("%.3f", slope2) + " (expect 2)"};
}

Outcome student_mle() {
  auto spec = fixtures::block_model(2, 5, 0.6, 0.2);
  spec.mu = 5.9;
  const DataMatrix data = simulate_student(spec, 100000, 58);
  const auto fit = student_mle_fit(data, {5.9});
  const double d = fixtures::max_abs_diff(fit.correlation.values(), model_correlation(spec).values());
  return {d <= 0.01 && fit.iterations <= 500,
          "max |MLE - model| " + fmt("%.4f", d) + " (limit 0.01), iterations " + std::to_string(fit.iterations)};
}

Outcome plane_ordering() {
  const DataMatrix data = simulate_gaussian(twelve_block_model(0.35, 0.1), 748, 9);
  const auto r = evaluate_filters(data, {hierarchical_filter(Linkage::Single), hierarchical_filter(Linkage::Average), rmt_filter()},
                                  BootstrapConfig{100, 9, 0.7}, KlMode::Gaussian);
  const auto& s = r.points[0];
  const auto& m = r.points[2];
  std::string detail;
  for (const auto& p : r.points) detail += p.label + " (" + fmt("%.3f", p.x) + ", " + fmt("%.3f", p.y) + ") ";
  return {s.x < m.x && m.y < s.y, detail + "reference y " + fmt("%.3f", r.reference.y)};
}

Outcome shrinkage_sweep_check() {
  const double mu = 5.9;
  auto spec = twelve_block_model(0.35, 0.1);
  spec.mu = mu;
  const DataMatrix data = simulate_student(spec, 748, 10);
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(k / 20.0);
  EvaluationOptions opt;
  opt.student_mu = mu;
  opt.student.seed = 10;
  const auto r = evaluate_with_sweep(data, {}, grid, BootstrapConfig{100, 10, 0.7}, KlMode::StudentSmallMu, opt);
  const auto& first = r.alpha_curve.front().point;
  const auto& last = r.alpha_curve.back().point;
  double x_max = 0.0, y_max = 0.0;
  for (const auto& ap : r.alpha_curve) {
    x_max = std::max(x_max, ap.point.x);
    y_max = std::max(y_max, ap.point.y);
  }
  const bool shape = first.y == 0.0 && first.x == x_max && last.y == y_max && last.x < first.x;
  const bool order = *r.alpha_k > *r.alpha_frobenius;

  StudentReferenceConfig cfg;
  cfg.seed = 21;
  const double reference = r.reference.y;
  const auto b59 = bootstrap_bias(100, 748, 5.9, cfg);
  const auto b8 = bootstrap_bias(100, 748, 8.0, cfg);
  const bool ref_ok = reference >= 5.0 && reference <= 7.0;
  const bool bias_ok = b59.bias < 0.0 && std::abs(b59.bias) > std::abs(b8.bias);
  return {shape && order && ref_ok && bias_ok,
          std::string("curve ") + (shape ? "ok" : "BAD") + " (alpha 0: " + fmt("%.3f", first.x) + ", " + fmt("%.3f", first.y) + "; alpha 1: " +
              fmt("%.3f", last.x) + ", " + fmt("%.3f", last.y) + "); alpha_K " + fmt("%.2f", *r.alpha_k) + " vs alpha_Frobenius " +
              fmt("%.2f", *r.alpha_frobenius) + "; student reference " + fmt("%.3f", reference) + " (want [5, 7]); bias mu=5.9 " +
              fmt("%+.3f", b59.bias) + " +/- " + fmt("%.3f", b59.error) + ", mu=8 " + fmt("%+.3f", b8.bias) + " +/- " + fmt("%.3f", b8.error)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CORRFILT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "corrfilt_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path panel = root / "panel.csv";
  auto spec = fixtures::block_model(3, 5, 0.5, 0.1);
  std::ofstream(panel) << data_csv(simulate_gaussian(spec, 200, 3));
  const std::vector<std::string> commands{
      "correlate",
      "cluster -m slca -r 50",
      "network -k pmfg -r 30",
      "bootstrap -m alca -r 100",
      "hnfm -r 50",
      "evaluate -f slca,alca,rmt,shrink -a 0:1:0.1 -r 20 --kl-mode auto",
      "evaluate -f rmt,shrink -a 0,0.5,1 -r 10 --kl-mode student --student-mu 6 --student-simulations 3 --student-replicas 4",
  };
  std::size_t compared = 0, differing = 0, failed = 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    for (const char* run : {"a", "b"}) {
      const fs::path out = root / run / std::to_string(k);
      if (run_cli("-i " + panel.string() + " --seed 5 -o " + out.string() + " " + commands[k]) != 0) ++failed;
    }
    // the factor model feeds a follow-up simulate call
    if (k == 4) {
      for (const char* run : {"a", "b"}) {
        // same model path in both runs so the recorded configs match
        const fs::path dir = root / run / std::to_string(k);
        const fs::path model = root / "model.json";
        fs::copy_file(dir / "hnfm.json", model, fs::copy_options::overwrite_existing);
        if (run_cli("simulate --model " + model.string() + " -t 300 --student --mu 5 --seed 5 -o " + (dir / "sim").string()) != 0) {
          ++failed;
        }
      }
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    std::string x = slurp(entry.path());
    std::string y = slurp(root / "b" / rel);
    if (rel.filename() == "manifest.json") {
      Json jx = Json::parse(x), jy = Json::parse(y);
      jx.erase("timestamp");
      jy.erase("timestamp");
      x = jx.dump();
      y = jy.dump();
    }
    ++compared;
    if (x != y) ++differing;
  }
  return {failed == 0 && differing == 0 && compared > 20,
          std::to_string(compared) + " artifacts compared across two runs, " + std::to_string(differing) +
              " differ (manifests compared without timestamp), " + std::to_string(failed) + " command failures"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "worked-example exactness", 1, worked_example},
      {2, "tree and graph structure", 1, graph_structure},
      {3, "ultrametric and definiteness", 60, ultrametric_properties},
      {4, "factor model round trip", 120, hnfm_round_trip},
      {5, "reduced tree coefficients", 1, reduced_tree_coefficients},
      {6, "Wishart expectations", 300, wishart_expectations_check},
      {7, "Student limits", 60, student_limits},
      {8, "Student MLE consistency", 120, student_mle},
      {9, "stability-information ordering", 900, plane_ordering},
      {10, "shrinkage sweep and Student reference", 1800, shrinkage_sweep_check},
      {11, "determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs, c.limit_seconds,
                in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
