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
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corrfilt/bootstrap.hpp"
#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/filters.hpp"
#include "corrfilt/hnfm.hpp"
#include "corrfilt/kl.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/random.hpp"

namespace corrfilt {

enum class KlMode { Gaussian, StudentSmallMu };

constexpr std::string_view to_string(KlMode mode) {
  return mode == KlMode::Gaussian ? "gaussian" : "student_small_mu";
}

inline double kl_distance(KlMode mode, const KlOperand& a, const KlOperand& b) {
  return mode == KlMode::Gaussian ? kl_gaussian(a, b) : kl_student_small_mu(a, b);
}

/// Student small-mu distances when the mean per-column degrees of freedom is
/// below half the dimension, Gaussian otherwise.
inline KlMode choose_kl_mode(const DataMatrix& data) {
  const MuEstimate mu = estimate_mu(data);
  return mu.mu_mean / static_cast<double>(data.elements()) < 0.5 ? KlMode::StudentSmallMu : KlMode::Gaussian;
}

/// x: mean distance between filtered matrices of two replicas (stability).
/// y: mean distance of a replica's sample matrix from its filtered matrix
/// (information discarded).
struct PlanePoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  double x_err = 0.0;
  double y_err = 0.0;
};

/// The ideal point (0, y) with an error bar on y.
struct ReferencePoint {
  double y = 0.0;
  double y_low = 0.0;
  double y_high = 0.0;
  std::string source;  // "wishart" or "student_simulation"
};

struct AlphaPoint {
  double alpha = 0.0;
  PlanePoint point;
};

struct EvaluationReport {
  std::size_t n = 0;
  std::size_t t = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::size_t stability_pairs = 0;
  bool pairs_subsampled = false;
  KlMode kl_mode = KlMode::Gaussian;
  std::vector<PlanePoint> points;
  ReferencePoint reference;
  std::vector<AlphaPoint> alpha_curve;
  std::optional<double> alpha_k;
  std::optional<double> alpha_frobenius;
};

struct StudentReferenceConfig {
  std::size_t simulations = 100;
  std::size_t replicas = 100;
  std::uint64_t seed = 0;
  std::optional<double> mu_sd;  // error bar from reruns at mu -/+ mu_sd
};

struct StudentReference {
  double value = 0.0;
  double standard_error = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct BootstrapBias {
  double bias = 0.0;
  double error = 0.0;
  double bootstrap_reference = 0.0;
  double independent_reference = 0.0;
};

struct EvaluationOptions {
  /// When set the reference point comes from the Student simulation protocol
  /// at this mu; otherwise from the Wishart closed form.
  std::optional<double> student_mu;
  StudentReferenceConfig student;
  std::size_t full_pair_limit = 150;
  std::size_t pair_budget = 10000;
};

namespace detail {

// Stream index for the stability pair subsample; replica streams use 0..M-1.
inline constexpr std::uint64_t kPairStream = 0xfffffffffffffff0ULL;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const double k = static_cast<double>(v.size());
  for (double x : v) out.mean += x / k;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> stability_pairs(std::size_t m, const EvaluationOptions& opt,
                                                                        std::uint64_t seed, bool& subsampled) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t all = m * (m - 1) / 2;
  subsampled = m > opt.full_pair_limit && all > opt.pair_budget;
  if (!subsampled) {
    pairs.reserve(all);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }
  Rng rng = make_stream(seed, kPairStream);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (seen.size() < opt.pair_budget) {
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (seen.emplace(i, j).second) pairs.emplace_back(i, j);
  }
  return pairs;
}

inline KlOperand prepare(const CorrelationMatrix& c, const std::string& what) {
  try {
    return KlOperand(c);
  } catch (const Error& e) {
    throw Error(e.kind(), what + ": " + e.detail());
  }
}

// Sample correlation matrices of the M bootstrap replicas of `data`.
inline std::vector<CorrelationMatrix> replica_correlations(const DataMatrix& data, const BootstrapConfig& cfg) {
  std::vector<CorrelationMatrix> out;
  out.reserve(cfg.replicas);
  for (std::size_t r = 0; r < cfg.replicas; ++r) out.push_back(pearson_correlation(bootstrap_replica(data, cfg.seed, r)));
  return out;
}

inline PlanePoint plane_point(const Filter& filter, const std::vector<CorrelationMatrix>& samples,
                              const std::vector<KlOperand>& sample_ops,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs, std::size_t t_len,
                              KlMode mode) {
  std::vector<KlOperand> filtered;
  filtered.reserve(samples.size());
  std::vector<double> info;
  info.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    filtered.push_back(prepare(filter.apply(samples[r], t_len), "filter " + filter.label + ", replica " + std::to_string(r)));
    info.push_back(kl_distance(mode, sample_ops[r], filtered.back()));
  }
  std::vector<double> stab;
  stab.reserve(pairs.size());
  for (const auto& [i, j] : pairs) stab.push_back(kl_distance(mode, filtered[i], filtered[j]));
  const MeanSe x = mean_se(stab);
  const MeanSe y = mean_se(info);
  return {filter.label, x.mean, y.mean, x.se, y.se};
}

}  // namespace detail

/// One-factor model with every pairwise correlation equal to `rho`; the
/// default model of the Student reference protocol.
inline HnfmSpec one_factor_model(std::size_t n, double rho) {
  if (n < 2) throw Error(ErrorKind::DimensionTooSmall, "model needs at least 2 elements");
  DendrogramNode root;
  for (std::size_t i = 0; i < n; ++i) root.children.push_back(i);
  root.rho = rho;
  return hnfm_from_dendrogram(Dendrogram(detail::default_labels(n), {root}));
}

namespace detail {

struct StudentRun {
  MeanSe bootstrap;    // K(C^b_ji, C_i) averaged per simulation
  MeanSe independent;  // K(C_i, model)
};

inline StudentRun student_run(const HnfmSpec& model, std::size_t t_len, double mu, const StudentReferenceConfig& cfg) {
  if (cfg.simulations < 1 || cfg.replicas < 1) throw Error(ErrorKind::InsufficientReplicas, "Student reference needs simulations and replicas");
  HnfmSpec spec = model;
  spec.mu = mu;
  const KlOperand truth = prepare(model_correlation(spec), "model");
  std::vector<double> per_sim;
  std::vector<double> independent;
  per_sim.reserve(cfg.simulations);
  for (std::size_t i = 0; i < cfg.simulations; ++i) {
    const DataMatrix data = simulate_student(spec, t_len, stream_seed(cfg.seed, i));
    const KlOperand c = prepare(pearson_correlation(data), "simulation " + std::to_string(i));
    independent.push_back(kl_student_small_mu(c, truth));
    double sum = 0.0;
    for (std::size_t j = 0; j < cfg.replicas; ++j) {
      const CorrelationMatrix b = pearson_correlation(bootstrap_replica(data, stream_seed(cfg.seed ^ 0xb0075ULL, i), j));
      sum += kl_student_small_mu(prepare(b, "simulation " + std::to_string(i) + ", replica " + std::to_string(j)), c);
    }
    per_sim.push_back(sum / static_cast<double>(cfg.replicas));
  }
  return {mean_se(per_sim), mean_se(independent)};
}

}  // namespace detail

/// Estimate of <K(C, model)> for Student data from bootstrap replicas of
/// simulated panels: the mean of K(C^b_ji, C_i) with small-mu distances. The
/// error bar reruns the protocol at mu + mu_sd (low end) and mu - mu_sd (high
/// end), skipping a side whose mu would not exceed 2.
inline StudentReference student_reference(const HnfmSpec& model, std::size_t t_len, double mu, const StudentReferenceConfig& cfg) {
  StudentParams{mu}.validate();
  const auto central = detail::student_run(model, t_len, mu, cfg).bootstrap;
  StudentReference out{central.mean, central.se, central.mean, central.mean};
  if (cfg.mu_sd && *cfg.mu_sd > 0.0) {
    out.low = detail::student_run(model, t_len, mu + *cfg.mu_sd, cfg).bootstrap.mean;
    if (mu - *cfg.mu_sd > 2.0) out.high = detail::student_run(model, t_len, mu - *cfg.mu_sd, cfg).bootstrap.mean;
  }
  return out;
}

inline StudentReference student_reference(std::size_t n, std::size_t t_len, double mu, const StudentReferenceConfig& cfg) {
  return student_reference(one_factor_model(n, 0.3), t_len, mu, cfg);
}

/// Relative gap between the bootstrap-based reference and the mean distance
/// of freshly simulated sample matrices from the model. The error combines
/// the two standard errors as if independent.
inline BootstrapBias bootstrap_bias(const HnfmSpec& model, std::size_t t_len, double mu, const StudentReferenceConfig& cfg) {
  StudentParams{mu}.validate();
  const auto run = detail::student_run(model, t_len, mu, cfg);
  BootstrapBias out;
  out.bootstrap_reference = run.bootstrap.mean;
  out.independent_reference = run.independent.mean;
  out.bias = run.bootstrap.mean / run.independent.mean - 1.0;
  const double rb = run.bootstrap.se / run.independent.mean;
  const double ri = run.bootstrap.mean * run.independent.se / (run.independent.mean * run.independent.mean);
  out.error = std::sqrt(rb * rb + ri * ri);
  return out;
}

inline BootstrapBias bootstrap_bias(std::size_t n, std::size_t t_len, double mu, const StudentReferenceConfig& cfg) {
  return bootstrap_bias(one_factor_model(n, 0.3), t_len, mu, cfg);
}

/// Places every filter on the stability-information plane using M bootstrap
/// replicas of `data`.
inline EvaluationReport evaluate_filters(const DataMatrix& data, const std::vector<Filter>& filters, const BootstrapConfig& cfg,
                                         KlMode mode, const EvaluationOptions& opt = {}) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.elements();
  const std::size_t t = data.records();
  const KlReference wishart = wishart_expectations(n, t);

  EvaluationReport report;
  report.n = n;
  report.t = t;
  report.replicas = cfg.replicas;
  report.seed = cfg.seed;
  report.kl_mode = mode;
  if (opt.student_mu) {
    const StudentReference ref = student_reference(n, t, *opt.student_mu, opt.student);
    report.reference = {ref.value, ref.low, ref.high, "student_simulation"};
  } else {
    report.reference = {wishart.e_c_sigma, wishart.e_c_sigma, wishart.e_c_sigma, "wishart"};
  }

  const std::vector<CorrelationMatrix> samples = detail::replica_correlations(data, cfg);
  std::vector<KlOperand> sample_ops;
  sample_ops.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) sample_ops.push_back(detail::prepare(samples[r], "replica " + std::to_string(r)));
  const auto pairs = detail::stability_pairs(cfg.replicas, opt, cfg.seed, report.pairs_subsampled);
  report.stability_pairs = pairs.size();

  for (const Filter& f : filters) report.points.push_back(detail::plane_point(f, samples, sample_ops, pairs, t, mode));
  return report;
}

inline double plane_distance(const PlanePoint& p, const ReferencePoint& ref) { return std::hypot(p.x, p.y - ref.y); }

namespace detail {

// Smallest alpha whose objective is within 1% of the grid minimum.
inline double flat_argmin(const std::vector<double>& grid, const std::vector<double>& objective) {
  const double best = *std::min_element(objective.begin(), objective.end());
  double pick = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (objective[k] <= best + 0.01 * std::abs(best)) pick = std::min(pick, grid[k]);
  }
  return pick;
}

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorKind::ConfigError, "alpha grid is empty");
  for (double a : grid) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "alpha grid value " + std::to_string(a) + " outside [0, 1]");
  }
}

}  // namespace detail

struct SweepResult {
  std::vector<AlphaPoint> alpha_curve;
  double alpha_k = 0.0;
  ReferencePoint reference;
};

/// Shrinkage filters over `grid` on the plane; alpha_k is the grid point
/// closest to the reference point.
inline SweepResult shrinkage_sweep(const DataMatrix& data, const std::vector<double>& grid, const BootstrapConfig& cfg, KlMode mode,
                                   const EvaluationOptions& opt = {}) {
  detail::check_grid(grid);
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Filter> filters;
  for (double a : sorted) filters.push_back(shrink_filter(a));
  const EvaluationReport report = evaluate_filters(data, filters, cfg, mode, opt);
  SweepResult out;
  out.reference = report.reference;
  std::vector<double> distance;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out.alpha_curve.push_back({sorted[k], report.points[k]});
    distance.push_back(plane_distance(report.points[k], report.reference));
  }
  out.alpha_k = detail::flat_argmin(sorted, distance);
  return out;
}

/// Grid alpha minimizing the mean squared elementwise gap between each shrunk
/// replica matrix and the sample matrix of that replica's out-of-bag rows.
inline double frobenius_optimal_alpha(const DataMatrix& data, const std::vector<double>& grid, const BootstrapConfig& cfg) {
  detail::check_grid(grid);
  if (cfg.replicas < 2) throw Error(ErrorKind::InsufficientReplicas, "held-out Frobenius search needs at least 2 replicas");
  const std::size_t t = data.records();
  std::vector<double> error(grid.size(), 0.0);
  std::size_t used = 0;
  std::vector<char> in_bag(t);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const ReplicaDraw draw = bootstrap_draw(data, cfg.seed, r);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (std::size_t row : draw.rows) in_bag[row] = 1;
    std::vector<Eigen::Index> held;
    for (std::size_t row = 0; row < t; ++row) {
      if (!in_bag[row]) held.push_back(static_cast<Eigen::Index>(row));
    }
    if (held.size() < 2) continue;
    const DataMatrix out_of_bag(data.values()(held, Eigen::all), data.labels());
    bool degenerate = false;
    for (std::size_t j = 0; j < out_of_bag.elements() && !degenerate; ++j) degenerate = out_of_bag.column_is_constant(j);
    if (degenerate) continue;
    const CorrelationMatrix c = pearson_correlation(draw.data);
    const Matrix& held_c = pearson_correlation(out_of_bag).values();
    const ShrinkageTarget target = shrinkage_target(c);
    for (std::size_t k = 0; k < grid.size(); ++k) error[k] += (shrink(c, target, grid[k]).values() - held_c).squaredNorm();
    ++used;
  }
  if (used < 2) throw Error(ErrorKind::InsufficientReplicas, "fewer than 2 replicas had usable out-of-bag rows");
  return detail::flat_argmin(grid, error);
}

/// Plane points for the requested filters plus the shrinkage curve, alpha_k
/// and the held-out Frobenius alpha in one report. Shrinkage points are
/// appended to `points` after the requested filters.
inline EvaluationReport evaluate_with_sweep(const DataMatrix& data, std::vector<Filter> filters, std::vector<double> grid,
                                            const BootstrapConfig& cfg, KlMode mode, const EvaluationOptions& opt = {}) {
  std::sort(grid.begin(), grid.end());
  if (!grid.empty()) detail::check_grid(grid);
  const std::size_t first_shrink = filters.size();
  for (double a : grid) filters.push_back(shrink_filter(a));
  EvaluationReport report = evaluate_filters(data, filters, cfg, mode, opt);
  if (!grid.empty()) {
    std::vector<double> distance;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const PlanePoint& p = report.points[first_shrink + k];
      report.alpha_curve.push_back({grid[k], p});
      distance.push_back(plane_distance(p, report.reference));
    }
    report.alpha_k = detail::flat_argmin(grid, distance);
    if (cfg.replicas >= 2) report.alpha_frobenius = frobenius_optimal_alpha(data, grid, cfg);
  }
  return report;
}

}  // namespace corrfilt
