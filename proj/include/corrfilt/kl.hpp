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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "corrfilt/error.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/special.hpp"

namespace corrfilt {

struct StudentParams {
  double mu = 0.0;

  /// Scale constant that gives the mixing variable unit variance.
  double s0_sq() const { return 2.0 * mu / (mu - 2.0); }

  void validate() const {
    if (!(mu > 2.0) || !std::isfinite(mu)) {
      throw Error(ErrorKind::InvalidMu, "degrees of freedom must be finite and exceed 2, got " + std::to_string(mu));
    }
  }
};

/// Expected KL distances between a model matrix S and sample matrices C of
/// T Gaussian records in N dimensions, independent of S itself.
struct KlReference {
  std::size_t n = 0;
  std::size_t t = 0;
  double e_sigma_c = 0.0;  // E[K(S, C)]
  double e_c_sigma = 0.0;  // E[K(C, S)]
  double e_c_c = 0.0;      // E[K(C1, C2)]
};

/// A correlation matrix with its inverse and log-determinant cached, so a
/// matrix compared against many others is factorized only once.
class KlOperand {
 public:
  explicit KlOperand(const CorrelationMatrix& c, double pd_tolerance = kDefaultPdTolerance)
      : KlOperand(c.values(), pd_tolerance) {}

  /// Any symmetric positive definite matrix, e.g. a sample covariance.
  explicit KlOperand(const Matrix& m, double pd_tolerance = kDefaultPdTolerance)
      : values_(m), cached_(inverse_and_logdet(m, pd_tolerance)) {}

  const Matrix& values() const { return values_; }
  const Matrix& inverse() const { return cached_.inverse; }
  double logdet() const { return cached_.logdet; }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }

 private:
  Matrix values_;
  InverseLogdet cached_;
};

namespace detail {

inline void check_same_size(const KlOperand& a, const KlOperand& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "KL operands have sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

// tr(B^-1 A) for symmetric A and B^-1.
inline double trace_term(const KlOperand& a, const KlOperand& b) { return b.inverse().cwiseProduct(a.values()).sum(); }

}  // namespace detail

/// KL distance of N(0, A) from N(0, B).
inline double kl_gaussian(const KlOperand& a, const KlOperand& b) {
  detail::check_same_size(a, b);
  if (a.values() == b.values()) return 0.0;
  const double n = static_cast<double>(a.size());
  const double k = 0.5 * (b.logdet() - a.logdet() + detail::trace_term(a, b) - n);
  return std::max(k, 0.0);
}

/// Student-t KL distance in the limit of few degrees of freedom per dimension.
inline double kl_student_small_mu(const KlOperand& a, const KlOperand& b) {
  detail::check_same_size(a, b);
  if (a.values() == b.values()) return 0.0;
  const double n = static_cast<double>(a.size());
  const double k = 0.5 * (b.logdet() - a.logdet() + n * std::log(detail::trace_term(a, b) / n));
  return std::max(k, 0.0);
}

inline constexpr double kStudentQuadratureTolerance = 1e-6;

/// KL distance between two Student-t laws sharing `mu` degrees of freedom.
///
/// The mixing integral is an expectation over s ~ Gamma(mu / 2, 1) of
/// log((2s + tr) / (2s + N)), computed with adaptive Gauss-Kronrod. For shape
/// a = mu / 2 >= 1 it runs over s, split at the mean with the tail measured in
/// standard deviations. For a < 1 the density's pole at 0 is removed by
/// s = u^(1/a), which turns the weight into exp(-s) / Gamma(a + 1) du. Any
/// positive mu is accepted so both limits can be probed.
inline double kl_student_full(const KlOperand& a, const KlOperand& b, double mu) {
  detail::check_same_size(a, b);
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorKind::InvalidMu, "mu must be positive, got " + std::to_string(mu));
  if (a.values() == b.values()) return 0.0;
  const double n = static_cast<double>(a.size());
  const double tr = detail::trace_term(a, b);
  const double shape = 0.5 * mu;
  auto f = [&](double s) { return std::log1p((tr - n) / (2.0 * s + n)); };
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double integral = 0.0;
  double err = 0.0;
  try {
    double err_low = 0.0;
    double err_high = 0.0;
    if (shape >= 1.0) {
      const double sd = std::sqrt(shape);
      auto weighted = [&](double s) { return f(s) * boost::math::gamma_p_derivative(shape, s); };
      const double low = Kronrod::integrate(weighted, 0.0, shape, 20, 1e-10, &err_low);
      const double high = Kronrod::integrate([&](double y) { return weighted(shape + sd * y) * sd; }, 0.0, inf, 20, 1e-10, &err_high);
      integral = low + high;
    } else {
      const double norm = std::tgamma(shape + 1.0);
      auto weighted = [&](double u) {
        const double s = std::pow(u, 1.0 / shape);
        return f(s) * std::exp(-s) / norm;
      };
      const double low = Kronrod::integrate(weighted, 0.0, 1.0, 20, 1e-10, &err_low);
      const double high = Kronrod::integrate(weighted, 1.0, inf, 20, 1e-10, &err_high);
      integral = low + high;
    }
    err = err_low + err_high;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::QuadratureFailure, std::string("mixing integral failed: ") + e.what());
  }
  if (!std::isfinite(integral) || err > kStudentQuadratureTolerance * std::abs(integral) + 1e-14) {
    throw Error(ErrorKind::QuadratureFailure, "mixing integral error estimate " + std::to_string(err) +
                                                  " exceeds target for value " + std::to_string(integral));
  }
  const double k = 0.5 * (b.logdet() - a.logdet() + (n + mu) * integral);
  return std::max(k, 0.0);
}

inline double kl_student_full(const KlOperand& a, const KlOperand& b, const StudentParams& p) {
  p.validate();
  return kl_student_full(a, b, p.mu);
}

inline double kl_gaussian(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  return kl_gaussian(KlOperand(a), KlOperand(b));
}

inline double kl_student_small_mu(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  return kl_student_small_mu(KlOperand(a), KlOperand(b));
}

inline double kl_student_full(const CorrelationMatrix& a, const CorrelationMatrix& b, const StudentParams& p) {
  return kl_student_full(KlOperand(a), KlOperand(b), p);
}

/// Closed-form Wishart expectations for sample correlation matrices of T
/// Gaussian records in N dimensions.
inline KlReference wishart_expectations(std::size_t n, std::size_t t) {
  if (t <= n + 1) {
    throw Error(ErrorKind::InsufficientSamples,
                "need T > N + 1, got N=" + std::to_string(n) + " T=" + std::to_string(t));
  }
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  double psi_sum = 0.0;
  for (std::size_t p = t - n + 1; p <= t; ++p) psi_sum += digamma(0.5 * static_cast<double>(p));
  const double ratio = nd * (nd + 1.0) / (td - nd - 1.0);
  KlReference out;
  out.n = n;
  out.t = t;
  out.e_sigma_c = 0.5 * (nd * std::log(2.0 / td) + psi_sum + ratio);
  out.e_c_sigma = 0.5 * (nd * std::log(td / 2.0) - psi_sum);
  out.e_c_c = 0.5 * ratio;
  return out;
}

struct MleOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;
};

struct MleFit {
  CorrelationMatrix correlation;
  std::size_t iterations = 0;
};

/// Student-t maximum likelihood correlation by fixed-point iteration.
///
/// Columns are centred and scaled first; the scatter update is
/// C' = (N + mu)/T * sum_t x x^T / (mu + x^T C^-1 x). The iteration starts
/// from the Pearson matrix and halves a step whenever the step size grows.
inline MleFit student_mle_fit(const DataMatrix& data, const StudentParams& p, const MleOptions& opt = {}) {
  p.validate();
  const std::size_t n = data.elements();
  const std::size_t t = data.records();
  if (n == 1) return {CorrelationMatrix::identity(1).with_labels(data.labels()), 0};
  if (t <= n) {
    throw Error(ErrorKind::InsufficientSamples, "MLE needs T > N, got N=" + std::to_string(n) + " T=" + std::to_string(t));
  }
  Matrix x = data.values();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(t));
    if (!(sd > 0.0)) throw Error(ErrorKind::ZeroVarianceColumn, "column " + data.labels()[static_cast<std::size_t>(j)] + " is constant");
    x.col(j) /= sd;
  }
  const double mu = p.mu;
  const double nd = static_cast<double>(n);
  Matrix c = (x.transpose() * x) / static_cast<double>(t);
  double previous_step = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    const Matrix inv = inverse_and_logdet(c).inverse;
    const Vector quad = ((x * inv).cwiseProduct(x)).rowwise().sum();
    const Vector w = ((nd + mu) / (mu + quad.array())).matrix();
    Matrix next = (x.transpose() * w.asDiagonal() * x) / static_cast<double>(t);
    next = 0.5 * (next + next.transpose());
    double step = (next - c).cwiseAbs().maxCoeff();
    if (step > previous_step) {
      next = 0.5 * (next + c);
      step = (next - c).cwiseAbs().maxCoeff();
    }
    c = std::move(next);
    previous_step = step;
    if (step < opt.tolerance) {
      inverse_and_logdet(c);
      const Vector d = c.diagonal().cwiseSqrt().cwiseInverse();
      const Matrix r = d.asDiagonal() * c * d.asDiagonal();
      return {CorrelationMatrix::symmetrized(r, data.labels()), it};
    }
  }
  throw Error(ErrorKind::NoConvergence, "MLE did not converge in " + std::to_string(opt.max_iterations) + " iterations");
}

inline CorrelationMatrix student_mle_correlation(const DataMatrix& data, const StudentParams& p) {
  return student_mle_fit(data, p).correlation;
}

struct MuEstimate {
  double mu_mean = 0.0;
  double mu_std = 0.0;
  std::vector<double> per_column;
};

namespace detail {

inline constexpr double kMuLower = 1.0;
inline constexpr double kMuUpper = 200.0;

// Profile log-likelihood of a location-scale t at fixed nu; location and
// scale come from EM, warm-started from `loc`, `scale2`.
inline double t_profile_loglik(const Vector& x, double nu, double& loc, double& scale2) {
  const double t = static_cast<double>(x.size());
  for (int it = 0; it < 500; ++it) {
    const Vector w = ((nu + 1.0) / (nu + (x.array() - loc).square() / scale2)).matrix();
    const double new_loc = w.dot(x) / w.sum();
    const double new_scale2 = (w.array() * (x.array() - new_loc).square()).sum() / t;
    const bool done = std::abs(new_loc - loc) < 1e-12 && std::abs(new_scale2 - scale2) < 1e-12 * scale2;
    loc = new_loc;
    scale2 = new_scale2;
    if (done) break;
  }
  if (!(scale2 > 0.0)) return -std::numeric_limits<double>::infinity();
  const double z = ((x.array() - loc).square() / (nu * scale2)).log1p().sum();
  return t * (std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI * scale2)) -
         0.5 * (nu + 1.0) * z;
}

// Golden-section search over log(nu) in [kMuLower, kMuUpper].
inline double t_mle_nu(const Vector& column) {
  const double t = static_cast<double>(column.size());
  const double mean = column.mean();
  const double var = (column.array() - mean).square().sum() / t;
  Vector x = (column.array() - mean) / std::sqrt(var);
  double loc = 0.0;
  double scale2 = 1.0;
  auto f = [&](double log_nu) {
    double l = loc;
    double s = scale2;
    const double v = t_profile_loglik(x, std::exp(log_nu), l, s);
    loc = l;
    scale2 = s;
    return v;
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = std::log(kMuLower);
  double hi = std::log(kMuUpper);
  double a = hi - g * (hi - lo);
  double b = lo + g * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  while (hi - lo > 1e-6) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = f(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = f(a);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace detail

/// Per-column univariate Student-t maximum likelihood degrees of freedom,
/// searched on [1, 200], with their mean and sample standard deviation.
inline MuEstimate estimate_mu(const DataMatrix& data) {
  MuEstimate out;
  const Matrix& x = data.values();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (data.column_is_constant(static_cast<std::size_t>(j))) {
      throw Error(ErrorKind::MleFailure, "column " + std::to_string(j) + " (" + data.labels()[static_cast<std::size_t>(j)] +
                                             ") is constant");
    }
    const double nu = detail::t_mle_nu(x.col(j));
    if (!std::isfinite(nu)) throw Error(ErrorKind::MleFailure, "column " + std::to_string(j) + " has no finite estimate");
    out.per_column.push_back(nu);
  }
  const double k = static_cast<double>(out.per_column.size());
  for (double v : out.per_column) out.mu_mean += v / k;
  if (out.per_column.size() > 1) {
    double ss = 0.0;
    for (double v : out.per_column) ss += (v - out.mu_mean) * (v - out.mu_mean);
    out.mu_std = std::sqrt(ss / (k - 1.0));
  }
  return out;
}

}  // namespace corrfilt
