#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fable {

inline double digamma(double x) { return boost::math::digamma(x); }

/// Mean of PG(b, c): (b / 2c) tanh(c / 2), with the b / 4 limit at c = 0.
inline double pg_mean(double b, double c) {
  c = std::abs(c);
  if (c < 1e-8) return 0.25 * b;
  return b / (2.0 * c) * std::tanh(0.5 * c);
}

/// log cosh(x) without overflow.
inline double log_cosh(double x) {
  x = std::abs(x);
  return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double hi = v.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((v.derived().array() - hi).exp().sum());
}

/// E[log theta_k] under Dir(alpha): digamma(alpha_k) - digamma(sum alpha).
inline Eigen::VectorXd dirichlet_log_expectation(const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  if (alpha.size() == 0) throw std::invalid_argument("dirichlet_log_expectation: empty alpha");
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha(k) > 0.0)) throw std::invalid_argument("dirichlet_log_expectation: alpha must be positive");
  }
  const double total = digamma(alpha.sum());
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) out(k) = digamma(alpha(k)) - total;
  return out;
}

/// log of the multivariate Beta function B(alpha).
inline double log_beta(const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) s += std::lgamma(alpha(k));
  return s - std::lgamma(alpha.sum());
}

/// Differential entropy of Dir(alpha).
inline double dirichlet_entropy(const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const double total = alpha.sum();
  const auto k = static_cast<double>(alpha.size());
  double s = log_beta(alpha) + (total - k) * digamma(total);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) s -= (alpha(i) - 1.0) * digamma(alpha(i));
  return s;
}

}  // namespace fable
