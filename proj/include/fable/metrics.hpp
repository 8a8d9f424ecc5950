#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fable/dataset.hpp"
#include "fable/error.hpp"

namespace fable {

enum class MetricKind { kAccuracy, kF1Binary };

inline std::string metric_name(MetricKind m) { return m == MetricKind::kAccuracy ? "accuracy" : "f1_binary"; }

struct MetricReport {
  MetricKind metric = MetricKind::kAccuracy;
  double value = 0.0;
  std::size_t n_evaluated = 0;
};

inline double accuracy(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// F1 of the `positive` class; 0 when precision + recall is 0.
inline double f1_binary(std::span<const int> pred, std::span<const int> gold, int positive = 1) {
  if (pred.size() != gold.size()) throw std::invalid_argument("f1_binary: length mismatch");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive;
    const bool g = gold[i] == positive;
    tp += (p && g) ? 1 : 0;
    fp += (p && !g) ? 1 : 0;
    fn += (!p && g) ? 1 : 0;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

/// F1 for binary tasks, accuracy otherwise.
inline MetricKind default_metric(int num_classes) {
  return num_classes == 2 ? MetricKind::kF1Binary : MetricKind::kAccuracy;
}

inline MetricReport evaluate(MetricKind metric, std::span<const int> pred, std::span<const int> gold,
                             int positive = 1) {
  MetricReport r;
  r.metric = metric;
  r.n_evaluated = pred.size();
  r.value = metric == MetricKind::kAccuracy ? accuracy(pred, gold) : f1_binary(pred, gold, positive);
  return r;
}

namespace detail {

// Row means of the pairwise Euclidean distance matrix plus the grand mean.
inline double distance_row_means(const Eigen::MatrixXd& x, Eigen::VectorXd& row_mean) {
  const auto n = x.rows();
  row_mean.setZero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (x.row(i) - x.row(j)).norm();
      row_mean(i) += dist;
      row_mean(j) += dist;
    }
  }
  row_mean /= static_cast<double>(n);
  return row_mean.mean();
}

}  // namespace detail

/// Distance correlation with the plain double-centred (V-statistic) estimator.
/// Returns 0 when either distance variance vanishes. O(N^2) time, O(N) memory.
inline double distance_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("distance_correlation: row-count mismatch");
  const auto n = a.rows();
  if (n < 2) throw std::invalid_argument("distance_correlation: need at least two rows");

  Eigen::VectorXd ra, rb;
  const double ga = detail::distance_row_means(a, ra);
  const double gb = detail::distance_row_means(b, rb);

  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // diagonal term: d_ii = 0
    const double ca0 = -2.0 * ra(i) + ga;
    const double cb0 = -2.0 * rb(i) + gb;
    cov += ca0 * cb0;
    var_a += ca0 * ca0;
    var_b += cb0 * cb0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double ca = (a.row(i) - a.row(j)).norm() - ra(i) - ra(j) + ga;
      const double cb = (b.row(i) - b.row(j)).norm() - rb(i) - rb(j) + gb;
      cov += 2.0 * ca * cb;
      var_a += 2.0 * ca * ca;
      var_b += 2.0 * cb * cb;
    }
  }
  // constant samples have all distances equal to zero
  if (!(ga > 0.0) || !(gb > 0.0) || !(var_a > 0.0) || !(var_b > 0.0)) return 0.0;
  const double r2 = std::max(cov, 0.0) / std::sqrt(var_a * var_b);
  return std::min(1.0, std::sqrt(r2));
}

/// Mean over LFs of dCor(covered features, correctness indicator). LFs with
/// fewer than two covered items contribute 0.
inline double feature_lf_correlation(const Dataset& d) {
  if (!d.gold) throw DataError("feature_lf_correlation requires gold labels");
  const auto n = d.lf_labels.rows();
  const auto l = d.lf_labels.cols();
  double total = 0.0;
  for (Eigen::Index j = 0; j < l; ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!is_abstain(d.lf_labels(i, j))) rows.push_back(i);
    }
    if (rows.size() < 2) continue;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d.features.cols());
    Eigen::MatrixXd r(static_cast<Eigen::Index>(rows.size()), 1);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const auto row = rows[t];
      x.row(static_cast<Eigen::Index>(t)) = d.features.row(row);
      r(static_cast<Eigen::Index>(t), 0) = d.lf_labels(row, j) == (*d.gold)[static_cast<std::size_t>(row)] ? 1.0 : 0.0;
    }
    total += distance_correlation(x, r);
  }
  return total / static_cast<double>(l);
}

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  ///< two-sided, t-distribution with n - 2 dof
};

inline PearsonResult pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson_r: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw NumericalError("pearson_r: need at least 3 points");
  const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
  const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
  if (*xlo == *xhi || *ylo == *yhi) throw NumericalError("pearson_r: zero variance");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericalError("pearson_r: zero variance");

  PearsonResult out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  if (std::abs(out.r) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
    boost::math::students_t dist(dof);
    out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return out;
}

}  // namespace fable
