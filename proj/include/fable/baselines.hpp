#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fable/dataset.hpp"
#include "fable/linalg/special.hpp"
#include "fable/posterior.hpp"

namespace fable {

/// q(z_i = k) = share of non-abstaining votes for k; uniform when nobody voted.
inline Posterior majority_vote(const Dataset& d) {
  const auto n = d.lf_labels.rows();
  const auto k = d.num_classes;
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    double votes = 0.0;
    for (Eigen::Index j = 0; j < d.lf_labels.cols(); ++j) {
      const int y = d.lf_labels(i, j);
      if (is_abstain(y)) continue;
      probs(i, y) += 1.0;
      votes += 1.0;
    }
    if (votes > 0.0) {
      probs.row(i) /= votes;
    } else {
      probs.row(i).setConstant(1.0 / k);
    }
  }
  return make_posterior(std::move(probs));
}

struct DawidSkeneOptions {
  std::size_t max_iters = 500;
  double tol = 1e-6;
  double smoothing = 1e-9;  ///< added to confusion counts before normalizing
};

/// Classical Dawid-Skene EM, initialised from majority vote. `elbo_trace`
/// holds the observed-data log-likelihood after each E-step.
inline Posterior dawid_skene(const Dataset& d, const DawidSkeneOptions& opt = {}) {
  const auto n = d.lf_labels.rows();
  const auto l = d.lf_labels.cols();
  const int k = d.num_classes;

  Eigen::MatrixXd q = majority_vote(d).probs;
  Eigen::VectorXd log_prior(k);
  // log_conf[j](true, emitted)
  std::vector<Eigen::MatrixXd> log_conf(static_cast<std::size_t>(l), Eigen::MatrixXd::Zero(k, k));

  Posterior out;
  out.converged = false;
  for (std::size_t iter = 0; iter < opt.max_iters; ++iter) {
    // M-step
    const Eigen::VectorXd mass = q.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) log_prior(c) = std::log(std::max(mass(c), 1e-300) / static_cast<double>(n));
    for (Eigen::Index j = 0; j < l; ++j) {
      Eigen::MatrixXd counts = Eigen::MatrixXd::Constant(k, k, opt.smoothing);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int y = d.lf_labels(i, j);
        if (!is_abstain(y)) counts.col(y) += q.row(i).transpose();
      }
      for (int c = 0; c < k; ++c) counts.row(c) /= counts.row(c).sum();
      log_conf[static_cast<std::size_t>(j)] = counts.array().log().matrix();
    }

    // E-step
    Eigen::MatrixXd next(n, k);
    double loglik = 0.0;
    Eigen::VectorXd row(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      row = log_prior;
      for (Eigen::Index j = 0; j < l; ++j) {
        const int y = d.lf_labels(i, j);
        if (!is_abstain(y)) row += log_conf[static_cast<std::size_t>(j)].col(y);
      }
      const double lse = log_sum_exp(row);
      loglik += lse;
      next.row(i) = (row.array() - lse).exp().transpose();
    }
    out.elbo_trace.push_back(loglik);

    const double delta = (next - q).cwiseAbs().maxCoeff();
    out.delta_trace.push_back(delta);
    q = std::move(next);
    out.n_iters = iter + 1;
    if (delta < opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.predictions = argmax_rows(q);
  out.probs = std::move(q);
  return out;
}

}  // namespace fable
