#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "fable/dataset.hpp"
#include "fable/linalg/special.hpp"

// Pieces shared by the subtype-mixture label models (EBCC and its
// feature-aware extension): joint assignment q(z, g), class prior q(tau) and
// per-LF confusion Dirichlets q(v).

namespace fable {

/// Dirichlet parameters mu(j, k, m, l): LF j, true class k, subtype m,
/// emitted label l.
class ConfusionTensor {
 public:
  ConfusionTensor() = default;
  ConfusionTensor(Eigen::Index lfs, int classes, int subtypes)
      : lfs_(lfs), classes_(classes), subtypes_(subtypes),
        values_(Eigen::VectorXd::Zero(lfs * classes * subtypes * classes)) {}

  Eigen::Index num_lfs() const { return lfs_; }
  int num_classes() const { return classes_; }
  int num_subtypes() const { return subtypes_; }

  Eigen::Index offset(Eigen::Index j, int k, int m) const {
    return ((j * classes_ + k) * subtypes_ + m) * classes_;
  }
  double& operator()(Eigen::Index j, int k, int m, int l) { return values_(offset(j, k, m) + l); }
  double operator()(Eigen::Index j, int k, int m, int l) const { return values_(offset(j, k, m) + l); }

  /// Distribution over emitted labels for (j, k, m).
  auto row(Eigen::Index j, int k, int m) { return values_.segment(offset(j, k, m), classes_); }
  auto row(Eigen::Index j, int k, int m) const { return values_.segment(offset(j, k, m), classes_); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

 private:
  Eigen::Index lfs_ = 0;
  int classes_ = 0;
  int subtypes_ = 0;
  Eigen::VectorXd values_;
};

/// Column index of (class k, subtype m) in the N x (K M) assignment matrix.
inline Eigen::Index km_index(int k, int m, int subtypes) { return static_cast<Eigen::Index>(k) * subtypes + m; }

/// q(z_i = k) = sum_m rho_ikm.
inline Eigen::MatrixXd class_marginals(const Eigen::MatrixXd& rho, int classes, int subtypes) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(rho.rows(), classes);
  for (int k = 0; k < classes; ++k) {
    for (int m = 0; m < subtypes; ++m) q.col(k) += rho.col(km_index(k, m, subtypes));
  }
  return q;
}

/// rho_ik. = q0_ik * w_ik with w_ik ~ Dir(1_M), renormalized per item.
inline Eigen::MatrixXd init_assignments(const Eigen::MatrixXd& q0, int subtypes, std::mt19937_64& rng) {
  const auto n = q0.rows();
  const auto classes = static_cast<int>(q0.cols());
  Eigen::MatrixXd rho(n, static_cast<Eigen::Index>(classes) * subtypes);
  std::gamma_distribution<double> unit_gamma(1.0, 1.0);
  Eigen::VectorXd w(subtypes);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) w(m) = unit_gamma(rng);
      w /= w.sum();
      for (int m = 0; m < subtypes; ++m) rho(i, km_index(k, m, subtypes)) = q0(i, k) * w(m);
    }
    rho.row(i) /= rho.row(i).sum();
  }
  return rho;
}

/// nu_k = alpha_k + sum_i q(z_i = k).
inline Eigen::VectorXd tau_update(const Eigen::MatrixXd& rho, const Eigen::VectorXd& alpha, int subtypes) {
  const auto classes = static_cast<int>(alpha.size());
  return alpha + class_marginals(rho, classes, subtypes).colwise().sum().transpose();
}

/// mu_jkml = beta_kl + sum over items i that LF j labelled l of rho_ikm.
inline ConfusionTensor confusion_update(const Dataset& d, const Eigen::MatrixXd& rho, const Eigen::MatrixXd& beta,
                                        int subtypes) {
  const int classes = d.num_classes;
  const auto lfs = d.lf_labels.cols();
  ConfusionTensor mu(lfs, classes, subtypes);
  for (Eigen::Index j = 0; j < lfs; ++j) {
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) mu.row(j, k, m) = beta.row(k).transpose();
    }
  }
  for (Eigen::Index i = 0; i < d.lf_labels.rows(); ++i) {
    for (Eigen::Index j = 0; j < lfs; ++j) {
      const int y = d.lf_labels(i, j);
      if (is_abstain(y)) continue;
      for (int k = 0; k < classes; ++k) {
        for (int m = 0; m < subtypes; ++m) mu(j, k, m, y) += rho(i, km_index(k, m, subtypes));
      }
    }
  }
  return mu;
}

/// E[log v_jkml] = digamma(mu_jkml) - digamma(sum_l mu_jkml), same layout as mu.
inline ConfusionTensor expected_log_confusion(const ConfusionTensor& mu) {
  ConfusionTensor out(mu.num_lfs(), mu.num_classes(), mu.num_subtypes());
  for (Eigen::Index j = 0; j < mu.num_lfs(); ++j) {
    for (int k = 0; k < mu.num_classes(); ++k) {
      for (int m = 0; m < mu.num_subtypes(); ++m) out.row(j, k, m) = dirichlet_log_expectation(mu.row(j, k, m));
    }
  }
  return out;
}

/// log rho_ikm = E[log tau_k] + mixture_term(i, km) + sum_{j votes} E[log v_{jkm y_ij}],
/// normalized per item in log space.
inline Eigen::MatrixXd assignment_update(const Dataset& d, const Eigen::VectorXd& elog_tau,
                                         const Eigen::MatrixXd& mixture_term, const ConfusionTensor& elog_v,
                                         int subtypes) {
  const auto n = d.lf_labels.rows();
  const int classes = d.num_classes;
  const auto width = static_cast<Eigen::Index>(classes) * subtypes;
  const bool per_item = mixture_term.rows() == n;
  Eigen::MatrixXd rho(n, width);
  Eigen::VectorXd logits(width);
  for (Eigen::Index i = 0; i < n; ++i) {
    logits = mixture_term.row(per_item ? i : 0).transpose();
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) logits(km_index(k, m, subtypes)) += elog_tau(k);
    }
    for (Eigen::Index j = 0; j < d.lf_labels.cols(); ++j) {
      const int y = d.lf_labels(i, j);
      if (is_abstain(y)) continue;
      for (int k = 0; k < classes; ++k) {
        for (int m = 0; m < subtypes; ++m) logits(km_index(k, m, subtypes)) += elog_v(j, k, m, y);
      }
    }
    const double lse = log_sum_exp(logits);
    rho.row(i) = (logits.array() - lse).exp().transpose();
  }
  return rho;
}

}  // namespace fable
