#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "fable/baselines.hpp"
#include "fable/dataset.hpp"
#include "fable/linalg/special.hpp"
#include "fable/mixture.hpp"
#include "fable/posterior.hpp"

namespace fable {

/// Priors of the subtype-mixture model. `alpha` defaults to the majority-vote
/// class totals; beta is beta_diag on the diagonal and beta_offdiag elsewhere.
struct EbccPriors {
  std::optional<Eigen::VectorXd> alpha;
  double beta_diag = 4.0;
  double beta_offdiag = 1.0;
  double a_pi = 1.0;
};

/// Mean-field variational parameters. rho is N x (K M), column k * M + m.
struct EbccState {
  int num_classes = 0;
  int num_subtypes = 0;
  Eigen::MatrixXd rho;
  Eigen::VectorXd nu;
  Eigen::MatrixXd eta;  ///< K x M
  ConfusionTensor mu;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;  ///< K x K
  double a_pi = 1.0;

  Eigen::MatrixXd class_probs() const { return class_marginals(rho, num_classes, num_subtypes); }
};

inline Eigen::MatrixXd make_beta(int classes, double diag, double offdiag) {
  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(classes, classes, offdiag);
  beta.diagonal().setConstant(diag);
  return beta;
}

/// E[log pi_km] under q(pi_k) = Dir(eta_k), as a 1 x (K M) row.
inline Eigen::MatrixXd ebcc_expected_log_pi(const EbccState& s) {
  Eigen::MatrixXd out(1, s.rho.cols());
  for (int k = 0; k < s.num_classes; ++k) {
    const Eigen::VectorXd e = dirichlet_log_expectation(s.eta.row(k).transpose());
    for (int m = 0; m < s.num_subtypes; ++m) out(0, km_index(k, m, s.num_subtypes)) = e(m);
  }
  return out;
}

inline void ebcc_update_assignments(EbccState& s, const Dataset& d) {
  s.rho = assignment_update(d, dirichlet_log_expectation(s.nu), ebcc_expected_log_pi(s), expected_log_confusion(s.mu),
                            s.num_subtypes);
}

inline void ebcc_update_tau(EbccState& s) { s.nu = tau_update(s.rho, s.alpha, s.num_subtypes); }

/// eta_km = a_pi + sum_i rho_ikm.
inline void ebcc_update_pi(EbccState& s) {
  const Eigen::VectorXd mass = s.rho.colwise().sum().transpose();
  s.eta.resize(s.num_classes, s.num_subtypes);
  for (int k = 0; k < s.num_classes; ++k) {
    for (int m = 0; m < s.num_subtypes; ++m) s.eta(k, m) = s.a_pi + mass(km_index(k, m, s.num_subtypes));
  }
}

inline void ebcc_update_confusion(EbccState& s, const Dataset& d) {
  s.mu = confusion_update(d, s.rho, s.beta, s.num_subtypes);
}

/// Full evidence lower bound of the mean-field posterior, valid for any
/// state (not only at the coordinate optima of nu, eta and mu).
inline double ebcc_elbo(const EbccState& s, const Dataset& d) {
  const int classes = s.num_classes;
  const int subtypes = s.num_subtypes;
  const auto lfs = d.lf_labels.cols();

  const Eigen::VectorXd elog_tau = dirichlet_log_expectation(s.nu);
  const Eigen::MatrixXd elog_pi = ebcc_expected_log_pi(s);
  const ConfusionTensor elog_v = expected_log_confusion(s.mu);

  // expected log joint
  double value = -log_beta(s.alpha) + ((s.alpha.array() - 1.0) * elog_tau.array()).sum();
  const Eigen::VectorXd ones_m = Eigen::VectorXd::Constant(subtypes, s.a_pi);
  value -= classes * log_beta(ones_m);
  value += (s.a_pi - 1.0) * elog_pi.sum();
  for (int k = 0; k < classes; ++k) value -= static_cast<double>(lfs) * subtypes * log_beta(s.beta.row(k).transpose());
  for (Eigen::Index j = 0; j < lfs; ++j) {
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) {
        value += ((s.beta.row(k).transpose().array() - 1.0) * elog_v.row(j, k, m).array()).sum();
      }
    }
  }
  for (Eigen::Index i = 0; i < s.rho.rows(); ++i) {
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) {
        const double r = s.rho(i, km_index(k, m, subtypes));
        if (r <= 0.0) continue;
        double term = elog_tau(k) + elog_pi(0, km_index(k, m, subtypes));
        for (Eigen::Index j = 0; j < lfs; ++j) {
          const int y = d.lf_labels(i, j);
          if (!is_abstain(y)) term += elog_v(j, k, m, y);
        }
        value += r * (term - std::log(r));  // includes the assignment entropy
      }
    }
  }

  // entropies of the Dirichlet factors
  value += dirichlet_entropy(s.nu);
  for (int k = 0; k < classes; ++k) value += dirichlet_entropy(s.eta.row(k).transpose());
  for (Eigen::Index j = 0; j < lfs; ++j) {
    for (int k = 0; k < classes; ++k) {
      for (int m = 0; m < subtypes; ++m) value += dirichlet_entropy(s.mu.row(j, k, m));
    }
  }
  return value;
}

/// Initial state: rho from majority vote times per-(item, class) Dir(1_M)
/// draws, then one pass of the tau, pi and confusion updates.
inline EbccState ebcc_init(const Dataset& d, int subtypes, const EbccPriors& priors, std::uint64_t seed) {
  if (subtypes < 1) throw std::invalid_argument("ebcc: subtype count must be >= 1");
  validate(d);
  EbccState s;
  s.num_classes = d.num_classes;
  s.num_subtypes = subtypes;
  const Eigen::MatrixXd q0 = majority_vote(d).probs;
  std::mt19937_64 rng(seed);
  s.rho = init_assignments(q0, subtypes, rng);
  s.alpha = priors.alpha ? *priors.alpha : Eigen::VectorXd(q0.colwise().sum().transpose());
  if (s.alpha.size() != d.num_classes) throw std::invalid_argument("ebcc: alpha length must equal K");
  // an empty class under MV would give a zero Dirichlet parameter
  s.alpha = s.alpha.cwiseMax(1e-6);
  s.beta = make_beta(d.num_classes, priors.beta_diag, priors.beta_offdiag);
  s.a_pi = priors.a_pi;
  ebcc_update_tau(s);
  ebcc_update_pi(s);
  ebcc_update_confusion(s, d);
  return s;
}

struct EbccOptions {
  int subtypes = 3;
  EbccPriors priors;
  std::uint64_t seed = 0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  bool track_elbo = false;
};

/// One coordinate-ascent sweep: assignments, tau, pi, confusion.
inline void ebcc_sweep(EbccState& s, const Dataset& d) {
  ebcc_update_assignments(s, d);
  ebcc_update_tau(s);
  ebcc_update_pi(s);
  ebcc_update_confusion(s, d);
}

inline Posterior ebcc_fit(const Dataset& d, const EbccOptions& opt = {}) {
  EbccState s = ebcc_init(d, opt.subtypes, opt.priors, opt.seed);
  Posterior out;
  out.converged = false;
  Eigen::MatrixXd q = s.class_probs();
  for (std::size_t iter = 0; iter < opt.max_iters; ++iter) {
    ebcc_sweep(s, d);
    if (opt.track_elbo) out.elbo_trace.push_back(ebcc_elbo(s, d));
    Eigen::MatrixXd next = s.class_probs();
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

/// Independent BCC: the same machinery with a single subtype per class.
inline Posterior ibcc_fit(const Dataset& d, EbccOptions opt = {}) {
  opt.subtypes = 1;
  return ebcc_fit(d, opt);
}

}  // namespace fable
