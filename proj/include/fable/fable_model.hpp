#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "fable/baselines.hpp"
#include "fable/dataset.hpp"
#include "fable/ebcc.hpp"
#include "fable/error.hpp"
#include "fable/linalg/kernel.hpp"
#include "fable/linalg/lowrank_posterior.hpp"
#include "fable/linalg/special.hpp"
#include "fable/mixture.hpp"
#include "fable/posterior.hpp"

// Feature-aware label model: the subtype mixture coefficients pi_ikm are
// item-specific and driven by a Gaussian process over instance features.
// The logistic-softmax link is made conjugate with three auxiliary variables
// (lambda_i, Poisson upsilon_ikm, Polya-Gamma omega_ikm), so every factor of
// the mean-field posterior has a closed-form coordinate update:
//
//   q(lambda_i)          = Ga(a_i, b_i)
//   q(omega, upsilon)    = PG(omega | upsilon, c) Po(upsilon | gamma)
//   q(f_km)              = N(m_hat_km, Sigma_hat_km)
//   q(pi_ikm)            = Ga(phi_ikm, xi_ikm)
//   q(z_i, g_i)          = rho_i
//   q(tau), q(v)         as in the plain mixture model

namespace fable {

/// Form of the Poisson / lambda augmentation updates.
///   kStated:     gamma = exp(digamma(a) - m/2) / (b cosh(c/2)),   b = K
///   kNormalized: gamma = exp(digamma(a) - m/2) / (2 b cosh(c/2)), b = K M
/// kNormalized keeps the 2^-upsilon factor of the Polya-Gamma identity and
/// counts all K M logistic terms in the normalizer. With kStated, sum(gamma)
/// can exceed a, so a grows geometrically across sweeps.
enum class AugmentationForm { kNormalized, kStated };

struct FableConfig {
  int subtypes = 3;                   ///< M
  double correct_count = 1000.0;      ///< C in beta_kk = N * M * C
  std::optional<double> beta_diag;    ///< overrides N * M * C when set
  double beta_offdiag = 1.0;
  double kernel_jitter = 1e-4;
  Eigen::Index lanczos_rank = 100;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double xi_floor = 0.1;              ///< lower clamp for the Gamma rate xi
  AugmentationForm augmentation = AugmentationForm::kNormalized;

  void check() const {
    if (subtypes < 1) throw std::invalid_argument("fable: subtypes must be >= 1");
    if (correct_count < 1.0) throw std::invalid_argument("fable: correct_count must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("fable: tol must be positive");
    if (lanczos_rank < 1) throw std::invalid_argument("fable: lanczos_rank must be >= 1");
    if (!(xi_floor > 0.0)) throw std::invalid_argument("fable: xi_floor must be positive");
    if (kernel_jitter < 0.0) throw std::invalid_argument("fable: kernel_jitter must be nonnegative");
  }
};

/// Variational parameters. All N x (K M) matrices use column k * M + m.
struct FableState {
  int num_classes = 0;
  int num_subtypes = 0;

  Eigen::MatrixXd rho;         ///< q(z_i = k, g_i = m)
  Eigen::VectorXd nu;          ///< q(tau) = Dir(nu)
  ConfusionTensor mu;          ///< q(v_jkm) = Dir(mu_jkm)
  Eigen::MatrixXd phi;         ///< q(pi) Gamma shape
  Eigen::MatrixXd xi;          ///< q(pi) Gamma rate
  Eigen::MatrixXd m_hat;       ///< q(f) means
  Eigen::MatrixXd sigma_diag;  ///< diag(Sigma_hat_km), column per (k, m)
  Eigen::MatrixXd c;           ///< Polya-Gamma tilt
  Eigen::MatrixXd gamma;       ///< Poisson rate of upsilon
  Eigen::VectorXd a;           ///< q(lambda) shape
  Eigen::VectorXd b;           ///< q(lambda) rate

  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;
  KernelMatrix kernel;

  Eigen::Index lanczos_rank = 100;
  double xi_floor = 1e-6;
  std::uint64_t probe_seed = 0;
  std::size_t xi_clamps = 0;  ///< xi entries clamped in the latest pi update
  AugmentationForm augmentation = AugmentationForm::kNormalized;

  Eigen::MatrixXd class_probs() const { return class_marginals(rho, num_classes, num_subtypes); }
  Eigen::MatrixXd expected_pi() const { return phi.cwiseQuotient(xi); }
};

/// Global logistic-softmax: sigma(f_km) / sum_{k', m'} sigma(f_k'm').
inline Eigen::MatrixXd logistic_softmax(const Eigen::MatrixXd& f) {
  Eigen::MatrixXd s = f.unaryExpr([](double v) { return sigmoid(v); });
  const double total = s.sum();
  if (!(total > 0.0)) return Eigen::MatrixXd::Constant(f.rows(), f.cols(), 1.0 / static_cast<double>(f.size()));
  return s / total;
}

/// E[log pi_ikm] = digamma(phi_ikm) - log xi_ikm.
inline Eigen::MatrixXd fable_expected_log_pi(const FableState& s) {
  Eigen::MatrixXd out(s.phi.rows(), s.phi.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index r = 0; r < out.cols(); ++r) {
      const double rate = s.xi(i, r);
      if (!(rate > 0.0)) throw NumericalError("fable: nonpositive xi in assignment update");
      out(i, r) = digamma(s.phi(i, r)) - std::log(rate);
    }
  }
  return out;
}

inline void fable_update_assignments(FableState& s, const Dataset& d) {
  s.rho = assignment_update(d, dirichlet_log_expectation(s.nu), fable_expected_log_pi(s),
                            expected_log_confusion(s.mu), s.num_subtypes);
}

inline void fable_update_tau(FableState& s) { s.nu = tau_update(s.rho, s.alpha, s.num_subtypes); }

inline void fable_update_confusion(FableState& s, const Dataset& d) {
  s.mu = confusion_update(d, s.rho, s.beta, s.num_subtypes);
}

/// phi = rho + 1, xi = log 2 - m_hat / 2 clamped below at xi_floor.
inline void fable_update_pi(FableState& s) {
  s.phi = s.rho.array() + 1.0;
  s.xi = (std::log(2.0) - 0.5 * s.m_hat.array()).matrix();
  s.xi_clamps = 0;
  for (Eigen::Index i = 0; i < s.xi.size(); ++i) {
    if (!(s.xi.data()[i] >= s.xi_floor)) {
      s.xi.data()[i] = s.xi_floor;
      ++s.xi_clamps;
    }
  }
}

/// Gaussian-process factor for each (k, m):
///   E[omega]  = PG mean with shape E[pi] + gamma and tilt c
///   Sigma_hat = (Sigma^{-1} + diag(E[omega]))^{-1}   (Lanczos, no inverse of Sigma)
///   m_hat     = Sigma_hat (E[pi] - gamma) / 2
inline void fable_update_gp(FableState& s) {
  const auto n = s.rho.rows();
  const Eigen::MatrixXd e_pi = s.expected_pi();
  Eigen::VectorXd omega(n);
  for (Eigen::Index r = 0; r < s.rho.cols(); ++r) {
    for (Eigen::Index i = 0; i < n; ++i) omega(i) = pg_mean(e_pi(i, r) + s.gamma(i, r), s.c(i, r));
    const LowRankPosterior post(s.kernel, omega, s.lanczos_rank, s.probe_seed + static_cast<std::uint64_t>(r));
    const Eigen::VectorXd rhs = e_pi.col(r) - s.gamma.col(r);
    s.m_hat.col(r) = 0.5 * post.apply(rhs);
    s.sigma_diag.col(r) = post.diagonal();
  }
  if (!s.m_hat.allFinite()) throw NumericalError("fable: non-finite GP mean");
}

/// c = sqrt(m_hat^2 + diag Sigma_hat);
/// gamma = exp(digamma(a_i) - m_hat / 2) / (b_i cosh(c / 2)), evaluated in log space,
/// with an extra 1/2 under AugmentationForm::kNormalized.
inline void fable_update_augmentation(FableState& s) {
  const auto n = s.rho.rows();
  s.c = (s.m_hat.array().square() + s.sigma_diag.array()).sqrt().matrix();
  const double half = s.augmentation == AugmentationForm::kNormalized ? std::log(2.0) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double base = digamma(s.a(i)) - std::log(s.b(i)) - half;
    for (Eigen::Index r = 0; r < s.rho.cols(); ++r) {
      const double log_gamma = base - 0.5 * s.m_hat(i, r) - log_cosh(0.5 * s.c(i, r));
      s.gamma(i, r) = std::exp(std::min(log_gamma, 700.0));
    }
  }
}

/// Rate of q(lambda): K, or K M under AugmentationForm::kNormalized.
inline double lambda_rate(const FableState& s) {
  const double k = static_cast<double>(s.num_classes);
  return s.augmentation == AugmentationForm::kNormalized ? k * s.num_subtypes : k;
}

/// a_i = sum_km gamma_ikm + 1, b_i = lambda_rate.
inline void fable_update_lambda(FableState& s) {
  s.a = (s.gamma.rowwise().sum().array() + 1.0).matrix();
  s.b.setConstant(s.rho.rows(), lambda_rate(s));
}

/// Initial state:
///   rho   majority vote times Dir(1_M) draws
///   Sigma cosine similarity of the features (also the initial Sigma_hat)
///   m_hat, a ~ Uniform(0, 1); b = lambda_rate
///   alpha = majority-vote class totals; beta_kk = N M C, beta_kk' = beta_offdiag
/// followed by the tau, confusion, pi and augmentation updates so that the
/// first sweep has every quantity it reads.
inline FableState fable_init(const Dataset& d, const FableConfig& cfg) {
  cfg.check();
  validate(d);
  const auto n = d.lf_labels.rows();
  const int classes = d.num_classes;
  const int subtypes = cfg.subtypes;
  const Eigen::Index width = static_cast<Eigen::Index>(classes) * subtypes;

  FableState s;
  s.num_classes = classes;
  s.num_subtypes = subtypes;
  s.lanczos_rank = cfg.lanczos_rank;
  s.xi_floor = cfg.xi_floor;
  s.probe_seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  s.augmentation = cfg.augmentation;

  std::mt19937_64 rng(cfg.seed);
  const Eigen::MatrixXd q0 = majority_vote(d).probs;
  s.rho = init_assignments(q0, subtypes, rng);
  s.kernel = cosine_kernel(d.features, cfg.kernel_jitter);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  s.m_hat.resize(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < width; ++r) s.m_hat(i, r) = unit(rng);
  }
  s.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.a(i) = unit(rng);
  s.b = Eigen::VectorXd::Constant(n, lambda_rate(s));
  s.sigma_diag = s.kernel.diagonal().replicate(1, width);

  s.alpha = Eigen::VectorXd(q0.colwise().sum().transpose()).cwiseMax(1e-6);
  const double diag = cfg.beta_diag ? *cfg.beta_diag
                                    : static_cast<double>(n) * static_cast<double>(subtypes) * cfg.correct_count;
  s.beta = make_beta(classes, diag, cfg.beta_offdiag);

  s.c.resize(n, width);
  s.gamma.resize(n, width);
  fable_update_tau(s);
  fable_update_confusion(s, d);
  fable_update_pi(s);
  fable_update_augmentation(s);
  return s;
}

/// assignments -> tau -> confusion -> pi -> GP -> augmentation -> lambda
inline void fable_sweep(FableState& s, const Dataset& d) {
  fable_update_assignments(s, d);
  fable_update_tau(s);
  fable_update_confusion(s, d);
  fable_update_pi(s);
  fable_update_gp(s);
  fable_update_augmentation(s);
  fable_update_lambda(s);
}

inline Posterior fable_fit(const Dataset& d, const FableConfig& cfg = {}) {
  FableState s = fable_init(d, cfg);
  Posterior out;
  out.converged = false;
  Eigen::MatrixXd q = s.class_probs();
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    fable_sweep(s, d);
    Eigen::MatrixXd next = s.class_probs();
    if (!next.allFinite()) throw NumericalError("fable: non-finite class posterior");
    const double delta = (next - q).cwiseAbs().maxCoeff();
    out.delta_trace.push_back(delta);
    q = std::move(next);
    out.n_iters = iter + 1;
    if (delta < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.predictions = argmax_rows(q);
  out.probs = std::move(q);
  return out;
}

}  // namespace fable
