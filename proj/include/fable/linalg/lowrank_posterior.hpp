#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>

#include "fable/error.hpp"
#include "fable/linalg/kernel.hpp"
#include "fable/linalg/lanczos.hpp"

namespace fable {

/// Probe for the Lanczos iteration: the all-ones direction with a small
/// seeded perturbation so that no eigendirection is missed by symmetry.
inline Eigen::VectorXd default_probe(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = 1.0 + jitter(rng);
  return b / b.norm();
}

/// Approximation of Sigma_hat = (Sigma^{-1} + diag(omega))^{-1}.
///
/// Computed as Sigma - Sigma E (I + E G E)^{-1} E Sigma with
/// E = diag(sqrt(omega / (1 + omega * d))), where Sigma = G + diag(d). The
/// inner inverse comes from a rank-k Lanczos factorization Q T Q^T of
/// I + E G E, inverted as I - Q (I - T^{-1}) Q^T. Sigma is never inverted.
///
/// Holds a reference to the prior; the prior must outlive this object.
class LowRankPosterior {
 public:
  LowRankPosterior(const KernelMatrix& prior, const Eigen::Ref<const Eigen::VectorXd>& omega, Eigen::Index rank,
                   std::uint64_t probe_seed = 0)
      : prior_(prior) {
    const auto n = prior.size();
    if (omega.size() != n) throw std::invalid_argument("lowrank_posterior: omega length mismatch");
    if (rank < 1) throw std::invalid_argument("lowrank_posterior: rank must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(omega(i))) throw NumericalError("lowrank_posterior: omega is not finite");
      if (omega(i) < 0.0) throw std::invalid_argument("lowrank_posterior: omega must be nonnegative");
    }

    const Eigen::ArrayXd dg = 1.0 + omega.array() * prior.diag_part().array();
    scale_ = (omega.array() / dg).sqrt().matrix();

    // diag(Sigma_hat) = diag(Sigma) - diag(Sigma E^2 Sigma) + diag(P M P^T), P = Sigma E Q
    diagonal_ = prior.diagonal();
    if (scale_.isZero(0.0)) return;
    diagonal_ -= prior.weighted_square_diagonal(scale_.array().square().matrix());

    const Eigen::VectorXd& e = scale_;
    auto matvec = [&](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& y) {
      const Eigen::VectorXd ex = e.cwiseProduct(x);
      y = x + e.cwiseProduct(prior.apply_structured(ex));
    };
    const auto k = std::min(rank, n);
    const LanczosFactors f = lanczos(matvec, default_probe(n, probe_seed), k);
    q_ = f.q;

    const Eigen::MatrixXd t = f.t();
    Eigen::LLT<Eigen::MatrixXd> llt(t);
    if (llt.info() != Eigen::Success) throw NumericalError("lowrank_posterior: tridiagonal factor not SPD");
    middle_ = Eigen::MatrixXd::Identity(t.rows(), t.cols()) - llt.solve(Eigen::MatrixXd::Identity(t.rows(), t.cols()));

    const Eigen::MatrixXd p = prior.apply_block(e.asDiagonal() * q_);
    diagonal_ += ((p * middle_).array() * p.array()).rowwise().sum().matrix();
    diagonal_ = diagonal_.cwiseMax(0.0);
    if (!diagonal_.allFinite()) throw NumericalError("lowrank_posterior: non-finite diagonal");
  }

  LowRankPosterior(KernelMatrix&&, const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Index, std::uint64_t = 0) = delete;

  Eigen::Index size() const { return prior_.get().size(); }
  Eigen::Index rank() const { return q_.cols(); }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }

  /// Sigma_hat v.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    const KernelMatrix& prior = prior_.get();
    Eigen::VectorXd sv = prior.apply(v);
    if (q_.cols() == 0) return sv;
    const Eigen::VectorXd y = scale_.cwiseProduct(sv);
    // (I - Q M Q^T) y
    const Eigen::VectorXd inner = y - q_ * (middle_ * (q_.transpose() * y));
    return sv - prior.apply(Eigen::VectorXd(scale_.cwiseProduct(inner)));
  }

  Eigen::MatrixXd to_dense() const {
    const auto n = size();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) = apply(Eigen::VectorXd::Unit(n, j));
    return out;
  }

 private:
  std::reference_wrapper<const KernelMatrix> prior_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd middle_;
  Eigen::VectorXd diagonal_;
};

inline LowRankPosterior lowrank_posterior(const KernelMatrix& prior, const Eigen::Ref<const Eigen::VectorXd>& omega,
                                          Eigen::Index rank, std::uint64_t probe_seed = 0) {
  return LowRankPosterior(prior, omega, rank, probe_seed);
}

LowRankPosterior lowrank_posterior(KernelMatrix&&, const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Index,
                                   std::uint64_t = 0) = delete;

}  // namespace fable
