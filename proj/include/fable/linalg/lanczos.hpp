#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fable/error.hpp"

namespace fable {

struct LanczosOptions {
  /// Stop when the new residual norm falls below this fraction of the running
  /// estimate of ||A||: the Krylov subspace is then invariant.
  double breakdown_tol = 1e-10;
};

/// A Q ~= Q T on the Krylov subspace span{b, Ab, ..., A^{k-1} b}.
struct LanczosFactors {
  Eigen::MatrixXd q;      ///< N x rank, orthonormal columns
  Eigen::VectorXd alpha;  ///< diagonal of T
  Eigen::VectorXd beta;   ///< off-diagonal of T (rank - 1 entries)
  double residual = 0.0;  ///< norm of the first discarded Lanczos vector

  Eigen::Index rank() const { return alpha.size(); }

  Eigen::MatrixXd t() const {
    const auto k = rank();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
    out.diagonal() = alpha;
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      out(i, i + 1) = beta(i);
      out(i + 1, i) = beta(i);
    }
    return out;
  }
};

/// Symmetric Lanczos tridiagonalization with full reorthogonalization.
///
/// `matvec(x, y)` must write A x into y for a symmetric A. Runs at most `k`
/// steps; fewer when the residual underflows (invariant subspace reached).
template <typename MatVec>
LanczosFactors lanczos(MatVec&& matvec, const Eigen::Ref<const Eigen::VectorXd>& probe, Eigen::Index k,
                       const LanczosOptions& options = {}) {
  const auto n = probe.size();
  if (k < 1 || k > n) throw std::invalid_argument("lanczos: rank must lie in [1, N]");
  const double probe_norm = probe.norm();
  if (!(probe_norm > 0.0)) throw std::invalid_argument("lanczos: probe vector must be nonzero");
  if (!std::isfinite(probe_norm)) throw NumericalError("lanczos: probe vector is not finite");

  Eigen::MatrixXd q(n, k);
  Eigen::VectorXd alpha(k), beta(k);
  Eigen::VectorXd w(n), coeffs(k);
  q.col(0) = probe / probe_norm;

  double scale = 0.0;
  double residual = 0.0;
  Eigen::Index steps = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    matvec(q.col(j), w);
    if (!w.allFinite()) throw NumericalError("lanczos: operator produced non-finite values");
    alpha(j) = q.col(j).dot(w);
    w -= alpha(j) * q.col(j);
    if (j > 0) w -= beta(j - 1) * q.col(j - 1);
    // two passes of classical Gram-Schmidt against every previous vector
    for (int pass = 0; pass < 2; ++pass) {
      coeffs.head(j + 1).noalias() = q.leftCols(j + 1).transpose() * w;
      w.noalias() -= q.leftCols(j + 1) * coeffs.head(j + 1);
    }
    steps = j + 1;
    beta(j) = w.norm();
    scale = std::max({scale, std::abs(alpha(j)), beta(j)});
    residual = beta(j);
    if (j + 1 == k) break;
    if (beta(j) <= options.breakdown_tol * scale) break;
    q.col(j + 1) = w / beta(j);
  }

  LanczosFactors out;
  out.q = q.leftCols(steps);
  out.alpha = alpha.head(steps);
  out.beta = beta.head(std::max<Eigen::Index>(steps - 1, 0));
  out.residual = residual;
  return out;
}

}  // namespace fable
