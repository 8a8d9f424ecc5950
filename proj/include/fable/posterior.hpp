#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace fable {

/// Per-item class distribution q(z_i = k) with hard predictions.
struct Posterior {
  Eigen::MatrixXd probs;  ///< N x K, rows sum to one
  std::vector<int> predictions;
  std::size_t n_iters = 0;
  bool converged = true;
  std::vector<double> elbo_trace;   ///< objective per sweep, when the method defines one
  std::vector<double> delta_trace;  ///< max |change in q(z)| per sweep
};

/// Lowest class index attaining the row maximum.
inline std::vector<int> argmax_rows(const Eigen::MatrixXd& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.cols(); ++k) {
      if (probs(i, k) > probs(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

inline Posterior make_posterior(Eigen::MatrixXd probs) {
  Posterior p;
  p.predictions = argmax_rows(probs);
  p.probs = std::move(probs);
  return p;
}

}  // namespace fable
