#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace fable {

/// Symmetric PSD prior covariance stored as a structured part plus a diagonal:
///
///   Sigma = G + diag(d),  G = U U^T (low-rank form) or G dense.
///
/// The cosine kernel of N items in D < N dimensions is kept in low-rank form,
/// so products cost O(N D) and nothing N x N is ever allocated.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  static KernelMatrix dense(Eigen::MatrixXd gram, Eigen::VectorXd diag_part, double jitter = 0.0) {
    if (gram.rows() != gram.cols()) throw std::invalid_argument("KernelMatrix: dense part must be square");
    if (diag_part.size() != gram.rows()) throw std::invalid_argument("KernelMatrix: diagonal length mismatch");
    KernelMatrix k;
    k.low_rank_ = false;
    k.structured_ = std::move(gram);
    k.diag_part_ = std::move(diag_part);
    k.jitter_ = jitter;
    return k;
  }

  static KernelMatrix dense(Eigen::MatrixXd gram) {
    const auto n = gram.rows();
    return dense(std::move(gram), Eigen::VectorXd::Zero(n));
  }

  static KernelMatrix low_rank(Eigen::MatrixXd factor, Eigen::VectorXd diag_part, double jitter = 0.0) {
    if (diag_part.size() != factor.rows()) throw std::invalid_argument("KernelMatrix: diagonal length mismatch");
    KernelMatrix k;
    k.low_rank_ = true;
    k.structured_ = std::move(factor);
    k.diag_part_ = std::move(diag_part);
    k.jitter_ = jitter;
    return k;
  }

  Eigen::Index size() const { return structured_.rows(); }
  bool is_low_rank() const { return low_rank_; }
  double jitter() const { return jitter_; }
  const Eigen::VectorXd& diag_part() const { return diag_part_; }
  /// U for the low-rank form, G for the dense form.
  const Eigen::MatrixXd& structured() const { return structured_; }

  /// G x (structured part only).
  Eigen::MatrixXd apply_structured(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    if (low_rank_) return structured_ * (structured_.transpose() * x);
    return structured_ * x;
  }

  Eigen::MatrixXd apply_block(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    Eigen::MatrixXd y = apply_structured(x);
    y += diag_part_.asDiagonal() * x;
    return y;
  }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd y = low_rank_ ? Eigen::VectorXd(structured_ * (structured_.transpose() * x))
                                  : Eigen::VectorXd(structured_ * x);
    y.array() += diag_part_.array() * x.array();
    return y;
  }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    double v = low_rank_ ? structured_.row(i).dot(structured_.row(j)) : structured_(i, j);
    if (i == j) v += diag_part_(i);
    return v;
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d = low_rank_ ? Eigen::VectorXd(structured_.rowwise().squaredNorm())
                                  : Eigen::VectorXd(structured_.diagonal());
    return d + diag_part_;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd s = low_rank_ ? Eigen::MatrixXd(structured_ * structured_.transpose()) : structured_;
    s.diagonal() += diag_part_;
    return s;
  }

  /// diag(Sigma W Sigma) for W = diag(w).
  Eigen::VectorXd weighted_square_diagonal(const Eigen::Ref<const Eigen::VectorXd>& w) const {
    const auto n = size();
    Eigen::VectorXd out(n);
    if (low_rank_) {
      const Eigen::MatrixXd inner = structured_.transpose() * w.asDiagonal() * structured_;
      const Eigen::MatrixXd projected = structured_ * inner;
      out = (projected.array() * structured_.array()).rowwise().sum();
      const Eigen::VectorXd g_diag = structured_.rowwise().squaredNorm();
      out.array() += (2.0 * g_diag.array() + diag_part_.array()) * diag_part_.array() * w.array();
    } else {
      out = (structured_.array().square().matrix() * w);
      out.array() += (2.0 * structured_.diagonal().array() + diag_part_.array()) * diag_part_.array() * w.array();
    }
    return out;
  }

 private:
  bool low_rank_ = false;
  Eigen::MatrixXd structured_;
  Eigen::VectorXd diag_part_;
  double jitter_ = 0.0;
};

/// Pairwise cosine similarity of feature rows plus `jitter` on the diagonal.
/// Zero rows are similar only to themselves (similarity 1).
inline KernelMatrix cosine_kernel(const Eigen::Ref<const Eigen::MatrixXd>& features, double jitter = 1e-4) {
  if (features.rows() < 1) throw std::invalid_argument("cosine_kernel: no rows");
  if (jitter < 0.0) throw std::invalid_argument("cosine_kernel: jitter must be nonnegative");
  const auto n = features.rows();
  Eigen::MatrixXd unit = features;
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, jitter);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = features.row(i).norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      unit.row(i) /= norm;
    } else {
      unit.row(i).setZero();
      diag(i) += 1.0;
    }
  }
  if (features.cols() >= n) {
    Eigen::MatrixXd gram = unit * unit.transpose();
    return KernelMatrix::dense(std::move(gram), std::move(diag), jitter);
  }
  return KernelMatrix::low_rank(std::move(unit), std::move(diag), jitter);
}

}  // namespace fable
