#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fable/metrics.hpp"
#include "fable/synthetic.hpp"

using namespace fable;

namespace {

// Textbook dCor: full N x N distance matrices, explicit double centering.
double dcor_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const auto n = x.rows();
  auto centred = [n](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (m.row(i) - m.row(j)).norm();
    const Eigen::VectorXd rows = d.rowwise().mean();
    const Eigen::RowVectorXd cols = d.colwise().mean();
    const double all = d.mean();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) d(i, j) += all - rows(i) - cols(j);
    return d;
  };
  const Eigen::MatrixXd a = centred(x), b = centred(y);
  const double v2 = (a.array() * b.array()).mean();
  const double va = (a.array() * a.array()).mean();
  const double vb = (b.array() * b.array()).mean();
  if (va <= 0 || vb <= 0) return 0.0;
  return std::sqrt(std::max(v2, 0.0) / std::sqrt(va * vb));
}

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

}  // namespace

TEST(Accuracy, ThreeOfFour) {
  const std::vector<int> pred{0, 1, 2, 1}, gold{0, 1, 2, 2};
  EXPECT_DOUBLE_EQ(accuracy(pred, gold), 0.75);
}

TEST(Accuracy, LengthMismatchThrows) {
  const std::vector<int> pred{0, 1}, gold{0};
  EXPECT_THROW(accuracy(pred, gold), std::invalid_argument);
  EXPECT_THROW(f1_binary(pred, gold), std::invalid_argument);
}

TEST(F1, HalfPrecisionHalfRecall) {
  const std::vector<int> pred{1, 1, 0, 0}, gold{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(f1_binary(pred, gold, 1), 0.5);
}

TEST(F1, NoPositivesIsZero) {
  const std::vector<int> pred{0, 0}, gold{0, 0};
  EXPECT_DOUBLE_EQ(f1_binary(pred, gold, 1), 0.0);
}

TEST(F1, PositiveClassSelectable) {
  const std::vector<int> pred{0, 0, 1}, gold{0, 1, 1};
  // class 0 as positive: tp=1 fp=1 fn=0 -> p=0.5 r=1 -> 2/3
  EXPECT_NEAR(f1_binary(pred, gold, 0), 2.0 / 3.0, 1e-12);
}

TEST(Evaluate, DefaultMetricByClassCount) {
  EXPECT_EQ(default_metric(2), MetricKind::kF1Binary);
  EXPECT_EQ(default_metric(4), MetricKind::kAccuracy);
}

TEST(DistanceCorrelation, SelfIsOne) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = gaussian(60, 3, rng);
  EXPECT_NEAR(distance_correlation(x, x), 1.0, 1e-12);
}

TEST(DistanceCorrelation, AffineImageIsOne) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = gaussian(50, 1, rng);
  const Eigen::MatrixXd y = (3.0 * x.array() - 7.0).matrix();
  EXPECT_NEAR(distance_correlation(x, y), 1.0, 1e-12);
}

TEST(DistanceCorrelation, IndependentUniformsSmall) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  Eigen::MatrixXd x(2000, 1), y(2000, 1);
  for (Eigen::Index i = 0; i < 2000; ++i) {
    x(i, 0) = u(rng);
    y(i, 0) = u(rng);
  }
  EXPECT_LT(distance_correlation(x, y), 0.08);
}

TEST(DistanceCorrelation, Symmetric) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = gaussian(40, 2, rng), y = gaussian(40, 3, rng);
  EXPECT_NEAR(distance_correlation(x, y), distance_correlation(y, x), 1e-12);
}

TEST(DistanceCorrelation, RigidMotionInvariant) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = gaussian(40, 2, rng);
  Eigen::MatrixXd y = x.col(0).array().square().matrix();
  const double th = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::MatrixXd moved = x * rot.transpose();
  moved.rowwise() += Eigen::RowVector2d(4.0, -2.0);
  EXPECT_NEAR(distance_correlation(x, y), distance_correlation(moved, y), 1e-10);
}

TEST(DistanceCorrelation, MatchesDenseOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd x = gaussian(30 + t, 2, rng);
    Eigen::MatrixXd y = (x.col(0).array() * x.col(1).array()).matrix() + 0.3 * gaussian(30 + t, 1, rng);
    EXPECT_NEAR(distance_correlation(x, y), dcor_oracle(x, y), 1e-10);
  }
}

TEST(DistanceCorrelation, ConstantSideIsZero) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = gaussian(20, 2, rng);
  EXPECT_DOUBLE_EQ(distance_correlation(x, Eigen::MatrixXd::Ones(20, 1)), 0.0);
}

TEST(DistanceCorrelation, RowMismatchThrows) {
  EXPECT_THROW(distance_correlation(Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST(FeatureLfCorrelation, MeanOfPerLfDcor) {
  const Dataset d = generate_synthetic(SyntheticSpec::corners(150, 8));
  double total = 0.0;
  for (Eigen::Index j = 0; j < d.lf_labels.cols(); ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.lf_labels.rows(); ++i)
      if (!is_abstain(d.lf_labels(i, j))) rows.push_back(i);
    if (rows.size() < 2) continue;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 2), r(static_cast<Eigen::Index>(rows.size()), 1);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      x.row(static_cast<Eigen::Index>(t)) = d.features.row(rows[t]);
      r(static_cast<Eigen::Index>(t), 0) = d.lf_labels(rows[t], j) == (*d.gold)[static_cast<std::size_t>(rows[t])];
    }
    total += dcor_oracle(x, r);
  }
  EXPECT_NEAR(feature_lf_correlation(d), total / 8.0, 1e-10);
}

TEST(FeatureLfCorrelation, AlwaysCorrectLfsGiveZero) {
  // every LF is right whenever it votes: R is constant
  Dataset d;
  d.num_classes = 2;
  d.features.resize(4, 1);
  d.features << 0.0, 1.0, 2.0, 5.0;
  d.lf_labels.resize(4, 1);
  d.lf_labels << 0, 1, 1, 0;
  d.gold = std::vector<int>{0, 1, 1, 0};
  EXPECT_DOUBLE_EQ(feature_lf_correlation(d), 0.0);
}

TEST(FeatureLfCorrelation, NeedsGold) {
  Dataset d = generate_synthetic(SyntheticSpec::defaults(20, 1));
  d.gold.reset();
  EXPECT_THROW(feature_lf_correlation(d), DataError);
}

namespace {

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST(Pearson, SmallExample) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 5};
  const auto res = pearson_r(x, y);
  EXPECT_NEAR(res.r, pearson_oracle(x, y), 1e-12);
  // Sxy = 5.5, Sxx = 5, Syy = 8.75
  EXPECT_NEAR(res.r, 5.5 / std::sqrt(43.75), 1e-12);
  EXPECT_NEAR(res.r, 0.8315, 1e-4);
  // two-sided p from t = r sqrt(2 / (1 - r^2)) with 2 dof: p = 1 - |t| / sqrt(2 + t^2)
  const double t = res.r * std::sqrt(2.0 / (1.0 - res.r * res.r));
  EXPECT_NEAR(res.p, 1.0 - t / std::sqrt(2.0 + t * t), 1e-10);
}

TEST(Pearson, PerfectLines) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 6, 8, 10}, down{5, 4, 3, 2, 1};
  EXPECT_NEAR(pearson_r(x, up).r, 1.0, 1e-12);
  EXPECT_NEAR(pearson_r(x, down).r, -1.0, 1e-12);
  EXPECT_NEAR(pearson_r(x, up).p, 0.0, 1e-12);
}

TEST(Pearson, ZeroVarianceThrows) {
  const std::vector<double> x{1, 2, 3}, flat{2, 2, 2};
  EXPECT_THROW(pearson_r(x, flat), NumericalError);
}

TEST(Pearson, TooFewPoints) {
  const std::vector<double> x{1, 2}, y{2, 1};
  EXPECT_THROW(pearson_r(x, y), NumericalError);
}

TEST(Pearson, LengthMismatch) {
  const std::vector<double> x{1, 2, 3}, y{2, 1};
  EXPECT_THROW(pearson_r(x, y), std::invalid_argument);
}
