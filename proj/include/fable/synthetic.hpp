#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fable/dataset.hpp"
#include "fable/error.hpp"

namespace fable {

/// Gaussian-blob dataset with unipolar interval labeling functions.
///
/// Class c draws features from N(class_means[c], diag(class_stds[c]^2)).
/// Labeling function (c, k), stored at column c * dims + k, votes c when
/// |x_k - mean_ck| < psi * std_ck and abstains otherwise.
struct SyntheticSpec {
  int num_classes = 4;
  int dims = 2;
  std::vector<std::vector<double>> class_means;
  std::vector<std::vector<double>> class_stds;
  std::vector<double> psi;
  std::size_t size = 1000;
  std::uint64_t seed = 0;

  std::size_t num_lfs() const { return static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(dims); }

  /// Four classes on a staggered square, means (-3, -1.125), (-1.125, 3),
  /// (1.125, -3), (3, 1.125), so that no two classes share a coordinate
  /// value; per-dimension stds drawn from Uniform(0.8, 1.6) under `seed`;
  /// psi = 1 for every LF.
  static SyntheticSpec defaults(std::size_t size, std::uint64_t seed) {
    return with_means({{-3.0, -1.125}, {-1.125, 3.0}, {1.125, -3.0}, {3.0, 1.125}}, size, seed);
  }

  /// Same, with the class means on the corners (+-3, +-3). Every coordinate
  /// value is shared by two classes, so each LF is right on about half of
  /// the items it covers.
  static SyntheticSpec corners(std::size_t size, std::uint64_t seed) {
    return with_means({{-3.0, -3.0}, {-3.0, 3.0}, {3.0, -3.0}, {3.0, 3.0}}, size, seed);
  }

  static SyntheticSpec with_means(std::vector<std::vector<double>> means, std::size_t size, std::uint64_t seed) {
    SyntheticSpec s;
    s.size = size;
    s.seed = seed;
    s.num_classes = static_cast<int>(means.size());
    s.dims = means.empty() ? 0 : static_cast<int>(means.front().size());
    s.class_means = std::move(means);
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::uniform_real_distribution<double> width(0.8, 1.6);
    s.class_stds.resize(s.class_means.size());
    for (auto& row : s.class_stds) {
      row.resize(static_cast<std::size_t>(s.dims));
      for (auto& v : row) v = width(rng);
    }
    s.psi.assign(s.num_lfs(), 1.0);
    return s;
  }

  /// Redraws every psi from Uniform(lo, hi).
  void sample_psi(double lo, double hi, std::uint64_t psi_seed) {
    if (!(lo > 0.0) || !(hi >= lo)) throw DataError("synthetic spec: psi range must satisfy 0 < lo <= hi");
    std::mt19937_64 rng(psi_seed);
    std::uniform_real_distribution<double> u(lo, hi);
    psi.resize(num_lfs());
    for (auto& p : psi) p = lo == hi ? lo : u(rng);
  }

  void check() const {
    if (num_classes < 2) throw DataError("synthetic spec: num_classes must be >= 2");
    if (dims < 1) throw DataError("synthetic spec: dims must be >= 1");
    if (size < 1) throw DataError("synthetic spec: size must be >= 1");
    if (class_means.size() != static_cast<std::size_t>(num_classes) ||
        class_stds.size() != static_cast<std::size_t>(num_classes)) {
      throw DataError("synthetic spec: need one mean and one std vector per class");
    }
    for (int c = 0; c < num_classes; ++c) {
      if (class_means[c].size() != static_cast<std::size_t>(dims) ||
          class_stds[c].size() != static_cast<std::size_t>(dims)) {
        throw DataError("synthetic spec: mean/std vectors must have length dims");
      }
      for (double s : class_stds[c]) {
        if (!(s > 0.0)) throw DataError("synthetic spec: class stds must be positive");
      }
    }
    if (psi.size() != num_lfs()) {
      throw DataError("synthetic spec: psi must have num_classes * dims entries");
    }
    for (double p : psi) {
      if (!(p > 0.0)) throw DataError("synthetic spec: psi must be positive");
    }
  }
};

/// Class counts with the remainder assigned to the lowest class indices.
inline std::vector<std::size_t> balanced_class_counts(std::size_t n, int k) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), n / static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < n % static_cast<std::size_t>(k); ++c) ++counts[c];
  return counts;
}

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.check();
  const int k = spec.num_classes;
  const auto n = static_cast<Eigen::Index>(spec.size);
  std::mt19937_64 rng(spec.seed);

  std::vector<int> gold;
  gold.reserve(spec.size);
  const auto counts = balanced_class_counts(spec.size, k);
  for (int c = 0; c < k; ++c) gold.insert(gold.end(), counts[static_cast<std::size_t>(c)], c);
  std::shuffle(gold.begin(), gold.end(), rng);

  Dataset d;
  d.name = "synthetic";
  d.num_classes = k;
  d.features.resize(n, spec.dims);
  d.lf_labels.resize(n, static_cast<Eigen::Index>(spec.num_lfs()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& mean = spec.class_means[static_cast<std::size_t>(gold[static_cast<std::size_t>(i)])];
    const auto& sd = spec.class_stds[static_cast<std::size_t>(gold[static_cast<std::size_t>(i)])];
    for (int dim = 0; dim < spec.dims; ++dim) d.features(i, dim) = mean[dim] + sd[dim] * normal(rng);
  }

  for (int c = 0; c < k; ++c) {
    for (int dim = 0; dim < spec.dims; ++dim) {
      const auto j = static_cast<Eigen::Index>(c * spec.dims + dim);
      const double half_width = spec.psi[static_cast<std::size_t>(j)] * spec.class_stds[c][dim];
      const double lo = spec.class_means[c][dim] - half_width;
      const double hi = spec.class_means[c][dim] + half_width;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x = d.features(i, dim);
        d.lf_labels(i, j) = (lo < x && x < hi) ? c : kAbstain;
      }
    }
  }
  d.gold = std::move(gold);
  validate(d);
  return d;
}

}  // namespace fable
