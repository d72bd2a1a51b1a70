#pragma once

// Union-of-independent-subspaces benchmark generator with per-point Gaussian
// noise and a controllable fraction of heavily corrupted outlier columns.
//
// Noise scale: for a clean point p the added noise has i.i.d. entries of
// variance v / m with v = factor * |p|_2, so the expected squared norm of the
// noise vector is v.

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "subseg/clustering.hpp"

namespace subseg {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child seed from a parent seed and a path of keys.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (auto key : keys) h = mix64(h ^ mix64(key));
  return h;
}

struct SyntheticSpec {
  int k = 5;
  int subspace_dim = 4;
  int ambient_dim = 100;
  int points_per_subspace = 20;
  double noise_variance_factor = 0.1;
  double outlier_fraction = 0.0;
  double outlier_variance_factor = 1.0;
  std::uint64_t seed = 0;

  int samples() const { return k * points_per_subspace; }

  void validate() const {
    if (k < 1) fail(ErrorKind::InvalidInput, "k must be at least 1");
    if (subspace_dim < 1) fail(ErrorKind::InvalidInput, "subspace_dim must be at least 1");
    if (ambient_dim < 1) fail(ErrorKind::InvalidInput, "ambient_dim must be at least 1");
    if (points_per_subspace < 1)
      fail(ErrorKind::InvalidInput, "points_per_subspace must be at least 1");
    if (static_cast<long long>(k) * subspace_dim > ambient_dim)
      fail(ErrorKind::InvalidInput, "k * subspace_dim must not exceed ambient_dim");
    if (!(noise_variance_factor >= 0.0) || !std::isfinite(noise_variance_factor))
      fail(ErrorKind::InvalidInput, "noise_variance_factor must be nonnegative");
    if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0))
      fail(ErrorKind::InvalidInput, "outlier_fraction must lie in [0, 1]");
    if (!(outlier_variance_factor >= 0.0) || !std::isfinite(outlier_variance_factor))
      fail(ErrorKind::InvalidInput, "outlier_variance_factor must be nonnegative");
  }

  /// round-half-to-even of outlier_fraction * n
  int outlier_count() const {
    return static_cast<int>(std::nearbyint(outlier_fraction * samples()));
  }
};

struct GroundTruth {
  Labels labels;
  std::vector<bool> outlier_mask;
  Matrix clean;
  std::vector<Matrix> bases;  // orthonormal m x r basis per subspace
};

struct SyntheticData {
  Matrix X;
  GroundTruth truth;
};

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  return M;
}

/// Orthonormal basis of the column span of a random Gaussian rows x cols
/// matrix (full column rank with probability one).
inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Samples are grouped by subspace: columns [i*d, (i+1)*d) belong to
/// subspace i. Same spec (including seed) gives bit-identical output.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int m = spec.ambient_dim, r = spec.subspace_dim, d = spec.points_per_subspace;
  const int n = spec.samples();

  SyntheticData out;
  auto& gt = out.truth;
  gt.clean.resize(m, n);
  gt.labels.resize(n);
  gt.outlier_mask.assign(n, false);
  for (int i = 0; i < spec.k; ++i) {
    gt.bases.push_back(random_orthonormal(m, r, rng));
    gt.clean.middleCols(i * d, d) = gt.bases.back() * gaussian_matrix(r, d, rng);
    for (int j = 0; j < d; ++j) gt.labels[i * d + j] = i;
  }

  out.X = gt.clean;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto add_noise = [&](int col, double factor) {
    const double per_entry_sd = std::sqrt(factor * gt.clean.col(col).norm() / m);
    for (int row = 0; row < m; ++row) out.X(row, col) += per_entry_sd * normal(rng);
  };
  if (spec.noise_variance_factor > 0.0)
    for (int j = 0; j < n; ++j) add_noise(j, spec.noise_variance_factor);

  const int n_out = spec.outlier_count();
  if (n_out > 0) {
    // partial Fisher-Yates: the first n_out slots are a uniform sample
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_out; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    for (int i = 0; i < n_out; ++i) {
      gt.outlier_mask[idx[i]] = true;
      if (spec.outlier_variance_factor > 0.0) add_noise(idx[i], spec.outlier_variance_factor);
    }
  }
  return out;
}

}  // namespace subseg
