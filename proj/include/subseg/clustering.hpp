#pragma once

// Affinities from representation matrices, normalized spectral clustering and
// permutation-invariant segmentation accuracy.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "subseg/linalg.hpp"

namespace subseg {

/// Symmetric, nonnegative similarity matrix.
struct Affinity {
  Matrix W;
};

/// Cluster id per sample, ids in [0, k).
using Labels = std::vector<int>;

/// |Z| + |Z'| for a general (possibly asymmetric) representation.
inline Affinity affinity_lrr(const Matrix& Z) {
  require_finite(Z, "affinity_lrr input");
  if (Z.rows() != Z.cols()) fail(ErrorKind::InvalidInput, "representation matrix must be square");
  return {Z.cwiseAbs() + Z.transpose().cwiseAbs()};
}

/// |Z| for a representation that is already symmetric (a SIM). Asymmetry up
/// to `sym_tol` is averaged away first.
inline Affinity affinity_rsi(const Matrix& Z, double sym_tol = 1e-6) {
  require_finite(Z, "affinity_rsi input");
  if (Z.rows() != Z.cols()) fail(ErrorKind::InvalidInput, "representation matrix must be square");
  if (max_abs(Z - Z.transpose()) > sym_tol)
    fail(ErrorKind::InvalidInput, "affinity_rsi requires a symmetric representation");
  return {(0.5 * (Z + Z.transpose())).cwiseAbs()};
}

struct KMeansResult {
  Labels labels;
  double inertia = 0.0;
};

namespace detail {

inline Eigen::Index nearest_center(const Matrix& points, Eigen::Index i, const Matrix& centers,
                                   double* dist_out = nullptr) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (points.row(i) - centers.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

// k-means++ seeding; rows of `points` are observations.
inline Matrix kmeanspp_seed(const Matrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

// Lloyd iterations from the given centers. An emptied cluster keeps its
// previous center.
inline KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iter = 300) {
  const Eigen::Index n = points.rows();
  const int k = static_cast<int>(centers.rows());
  Labels labels(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest_center(points, i, centers));
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
  }
  KMeansResult out;
  out.labels = std::move(labels);
  for (Eigen::Index i = 0; i < n; ++i)
    out.inertia += (points.row(i) - centers.row(out.labels[i])).squaredNorm();
  return out;
}

}  // namespace detail

/// k-means on the rows of `points`: k-means++ seeding, `restarts` runs drawn
/// from one seeded stream, lowest within-cluster sum of squares wins (ties go
/// to the earliest restart).
inline KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 20) {
  if (k < 1 || k > points.rows())
    fail(ErrorKind::InvalidInput, "k-means needs 1 <= k <= number of points");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto run = detail::lloyd(points, detail::kmeanspp_seed(points, k, rng));
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

/// Normalized spectral clustering: L = I - D^-1/2 W D^-1/2, bottom-k
/// eigenvectors, unit-length rows, then seeded k-means. Isolated nodes get a
/// unit self-loop so the normalization is defined.
inline Labels spectral_cluster(const Affinity& affinity, int k, std::uint64_t seed) {
  const Matrix& W0 = affinity.W;
  const Eigen::Index n = W0.rows();
  if (W0.cols() != n) fail(ErrorKind::InvalidInput, "affinity must be square");
  if (k < 1) fail(ErrorKind::InvalidInput, "cluster count must be at least 1");
  if (k > n) fail(ErrorKind::InvalidInput, "cluster count exceeds number of samples");
  require_finite(W0, "affinity");
  if (W0.size() > 0 && W0.minCoeff() < 0.0)
    fail(ErrorKind::InvalidInput, "affinity entries must be nonnegative");

  Matrix W = W0;
  Vector degree = W.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree(i) <= 0.0) {
      W(i, i) = 1.0;
      degree(i) = 1.0;
    }
  }
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Matrix L = -(inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal());
  L.diagonal().array() += 1.0;
  L = 0.5 * (L + L.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
  if (eig.info() != Eigen::Success)
    fail(ErrorKind::DecompositionFailure, "Laplacian eigendecomposition failed");
  Matrix embed = eig.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }
  return kmeans(embed, k, seed).labels;
}

/// Exact minimum-cost assignment (Hungarian / Kuhn-Munkres, O(n^3)) on a
/// square cost matrix. Returns assignment[row] = column.
inline std::vector<int> hungarian_min(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) fail(ErrorKind::InvalidInput, "assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Confusion counts: rows index predicted ids, columns true ids, padded to
/// a square of side max id + 1.
inline Matrix confusion_matrix(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size())
    fail(ErrorKind::InvalidInput, "label vectors differ in length");
  int k = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) fail(ErrorKind::InvalidInput, "labels must be nonnegative");
    k = std::max({k, pred[i] + 1, truth[i] + 1});
  }
  Matrix counts = Matrix::Zero(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) counts(pred[i], truth[i]) += 1.0;
  return counts;
}

/// Best fraction of agreeing labels over all bijective relabelings of `pred`.
inline double segmentation_accuracy(const Labels& pred, const Labels& truth) {
  const Matrix counts = confusion_matrix(pred, truth);
  if (pred.empty()) return 1.0;
  const auto match = hungarian_min(-counts);
  double agree = 0.0;
  for (int r = 0; r < static_cast<int>(match.size()); ++r) agree += counts(r, match[r]);
  return agree / static_cast<double>(pred.size());
}

inline double segmentation_error(const Labels& pred, const Labels& truth) {
  return 1.0 - segmentation_accuracy(pred, truth);
}

}  // namespace subseg
