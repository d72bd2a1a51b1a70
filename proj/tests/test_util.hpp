#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "subseg/subseg.hpp"

namespace subseg::testing {

inline Matrix randn(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return gaussian_matrix(rows, cols, rng);
}

inline Matrix low_rank(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                       std::mt19937_64& rng) {
  return randn(rows, rank, rng) * randn(rank, cols, rng);
}

inline Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  return random_orthonormal(n, n, rng);
}

/// Singular values via the symmetric eigensolver on A'A, descending, only
/// those above `floor`. Independent of the SVD route under test.
inline Vector singular_values_by_eig(const Matrix& A, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A.transpose() * A);
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = eig.eigenvalues()(i);
    if (lam > floor * floor) vals.push_back(std::sqrt(lam));
  }
  std::sort(vals.rbegin(), vals.rend());
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Max agreement over every relabeling of `pred` (pred ids mapped injectively
/// into truth ids, padded to a common alphabet), by enumeration.
inline double brute_force_accuracy(const Labels& pred, const Labels& truth) {
  int k = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) k = std::max({k, pred[i] + 1, truth[i] + 1});
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) agree += perm[pred[i]] == truth[i];
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return pred.empty() ? 1.0 : static_cast<double>(best) / pred.size();
}

/// Clean data from k independent random subspaces, samples grouped by
/// subspace.
inline SyntheticData clean_subspaces(int k, int dim, int ambient, int per, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.k = k;
  spec.subspace_dim = dim;
  spec.ambient_dim = ambient;
  spec.points_per_subspace = per;
  spec.noise_variance_factor = 0.0;
  spec.outlier_fraction = 0.0;
  spec.seed = seed;
  return generate(spec);
}

/// Planted CSRPCA instance: rank-`rank` D0 whose `outliers` corrupted
/// columns are replaced by vectors orthogonal to col(D0) with the mean clean
/// column norm. D0 is zero on those columns.
struct Planted {
  Matrix X, D0, E0;
  std::vector<bool> support;
};

inline Planted planted_outliers(int m, int n, int rank, int outliers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Planted p;
  const Matrix B = randn(m, rank, rng);
  p.D0 = B * randn(rank, n, rng) / std::sqrt(static_cast<double>(m));
  Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix basis = qr.householderQ() * Matrix::Identity(m, rank);
  const double norm = p.D0.colwise().norm().mean();

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  p.E0 = Matrix::Zero(m, n);
  p.support.assign(n, false);
  for (int i = 0; i < outliers; ++i) {
    Vector v = randn(m, 1, rng);
    v -= basis * (basis.transpose() * v);
    p.E0.col(idx[i]) = v.normalized() * norm;
    p.D0.col(idx[i]).setZero();
    p.support[idx[i]] = true;
  }
  p.X = p.D0 + p.E0;
  return p;
}

/// Proximal objective tau*|D|_* + 0.5*|A - D|_F^2 at svt(A, tau) is no
/// larger than at `trials` random perturbations of it (equivalent to the
/// 1/(2 tau) scaling).
inline bool svt_prox_optimal(const Matrix& A, double tau, std::mt19937_64& rng, int trials = 100) {
  const Matrix D = svt(A, tau);
  auto objective = [&](const Matrix& M) {
    return tau * nuclear_norm(M) + 0.5 * (A - M).squaredNorm();
  };
  const double best = objective(D);
  std::uniform_real_distribution<double> scale(-6.0, -1.0);
  for (int t = 0; t < trials; ++t) {
    const Matrix P = std::pow(10.0, scale(rng)) * randn(A.rows(), A.cols(), rng);
    if (objective(D + P) < best - 1e-12 * (1.0 + best)) return false;
  }
  return true;
}

/// Same check for column_shrink against tau*|E|_{2,1} + 0.5*|Q - E|_F^2,
/// perturbing one column at a time (the objective separates by column).
inline bool column_shrink_prox_optimal(const Matrix& Q, double tau, std::mt19937_64& rng,
                                       int trials = 100) {
  const Matrix E = column_shrink(Q, tau);
  std::uniform_real_distribution<double> scale(-6.0, -1.0);
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    auto objective = [&](const Vector& e) {
      return tau * e.norm() + 0.5 * (Q.col(j) - e).squaredNorm();
    };
    const double best = objective(E.col(j));
    for (int t = 0; t < trials; ++t) {
      const Vector p = std::pow(10.0, scale(rng)) * randn(Q.rows(), 1, rng);
      if (objective(E.col(j) + p) < best - 1e-12 * (1.0 + best)) return false;
    }
  }
  return true;
}

}  // namespace subseg::testing
