#pragma once

// Dense decompositions and proximal operators used by the segmentation
// solvers: skinny SVD with a relative rank cut, singular value thresholding,
// column-wise (2,1) shrinkage and the shape interaction matrix V_r V_r'.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subseg/error.hpp"

namespace subseg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative rank cut for clean data.
inline constexpr double kCleanRankTol = 1e-8;
/// Rank cut for SIM of a CSRPCA low-rank part; SVT leaves a clean spectral gap.
inline constexpr double kDenoisedRankTol = 1e-6;

/// Skinny SVD truncated to numerical rank: A ~ U diag(sigma) V'.
struct SvdFactors {
  Matrix U;
  Vector sigma;
  Matrix V;
  Eigen::Index rank = 0;

  Matrix reconstruct() const {
    return U * sigma.asDiagonal() * V.transpose();
  }
};

inline void require_finite(const Matrix& A, const char* what) {
  if (!A.allFinite())
    fail(ErrorKind::InvalidInput, std::string(what) + " contains non-finite entries");
}

namespace detail {

// Full thin SVD with the backend contract checked by the caller's tests.
// Singular values come back nonincreasing.
struct ThinSvd {
  Matrix U;
  Vector sigma;
  Matrix V;
};

inline bool factors_consistent(const Matrix& A, const ThinSvd& f) {
  constexpr double kTol = 1e-10;
  const double scale = std::max(A.norm(), std::numeric_limits<double>::min());
  const auto p = f.sigma.size();
  return (f.U * f.sigma.asDiagonal() * f.V.transpose() - A).norm() <= kTol * scale &&
         (f.U.transpose() * f.U - Matrix::Identity(p, p)).norm() <= kTol * p &&
         (f.V.transpose() * f.V - Matrix::Identity(p, p)).norm() <= kTol * p;
}

// Eigen 3.4.0's BDCSVD occasionally returns wrong factors when singular
// values repeat (projection matrices hit this). Check and redo with Jacobi.
inline ThinSvd thin_svd(const Matrix& A) {
  if (A.size() == 0) return {Matrix(A.rows(), 0), Vector(0), Matrix(A.cols(), 0)};
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() == Eigen::Success) {
    ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    if (factors_consistent(A, out)) return out;
  }
  Eigen::JacobiSVD<Matrix> jac(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (jac.info() != Eigen::Success)
    fail(ErrorKind::DecompositionFailure, "SVD did not converge");
  return {jac.matrixU(), jac.singularValues(), jac.matrixV()};
}

inline Eigen::Index count_above(const Vector& sigma, double rank_tol) {
  if (sigma.size() == 0) return 0;
  const double cut = rank_tol * sigma(0);
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > cut) ++r;
  return r;
}

}  // namespace detail

/// Skinny SVD truncated to r = #{sigma_i > rank_tol * sigma_max}. A zero
/// matrix gives r = 0 and empty factors.
inline SvdFactors skinny_svd(const Matrix& A, double rank_tol = kCleanRankTol) {
  require_finite(A, "skinny_svd input");
  if (!(rank_tol > 0.0 && rank_tol < 1.0))
    fail(ErrorKind::InvalidInput, "rank_tol must lie in (0, 1)");
  auto full = detail::thin_svd(A);
  const Eigen::Index r = detail::count_above(full.sigma, rank_tol);
  SvdFactors out;
  out.rank = r;
  out.U = full.U.leftCols(r);
  out.sigma = full.sigma.head(r);
  out.V = full.V.leftCols(r);
  return out;
}

inline Eigen::Index numerical_rank(const Matrix& A, double rank_tol = kCleanRankTol) {
  require_finite(A, "numerical_rank input");
  if (A.size() == 0) return 0;
  return detail::count_above(detail::thin_svd(A).sigma, rank_tol);
}

/// Scalar soft threshold max(|x| - eps, 0) * sgn(x).
inline double soft_threshold(double x, double eps) {
  const double mag = std::max(std::abs(x) - eps, 0.0);
  return x < 0.0 ? -mag : mag;
}

struct SvtOutput {
  Matrix value;
  Eigen::Index rank = 0;  // singular values surviving the threshold
};

/// Singular value thresholding with rank of the result; the proximal map of
/// tau * nuclear norm.
inline SvtOutput svt_with_rank(const Matrix& A, double tau) {
  require_finite(A, "svt input");
  if (!(tau >= 0.0)) fail(ErrorKind::InvalidInput, "svt threshold must be nonnegative");
  auto full = detail::thin_svd(A);
  Eigen::Index r = 0;
  while (r < full.sigma.size() && full.sigma(r) > tau) ++r;
  SvtOutput out;
  out.rank = r;
  if (r == 0) {
    out.value = Matrix::Zero(A.rows(), A.cols());
    return out;
  }
  const Vector shrunk = (full.sigma.head(r).array() - tau).matrix();
  out.value = full.U.leftCols(r) * shrunk.asDiagonal() * full.V.leftCols(r).transpose();
  return out;
}

inline Matrix svt(const Matrix& A, double tau) { return svt_with_rank(A, tau).value; }

/// Column-wise shrinkage, the proximal map of tau * (2,1)-norm. Column i
/// becomes soft_threshold(|q_i|, tau) * q_i / |q_i|; zero columns stay zero.
inline Matrix column_shrink(const Matrix& Q, double tau) {
  require_finite(Q, "column_shrink input");
  if (!(tau >= 0.0))
    fail(ErrorKind::InvalidInput, "column_shrink threshold must be nonnegative");
  Matrix out = Matrix::Zero(Q.rows(), Q.cols());
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    const double norm = Q.col(j).norm();
    if (norm > tau) out.col(j) = ((norm - tau) / norm) * Q.col(j);
  }
  return out;
}

/// Shape interaction matrix V_r V_r' of the skinny SVD. Symmetric and
/// idempotent; undefined for the zero matrix.
inline Matrix sim(const Matrix& A, double rank_tol = kCleanRankTol) {
  auto f = skinny_svd(A, rank_tol);
  if (f.rank == 0)
    fail(ErrorKind::DegenerateInput, "shape interaction matrix undefined for a rank-0 matrix");
  return f.V * f.V.transpose();
}

// Norms used across solvers and tests.

inline double nuclear_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return detail::thin_svd(A).sigma.sum();
}

inline double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return detail::thin_svd(A).sigma(0);
}

/// Sum of column Euclidean norms.
inline double l21_norm(const Matrix& A) { return A.colwise().norm().sum(); }

/// Largest column Euclidean norm; the dual of the (2,1)-norm.
inline double l2inf_norm(const Matrix& A) {
  return A.cols() == 0 ? 0.0 : A.colwise().norm().maxCoeff();
}

/// Entrywise max-abs norm.
inline double max_abs(const Matrix& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

inline Eigen::Index nonzero_columns(const Matrix& A) {
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    if (A.col(j).squaredNorm() > 0.0) ++count;
  return count;
}

}  // namespace subseg
