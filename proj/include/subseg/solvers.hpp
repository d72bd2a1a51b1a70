#pragma once

// Inexact augmented Lagrange multiplier solvers.
//
//   solve_csrpca        min |D|_* + lambda |E|_{2,1}  s.t. X = D + E
//   solve_lrr_noisy     min |Z|_* + lambda |E|_{2,1}  s.t. X = XZ + E
//   solve_lrr_noiseless min |Z|_*                     s.t. X = XZ
//
// Each iteration applies one proximal step per block, a dual ascent step and
// the penalty update mu <- min(rho * mu, mu_max). The loop stops on primal
// feasibility (entrywise max norm below eps) or at max_iter; running out of
// iterations is reported through `converged`, never thrown.

#include <Eigen/Cholesky>

#include <algorithm>
#include <optional>
#include <vector>

#include "subseg/linalg.hpp"

namespace subseg {

struct AlmConfig {
  double lambda = 0.1;
  // Unset penalties are derived from the data: mu0 = 1.25 / |X|_2 and
  // mu_max = 1e10 * mu0.
  std::optional<double> mu0;
  double rho = 1.5;
  std::optional<double> mu_max;
  double eps = 1e-7;
  int max_iter = 1000;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      fail(ErrorKind::InvalidInput, "lambda must be positive");
    if (mu0 && !(*mu0 > 0.0)) fail(ErrorKind::InvalidInput, "mu0 must be positive");
    if (!(rho > 1.0) || !std::isfinite(rho))
      fail(ErrorKind::InvalidInput, "rho must exceed 1");
    if (mu_max && !(*mu_max > 0.0)) fail(ErrorKind::InvalidInput, "mu_max must be positive");
    if (mu0 && mu_max && !(*mu_max > *mu0))
      fail(ErrorKind::InvalidInput, "mu_max must exceed mu0");
    if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "eps must be positive");
    if (max_iter < 1) fail(ErrorKind::InvalidInput, "max_iter must be at least 1");
  }
};

/// One row of solver diagnostics. `mu` is the penalty used in that
/// iteration; `rank` is the rank of the low-rank block after thresholding.
struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;
  double mu = 0.0;
  Eigen::Index rank = 0;
  Eigen::Index nonzero_columns = 0;
};

struct Penalty {
  double mu0 = 0.0;
  double mu_max = 0.0;
};

/// Resolves data-dependent penalty defaults and checks mu_max > mu0.
inline Penalty resolve_penalty(const AlmConfig& cfg, const Matrix& X) {
  Penalty p;
  if (cfg.mu0) {
    p.mu0 = *cfg.mu0;
  } else {
    const double norm2 = spectral_norm(X);
    p.mu0 = norm2 > 0.0 ? 1.25 / norm2 : 1.25;
  }
  p.mu_max = cfg.mu_max.value_or(1e10 * p.mu0);
  if (!(p.mu_max > p.mu0)) fail(ErrorKind::InvalidInput, "mu_max must exceed mu0");
  return p;
}

struct CsrpcaResult {
  Matrix D;
  Matrix E;
  Matrix Y;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // |X - D - E|_inf
  Penalty penalty;
  std::vector<IterationRecord> trace;
};

/// Column-sparse robust PCA: splits X into a low-rank D and a column-sparse E.
inline CsrpcaResult solve_csrpca(const Matrix& X, const AlmConfig& cfg) {
  require_finite(X, "solve_csrpca input");
  cfg.validate();

  CsrpcaResult out;
  out.penalty = resolve_penalty(cfg, X);
  const Eigen::Index m = X.rows(), n = X.cols();

  out.D = Matrix::Zero(m, n);
  out.E = Matrix::Zero(m, n);
  // Y0 = X / max(|X|_2, |X|_{2,inf} / lambda), the usual dual-feasible start.
  const double scale = std::max(spectral_norm(X), l2inf_norm(X) / cfg.lambda);
  out.Y = scale > 0.0 ? Matrix(X / scale) : Matrix::Zero(m, n);

  double mu = out.penalty.mu0;
  out.residual = max_abs(X);
  int k = 0;
  while (out.residual >= cfg.eps && k < cfg.max_iter) {
    const double inv_mu = 1.0 / mu;
    auto low = svt_with_rank(X - out.E + inv_mu * out.Y, inv_mu);
    out.D = std::move(low.value);
    out.E = column_shrink(X - out.D + inv_mu * out.Y, cfg.lambda * inv_mu);

    const Matrix R = X - out.D - out.E;
    out.Y += mu * R;
    out.residual = max_abs(R);
    out.trace.push_back({k, out.residual, mu, low.rank, nonzero_columns(out.E)});

    mu = std::min(cfg.rho * mu, out.penalty.mu_max);
    ++k;
  }
  out.iterations = k;
  out.converged = out.residual < cfg.eps;
  return out;
}

struct LrrResult {
  Matrix Z;  // representation satisfying the linear constraint
  Matrix J;  // low-rank copy of Z (Z = J at convergence)
  Matrix E;  // sample-specific noise; zero for the noiseless model
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;           // |X - XZ - E|_inf
  double coupling_residual = 0.0;  // |Z - J|_inf
  Penalty penalty;
  std::vector<IterationRecord> trace;
};

namespace detail {

// Shared ALM loop for both LRR models. With `noisy` false the E block is
// pinned to zero and lambda is ignored.
inline LrrResult solve_lrr(const Matrix& X, const AlmConfig& cfg, bool noisy) {
  require_finite(X, "LRR input");
  cfg.validate();

  LrrResult out;
  out.penalty = resolve_penalty(cfg, X);
  const Eigen::Index m = X.rows(), n = X.cols();

  const Matrix XtX = X.transpose() * X;
  const Eigen::LLT<Matrix> normal(Matrix::Identity(n, n) + XtX);

  out.Z = Matrix::Zero(n, n);
  out.J = Matrix::Zero(n, n);
  out.E = Matrix::Zero(m, n);
  Matrix Y1 = Matrix::Zero(m, n);
  Matrix Y2 = Matrix::Zero(n, n);

  double mu = out.penalty.mu0;
  out.residual = max_abs(X);
  out.coupling_residual = 0.0;
  int k = 0;
  while (std::max(out.residual, out.coupling_residual) >= cfg.eps && k < cfg.max_iter) {
    const double inv_mu = 1.0 / mu;
    auto low = svt_with_rank(out.Z + inv_mu * Y2, inv_mu);
    out.J = std::move(low.value);

    Matrix rhs = XtX + out.J + inv_mu * (X.transpose() * Y1 - Y2);
    if (noisy) rhs.noalias() -= X.transpose() * out.E;
    out.Z = normal.solve(rhs);

    const Matrix XZ = X * out.Z;
    if (noisy) out.E = column_shrink(X - XZ + inv_mu * Y1, cfg.lambda * inv_mu);

    const Matrix R1 = X - XZ - out.E;
    const Matrix R2 = out.Z - out.J;
    Y1 += mu * R1;
    Y2 += mu * R2;
    out.residual = max_abs(R1);
    out.coupling_residual = max_abs(R2);
    out.trace.push_back({k, std::max(out.residual, out.coupling_residual), mu, low.rank,
                         nonzero_columns(out.E)});

    mu = std::min(cfg.rho * mu, out.penalty.mu_max);
    ++k;
  }
  out.iterations = k;
  out.converged = std::max(out.residual, out.coupling_residual) < cfg.eps;
  return out;
}

}  // namespace detail

/// Noisy low-rank representation with a (2,1) penalty on sample-specific
/// corruption, via the auxiliary-variable inexact ALM (constraint Z = J).
inline LrrResult solve_lrr_noisy(const Matrix& X, const AlmConfig& cfg) {
  return detail::solve_lrr(X, cfg, true);
}

/// Noiseless LRR solved iteratively. It deliberately does not use the closed
/// form SIM(X), so that it can be compared against it.
inline LrrResult solve_lrr_noiseless(const Matrix& X, const AlmConfig& cfg) {
  if (X.size() == 0 || max_abs(X) == 0.0)
    fail(ErrorKind::DegenerateInput, "noiseless LRR requires a nonzero matrix");
  return detail::solve_lrr(X, cfg, false);
}

}  // namespace subseg
