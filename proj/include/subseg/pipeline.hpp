#pragma once

// End-to-end segmentation methods, structure checks and the outlier sweep.
//
//   RSI: solve_csrpca -> sim(D) -> |Z| -> spectral_cluster
//   LRR: solve_lrr_noisy -> |Z| + |Z'| -> spectral_cluster

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "subseg/clustering.hpp"
#include "subseg/solvers.hpp"
#include "subseg/synthgen.hpp"

namespace subseg {

enum class Method { Lrr = 0, Rsi = 1 };

inline const char* to_string(Method m) { return m == Method::Lrr ? "lrr" : "rsi"; }

inline Method parse_method(std::string_view s) {
  if (s == "lrr") return Method::Lrr;
  if (s == "rsi") return Method::Rsi;
  fail(ErrorKind::InvalidInput, "unknown method '" + std::string(s) + "' (expected lrr or rsi)");
}

struct MethodReport {
  Method method = Method::Rsi;
  Labels labels;
  Matrix Z;  // matrix the affinity was built from
  Matrix D;  // corrected data (RSI: low-rank part, LRR: XZ)
  Matrix E;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
  Eigen::Index rank_D = 0;
  std::vector<IterationRecord> trace;
  std::optional<double> accuracy;  // set iff ground truth was supplied
};

namespace detail {

inline void check_cluster_inputs(const Matrix& X, int k, const std::optional<Labels>& truth) {
  if (X.cols() == 0) fail(ErrorKind::InvalidInput, "data matrix has no samples");
  if (k < 1) fail(ErrorKind::InvalidInput, "cluster count must be at least 1");
  if (k > X.cols()) fail(ErrorKind::InvalidInput, "cluster count exceeds number of samples");
  if (truth && static_cast<Eigen::Index>(truth->size()) != X.cols())
    fail(ErrorKind::InvalidInput, "ground truth length does not match number of samples");
}

}  // namespace detail

/// Robust shape interaction: denoise with CSRPCA, then cluster SIM(D).
inline MethodReport run_rsi(const Matrix& X, int k, const AlmConfig& cfg, std::uint64_t seed,
                            const std::optional<Labels>& truth = std::nullopt,
                            double rank_tol = kDenoisedRankTol) {
  detail::check_cluster_inputs(X, k, truth);
  auto solved = solve_csrpca(X, cfg);
  if (max_abs(solved.D) == 0.0)
    fail(ErrorKind::DegenerateInput, "CSRPCA returned a zero low-rank part; lambda too small?");

  MethodReport rep;
  rep.method = Method::Rsi;
  auto factors = skinny_svd(solved.D, rank_tol);
  rep.rank_D = factors.rank;
  rep.Z = factors.V * factors.V.transpose();
  rep.labels = spectral_cluster(affinity_rsi(rep.Z), k, seed);
  rep.D = std::move(solved.D);
  rep.E = std::move(solved.E);
  rep.iterations = solved.iterations;
  rep.converged = solved.converged;
  rep.residual = solved.residual;
  rep.trace = std::move(solved.trace);
  if (truth) rep.accuracy = segmentation_accuracy(rep.labels, *truth);
  return rep;
}

/// Low-rank representation with (2,1) noise, clustered on |Z| + |Z'|.
inline MethodReport run_lrr(const Matrix& X, int k, const AlmConfig& cfg, std::uint64_t seed,
                            const std::optional<Labels>& truth = std::nullopt,
                            double rank_tol = kDenoisedRankTol) {
  detail::check_cluster_inputs(X, k, truth);
  auto solved = solve_lrr_noisy(X, cfg);

  MethodReport rep;
  rep.method = Method::Lrr;
  rep.labels = spectral_cluster(affinity_lrr(solved.Z), k, seed);
  rep.D = X * solved.Z;
  rep.rank_D = max_abs(rep.D) > 0.0 ? numerical_rank(rep.D, rank_tol) : 0;
  rep.Z = std::move(solved.Z);
  rep.E = std::move(solved.E);
  rep.iterations = solved.iterations;
  rep.converged = solved.converged;
  rep.residual = solved.residual;
  rep.trace = std::move(solved.trace);
  if (truth) rep.accuracy = segmentation_accuracy(rep.labels, *truth);
  return rep;
}

inline MethodReport run_method(Method method, const Matrix& X, int k, const AlmConfig& cfg,
                               std::uint64_t seed,
                               const std::optional<Labels>& truth = std::nullopt) {
  return method == Method::Rsi ? run_rsi(X, k, cfg, seed, truth) : run_lrr(X, k, cfg, seed, truth);
}

struct Decomposition {
  Matrix D;
  Matrix E;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Corrected data and noise. RSI returns the CSRPCA split; LRR returns
/// D = XZ with its (2,1) noise.
inline Decomposition denoise(const Matrix& X, const AlmConfig& cfg, Method method) {
  if (method == Method::Rsi) {
    auto s = solve_csrpca(X, cfg);
    return {std::move(s.D), std::move(s.E), s.iterations, s.converged, s.residual};
  }
  auto s = solve_lrr_noisy(X, cfg);
  return {X * s.Z, std::move(s.E), s.iterations, s.converged, s.residual};
}

struct LrrSimReport {
  double sim_gap = 0.0;      // |Z - SIM(X)|_F / |SIM(X)|_F
  double nuclear_gap = 0.0;  // | |Z|_* - rank(X) |
  double feasibility = 0.0;  // |X - XZ|_inf
  Eigen::Index rank = 0;
  int iterations = 0;
  bool converged = false;
};

/// Solves noiseless LRR iteratively and measures how far the result is from
/// the shape interaction matrix and from the rank of X.
inline LrrSimReport theorem3_verify(const Matrix& X, const AlmConfig& cfg,
                                      double rank_tol = kCleanRankTol) {
  const auto factors = skinny_svd(X, rank_tol);
  if (factors.rank == 0)
    fail(ErrorKind::DegenerateInput, "shape interaction matrix undefined for a rank-0 matrix");
  const Matrix S = factors.V * factors.V.transpose();
  const auto solved = solve_lrr_noiseless(X, cfg);

  LrrSimReport rep;
  rep.rank = factors.rank;
  rep.sim_gap = (solved.Z - S).norm() / S.norm();
  rep.nuclear_gap = std::abs(nuclear_norm(solved.Z) - static_cast<double>(factors.rank));
  rep.feasibility = max_abs(X - X * solved.Z);
  rep.iterations = solved.iterations;
  rep.converged = solved.converged;
  return rep;
}

struct BlockReport {
  double max_off_block = 0.0;
  std::vector<Eigen::Index> block_ranks;  // in order of first appearance of each label
  std::vector<int> block_labels;
};

/// Largest magnitude of Z outside the label-induced diagonal blocks and the
/// numerical rank of each block (relative cut per block).
inline BlockReport block_structure(const Matrix& Z, const Labels& labels,
                                   double rank_tol = kCleanRankTol) {
  if (Z.rows() != Z.cols() || static_cast<Eigen::Index>(labels.size()) != Z.rows())
    fail(ErrorKind::InvalidInput, "block check needs a square matrix matching the labels");
  BlockReport rep;
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      if (labels[i] != labels[j]) rep.max_off_block = std::max(rep.max_off_block, std::abs(Z(i, j)));

  for (int label : labels)
    if (std::find(rep.block_labels.begin(), rep.block_labels.end(), label) == rep.block_labels.end())
      rep.block_labels.push_back(label);
  for (int label : rep.block_labels) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) idx.push_back(static_cast<Eigen::Index>(i));
    const Matrix block = Z(idx, idx);
    rep.block_ranks.push_back(max_abs(block) > 0.0 ? numerical_rank(block, rank_tol) : 0);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Outlier sweep

struct SweepRow {
  double fraction = 0.0;
  Method method = Method::Lrr;
  int trial = 0;
  std::optional<double> accuracy;  // empty when the trial failed
};

struct SummaryRow {
  double fraction = 0.0;
  Method method = Method::Lrr;
  double mean = 0.0;
  double std = 0.0;  // unbiased; NaN with fewer than two completed trials
  int count = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SummaryRow> summary;
};

struct SweepOptions {
  std::vector<double> fractions;
  int trials = 20;
  AlmConfig cfg_lrr;
  AlmConfig cfg_rsi;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

inline std::uint64_t fraction_key(double fraction) {
  return std::bit_cast<std::uint64_t>(fraction + 0.0);
}

/// Seed for the generated data of one (fraction, trial) cell. Keyed by the
/// fraction value, so dropping other fractions leaves a cell unchanged.
inline std::uint64_t cell_data_seed(std::uint64_t seed, double fraction, int trial) {
  return derive_seed(seed, {fraction_key(fraction), static_cast<std::uint64_t>(trial)});
}

inline std::uint64_t cell_cluster_seed(std::uint64_t seed, double fraction, int trial,
                                       Method method) {
  return derive_seed(seed, {fraction_key(fraction), static_cast<std::uint64_t>(trial),
                            static_cast<std::uint64_t>(method) + 1});
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs both methods on freshly generated data for every (fraction, trial)
/// cell. Failed or non-converged solves become missing cells.
inline SweepResult outlier_sweep(const SyntheticSpec& base, const SweepOptions& opt) {
  base.validate();
  if (opt.trials < 2) fail(ErrorKind::InvalidInput, "a sweep needs at least 2 trials");
  if (opt.fractions.empty()) fail(ErrorKind::InvalidInput, "a sweep needs at least one fraction");
  for (double f : opt.fractions)
    if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::InvalidInput, "outlier fractions must lie in [0, 1]");
  opt.cfg_lrr.validate();
  opt.cfg_rsi.validate();

  const std::size_t n_cells = opt.fractions.size() * static_cast<std::size_t>(opt.trials);
  constexpr Method kMethods[] = {Method::Lrr, Method::Rsi};
  std::vector<std::optional<double>> acc(n_cells * 2);

  auto run_cell = [&](std::size_t cell) {
    const double fraction = opt.fractions[cell / opt.trials];
    const int trial = static_cast<int>(cell % opt.trials);
    SyntheticSpec spec = base;
    spec.outlier_fraction = fraction;
    spec.seed = cell_data_seed(opt.seed, fraction, trial);
    const auto data = generate(spec);
    for (std::size_t mi = 0; mi < 2; ++mi) {
      const Method method = kMethods[mi];
      const AlmConfig& cfg = method == Method::Lrr ? opt.cfg_lrr : opt.cfg_rsi;
      try {
        auto rep = run_method(method, data.X, spec.k, cfg,
                              cell_cluster_seed(opt.seed, fraction, trial, method),
                              data.truth.labels);
        if (rep.converged) acc[cell * 2 + mi] = rep.accuracy;
      } catch (const Error&) {
        // recorded as a missing cell
      }
    }
  };

  const unsigned n_threads =
      std::min<unsigned>(resolve_threads(opt.threads), static_cast<unsigned>(n_cells));
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < n_cells; c = next++) run_cell(c);
      });
  }

  SweepResult out;
  for (std::size_t fi = 0; fi < opt.fractions.size(); ++fi) {
    for (std::size_t mi = 0; mi < 2; ++mi) {
      std::vector<double> values;
      for (int t = 0; t < opt.trials; ++t) {
        const auto& a = acc[(fi * opt.trials + t) * 2 + mi];
        out.rows.push_back({opt.fractions[fi], kMethods[mi], t, a});
        if (a) values.push_back(*a);
      }
      SummaryRow s;
      s.fraction = opt.fractions[fi];
      s.method = kMethods[mi];
      s.count = static_cast<int>(values.size());
      s.mean = std::numeric_limits<double>::quiet_NaN();
      s.std = std::numeric_limits<double>::quiet_NaN();
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / values.size();
      }
      if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / (values.size() - 1));
      }
      out.summary.push_back(s);
    }
  }
  return out;
}

}  // namespace subseg
