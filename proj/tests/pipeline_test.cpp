#include <gtest/gtest.h>

#include "test_util.hpp"

namespace subseg {
namespace {

AlmConfig with_lambda(double lambda) {
  AlmConfig c;
  c.lambda = lambda;
  return c;
}

TEST(RunRsi, CleanTwoSubspaces) {
  auto data = testing::clean_subspaces(2, 2, 20, 10, 1);
  for (double lambda : {10.0, 50.0}) {
    auto rep = run_rsi(data.X, 2, with_lambda(lambda), 3, data.truth.labels);
    ASSERT_TRUE(rep.accuracy);
    EXPECT_EQ(*rep.accuracy, 1.0);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.rank_D, 4);
  }
}

TEST(RunRsi, ReportedZIsSimOfReportedD) {
  auto data = generate([] {
    SyntheticSpec s;
    s.outlier_fraction = 0.2;
    s.seed = 4;
    return s;
  }());
  auto rep = run_rsi(data.X, 5, with_lambda(0.6), 9);
  EXPECT_EQ(rep.Z, sim(rep.D, kDenoisedRankTol));
  EXPECT_FALSE(rep.accuracy);
}

TEST(RunRsi, SingleSubspace) {
  auto data = testing::clean_subspaces(1, 3, 10, 8, 2);
  auto rep = run_rsi(data.X, 1, with_lambda(10.0), 0, data.truth.labels);
  EXPECT_EQ(rep.labels, Labels(8, 0));
  EXPECT_EQ(*rep.accuracy, 1.0);
}

TEST(RunRsi, ZeroDataIsDegenerate) {
  try {
    run_rsi(Matrix::Zero(5, 5), 2, with_lambda(1.0), 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
}

TEST(RunRsi, InputValidation) {
  auto data = testing::clean_subspaces(2, 2, 10, 4, 3);
  EXPECT_THROW(run_rsi(data.X, 9, with_lambda(1.0), 0), Error);
  EXPECT_THROW(run_rsi(data.X, 2, with_lambda(1.0), 0, Labels(3, 0)), Error);
}

TEST(RunLrr, CleanDataPerfect) {
  auto data = testing::clean_subspaces(3, 3, 30, 10, 5);
  auto rep = run_lrr(data.X, 3, with_lambda(10.0), 1, data.truth.labels);
  EXPECT_EQ(*rep.accuracy, 1.0);
  EXPECT_LE((rep.D - data.X).norm(), 1e-4 * data.X.norm());
}

TEST(RunLrr, SingleCluster) {
  auto data = testing::clean_subspaces(1, 2, 10, 6, 6);
  auto rep = run_lrr(data.X, 1, with_lambda(10.0), 0, data.truth.labels);
  EXPECT_EQ(rep.labels, Labels(6, 0));
}

TEST(Pipelines, CleanDataEquivalence) {
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    auto data = testing::clean_subspaces(4, 3, 40, 8, seed);
    auto rsi = run_rsi(data.X, 4, with_lambda(10.0), seed, data.truth.labels);
    auto lrr = run_lrr(data.X, 4, with_lambda(10.0), seed, data.truth.labels);
    EXPECT_EQ(*rsi.accuracy, 1.0);
    EXPECT_EQ(*lrr.accuracy, 1.0);
    EXPECT_EQ(segmentation_accuracy(rsi.labels, lrr.labels), 1.0);
  }
}

TEST(LrrSimEquivalence, OrthonormalColumns) {
  std::mt19937_64 rng(1);
  const Matrix X = random_orthonormal(15, 6, rng);
  AlmConfig cfg;
  cfg.eps = 1e-8;
  auto rep = theorem3_verify(X, cfg);
  EXPECT_LE(rep.sim_gap, 1e-3);
  EXPECT_LE(rep.nuclear_gap, 1e-3);
  EXPECT_LE(rep.feasibility, 1e-3);
}

TEST(LrrSimEquivalence, RandomRankFive) {
  std::mt19937_64 rng(2);
  AlmConfig cfg;
  cfg.eps = 1e-8;
  auto rep = theorem3_verify(testing::low_rank(60, 40, 5, rng), cfg);
  EXPECT_EQ(rep.rank, 5);
  EXPECT_LE(rep.sim_gap, 1e-3);
}

TEST(LrrSimEquivalence, RankOneOuterProduct) {
  std::mt19937_64 rng(3);
  AlmConfig cfg;
  cfg.eps = 1e-8;
  auto rep = theorem3_verify(testing::low_rank(25, 18, 1, rng), cfg);
  EXPECT_LE(rep.nuclear_gap, 1e-3);
}

TEST(LrrSimEquivalence, GapShrinksWithTighterTolerance) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 4; ++i) {
    const Matrix X = testing::low_rank(30, 20, 2 + i, rng);
    AlmConfig loose, tight;
    loose.eps = 1e-5;
    tight.eps = 1e-8;
    const auto a = theorem3_verify(X, loose), b = theorem3_verify(X, tight);
    EXPECT_LE(b.feasibility, a.feasibility);
    EXPECT_LE(b.sim_gap, a.sim_gap + 1e-12);
    EXPECT_LE(b.nuclear_gap, a.nuclear_gap + 1e-12);
  }
}

TEST(LrrSimEquivalence, ZeroInputIsDegenerate) {
  EXPECT_THROW(theorem3_verify(Matrix::Zero(4, 4), AlmConfig{}), Error);
}

TEST(Denoise, CleanLowRankUnchanged) {
  std::mt19937_64 rng(5);
  Matrix X = testing::low_rank(40, 30, 3, rng);
  X /= X.colwise().norm().maxCoeff();
  for (Method m : {Method::Rsi, Method::Lrr}) {
    auto d = denoise(X, with_lambda(10.0), m);
    EXPECT_LE((d.D - X).norm(), 1e-4 * X.norm()) << to_string(m);
    EXPECT_LE(d.E.norm(), 1e-4 * X.norm()) << to_string(m);
  }
}

TEST(Denoise, PlantedColumnsLandInE) {
  auto p = testing::planted_outliers(60, 60, 3, 4, 8);
  for (Method m : {Method::Rsi, Method::Lrr}) {
    auto d = denoise(p.X, with_lambda(m == Method::Rsi ? 0.6 : 0.12), m);
    std::vector<std::pair<double, int>> norms;
    for (int j = 0; j < 60; ++j) norms.push_back({d.E.col(j).norm(), j});
    std::sort(norms.rbegin(), norms.rend());
    for (int i = 0; i < 4; ++i) EXPECT_TRUE(p.support[norms[i].second]) << to_string(m);
  }
}

TEST(Denoise, ZeroInput) {
  for (Method m : {Method::Rsi, Method::Lrr}) {
    auto d = denoise(Matrix::Zero(3, 4), AlmConfig{}, m);
    EXPECT_EQ(max_abs(d.D), 0.0);
    EXPECT_EQ(max_abs(d.E), 0.0);
  }
}

SweepOptions small_sweep(std::vector<double> fractions, unsigned threads = 1) {
  SweepOptions o;
  o.fractions = std::move(fractions);
  o.trials = 2;
  o.cfg_lrr.lambda = 0.12;
  o.cfg_rsi.lambda = 0.6;
  o.seed = 42;
  o.threads = threads;
  return o;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.k = 3;
  s.subspace_dim = 3;
  s.ambient_dim = 30;
  s.points_per_subspace = 10;
  return s;
}

TEST(Sweep, DegenerateCleanSweep) {
  SyntheticSpec s = small_spec();
  s.noise_variance_factor = 0.0;
  auto r = outlier_sweep(s, small_sweep({0.0}));
  ASSERT_EQ(r.rows.size(), 4u);
  ASSERT_EQ(r.summary.size(), 2u);
  for (const auto& row : r.summary) {
    EXPECT_EQ(row.count, 2);
    EXPECT_GE(row.mean, 0.95);
    EXPECT_TRUE(std::isfinite(row.std));
  }
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  auto a = outlier_sweep(small_spec(), small_sweep({0.0, 0.2}, 1));
  auto b = outlier_sweep(small_spec(), small_sweep({0.0, 0.2}, 3));
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].accuracy, b.rows[i].accuracy);
}

TEST(Sweep, CellsIndependentOfOtherFractions) {
  auto both = outlier_sweep(small_spec(), small_sweep({0.1, 0.3}));
  auto only = outlier_sweep(small_spec(), small_sweep({0.3}));
  std::vector<std::optional<double>> from_both, from_only;
  for (const auto& row : both.rows)
    if (row.fraction == 0.3) from_both.push_back(row.accuracy);
  for (const auto& row : only.rows) from_only.push_back(row.accuracy);
  EXPECT_EQ(from_both, from_only);
}

TEST(Sweep, UnbiasedStd) {
  auto r = outlier_sweep(small_spec(), small_sweep({0.2}));
  for (const auto& s : r.summary) {
    std::vector<double> v;
    for (const auto& row : r.rows)
      if (row.method == s.method && row.accuracy) v.push_back(*row.accuracy);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_DOUBLE_EQ(s.mean, (v[0] + v[1]) / 2);
    EXPECT_NEAR(s.std, std::abs(v[0] - v[1]) / std::sqrt(2.0), 1e-15);
  }
}

TEST(Sweep, FailedTrialsBecomeMissingCells) {
  auto o = small_sweep({0.0});
  o.cfg_lrr.max_iter = 1;  // cannot converge
  auto r = outlier_sweep(small_spec(), o);
  for (const auto& row : r.rows)
    if (row.method == Method::Lrr) { EXPECT_FALSE(row.accuracy); }
  EXPECT_EQ(r.summary[0].count, 0);
  EXPECT_TRUE(std::isnan(r.summary[0].mean));
  EXPECT_EQ(r.summary[1].count, 2);
}

TEST(Sweep, Validation) {
  EXPECT_THROW(outlier_sweep(small_spec(), small_sweep({1.2})), Error);
  auto o = small_sweep({0.0});
  o.trials = 1;
  EXPECT_THROW(outlier_sweep(small_spec(), o), Error);
}

}  // namespace
}  // namespace subseg
