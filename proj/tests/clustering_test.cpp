#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

namespace subseg {
namespace {

TEST(Affinity, LrrFormula) {
  Matrix Z(2, 2);
  Z << 1, -2, 0, 3;
  Matrix expected(2, 2);
  expected << 2, 2, 2, 6;
  EXPECT_EQ(affinity_lrr(Z).W, expected);
  EXPECT_EQ(affinity_lrr(Matrix::Zero(3, 3)).W, Matrix::Zero(3, 3));
}

TEST(Affinity, LrrOfSymmetricIsTwiceAbs) {
  std::mt19937_64 rng(1);
  Matrix Z = testing::randn(5, 5, rng);
  Z = (Z + Z.transpose()).eval();
  EXPECT_LE(max_abs(affinity_lrr(Z).W - 2.0 * Z.cwiseAbs()), 1e-15);
}

TEST(Affinity, RsiAbsoluteValue) {
  Matrix Z(2, 2);
  Z << 0.5, -0.5, -0.5, 0.5;
  EXPECT_EQ(affinity_rsi(Z).W, Matrix::Constant(2, 2, 0.5));
  EXPECT_EQ(affinity_rsi(Matrix::Identity(3, 3)).W, Matrix::Identity(3, 3));
}

TEST(Affinity, RsiRejectsAsymmetric) {
  Matrix Z(2, 2);
  Z << 1, 0.1, 0, 1;
  try {
    affinity_rsi(Z);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  Z(1, 0) = 0.1 + 1e-9;  // within tolerance: averaged
  EXPECT_NEAR(affinity_rsi(Z).W(0, 1), 0.1 + 0.5e-9, 1e-15);
}

TEST(Affinity, RsiOfCleanSimIsBlockDiagonal) {
  auto data = testing::clean_subspaces(2, 3, 20, 10, 2);
  const auto W = affinity_rsi(sim(data.X)).W;
  double off = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      if (data.truth.labels[i] != data.truth.labels[j]) off = std::max(off, W(i, j));
  EXPECT_LE(off, 1e-8);
}

Matrix block_diagonal(const std::vector<int>& sizes, std::mt19937_64& rng) {
  int n = 0;
  for (int s : sizes) n += s;
  Matrix W = Matrix::Zero(n, n);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  int at = 0;
  for (int s : sizes) {
    for (int i = 0; i < s; ++i)
      for (int j = i; j < s; ++j) W(at + i, at + j) = W(at + j, at + i) = u(rng);
    at += s;
  }
  return W;
}

TEST(SpectralCluster, BlockDiagonalRecoveredForEverySeed) {
  std::mt19937_64 rng(3);
  const std::vector<int> sizes = {4, 7, 3, 6};
  const Matrix W = block_diagonal(sizes, rng);
  Labels truth;
  for (std::size_t b = 0; b < sizes.size(); ++b) truth.insert(truth.end(), sizes[b], int(b));
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_EQ(segmentation_accuracy(spectral_cluster({W}, 4, seed), truth), 1.0);
}

TEST(SpectralCluster, IdentityWithKEqualsN) {
  const auto labels = spectral_cluster({Matrix::Identity(6, 6)}, 6, 0);
  std::set<int> distinct(labels.begin(), labels.end());
  EXPECT_EQ(distinct.size(), 6u);
}

TEST(SpectralCluster, CleanSyntheticDataPerfect) {
  auto data = testing::clean_subspaces(5, 4, 100, 20, 5);
  const auto labels = spectral_cluster(affinity_rsi(sim(data.X)), 5, 17);
  EXPECT_EQ(segmentation_accuracy(labels, data.truth.labels), 1.0);
}

TEST(SpectralCluster, Deterministic) {
  std::mt19937_64 rng(4);
  Matrix W = testing::randn(15, 15, rng).cwiseAbs();
  W = (W + W.transpose()).eval();
  EXPECT_EQ(spectral_cluster({W}, 3, 99), spectral_cluster({W}, 3, 99));
}

TEST(SpectralCluster, IsolatedNodesAreHandled) {
  Matrix W = Matrix::Zero(5, 5);
  W(0, 1) = W(1, 0) = 1.0;
  W(2, 3) = W(3, 2) = 1.0;
  // node 4 has zero degree
  const auto labels = spectral_cluster({W}, 3, 1);
  EXPECT_EQ(labels[0], labels[1]);
  EXPECT_EQ(labels[2], labels[3]);
  EXPECT_NE(labels[4], labels[0]);
  EXPECT_NE(labels[4], labels[2]);
}

TEST(SpectralCluster, InvalidK) {
  const Affinity a{Matrix::Identity(3, 3)};
  EXPECT_THROW(spectral_cluster(a, 4, 0), Error);
  EXPECT_THROW(spectral_cluster(a, 0, 0), Error);
}

TEST(Accuracy, Examples) {
  const Labels truth = {0, 0, 1, 1};
  EXPECT_EQ(segmentation_accuracy(truth, truth), 1.0);
  EXPECT_EQ(segmentation_accuracy({1, 1, 0, 0}, truth), 1.0);
  EXPECT_DOUBLE_EQ(segmentation_accuracy({0, 1, 1, 1}, truth), 0.75);
  EXPECT_DOUBLE_EQ(segmentation_error({0, 1, 1, 1}, truth), 0.25);
  EXPECT_THROW(segmentation_accuracy({0, 1}, truth), Error);
}

TEST(Accuracy, PermutationInvarianceAndSymmetry) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 5, n = 10 + trial;
    std::uniform_int_distribution<int> pick(0, k - 1);
    Labels a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = pick(rng), b[i] = pick(rng);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels permuted(n);
    for (int i = 0; i < n; ++i) permuted[i] = perm[a[i]];
    const double base = segmentation_accuracy(a, b);
    EXPECT_DOUBLE_EQ(segmentation_accuracy(permuted, b), base);
    EXPECT_DOUBLE_EQ(segmentation_accuracy(b, a), base);
  }
}

TEST(Accuracy, HungarianMatchesBruteForce) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 6, n = 5 + trial % 40;
    std::uniform_int_distribution<int> pick(0, k - 1);
    Labels a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = pick(rng), b[i] = pick(rng);
    EXPECT_EQ(segmentation_accuracy(a, b), testing::brute_force_accuracy(a, b)) << "trial " << trial;
  }
}

TEST(Hungarian, MinimumCostAssignment) {
  Matrix cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = hungarian_min(cost);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) total += cost(i, a[i]);
  EXPECT_DOUBLE_EQ(total, 5.0);  // 1 + 2 + 2
}

TEST(KMeans, SeparatedPoints) {
  Matrix pts(6, 1);
  pts << 0.0, 0.1, 0.2, 10.0, 10.1, 10.2;
  auto r = kmeans(pts, 2, 3);
  EXPECT_EQ(r.labels[0], r.labels[2]);
  EXPECT_EQ(r.labels[3], r.labels[5]);
  EXPECT_NE(r.labels[0], r.labels[3]);
  EXPECT_NEAR(r.inertia, 4 * 0.01, 1e-12);
}

}  // namespace
}  // namespace subseg
