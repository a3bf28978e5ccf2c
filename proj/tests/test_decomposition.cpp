#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "latentdir/decomposition.hpp"
#include "latentdir/errors.hpp"
#include "latentdir/metrics.hpp"
#include "oracles.hpp"

using namespace latentdir;

namespace {

Matrix mixed_uniform(RngStream& rng, std::size_t n, const Matrix& mixing) {
  const double r = std::sqrt(3.0);
  const Matrix s = sample_uniform(rng, n, static_cast<std::size_t>(mixing.cols()), -r, r);
  return s * mixing.transpose();
}

}  // namespace

TEST(Pca, PointsOnAxisGiveThatAxis) {
  Matrix x(4, 2);
  x << 2, 0, -2, 0, 1, 0, -1, 0;
  const ComponentSet cs = pca_fit(x, 2);
  EXPECT_NEAR(cs.components(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(cs.components(0, 1), 0.0, 1e-12);
  // sum of squares 10 over n-1 = 3
  EXPECT_NEAR(cs.variances(0), 10.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(cs.variances(1), 0.0);
  EXPECT_FALSE(cs.warnings.empty());
}

TEST(Pca, IdenticalRowsHaveNoVariance) {
  const Matrix x = Matrix::Constant(5, 3, 1.25);
  EXPECT_THROW(pca_fit(x, 1), RankError);
}

TEST(Pca, TooManyComponentsIsRankError) {
  RngStream rng(1);
  const Matrix x = sample_gaussian(rng, 4, 6);
  try {
    pca_fit(x, 5);
    FAIL() << "expected RankError";
  } catch (const RankError& e) {
    EXPECT_EQ(e.usable(), 3u);
  }
}

TEST(Pca, VariancesMatchIndependentSolver) {
  RngStream rng(2);
  Matrix a = sample_gaussian(rng, 6, 6);
  const Matrix x = sample_gaussian(rng, 400, 6) * a;
  const ComponentSet cs = pca_fit(x, 6);

  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / 399.0;
  const Eigen::SelfAdjointEigenSolver<Matrix> ref(cov);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(cs.variances(i), ref.eigenvalues()(5 - i), 1e-9 * ref.eigenvalues()(5));
    EXPECT_NEAR(oracles::abs_cosine(cs.components.row(i).transpose(), ref.eigenvectors().col(5 - i)),
                1.0, 1e-8);
  }
}

TEST(Pca, FullRankReconstruction) {
  RngStream rng(3);
  const Matrix x = sample_gaussian(rng, 50, 4);
  const ComponentSet cs = pca_fit(x, 4);
  const Matrix coords = cs.project(x);
  const Matrix back = (coords * cs.components).rowwise() + cs.mean.transpose();
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, PropertyVariancesDescendAndMatchProjections) {
  RngStream rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = sample_gaussian(rng, 80, 5) * sample_gaussian(rng, 5, 5);
    const ComponentSet cs = pca_fit(x, 5);
    for (Eigen::Index i = 1; i < 5; ++i) EXPECT_GE(cs.variances(i - 1), cs.variances(i));
    const Matrix coords = cs.project(x);
    const Matrix cov = sample_covariance(coords);
    for (Eigen::Index i = 0; i < 5; ++i)
      EXPECT_NEAR(cov(i, i), cs.variances(i), 1e-9 * cs.variances(0));
    const Matrix gram = cs.components * cs.components.transpose();
    EXPECT_LT((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Pca, RejectsNonFinite) {
  Matrix x = Matrix::Ones(3, 2);
  x(1, 0) = std::nan("");
  EXPECT_THROW(pca_fit(x, 1), PreconditionError);
}

TEST(Ica, RecoversTwoByTwoMixture) {
  RngStream rng(11);
  Matrix mixing(2, 2);
  mixing << 1.0, 1.0, 0.0, 1.0;
  const Matrix x = mixed_uniform(rng, 5000, mixing);
  const ComponentSet cs = ica_fit(x, 2, rng);
  EXPECT_TRUE(cs.converged);
  EXPECT_FALSE(cs.unidentifiable);
  EXPECT_LT(amari_index(cs.components * mixing), 0.05);
  // Patterns are the mixing columns up to sign, scale and order.
  Matrix pinv = cs.patterns.transpose();
  EXPECT_LT(amari_index(mixing.inverse() * pinv), 0.05);
}

TEST(Ica, IndependentSourcesComeBackAsAxes) {
  RngStream rng(12);
  const Matrix x = mixed_uniform(rng, 4000, Matrix::Identity(3, 3));
  const ComponentSet cs = ica_fit(x, 3, rng);
  EXPECT_LT(amari_index(cs.components), 0.05);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(cs.components.row(i).norm(), 1.0, 1e-12);
    EXPECT_NEAR(cs.patterns.row(i).norm(), 1.0, 1e-12);
    // uniform sources have excess kurtosis -1.2
    EXPECT_NEAR(cs.kurtosis(i), -1.2, 0.15);
  }
}

TEST(Ica, OrderedByKurtosisMagnitude) {
  RngStream rng(13);
  const std::size_t n = 6000;
  Matrix s(n, 2);
  const double r = std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, 0) = rng.uniform(-r, r);
    // Laplace via inverse CDF, excess kurtosis 3
    const double u = rng.uniform() - 0.5;
    s(i, 1) = -std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u));
  }
  Matrix mixing(2, 2);
  mixing << 0.8, 0.6, -0.3, 1.0;
  const ComponentSet cs = ica_fit(s * mixing.transpose(), 2, rng);
  EXPECT_GE(std::abs(cs.kurtosis(0)), std::abs(cs.kurtosis(1)));
  EXPECT_GT(cs.kurtosis(0), 2.0);
}

TEST(Ica, GaussianInputIsFlaggedOrRejected) {
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngStream rng(seed);
    const Matrix x = sample_gaussian(rng, 3000, 4);
    try {
      const ComponentSet cs = ica_fit(x, 4, rng);
      if (cs.unidentifiable) ++flagged;
    } catch (const IcaConvergenceError& e) {
      EXPECT_FALSE(e.best().converged);
      ++flagged;
    }
  }
  EXPECT_EQ(flagged, 5);
}

TEST(Ica, SameSeedIsBitwiseIdentical) {
  Matrix mixing(3, 3);
  mixing << 1, 0.5, 0, 0, 1, 0.5, 0.5, 0, 1;
  RngStream data(20);
  const Matrix x = mixed_uniform(data, 2000, mixing);
  RngStream r1(21), r2(21);
  const ComponentSet a = ica_fit(x, 3, r1);
  const ComponentSet b = ica_fit(x, 3, r2);
  EXPECT_EQ(std::memcmp(a.components.data(), b.components.data(), sizeof(double) * 9), 0);
  EXPECT_EQ(a.iterations_used, b.iterations_used);
}

TEST(Ica, SmallSampleWarning) {
  RngStream rng(30);
  const Matrix x = mixed_uniform(rng, 25, Matrix::Identity(3, 3));
  IcaOptions opts;
  opts.max_iterations = 2000;
  try {
    const ComponentSet cs = ica_fit(x, 3, rng, opts);
    EXPECT_FALSE(cs.warnings.empty());
  } catch (const IcaConvergenceError& e) {
    EXPECT_FALSE(e.best().warnings.empty());
  }
}

TEST(Ica, ReducedDimensionFit) {
  RngStream rng(31);
  Matrix mixing = sample_gaussian(rng, 5, 5) + 2.0 * Matrix::Identity(5, 5);
  const Matrix x = mixed_uniform(rng, 5000, mixing);
  const ComponentSet cs = ica_fit(x, 3, rng);
  EXPECT_EQ(cs.size(), 3u);
  EXPECT_EQ(cs.dim(), 5u);
}

TEST(Statistics, KurtosisAndJarqueBeraOfKnownColumns) {
  Matrix two_point(1000, 1);
  for (Eigen::Index i = 0; i < 1000; ++i) two_point(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
  // symmetric two-point distribution: excess kurtosis -2, JB = n/6 * 0.25 * 4
  EXPECT_NEAR(excess_kurtosis(two_point)(0), -2.0, 1e-12);
  EXPECT_NEAR(jarque_bera(two_point)(0), 1000.0 / 6.0, 1e-9);

  RngStream rng(40);
  const Matrix g = sample_gaussian(rng, 5000, 1);
  EXPECT_LT(jarque_bera(g)(0), kGaussianJarqueBera);
}

TEST(Method, RoundTripsNames) {
  EXPECT_EQ(parse_method(to_string(Method::Pca)), Method::Pca);
  EXPECT_EQ(parse_method(to_string(Method::Ica)), Method::Ica);
  EXPECT_THROW(parse_method("svd"), PreconditionError);
}
