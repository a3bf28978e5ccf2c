#pragma once

// Dense linear-algebra kernels and the seeded random stream used by every
// other module. Samples are stored one per row.

#include <array>
#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace latentdir {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues in descending order; eigenvectors are the matching columns.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
  int sweeps = 0;
};

/// xoshiro256** seeded through splitmix64. Gaussian draws use the
/// Box-Muller transform with the second value cached, so the sequence is a
/// pure function of the seed on any IEEE-754 platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  double gaussian();
  /// Uniform integer on [0, bound).
  std::size_t below(std::size_t bound);

  /// Independent child stream seeded from this stream's next output.
  RngStream split();

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. At most 100 sweeps;
/// stops once the off-diagonal Frobenius norm is below 1e-12 * ||a||_F.
/// Each eigenvector is sign-normalized so its largest-magnitude entry is
/// positive.
EigenDecomposition sym_eig(const Matrix& a);

/// Principal square root of a symmetric PSD matrix. Eigenvalues down to
/// -1e-8 * max(1, lambda_max) are clamped to zero; anything more negative
/// raises NotPsdError.
Matrix spd_sqrt(const Matrix& a);

struct LeastSquaresResult {
  Matrix solution;
  std::size_t rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm minimizer of ||a X - b||_F. Singular values below
/// 1e-10 * sigma_max are treated as zero and flagged.
LeastSquaresResult least_squares(const Matrix& a, const Matrix& b);

struct Whitening {
  Matrix whitened;  ///< n x k
  Matrix map;       ///< k x d, whitened = (x - mean) * map^T
  Vector mean;
  Vector variances;  ///< covariance eigenvalues for the kept directions
};

/// PCA whitening to k dimensions with the n-1 covariance convention.
Whitening whiten(const Matrix& x, std::size_t k);

Vector column_mean(const Matrix& x);
/// Sample covariance with divisor n-1.
Matrix sample_covariance(const Matrix& x);

/// Number of covariance eigenvalues above max(1e-12 * lambda_max, abs_floor).
std::size_t numerical_rank(const Vector& descending_eigenvalues,
                           double abs_floor = 0.0);

/// Covariance level left behind by rounding when centering samples of the
/// magnitude found in x; eigenvalues at or below it count as zero.
double centering_floor(const Matrix& x);

Matrix sample_gaussian(RngStream& rng, std::size_t n, std::size_t d);
Matrix sample_uniform(RngStream& rng, std::size_t n, std::size_t d, double lo,
                      double hi);

}  // namespace latentdir
