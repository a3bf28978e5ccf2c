#include "latentdir/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <string_view>
#include <vector>

#include "latentdir/errors.hpp"

namespace latentdir {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTol = 1e-12;
constexpr double kSymmetryTol = 1e-9;
constexpr double kPsdTol = 1e-8;
constexpr double kSingularCutoff = 1e-10;
constexpr double kRankCutoff = 1e-12;

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw PreconditionError(std::string(what) + ": non-finite entry");
  }
}

// Test hook: LD_FAULT=spd_sqrt_sign makes spd_sqrt return -S.
bool fault_flip_sqrt_sign() {
  const char* v = std::getenv("LD_FAULT");
  return v != nullptr && std::string_view(v) == "spd_sqrt_sign";
}

}  // namespace

// ---------------------------------------------------------------------------
// RngStream

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t RngStream::below(std::size_t bound) {
  if (bound == 0) throw PreconditionError("RngStream::below: bound must be >= 1");
  const std::uint64_t b = bound;
  const std::uint64_t threshold = (0 - b) % b;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % b);
  }
}

RngStream RngStream::split() { return RngStream(next_u64()); }

// ---------------------------------------------------------------------------
// Eigen decomposition

EigenDecomposition sym_eig(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError("sym_eig: matrix must be square and non-empty");
  }
  require_finite(a, "sym_eig");
  const double amax = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(amax, 1e-300)) {
    throw SymmetryError("sym_eig: matrix is not symmetric");
  }

  const Eigen::Index n = a.rows();
  Matrix m = 0.5 * (a + a.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double norm = m.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (;; ++sweep) {
    if (off_norm() <= kOffDiagonalTol * norm) break;
    if (sweep == kMaxSweeps) {
      throw ConvergenceError("sym_eig: no convergence after 100 Jacobi sweeps");
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) /
              (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return m(i, i) > m(j, j);
  });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  out.sweeps = sweep;
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    out.values(c) = m(src, src);
    Vector col = v.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.vectors.col(c) = col;
  }
  return out;
}

Matrix spd_sqrt(const Matrix& a) {
  const EigenDecomposition eig = sym_eig(a);
  const double lmax = eig.values(0);
  const double floor = -kPsdTol * std::max(1.0, std::abs(lmax));
  Vector roots(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double l = eig.values(i);
    if (l < floor) {
      throw NotPsdError("spd_sqrt: eigenvalue " + std::to_string(l) +
                        " is below the PSD tolerance");
    }
    roots(i) = std::sqrt(std::max(l, 0.0));
  }
  Matrix s = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  s = 0.5 * (s + s.transpose());
  if (fault_flip_sqrt_sign()) s = -s;
  return s;
}

// ---------------------------------------------------------------------------
// Least squares

LeastSquaresResult least_squares(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("least_squares: a and b must have the same row count");
  }
  if (a.rows() < a.cols() || a.cols() == 0 || b.cols() == 0) {
    throw PreconditionError("least_squares: need a.rows >= a.cols >= 1");
  }
  require_finite(a, "least_squares");
  require_finite(b, "least_squares");

  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = kSingularCutoff * (sv.size() > 0 ? sv(0) : 0.0);

  LeastSquaresResult out;
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut && sv(i) > 0.0) {
      inv(i) = 1.0 / sv(i);
      ++out.rank;
    }
  }
  out.rank_deficient = out.rank < static_cast<std::size_t>(a.cols());
  out.solution =
      svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * b);
  return out;
}

// ---------------------------------------------------------------------------
// Moments, whitening, sampling

Vector column_mean(const Matrix& x) {
  if (x.rows() == 0) throw PreconditionError("column_mean: empty sample");
  return x.colwise().mean().transpose();
}

Matrix sample_covariance(const Matrix& x) {
  if (x.rows() < 2) throw PreconditionError("sample_covariance: need n >= 2");
  const Matrix centered = x.rowwise() - column_mean(x).transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

std::size_t numerical_rank(const Vector& values, double abs_floor) {
  if (values.size() == 0 || values(0) <= abs_floor) return 0;
  const double cut = std::max(kRankCutoff * values(0), abs_floor);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > cut) ++r;
  }
  return r;
}

double centering_floor(const Matrix& x) {
  const double scale = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  return (1e-12 * scale) * (1e-12 * scale);
}

Whitening whiten(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw PreconditionError("whiten: need n >= 2");
  if (k == 0) throw PreconditionError("whiten: k must be >= 1");
  require_finite(x, "whiten");
  const std::size_t bound = std::min(n - 1, d);
  if (k > bound) {
    throw RankError("whiten: k=" + std::to_string(k) + " exceeds min(n-1, d)", bound);
  }

  Whitening out;
  out.mean = column_mean(x);
  const Matrix centered = x.rowwise() - out.mean.transpose();
  const Matrix cov = sample_covariance(x);
  const EigenDecomposition eig = sym_eig(cov);
  const std::size_t rank = numerical_rank(eig.values, centering_floor(x));
  if (k > rank) {
    throw RankError("whiten: k=" + std::to_string(k) + " exceeds the numerical rank",
                    rank);
  }

  const auto kk = static_cast<Eigen::Index>(k);
  out.variances = eig.values.head(kk);
  out.map = out.variances.cwiseSqrt().cwiseInverse().asDiagonal() *
            eig.vectors.leftCols(kk).transpose();
  out.whitened = centered * out.map.transpose();
  return out;
}

Matrix sample_gaussian(RngStream& rng, std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) throw PreconditionError("sample_gaussian: n and d must be >= 1");
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rng.gaussian();
  return out;
}

Matrix sample_uniform(RngStream& rng, std::size_t n, std::size_t d, double lo,
                      double hi) {
  if (n == 0 || d == 0) throw PreconditionError("sample_uniform: n and d must be >= 1");
  if (!(lo <= hi)) throw PreconditionError("sample_uniform: need lo <= hi");
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rng.uniform(lo, hi);
  return out;
}

}  // namespace latentdir
