#include "latentdir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "latentdir/errors.hpp"

namespace latentdir {
namespace {

constexpr double kCovarianceJitter = 1e-10;

}  // namespace

GaussianStats fit_gaussian(const Matrix& x) {
  if (x.rows() < 2) throw PreconditionError("fit_gaussian: need n >= 2 samples");
  GaussianStats s;
  s.mean = column_mean(x);
  s.covariance = sample_covariance(x);
  s.n = static_cast<std::size_t>(x.rows());
  return s;
}

FidScore frechet_distance(const GaussianStats& a, const GaussianStats& b,
                          std::string embed_id) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows() ||
      a.covariance.rows() != a.mean.size()) {
    throw DimensionError("frechet_distance: statistics have different dimensions");
  }
  const Eigen::Index d = a.mean.size();
  const Matrix jitter = kCovarianceJitter * Matrix::Identity(d, d);
  const Matrix sa = a.covariance + jitter;
  const Matrix sb = b.covariance + jitter;

  const Matrix root_a = spd_sqrt(sa);
  Matrix inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = spd_sqrt(inner).trace();

  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * cross;

  FidScore out;
  out.value = std::max(value, 0.0);
  out.embed_id = std::move(embed_id);
  out.n1 = a.n;
  out.n2 = b.n;
  return out;
}

double amari_index(const Matrix& p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw DimensionError("amari_index: matrix must be square and non-empty");
  }
  const Matrix m = p.cwiseAbs();
  const Eigen::Index d = m.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mx = m.row(i).maxCoeff();
    if (!(mx > 0.0)) throw PreconditionError("amari_index: all-zero row");
    total += m.row(i).sum() / mx - 1.0;
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mx = m.col(j).maxCoeff();
    if (!(mx > 0.0)) throw PreconditionError("amari_index: all-zero column");
    total += m.col(j).sum() / mx - 1.0;
  }
  if (d == 1) return 0.0;
  return total / (2.0 * static_cast<double>(d) * static_cast<double>(d - 1));
}

double matched_amari_index(const Matrix& p, std::size_t count) {
  const auto pairs_possible = static_cast<std::size_t>(std::min(p.rows(), p.cols()));
  if (count == 0 || count > pairs_possible) {
    throw PreconditionError("matched_amari_index: count must be in [1, min(rows, cols)]");
  }
  Matrix score = p.cwiseAbs();
  for (Eigen::Index i = 0; i < score.rows(); ++i) {
    const double norm = p.row(i).norm();
    if (!(norm > 0.0)) throw PreconditionError("matched_amari_index: all-zero row");
    score.row(i) /= norm;
  }

  struct Pair {
    Eigen::Index row, col;
    double score;
  };
  std::vector<Pair> pairs;
  std::vector<bool> row_used(static_cast<std::size_t>(p.rows()), false);
  std::vector<bool> col_used(static_cast<std::size_t>(p.cols()), false);
  for (std::size_t step = 0; step < pairs_possible; ++step) {
    Pair best{-1, -1, -1.0};
    for (Eigen::Index i = 0; i < score.rows(); ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < score.cols(); ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (score(i, j) > best.score) best = {i, j, score(i, j)};
      }
    }
    row_used[static_cast<std::size_t>(best.row)] = true;
    col_used[static_cast<std::size_t>(best.col)] = true;
    pairs.push_back(best);
  }
  // Greedy selection already yields pairs in descending score order.
  Matrix sub(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t b = 0; b < count; ++b)
      sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          p(pairs[a].row, pairs[b].col);
  return amari_index(sub);
}

Matrix factor_alignment(const Matrix& directions, const Matrix& factors) {
  if (factors.rows() != factors.cols() || directions.cols() != factors.cols()) {
    throw DimensionError("factor_alignment: factors must be square with the direction width");
  }
  // P F = U  <=>  F^T P^T = U^T
  const LeastSquaresResult ls = least_squares(factors.transpose(), directions.transpose());
  if (ls.rank_deficient) throw RankError("factor_alignment: factors are singular", ls.rank);
  return ls.solution.transpose();
}

// ---------------------------------------------------------------------------

Embedder Embedder::identity(std::size_t dim) {
  if (dim == 0) throw PreconditionError("Embedder: dimension must be >= 1");
  Embedder e;
  e.kind_ = EmbedderKind::Identity;
  e.input_dim_ = dim;
  e.output_dim_ = dim;
  e.id_ = "identity-" + std::to_string(dim);
  return e;
}

Embedder Embedder::random_projection(std::size_t input_dim, std::size_t output_dim,
                                     std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) {
    throw PreconditionError("Embedder: dimensions must be >= 1");
  }
  Embedder e;
  e.kind_ = EmbedderKind::SeededRandomProjection;
  e.input_dim_ = input_dim;
  e.output_dim_ = output_dim;
  RngStream rng(seed);
  e.weights_ = sample_gaussian(rng, output_dim, input_dim) /
               std::sqrt(static_cast<double>(input_dim));
  e.id_ = "randproj-tanh-" + std::to_string(input_dim) + "x" + std::to_string(output_dim) +
          "-seed" + std::to_string(seed);
  return e;
}

Matrix Embedder::embed(const Matrix& y) const {
  if (static_cast<std::size_t>(y.cols()) != input_dim_) {
    throw DimensionError("Embedder: input width " + std::to_string(y.cols()) +
                         " does not match " + std::to_string(input_dim_));
  }
  if (kind_ == EmbedderKind::Identity) return y;
  return (y * weights_.transpose()).array().tanh().matrix();
}

FidScore evaluate_manipulations(const GeneratorModel& g, const DirectionBasis& basis,
                                std::size_t n, const StrengthRange& alpha,
                                const Embedder& embedder, RngStream& rng) {
  if (n < 2) throw PreconditionError("evaluate_manipulations: need n >= 2");
  if (!(alpha.lo <= alpha.hi)) {
    throw PreconditionError("evaluate_manipulations: alpha bounds must satisfy lo <= hi");
  }
  if (basis.latent_dim != g.latent_dim()) {
    throw DimensionError("evaluate_manipulations: basis and generator latent dims differ");
  }
  RngStream latent_rng = rng.split();
  RngStream index_rng = rng.split();
  RngStream alpha_rng = rng.split();

  const Matrix z = g.sample_latents(latent_rng, n);
  Matrix edited = z;
  for (Eigen::Index i = 0; i < edited.rows(); ++i) {
    const std::size_t k = index_rng.below(basis.size());
    const double a = alpha_rng.uniform(alpha.lo, alpha.hi);
    edited.row(i) += a * basis.latent_directions.row(static_cast<Eigen::Index>(k));
  }

  const GaussianStats original = fit_gaussian(embedder.embed(g.forward(z)));
  const GaussianStats transformed = fit_gaussian(embedder.embed(g.forward(edited)));
  return frechet_distance(original, transformed, embedder.id());
}

}  // namespace latentdir
