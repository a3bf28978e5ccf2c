#include "latentdir/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace latentdir {
namespace {

// (W W^T)^{-1/2} W
Matrix symmetric_decorrelation(const Matrix& w) {
  const EigenDecomposition eig = sym_eig(w * w.transpose());
  const Vector inv_root = eig.values.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.vectors * inv_root.asDiagonal() * eig.vectors.transpose() * w;
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
}

std::size_t check_sizes(const Matrix& x, std::size_t k, const char* who) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw PreconditionError(std::string(who) + ": need n >= 2 samples");
  if (k == 0) throw PreconditionError(std::string(who) + ": k must be >= 1");
  const std::size_t bound = std::min(n - 1, d);
  if (k > bound) {
    throw RankError(std::string(who) + ": k=" + std::to_string(k) +
                        " exceeds min(n-1, d)",
                    bound);
  }
  return bound;
}

struct IcaAttempt {
  Matrix w;
  double last_change = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

IcaAttempt run_fastica(const Matrix& white, RngStream& rng, const IcaOptions& opt) {
  const Eigen::Index k = white.cols();
  const double n = static_cast<double>(white.rows());
  IcaAttempt a;
  a.w = symmetric_decorrelation(
      sample_gaussian(rng, static_cast<std::size_t>(k), static_cast<std::size_t>(k)));
  a.last_change = std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    const Matrix g = (white * a.w.transpose()).array().tanh().matrix();
    const Vector g_prime_mean =
        (1.0 - g.array().square()).matrix().colwise().mean().transpose();
    Matrix next = (g.transpose() * white) / n - g_prime_mean.asDiagonal() * a.w;
    next = symmetric_decorrelation(next);

    const Vector overlap = (next.array() * a.w.array()).rowwise().sum();
    a.last_change = (overlap.cwiseAbs().array() - 1.0).abs().maxCoeff();
    a.w = std::move(next);
    a.iterations = it;
    if (a.last_change < opt.tolerance) {
      a.converged = true;
      break;
    }
  }
  return a;
}

ComponentSet assemble_ica(const Whitening& wh, const IcaAttempt& a,
                          std::size_t restarts) {
  const Matrix filters = a.w * wh.map;
  // pinv(map) = E diag(sqrt(lambda)); mixing = pinv(map) * W^T.
  const Matrix unwhiten = wh.map.transpose() * wh.variances.asDiagonal();
  const Matrix mixing = (unwhiten * a.w.transpose()).transpose();
  const Matrix sources = wh.whitened * a.w.transpose();

  const Vector kurt = excess_kurtosis(sources);
  const Vector jb = jarque_bera(sources);
  const auto k = static_cast<std::size_t>(kurt.size());

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(kurt(static_cast<Eigen::Index>(i))) >
           std::abs(kurt(static_cast<Eigen::Index>(j)));
  });

  ComponentSet cs;
  cs.method = Method::Ica;
  cs.mean = wh.mean;
  cs.components.resize(filters.rows(), filters.cols());
  cs.patterns.resize(mixing.rows(), mixing.cols());
  cs.kurtosis.resize(kurt.size());
  for (std::size_t r = 0; r < k; ++r) {
    const auto src = static_cast<Eigen::Index>(order[r]);
    const auto dst = static_cast<Eigen::Index>(r);
    Vector f = filters.row(src).transpose();
    Vector p = mixing.row(src).transpose();
    Eigen::Index arg = 0;
    f.cwiseAbs().maxCoeff(&arg);
    if (f(arg) < 0.0) {
      f = -f;
      p = -p;
    }
    cs.components.row(dst) = f.transpose();
    cs.patterns.row(dst) = p.transpose();
    cs.kurtosis(dst) = kurt(src);
  }
  normalize_rows(cs.components);
  normalize_rows(cs.patterns);

  cs.iterations_used = a.iterations;
  cs.restarts_used = restarts;
  cs.converged = a.converged;

  const auto gaussian_like = static_cast<std::size_t>(
      (jb.array() < kGaussianJarqueBera).count());
  if (gaussian_like >= 2) {
    cs.unidentifiable = true;
    cs.warnings.push_back(
        std::to_string(gaussian_like) +
        " recovered sources are indistinguishable from Gaussian; independent "
        "components are not identifiable when more than one source is Gaussian");
  }
  return cs;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::Pca ? "pca" : "ica"; }

Method parse_method(std::string_view s) {
  if (s == "pca" || s == "PCA") return Method::Pca;
  if (s == "ica" || s == "ICA") return Method::Ica;
  throw PreconditionError("unknown method '" + std::string(s) + "'");
}

Matrix ComponentSet::project(const Matrix& x) const {
  if (x.cols() != components.cols()) {
    throw DimensionError("ComponentSet::project: sample width does not match");
  }
  return (x.rowwise() - mean.transpose()) * components.transpose();
}

Vector excess_kurtosis(const Matrix& sources) {
  Vector out(sources.cols());
  for (Eigen::Index j = 0; j < sources.cols(); ++j) {
    const Eigen::ArrayXd c = sources.col(j).array() - sources.col(j).mean();
    const double m2 = c.square().mean();
    const double m4 = c.square().square().mean();
    out(j) = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  }
  return out;
}

Vector jarque_bera(const Matrix& sources) {
  const double n = static_cast<double>(sources.rows());
  Vector out(sources.cols());
  for (Eigen::Index j = 0; j < sources.cols(); ++j) {
    const Eigen::ArrayXd c = sources.col(j).array() - sources.col(j).mean();
    const double m2 = c.square().mean();
    if (m2 <= 0.0) {
      out(j) = 0.0;
      continue;
    }
    const double skew = c.cube().mean() / std::pow(m2, 1.5);
    const double kurt = c.square().square().mean() / (m2 * m2) - 3.0;
    out(j) = n / 6.0 * (skew * skew + 0.25 * kurt * kurt);
  }
  return out;
}

ComponentSet pca_fit(const Matrix& x, std::size_t k) {
  check_sizes(x, k, "pca_fit");
  if (!x.allFinite()) throw PreconditionError("pca_fit: non-finite sample");

  const EigenDecomposition eig = sym_eig(sample_covariance(x));
  const std::size_t rank = numerical_rank(eig.values, centering_floor(x));
  if (rank == 0) {
    throw RankError("pca_fit: sample has no variance", 0);
  }

  const auto kk = static_cast<Eigen::Index>(k);
  ComponentSet cs;
  cs.method = Method::Pca;
  cs.mean = column_mean(x);
  cs.components = eig.vectors.leftCols(kk).transpose();
  cs.patterns = cs.components;
  cs.variances = eig.values.head(kk).cwiseMax(0.0);
  if (k > rank) {
    for (std::size_t i = rank; i < k; ++i) cs.variances(static_cast<Eigen::Index>(i)) = 0.0;
    cs.warnings.push_back("components beyond numerical rank " + std::to_string(rank) +
                          " carry no variance");
  }
  return cs;
}

ComponentSet ica_fit(const Matrix& x, std::size_t k, RngStream& rng,
                     const IcaOptions& options) {
  check_sizes(x, k, "ica_fit");
  const Whitening wh = whiten(x, k);

  std::optional<IcaAttempt> best;
  std::size_t restarts = 0;
  for (std::size_t attempt = 0; attempt <= options.restarts; ++attempt) {
    IcaAttempt a = run_fastica(wh.whitened, rng, options);
    restarts = attempt;
    if (!best || a.last_change < best->last_change || a.converged) best = std::move(a);
    if (best->converged) break;
  }

  ComponentSet cs = assemble_ica(wh, *best, restarts);
  if (static_cast<std::size_t>(x.rows()) < 10 * k) {
    cs.warnings.push_back("n=" + std::to_string(x.rows()) + " is below 10*k=" +
                          std::to_string(10 * k) + "; estimates may be unstable");
  }
  if (!cs.converged) {
    throw IcaConvergenceError(
        "ica_fit: FastICA did not converge for k=" + std::to_string(k) + " after " +
            std::to_string(options.max_iterations) + " iterations and " +
            std::to_string(options.restarts) + " restarts",
        std::move(cs));
  }
  return cs;
}

}  // namespace latentdir
