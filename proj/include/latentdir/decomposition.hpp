#pragma once

// PCA and FastICA fits over sample matrices (one sample per row).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "latentdir/errors.hpp"
#include "latentdir/numerics.hpp"

namespace latentdir {

enum class Method { Pca, Ica };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// Ranked set of K unit-norm directions in a d-dimensional sample space.
///
/// For PCA, `components` are covariance eigenvectors ordered by variance and
/// `patterns` is a copy of them. For ICA, `components` are the unmixing
/// filters (rows of W such that s = W (x - mean)), `patterns` are the
/// matching mixing columns (x - mean ~ sum_i s_i a_i), and both are ordered
/// by the magnitude of the recovered sources' excess kurtosis. A sign flip
/// applied to a filter is applied to its pattern too.
struct ComponentSet {
  Method method = Method::Pca;
  Matrix components;
  Matrix patterns;
  Vector mean;
  Vector variances;  // PCA only, descending, >= 0
  Vector kurtosis;   // ICA only
  std::size_t iterations_used = 0;
  std::size_t restarts_used = 0;
  bool converged = true;
  /// ICA only: two or more recovered sources are statistically
  /// indistinguishable from Gaussian, so the separation is not unique.
  bool unidentifiable = false;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return static_cast<std::size_t>(components.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(components.cols()); }

  /// Coordinates of x along the components: (x - mean) * components^T.
  /// For ICA these are the source estimates scaled by the filter norms.
  Matrix project(const Matrix& x) const;
};

ComponentSet pca_fit(const Matrix& x, std::size_t k);

struct IcaOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
  std::size_t restarts = 3;
};

/// Raised when FastICA fails on every restart. Carries the iterate whose
/// final update was smallest.
class IcaConvergenceError : public ConvergenceError {
 public:
  IcaConvergenceError(const std::string& what, ComponentSet best)
      : ConvergenceError(what), best_(std::move(best)) {}

  const ComponentSet& best() const noexcept { return best_; }

 private:
  ComponentSet best_;
};

/// Parallel FastICA with the logcosh contrast (g = tanh) on PCA-whitened
/// data. Convergence: max_i |1 - |<w_i+, w_i>|| < tolerance.
ComponentSet ica_fit(const Matrix& x, std::size_t k, RngStream& rng,
                     const IcaOptions& options = {});

/// Excess kurtosis of each column.
Vector excess_kurtosis(const Matrix& sources);

/// Jarque-Bera statistic of each column; ~chi^2(2) for Gaussian columns.
Vector jarque_bera(const Matrix& sources);

/// JB values below this are treated as Gaussian (chi^2(2) upper tail 1e-6).
inline constexpr double kGaussianJarqueBera = 27.63;

}  // namespace latentdir
