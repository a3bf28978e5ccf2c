#include "latentdir/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "json.hpp"
#include "latentdir/decomposition.hpp"
#include "latentdir/directions.hpp"
#include "latentdir/errors.hpp"
#include "latentdir/generator.hpp"
#include "latentdir/metrics.hpp"

namespace latentdir {
namespace {

using CheckFn = std::function<double()>;

CheckResult run_check(const std::string& name, double threshold, const CheckFn& fn) {
  CheckResult r;
  r.name = name;
  r.threshold = threshold;
  try {
    r.value = fn();
    r.passed = std::isfinite(r.value) && r.value <= threshold;
  } catch (const std::exception& e) {
    r.passed = false;
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.detail = e.what();
  }
  return r;
}

GaussianStats stats(Vector mean, Matrix cov) {
  return {std::move(mean), std::move(cov), 1000};
}

// Plain Gaussian elimination with partial pivoting; kept separate from the
// SVD route used by least_squares.
Matrix solve_normal_equations(const Matrix& a, const Matrix& b) {
  Matrix lhs = a.transpose() * a;
  Matrix rhs = a.transpose() * b;
  const Eigen::Index n = lhs.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(lhs(r, c)) > std::abs(lhs(piv, c))) piv = r;
    lhs.row(c).swap(lhs.row(piv));
    rhs.row(c).swap(rhs.row(piv));
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double f = lhs(r, c) / lhs(c, c);
      lhs.row(r) -= f * lhs.row(c);
      rhs.row(r) -= f * rhs.row(c);
    }
  }
  Matrix x = Matrix::Zero(n, rhs.cols());
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    x.row(r) = (rhs.row(r) - lhs.row(r).tail(n - r - 1) * x.bottomRows(n - r - 1)) / lhs(r, r);
  }
  return x;
}

}  // namespace

bool VerifyReport::passed() const { return first_failure().empty(); }

std::string VerifyReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return c.name;
  return {};
}

std::string VerifyReport::to_json() const {
  nlohmann::json doc;
  doc["passed"] = passed();
  doc["seconds"] = seconds;
  doc["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json row;
    row["name"] = c.name;
    row["passed"] = c.passed;
    row["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    row["threshold"] = c.threshold;
    if (!c.detail.empty()) row["detail"] = c.detail;
    doc["checks"].push_back(std::move(row));
  }
  return doc.dump(2);
}

VerifyReport run_verification() {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  auto add = [&](const std::string& name, double threshold, const CheckFn& fn) {
    report.checks.push_back(run_check(name, threshold, fn));
  };

  add("fid_closed_form_identical", 1e-8, [] {
    const auto a = stats(Vector::Zero(3), Matrix::Identity(3, 3) * 2.0);
    return frechet_distance(a, a).value;
  });
  add("fid_closed_form_1d_mean_shift", 1e-8, [] {
    const auto a = stats(Vector::Constant(1, 0.0), Matrix::Identity(1, 1));
    const auto b = stats(Vector::Constant(1, 1.0), Matrix::Identity(1, 1));
    return std::abs(frechet_distance(a, b).value - 1.0);
  });
  add("fid_closed_form_2d_scale", 1e-8, [] {
    const auto a = stats(Vector::Zero(2), Matrix::Identity(2, 2));
    const auto b = stats(Vector::Zero(2), 4.0 * Matrix::Identity(2, 2));
    return std::abs(frechet_distance(a, b).value - 2.0);
  });

  add("sym_eig_reconstruction", 1e-8, [] {
    RngStream rng(2024);
    double worst = 0.0;
    for (std::size_t d : {2u, 5u, 16u, 40u}) {
      const Matrix b = sample_gaussian(rng, d, d);
      const Matrix a = b + b.transpose();
      const EigenDecomposition e = sym_eig(a);
      const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
      worst = std::max(worst, (rec - a).norm() / a.norm());
    }
    return worst;
  });
  add("spd_sqrt_reconstruction", 1e-7, [] {
    RngStream rng(77);
    const Matrix b = sample_gaussian(rng, 6, 6);
    const Matrix a = b * b.transpose();
    const Matrix s = spd_sqrt(a);
    return (s * s - a).norm() / a.norm();
  });
  add("least_squares_normal_equations", 1e-8, [] {
    RngStream rng(5);
    const Matrix a = sample_gaussian(rng, 10, 3);
    const Matrix b = sample_gaussian(rng, 10, 2);
    const Matrix x = least_squares(a, b).solution;
    return (x - solve_normal_equations(a, b)).cwiseAbs().maxCoeff();
  });

  add("amari_scaled_permutation", 1e-12, [] {
    Matrix p = Matrix::Zero(3, 3);
    p(0, 2) = 3.0;
    p(1, 0) = -0.5;
    p(2, 1) = 7.0;
    return amari_index(p);
  });
  add("ica_amari_recovery", 0.05, [] {
    RngStream rng(11);
    const double r = std::sqrt(3.0);
    const Matrix s = sample_uniform(rng, 5000, 2, -r, r);
    Matrix mixing(2, 2);
    mixing << 1.0, 1.0, 0.0, 1.0;
    const Matrix x = s * mixing.transpose();
    const ComponentSet cs = ica_fit(x, 2, rng);
    return amari_index(cs.components * mixing);
  });
  add("back_projection_parallelism", 1e-3, [] {
    GeneratorConfig cfg;
    cfg.latent_dim = 4;
    cfg.feature_dim = 16;
    cfg.output_dim = 16;
    cfg.seed = 3;
    const GeneratorModel g(cfg);
    RngStream rng(4);
    const Discovery d = discover_feature_tap(g, 2000, 4, Method::Pca, rng);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < 4; ++k) {
      const Vector pushed = g.tap_weights() * d.basis.latent_directions.row(k).transpose();
      const Vector v = d.basis.feature_directions->row(k).transpose();
      const double cos = std::abs(pushed.dot(v)) / (pushed.norm() * v.norm());
      worst = std::max(worst, 1.0 - cos);
    }
    return worst;
  });
  add("mlp_jacobian_finite_difference", 1e-5, [] {
    GeneratorConfig cfg;
    cfg.kind = GeneratorKind::TwoLayerMlp;
    cfg.latent_dim = 5;
    cfg.feature_dim = 12;
    cfg.output_dim = 9;
    cfg.seed = 8;
    const GeneratorModel g(cfg);
    RngStream rng(9);
    const Vector z = sample_gaussian(rng, 1, 5).row(0).transpose();
    const Matrix jac = g.jacobian(z);
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      Vector up = z, down = z;
      up(j) += h;
      down(j) -= h;
      const Vector fd = (g.forward(up) - g.forward(down)) / (2.0 * h);
      worst = std::max(worst, (fd - jac.col(j)).cwiseAbs().maxCoeff());
    }
    return worst;
  });

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace latentdir
