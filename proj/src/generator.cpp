#include "latentdir/generator.hpp"

#include <cmath>

#include "latentdir/errors.hpp"

namespace latentdir {
namespace {

constexpr double kFactorCoupling = 0.5;
constexpr double kMaxFactorCondition = 10.0;

Matrix scaled_gaussian(RngStream& rng, std::size_t rows, std::size_t cols) {
  return sample_gaussian(rng, rows, cols) / std::sqrt(static_cast<double>(cols));
}

// Rows are unit-normalized perturbations of the latent axes; redrawn until
// the condition number is at most kMaxFactorCondition.
GroundTruthFactors draw_factors(RngStream& rng, std::size_t d) {
  const auto dd = static_cast<Eigen::Index>(d);
  for (;;) {
    Matrix f = Matrix::Identity(dd, dd) + kFactorCoupling * scaled_gaussian(rng, d, d);
    for (Eigen::Index i = 0; i < dd; ++i) f.row(i).normalize();
    const Vector sv = Eigen::JacobiSVD<Matrix>(f).singularValues();
    if (sv(dd - 1) > 0.0 && sv(0) / sv(dd - 1) <= kMaxFactorCondition) {
      GroundTruthFactors out;
      out.directions = std::move(f);
      for (std::size_t i = 0; i < d; ++i) {
        out.descriptions.push_back("factor " + std::to_string(i) +
                                   ": independent uniform source");
      }
      return out;
    }
  }
}

}  // namespace

std::string_view to_string(GeneratorKind k) {
  return k == GeneratorKind::LinearMixer ? "linear" : "mlp";
}

std::string_view to_string(LatentPrior p) {
  return p == LatentPrior::Gaussian ? "gaussian" : "factors";
}

GeneratorKind parse_generator_kind(std::string_view s) {
  if (s == "linear") return GeneratorKind::LinearMixer;
  if (s == "mlp") return GeneratorKind::TwoLayerMlp;
  throw PreconditionError("unknown generator kind '" + std::string(s) + "'");
}

LatentPrior parse_latent_prior(std::string_view s) {
  if (s == "gaussian") return LatentPrior::Gaussian;
  if (s == "factors") return LatentPrior::IndependentFactors;
  throw PreconditionError("unknown latent prior '" + std::string(s) + "'");
}

GeneratorModel::GeneratorModel(const GeneratorConfig& config) : config_(config) {
  if (config.latent_dim == 0 || config.feature_dim == 0 || config.output_dim == 0) {
    throw PreconditionError("GeneratorModel: all dimensions must be >= 1");
  }
  if (config.kind == GeneratorKind::LinearMixer &&
      (config.feature_dim < config.latent_dim || config.output_dim < config.latent_dim)) {
    throw PreconditionError(
        "GeneratorModel: LinearMixer needs feature_dim and output_dim >= latent_dim "
        "for a full-column-rank mixing");
  }
  RngStream rng(config.seed);
  tap_ = scaled_gaussian(rng, config.feature_dim, config.latent_dim);
  head_ = scaled_gaussian(rng, config.output_dim, config.feature_dim);
  if (config.prior == LatentPrior::IndependentFactors) {
    factors_ = draw_factors(rng, config.latent_dim);
  }
}

void GeneratorModel::check_latent_width(Eigen::Index cols) const {
  if (static_cast<std::size_t>(cols) != config_.latent_dim) {
    throw DimensionError("generator: latent width " + std::to_string(cols) +
                         " does not match latent_dim " +
                         std::to_string(config_.latent_dim));
  }
}

Matrix GeneratorModel::feature_tap(const Matrix& z) const {
  check_latent_width(z.cols());
  Matrix pre = z * tap_.transpose();
  if (config_.kind == GeneratorKind::TwoLayerMlp) pre = pre.array().tanh().matrix();
  return pre;
}

Matrix GeneratorModel::from_features(const Matrix& features) const {
  if (static_cast<std::size_t>(features.cols()) != config_.feature_dim) {
    throw DimensionError("generator: feature width does not match feature_dim");
  }
  return features * head_.transpose();
}

Matrix GeneratorModel::forward(const Matrix& z) const { return from_features(feature_tap(z)); }

Vector GeneratorModel::forward(const Vector& z) const {
  return forward(Matrix(z.transpose())).row(0).transpose();
}

Matrix GeneratorModel::jacobian(const Vector& z) const {
  check_latent_width(z.size());
  if (config_.kind == GeneratorKind::LinearMixer) return linear_map();
  const Vector act = (tap_ * z).array().tanh().matrix();
  const Vector slope = (1.0 - act.array().square()).matrix();
  return head_ * slope.asDiagonal() * tap_;
}

Matrix GeneratorModel::linear_map() const {
  if (config_.kind != GeneratorKind::LinearMixer) {
    throw PreconditionError("linear_map: generator is not a LinearMixer");
  }
  return head_ * tap_;
}

Matrix GeneratorModel::sample_latents(RngStream& rng, std::size_t n) const {
  if (config_.prior == LatentPrior::Gaussian) {
    return sample_gaussian(rng, n, config_.latent_dim);
  }
  const double r = std::sqrt(3.0);
  return sample_uniform(rng, n, config_.latent_dim, -r, r) * factors_->directions;
}

}  // namespace latentdir
