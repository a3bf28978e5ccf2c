#pragma once

// Toy generators with an addressable intermediate feature tap.
//
//   LinearMixer:  feature = M1 z,        output = M2 feature   (M = M2 M1)
//   TwoLayerMlp:  feature = tanh(W1 z),  output = W2 feature
//
// Weights are drawn from the generator's own RngStream in a fixed order
// (tap weights row by row, then head weights, then factor directions), each
// entry N(0, 1) / sqrt(fan_in).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latentdir/numerics.hpp"

namespace latentdir {

enum class GeneratorKind { LinearMixer, TwoLayerMlp };

/// Distribution latents are drawn from. IndependentFactors draws
/// s_i ~ U[-sqrt(3), sqrt(3)] independently and sets z = F^T s, so each
/// ground-truth factor direction (row of F) moves exactly one source.
enum class LatentPrior { Gaussian, IndependentFactors };

std::string_view to_string(GeneratorKind k);
std::string_view to_string(LatentPrior p);
GeneratorKind parse_generator_kind(std::string_view s);
LatentPrior parse_latent_prior(std::string_view s);

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::LinearMixer;
  LatentPrior prior = LatentPrior::Gaussian;
  std::size_t latent_dim = 8;
  std::size_t feature_dim = 32;
  std::size_t output_dim = 256;
  std::uint64_t seed = 1;
};

struct GroundTruthFactors {
  Matrix directions;  ///< latent_dim x latent_dim, unit rows, invertible
  std::vector<std::string> descriptions;
};

class GeneratorModel {
 public:
  explicit GeneratorModel(const GeneratorConfig& config);

  const GeneratorConfig& config() const noexcept { return config_; }
  GeneratorKind kind() const noexcept { return config_.kind; }
  std::size_t latent_dim() const noexcept { return config_.latent_dim; }
  std::size_t feature_dim() const noexcept { return config_.feature_dim; }
  std::size_t output_dim() const noexcept { return config_.output_dim; }

  /// Batch forward pass; one latent per row.
  Matrix forward(const Matrix& z) const;
  Vector forward(const Vector& z) const;
  /// Intermediate activations (the tap) for a batch of latents.
  Matrix feature_tap(const Matrix& z) const;
  /// Layers after the tap: forward(z) == from_features(feature_tap(z)).
  Matrix from_features(const Matrix& features) const;

  /// d output / d z at a single latent, output_dim x latent_dim.
  Matrix jacobian(const Vector& z) const;

  Matrix sample_latents(RngStream& rng, std::size_t n) const;

  /// Only for the IndependentFactors prior.
  const std::optional<GroundTruthFactors>& ground_truth() const noexcept {
    return factors_;
  }

  const Matrix& tap_weights() const noexcept { return tap_; }
  const Matrix& head_weights() const noexcept { return head_; }
  /// Full latent-to-output map of a LinearMixer (M2 M1).
  Matrix linear_map() const;

 private:
  void check_latent_width(Eigen::Index cols) const;

  GeneratorConfig config_;
  Matrix tap_;   // feature_dim x latent_dim
  Matrix head_;  // output_dim x feature_dim
  std::optional<GroundTruthFactors> factors_;
};

/// Grayscale strip of square tiles, one per strength value, left to right.
/// `values` holds the strip-normalized intensities in [0, 1], row-major over
/// the whole strip; padding pixels are 0.
struct ImageStrip {
  std::size_t tile_side = 0;
  std::size_t tiles = 0;
  std::vector<double> alphas;
  std::vector<double> values;

  std::size_t width() const noexcept { return tile_side * tiles; }
  std::size_t height() const noexcept { return tile_side; }
  double at(std::size_t row, std::size_t col) const { return values[row * width() + col]; }

  /// Binary PGM (P5, maxval 255).
  std::string to_pgm() const;
};

/// Renders forward(z + alpha * direction) for each alpha. Each output vector
/// becomes a ceil(sqrt(output_dim))-wide square tile, and min-max
/// normalization runs over the whole strip rather than per tile.
ImageStrip render_strip(const GeneratorModel& g, const Vector& z, const Vector& direction,
                        const std::vector<double>& alphas);

/// Single tile of forward(z).
ImageStrip render_tile(const GeneratorModel& g, const Vector& z);

}  // namespace latentdir
