#pragma once

// Direction discovery (directly in latent space, or at the feature tap with
// least-squares back-projection), latent edits, and basis files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "latentdir/decomposition.hpp"
#include "latentdir/generator.hpp"
#include "latentdir/numerics.hpp"

namespace latentdir {

enum class DiscoverySpace { Latent, FeatureTap };

std::string_view to_string(DiscoverySpace s);
DiscoverySpace parse_space(std::string_view s);

struct ConfigFingerprint {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t components = 0;

  bool operator==(const ConfigFingerprint&) const = default;
};

/// K unit-norm latent edit directions plus the discovery-space artifacts.
struct DirectionBasis {
  DiscoverySpace space = DiscoverySpace::Latent;
  Method method = Method::Pca;
  std::size_t latent_dim = 0;
  std::size_t feature_dim = 0;
  Matrix latent_directions;                 ///< U, K x latent_dim
  std::optional<Matrix> feature_directions;  ///< V, K x feature_dim (FeatureTap only)
  Vector mean;                               ///< centre in the discovery space
  ConfigFingerprint fingerprint;

  std::size_t size() const noexcept { return static_cast<std::size_t>(latent_directions.rows()); }
  Vector direction(std::size_t k) const;

  bool operator==(const DirectionBasis& other) const;
};

/// Basis plus the decomposition it came from (variances, kurtosis, warnings).
struct Discovery {
  DirectionBasis basis;
  ComponentSet fit;
};

/// Fits PCA/ICA on n sampled latents. PCA directions are the components;
/// ICA directions are the mixing patterns, so that moving along direction k
/// changes only recovered source k.
Discovery discover_latent(const GeneratorModel& g, std::size_t n, std::size_t k,
                          Method method, RngStream& rng, const IcaOptions& ica = {});

/// Fits PCA/ICA on the feature tap of n sampled latents, then solves
/// U = argmin sum_j || U^T x_j - (z_j - mean z) ||^2 where x_j = V (f_j - mu),
/// and unit-normalizes the rows of U.
Discovery discover_feature_tap(const GeneratorModel& g, std::size_t n, std::size_t k,
                               Method method, RngStream& rng, const IcaOptions& ica = {});

struct StrengthRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ManipulationSpec {
  std::size_t index = 0;
  double alpha = 0.0;
};

/// z + alpha * u_k.
Vector apply_direction(const Vector& z, const DirectionBasis& basis,
                       const ManipulationSpec& spec);

inline constexpr int kBasisFormatVersion = 1;

std::string basis_to_json(const DirectionBasis& basis);
/// Throws FormatError on malformed JSON (with byte offset), unknown or
/// missing fields, version mismatch, checksum mismatch or shape errors.
DirectionBasis basis_from_json(std::string_view text);

void save_basis(const DirectionBasis& basis, const std::filesystem::path& path);
DirectionBasis load_basis(const std::filesystem::path& path);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace latentdir
