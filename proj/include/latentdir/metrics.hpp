#pragma once

// Frechet distance between embedded sample sets, and the Amari index used to
// score recovered directions against known factors.

#include <cstddef>
#include <cstdint>
#include <string>

#include "latentdir/directions.hpp"
#include "latentdir/generator.hpp"
#include "latentdir/numerics.hpp"

namespace latentdir {

struct GaussianStats {
  Vector mean;
  Matrix covariance;  // divisor n-1
  std::size_t n = 0;
};

GaussianStats fit_gaussian(const Matrix& x);

struct FidScore {
  double value = 0.0;
  std::string embed_id;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with
/// 1e-10 I added to each covariance and the result clamped at 0.
FidScore frechet_distance(const GaussianStats& a, const GaussianStats& b,
                          std::string embed_id = "identity");

/// Amari index normalized by 2d(d-1) to [0, 1]; 0 iff p is a scaled
/// permutation.
double amari_index(const Matrix& p);

/// Amari index of the square submatrix formed by the `count` best-matched
/// (row, column) pairs. Pairs are chosen greedily by |p_ij| / ||p_i||.
double matched_amari_index(const Matrix& p, std::size_t count);

/// P = U F^{-1}: row i gives direction i in factor coordinates. A scaled
/// permutation means every direction moves exactly one factor.
Matrix factor_alignment(const Matrix& directions, const Matrix& factors);

enum class EmbedderKind { Identity, SeededRandomProjection };

/// Fixed feature map applied before moment matching. The random projection
/// is e = tanh(P y) with P ~ N(0, 1) / sqrt(input_dim).
class Embedder {
 public:
  static Embedder identity(std::size_t dim);
  static Embedder random_projection(std::size_t input_dim, std::size_t output_dim,
                                    std::uint64_t seed);

  EmbedderKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const std::string& id() const noexcept { return id_; }

  Matrix embed(const Matrix& y) const;

 private:
  Embedder() = default;

  EmbedderKind kind_ = EmbedderKind::Identity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  Matrix weights_;
  std::string id_;
};

inline constexpr std::size_t kDefaultEmbedDim = 32;

/// Samples n latents; set A embeds forward(z), set B embeds forward(z + alpha
/// u_k) with k ~ U{0..K-1} and alpha ~ U[lo, hi]. Latents, indices and
/// strengths come from three streams split off `rng`, so the first m samples
/// do not depend on n.
FidScore evaluate_manipulations(const GeneratorModel& g, const DirectionBasis& basis,
                                std::size_t n, const StrengthRange& alpha,
                                const Embedder& embedder, RngStream& rng);

}  // namespace latentdir
