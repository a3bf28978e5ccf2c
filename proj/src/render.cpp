#include <algorithm>
#include <cmath>
#include <limits>

#include "latentdir/errors.hpp"
#include "latentdir/generator.hpp"

namespace latentdir {

ImageStrip render_strip(const GeneratorModel& g, const Vector& z, const Vector& direction,
                        const std::vector<double>& alphas) {
  if (alphas.empty()) throw PreconditionError("render_strip: alphas must not be empty");
  if (static_cast<std::size_t>(z.size()) != g.latent_dim() ||
      static_cast<std::size_t>(direction.size()) != g.latent_dim()) {
    throw DimensionError("render_strip: latent and direction must have latent_dim entries");
  }

  Matrix batch(static_cast<Eigen::Index>(alphas.size()), z.size());
  for (std::size_t t = 0; t < alphas.size(); ++t) {
    batch.row(static_cast<Eigen::Index>(t)) = (z + alphas[t] * direction).transpose();
  }
  const Matrix out = g.forward(batch);

  ImageStrip strip;
  strip.alphas = alphas;
  strip.tiles = alphas.size();
  const std::size_t dim = g.output_dim();
  strip.tile_side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))));
  while (strip.tile_side * strip.tile_side < dim) ++strip.tile_side;

  const double lo = out.minCoeff();
  const double hi = out.maxCoeff();
  const double span = hi - lo;
  const std::size_t side = strip.tile_side;
  strip.values.assign(strip.width() * strip.height(), 0.0);
  for (std::size_t t = 0; t < strip.tiles; ++t) {
    for (std::size_t p = 0; p < dim; ++p) {
      const std::size_t row = p / side;
      const std::size_t col = t * side + p % side;
      const double v = out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
      strip.values[row * strip.width() + col] = span > 0.0 ? (v - lo) / span : 0.0;
    }
  }
  return strip;
}

ImageStrip render_tile(const GeneratorModel& g, const Vector& z) {
  return render_strip(g, z, Vector::Zero(z.size()), {0.0});
}

std::string ImageStrip::to_pgm() const {
  std::string out = "P5\n" + std::to_string(width()) + " " + std::to_string(height()) +
                    "\n255\n";
  out.reserve(out.size() + values.size());
  for (double v : values) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
  }
  return out;
}

}  // namespace latentdir
