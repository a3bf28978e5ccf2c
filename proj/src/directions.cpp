#include "latentdir/directions.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "latentdir/errors.hpp"

namespace latentdir {
namespace {

using nlohmann::json;

constexpr double kUnitNormTol = 1e-8;

void check_discovery_sizes(const GeneratorModel& g, std::size_t n, std::size_t k) {
  if (k == 0) throw PreconditionError("discover: k must be >= 1");
  if (n < 2 * k) {
    throw PreconditionError("discover: need n >= 2k (n=" + std::to_string(n) +
                            ", k=" + std::to_string(k) + ")");
  }
  (void)g;
}

ComponentSet fit(const Matrix& x, std::size_t k, Method method, RngStream& rng,
                 const IcaOptions& ica) {
  return method == Method::Pca ? pca_fit(x, k) : ica_fit(x, k, rng, ica);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json basis_payload(const DirectionBasis& b) {
  json doc;
  doc["format_version"] = kBasisFormatVersion;
  doc["method"] = std::string(to_string(b.method));
  doc["space"] = std::string(to_string(b.space));
  doc["latent_dim"] = b.latent_dim;
  doc["feature_dim"] = b.feature_dim;
  doc["K"] = b.size();
  doc["seed"] = b.fingerprint.seed;
  doc["N"] = b.fingerprint.samples;
  doc["mean"] = vector_to_json(b.mean);
  doc["U"] = matrix_to_json(b.latent_directions);
  if (b.feature_directions) doc["V"] = matrix_to_json(*b.feature_directions);
  return doc;
}

const json& field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw FormatError(std::string("basis: missing field '") + name + "'");
  return *it;
}

std::uint64_t unsigned_field(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw FormatError(std::string("basis: field '") + name + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string_field(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_string()) throw FormatError(std::string("basis: field '") + name + "' must be a string");
  return v.get<std::string>();
}

Vector vector_from_json(const json& v, const char* name) {
  if (!v.is_array()) throw FormatError(std::string("basis: '") + name + "' must be an array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw FormatError(std::string("basis: '") + name + "' must hold numbers");
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Matrix matrix_from_json(const json& v, const char* name, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows) {
    throw FormatError(std::string("basis: '") + name + "' must have " + std::to_string(rows) +
                      " rows");
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = vector_from_json(v[i], name);
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw FormatError(std::string("basis: '") + name + "' rows must have " +
                        std::to_string(cols) + " entries");
    }
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

template <typename E>
E parse_enum(const std::string& text, E (*parse)(std::string_view), const char* name) {
  try {
    return parse(text);
  } catch (const Error&) {
    throw FormatError(std::string("basis: invalid ") + name + " '" + text + "'");
  }
}

}  // namespace

std::string_view to_string(DiscoverySpace s) {
  return s == DiscoverySpace::Latent ? "latent" : "feature";
}

DiscoverySpace parse_space(std::string_view s) {
  if (s == "latent") return DiscoverySpace::Latent;
  if (s == "feature") return DiscoverySpace::FeatureTap;
  throw PreconditionError("unknown discovery space '" + std::string(s) + "'");
}

Vector DirectionBasis::direction(std::size_t k) const {
  if (k >= size()) {
    throw IndexError("direction index " + std::to_string(k) + " out of range (K=" +
                     std::to_string(size()) + ")");
  }
  return latent_directions.row(static_cast<Eigen::Index>(k)).transpose();
}

bool DirectionBasis::operator==(const DirectionBasis& o) const {
  const bool v_equal =
      feature_directions.has_value() == o.feature_directions.has_value() &&
      (!feature_directions || *feature_directions == *o.feature_directions);
  return space == o.space && method == o.method && latent_dim == o.latent_dim &&
         feature_dim == o.feature_dim && latent_directions == o.latent_directions &&
         v_equal && mean == o.mean && fingerprint == o.fingerprint;
}

Discovery discover_latent(const GeneratorModel& g, std::size_t n, std::size_t k,
                          Method method, RngStream& rng, const IcaOptions& ica) {
  check_discovery_sizes(g, n, k);
  const std::uint64_t seed = rng.seed();
  const Matrix z = g.sample_latents(rng, n);

  Discovery out;
  out.fit = fit(z, k, method, rng, ica);
  DirectionBasis& b = out.basis;
  b.space = DiscoverySpace::Latent;
  b.method = method;
  b.latent_dim = g.latent_dim();
  b.feature_dim = g.feature_dim();
  b.latent_directions = out.fit.patterns;
  b.mean = out.fit.mean;
  b.fingerprint = {seed, n, k};
  return out;
}

Discovery discover_feature_tap(const GeneratorModel& g, std::size_t n, std::size_t k,
                               Method method, RngStream& rng, const IcaOptions& ica) {
  check_discovery_sizes(g, n, k);
  if (n <= g.latent_dim()) {
    throw PreconditionError("discover_feature_tap: need n > latent_dim");
  }
  const std::uint64_t seed = rng.seed();
  const Matrix z = g.sample_latents(rng, n);
  const Matrix features = g.feature_tap(z);

  Discovery out;
  out.fit = fit(features, k, method, rng, ica);

  const Matrix coords = out.fit.project(features);
  const Matrix z_centered = z.rowwise() - column_mean(z).transpose();
  const LeastSquaresResult ls = least_squares(coords, z_centered);
  if (ls.rank_deficient) {
    throw RankError("discover_feature_tap: feature coordinates are rank-deficient", ls.rank);
  }
  Matrix u = ls.solution;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (!(norm > 0.0)) {
      throw RankError("discover_feature_tap: component " + std::to_string(i) +
                          " has no latent counterpart",
                      static_cast<std::size_t>(i));
    }
    u.row(i) /= norm;
  }

  DirectionBasis& b = out.basis;
  b.space = DiscoverySpace::FeatureTap;
  b.method = method;
  b.latent_dim = g.latent_dim();
  b.feature_dim = g.feature_dim();
  b.latent_directions = std::move(u);
  b.feature_directions = out.fit.components;
  b.mean = out.fit.mean;
  b.fingerprint = {seed, n, k};
  return out;
}

Vector apply_direction(const Vector& z, const DirectionBasis& basis,
                       const ManipulationSpec& spec) {
  if (static_cast<std::size_t>(z.size()) != basis.latent_dim) {
    throw DimensionError("apply_direction: latent has the wrong width");
  }
  return z + spec.alpha * basis.direction(spec.index);
}

// ---------------------------------------------------------------------------
// Serialization

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string basis_to_json(const DirectionBasis& basis) {
  json doc = basis_payload(basis);
  doc["sha256"] = sha256_hex(doc.dump());
  return doc.dump(2) + "\n";
}

DirectionBasis basis_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("basis: malformed JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw FormatError("basis: top level must be an object");

  static const std::set<std::string> kKnown = {
      "format_version", "method", "space", "latent_dim", "feature_dim", "K",
      "seed",           "N",      "mean",  "U",          "V",           "sha256"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) throw FormatError("basis: unknown field '" + key + "'");
  }

  const std::uint64_t version = unsigned_field(doc, "format_version");
  if (version != kBasisFormatVersion) {
    throw FormatError("basis: unsupported format_version " + std::to_string(version));
  }
  const std::string checksum = string_field(doc, "sha256");
  json payload = doc;
  payload.erase("sha256");
  if (sha256_hex(payload.dump()) != checksum) {
    throw FormatError("basis: checksum mismatch");
  }

  DirectionBasis b;
  b.method = parse_enum(string_field(doc, "method"), &parse_method, "method");
  b.space = parse_enum(string_field(doc, "space"), &parse_space, "space");
  b.latent_dim = unsigned_field(doc, "latent_dim");
  b.feature_dim = unsigned_field(doc, "feature_dim");
  const std::size_t k = unsigned_field(doc, "K");
  b.fingerprint = {unsigned_field(doc, "seed"), unsigned_field(doc, "N"), k};
  if (k == 0 || b.latent_dim == 0) throw FormatError("basis: K and latent_dim must be >= 1");

  b.latent_directions = matrix_from_json(field(doc, "U"), "U", k, b.latent_dim);
  const bool has_v = doc.contains("V");
  if (has_v != (b.space == DiscoverySpace::FeatureTap)) {
    throw FormatError("basis: 'V' must be present exactly for feature-space bases");
  }
  if (has_v) b.feature_directions = matrix_from_json(doc["V"], "V", k, b.feature_dim);
  b.mean = vector_from_json(field(doc, "mean"), "mean");
  const std::size_t mean_dim = has_v ? b.feature_dim : b.latent_dim;
  if (static_cast<std::size_t>(b.mean.size()) != mean_dim) {
    throw FormatError("basis: 'mean' must have " + std::to_string(mean_dim) + " entries");
  }
  for (Eigen::Index i = 0; i < b.latent_directions.rows(); ++i) {
    if (std::abs(b.latent_directions.row(i).norm() - 1.0) > kUnitNormTol) {
      throw FormatError("basis: row " + std::to_string(i) + " of 'U' is not unit-norm");
    }
  }
  return b;
}

void save_basis(const DirectionBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_basis: cannot open " + path.string());
  out << basis_to_json(basis);
  if (!out) throw Error("save_basis: write failed for " + path.string());
}

DirectionBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_basis: cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return basis_from_json(text);
}

}  // namespace latentdir
