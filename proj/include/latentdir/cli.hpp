#pragma once

// `latentdir` command-line pipeline: discover | apply | evaluate | verify.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage/config error,
// 3 numerical failure.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latentdir/decomposition.hpp"
#include "latentdir/directions.hpp"
#include "latentdir/generator.hpp"

namespace latentdir {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

struct ExperimentConfig {
  std::string preset = "paper-pca-500";
  GeneratorConfig generator;
  Method method = Method::Pca;
  DiscoverySpace space = DiscoverySpace::Latent;
  std::size_t components = 500;
  std::size_t samples = 5000;
  std::uint64_t seed = 0;
  std::vector<StrengthRange> alpha_rows = {{-3.0, 3.0}, {-6.0, 6.0}};
  std::size_t eval_count = 1000;
  std::string embedder = "randproj";
  std::size_t embed_dim = 32;
  std::uint64_t embed_seed = 7;
  std::string output_dir = ".";

  /// Throws PreconditionError when a count is zero, alpha bounds are
  /// unordered, or the method/space/prior combination is unidentifiable.
  void validate() const;
};

/// Preset named after the reference settings: paper-pca-500, paper-ica-20,
/// paper-ica-100, paper-ica-500-feature, paper-ica-1000-feature.
ExperimentConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Overlays the fields present in a JSON config document; unknown fields
/// raise PreconditionError.
void apply_config_json(ExperimentConfig& config, std::string_view json_text);
std::string config_to_json(const ExperimentConfig& config);

std::string format_alpha_label(const StrengthRange& r);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace latentdir
