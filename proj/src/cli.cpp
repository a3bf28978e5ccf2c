#include "latentdir/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "latentdir/errors.hpp"
#include "latentdir/metrics.hpp"
#include "latentdir/verify.hpp"

namespace latentdir {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::optional<std::string> generator;
  std::optional<std::string> prior;
  std::optional<std::size_t> latent_dim;
  std::optional<std::size_t> feature_dim;
  std::optional<std::size_t> output_dim;
  std::optional<std::uint64_t> generator_seed;
  std::optional<std::string> method;
  std::optional<std::string> space;
  std::optional<std::size_t> components;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> alpha_rows;
  std::optional<std::size_t> eval_count;
  std::optional<std::string> embedder;
  std::optional<std::size_t> embed_dim;
  std::optional<std::uint64_t> embed_seed;
  std::optional<std::string> output_dir;
  bool force = false;
};

void add_experiment_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "JSON experiment config file");
  cmd.add_option("--preset", o.preset, "Named preset (paper-pca-500, paper-ica-20, ...)");
  cmd.add_option("--generator", o.generator, "Toy generator: linear | mlp");
  cmd.add_option("--prior", o.prior, "Latent prior: gaussian | factors");
  cmd.add_option("--latent-dim", o.latent_dim);
  cmd.add_option("--feature-dim", o.feature_dim);
  cmd.add_option("--output-dim", o.output_dim);
  cmd.add_option("--generator-seed", o.generator_seed);
  cmd.add_option("--method", o.method, "pca | ica");
  cmd.add_option("--space", o.space, "latent | feature");
  cmd.add_option("--components,-k", o.components, "Number of components K");
  cmd.add_option("--samples,-n", o.samples, "Number of sampled latents N");
  cmd.add_option("--seed", o.seed, "Experiment seed (overrides LD_SEED)");
  cmd.add_option("--alpha", o.alpha_rows, "Strength range lo:hi, repeatable");
  cmd.add_option("--eval-count", o.eval_count, "Images per FID evaluation");
  cmd.add_option("--embedder", o.embedder, "randproj | identity");
  cmd.add_option("--embed-dim", o.embed_dim);
  cmd.add_option("--embed-seed", o.embed_seed);
  cmd.add_option("--output-dir,-o", o.output_dir);
  cmd.add_flag("--force", o.force, "Overwrite existing outputs");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) {
    throw PreconditionError("refusing to overwrite " + path.string() + " (pass --force)");
  }
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PreconditionError("cannot write " + path.string());
  out << content;
  if (!out) throw PreconditionError("write failed for " + path.string());
}

StrengthRange parse_alpha_row(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw PreconditionError("alpha range '" + text + "' must look like lo:hi");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw PreconditionError("alpha range '" + text + "' is not numeric");
  }
}

std::uint64_t parse_seed_env(const char* text) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(text, &used);
    if (text[used] != '\0') throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw PreconditionError(std::string("LD_SEED='") + text + "' is not an unsigned integer");
  }
}

ExperimentConfig resolve_config(const Overrides& o) {
  std::optional<std::string> file_text;
  std::string preset = "paper-pca-500";
  if (o.config_path) {
    file_text = read_file(*o.config_path);
    try {
      const json doc = json::parse(*file_text);
      if (doc.is_object() && doc.contains("preset") && doc["preset"].is_string()) {
        preset = doc["preset"].get<std::string>();
      }
    } catch (const json::parse_error& e) {
      throw PreconditionError(std::string("config: malformed JSON at byte ") +
                              std::to_string(e.byte));
    }
  }
  if (o.preset) preset = *o.preset;

  ExperimentConfig c = preset_config(preset);
  if (file_text) {
    apply_config_json(c, *file_text);
    c.preset = preset;
  }
  if (const char* env = std::getenv("LD_SEED")) c.seed = parse_seed_env(env);

  if (o.generator) c.generator.kind = parse_generator_kind(*o.generator);
  if (o.prior) c.generator.prior = parse_latent_prior(*o.prior);
  if (o.latent_dim) c.generator.latent_dim = *o.latent_dim;
  if (o.feature_dim) c.generator.feature_dim = *o.feature_dim;
  if (o.output_dim) c.generator.output_dim = *o.output_dim;
  if (o.generator_seed) c.generator.seed = *o.generator_seed;
  if (o.method) c.method = parse_method(*o.method);
  if (o.space) c.space = parse_space(*o.space);
  if (o.components) c.components = *o.components;
  if (o.samples) c.samples = *o.samples;
  if (o.seed) c.seed = *o.seed;
  if (!o.alpha_rows.empty()) {
    c.alpha_rows.clear();
    for (const auto& r : o.alpha_rows) c.alpha_rows.push_back(parse_alpha_row(r));
  }
  if (o.eval_count) c.eval_count = *o.eval_count;
  if (o.embedder) c.embedder = *o.embedder;
  if (o.embed_dim) c.embed_dim = *o.embed_dim;
  if (o.embed_seed) c.embed_seed = *o.embed_seed;
  if (o.output_dir) c.output_dir = *o.output_dir;
  c.validate();
  return c;
}

void check_basis_matches(const DirectionBasis& b, const GeneratorModel& g) {
  if (b.latent_dim != g.latent_dim() || b.feature_dim != g.feature_dim()) {
    throw PreconditionError("basis dims (latent " + std::to_string(b.latent_dim) +
                            ", feature " + std::to_string(b.feature_dim) +
                            ") do not match the configured generator");
  }
}

Embedder make_embedder(const ExperimentConfig& c, const GeneratorModel& g) {
  if (c.embedder == "identity") return Embedder::identity(g.output_dim());
  return Embedder::random_projection(g.output_dim(), c.embed_dim, c.embed_seed);
}

json generator_json(const GeneratorConfig& g) {
  return {{"kind", std::string(to_string(g.kind))},
          {"prior", std::string(to_string(g.prior))},
          {"latent_dim", g.latent_dim},
          {"feature_dim", g.feature_dim},
          {"output_dim", g.output_dim},
          {"seed", g.seed}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_discover(const Overrides& o, const std::optional<std::string>& basis_path,
                 std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = resolve_config(o);
  const fs::path path = basis_path ? fs::path(*basis_path) : fs::path(c.output_dir) / "basis.json";
  check_writable(path, o.force);

  const GeneratorModel g(c.generator);
  std::size_t k = c.components;
  Discovery d;
  for (;;) {
    RngStream rng(c.seed);
    try {
      d = c.space == DiscoverySpace::Latent
              ? discover_latent(g, c.samples, k, c.method, rng)
              : discover_feature_tap(g, c.samples, k, c.method, rng);
      break;
    } catch (const RankError& e) {
      if (e.usable() == 0 || e.usable() >= k) throw;
      err << "warning: K=" << k << " exceeds the rank of the discovery sample; using K="
          << e.usable() << "\n";
      k = e.usable();
    } catch (const IcaConvergenceError& e) {
      throw ConvergenceError("ICA did not converge for K=" + std::to_string(k) + ": " +
                             e.what());
    }
  }

  write_file(path, basis_to_json(d.basis));

  out << "method: " << to_string(c.method) << "  space: " << to_string(c.space)
      << "  K: " << k << " (requested " << c.components << ")  N: " << c.samples
      << "  seed: " << c.seed << "\n";
  if (c.method == Method::Pca) {
    out << "status: closed form (eigendecomposition)\n";
  } else {
    out << "status: converged after " << d.fit.iterations_used << " iterations, "
        << d.fit.restarts_used << " restarts\n";
  }
  const std::size_t shown = std::min<std::size_t>(k, 10);
  out << (c.method == Method::Pca ? "rank  variance\n" : "rank  excess_kurtosis\n");
  for (std::size_t i = 0; i < shown; ++i) {
    const double v = c.method == Method::Pca ? d.fit.variances(static_cast<Eigen::Index>(i))
                                             : d.fit.kurtosis(static_cast<Eigen::Index>(i));
    out << std::setw(4) << i << "  " << std::setprecision(6) << v << "\n";
  }
  for (const auto& w : d.fit.warnings) err << "warning: " << w << "\n";
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

struct ApplyArgs {
  std::string basis;
  std::size_t index = 0;
  double alpha_min = -3.0;
  double alpha_max = 3.0;
  std::size_t steps = 7;
  std::optional<std::string> out_prefix;
};

int cmd_apply(const Overrides& o, const ApplyArgs& a, std::ostream& out) {
  const ExperimentConfig c = resolve_config(o);
  if (a.steps == 0) throw PreconditionError("--steps must be >= 1");
  if (!(a.alpha_min <= a.alpha_max)) throw PreconditionError("--alpha-min must be <= --alpha-max");
  if (!fs::exists(a.basis)) throw PreconditionError("basis file " + a.basis + " not found");

  const DirectionBasis basis = load_basis(a.basis);
  const GeneratorModel g(c.generator);
  check_basis_matches(basis, g);
  const Vector direction = basis.direction(a.index);

  const fs::path prefix = a.out_prefix ? fs::path(*a.out_prefix) : fs::path(c.output_dir) / "strip";
  const fs::path pgm_path = prefix.string() + ".pgm";
  const fs::path meta_path = prefix.string() + ".json";
  check_writable(pgm_path, o.force);
  check_writable(meta_path, o.force);

  std::vector<double> alphas(a.steps);
  for (std::size_t i = 0; i < a.steps; ++i) {
    alphas[i] = a.steps == 1 ? a.alpha_min
                             : a.alpha_min + static_cast<double>(i) * (a.alpha_max - a.alpha_min) /
                                                 static_cast<double>(a.steps - 1);
  }
  RngStream rng(c.seed);
  const Vector z = g.sample_latents(rng, 1).row(0).transpose();
  const ImageStrip strip = render_strip(g, z, direction, alphas);

  json meta;
  meta["alphas"] = alphas;
  meta["direction_index"] = a.index;
  meta["seed"] = c.seed;
  meta["tiles"] = strip.tiles;
  meta["tile_side"] = strip.tile_side;
  meta["width"] = strip.width();
  meta["height"] = strip.height();
  meta["method"] = std::string(to_string(basis.method));
  meta["space"] = std::string(to_string(basis.space));
  meta["generator"] = generator_json(c.generator);

  write_file(pgm_path, strip.to_pgm());
  write_file(meta_path, meta.dump(2) + "\n");
  out << "wrote " << pgm_path.string() << " (" << strip.tiles << " tiles, " << strip.width()
      << "x" << strip.height() << ")\n";
  return kExitOk;
}

int cmd_evaluate(const Overrides& o, const std::string& basis_path,
                 const std::optional<std::string>& report_path, std::ostream& out) {
  const ExperimentConfig c = resolve_config(o);
  if (!fs::exists(basis_path)) throw PreconditionError("basis file " + basis_path + " not found");
  const fs::path path =
      report_path ? fs::path(*report_path) : fs::path(c.output_dir) / "report.json";
  check_writable(path, o.force);

  const DirectionBasis basis = load_basis(basis_path);
  const GeneratorModel g(c.generator);
  check_basis_matches(basis, g);
  const Embedder embedder = make_embedder(c, g);

  json rows = json::array();
  std::vector<std::pair<std::string, double>> table;
  for (const StrengthRange& r : c.alpha_rows) {
    RngStream rng(c.seed);
    const FidScore score = evaluate_manipulations(g, basis, c.eval_count, r, embedder, rng);
    json row;
    row["embed_id"] = score.embed_id;
    row["method"] = std::string(to_string(basis.method));
    row["space"] = std::string(to_string(basis.space));
    row["K"] = basis.size();
    row["N"] = c.eval_count;
    row["alpha_bounds"] = {r.lo, r.hi};
    row["fid"] = score.value;
    row["seed"] = c.seed;
    rows.push_back(std::move(row));
    table.emplace_back(format_alpha_label(r), score.value);
  }
  json report;
  report["generator"] = generator_json(c.generator);
  report["rows"] = std::move(rows);
  write_file(path, report.dump(2) + "\n");

  out << "FID  " << to_string(basis.method) << "/" << to_string(basis.space)
      << "  K=" << basis.size() << "  N=" << c.eval_count << "  embed=" << embedder.id()
      << "\n";
  out << std::left << std::setw(24) << "Manipulation strength" << "FID\n";
  for (const auto& [label, fid] : table) {
    out << std::left << std::setw(24) << label << std::fixed << std::setprecision(4) << fid
        << "\n";
    out.unsetf(std::ios::floatfield);
  }
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_verify(bool as_json, std::ostream& out, std::ostream& err) {
  const VerifyReport report = run_verification();
  if (as_json) {
    out << report.to_json() << "\n";
  } else {
    for (const auto& c : report.checks) {
      out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(34) << c.name
          << std::scientific << std::setprecision(2) << c.value << " (threshold "
          << c.threshold << ")";
      if (!c.detail.empty()) out << " " << c.detail;
      out << "\n";
      out.unsetf(std::ios::floatfield);
    }
    out << std::fixed << std::setprecision(2) << "verify: " << report.seconds << " s\n";
    out.unsetf(std::ios::floatfield);
  }
  if (!report.passed()) {
    err << "verification failed: " << report.first_failure() << "\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (components == 0 || samples == 0 || eval_count == 0 || embed_dim == 0) {
    throw PreconditionError("config: components, samples, eval_count and embed_dim must be >= 1");
  }
  if (generator.latent_dim == 0 || generator.feature_dim == 0 || generator.output_dim == 0) {
    throw PreconditionError("config: generator dimensions must be >= 1");
  }
  if (alpha_rows.empty()) throw PreconditionError("config: at least one alpha range is required");
  for (const auto& r : alpha_rows) {
    if (!(r.lo <= r.hi)) {
      throw PreconditionError("config: alpha range " + format_alpha_label(r) + " is not ordered");
    }
  }
  if (embedder != "randproj" && embedder != "identity") {
    throw PreconditionError("config: embedder must be randproj or identity");
  }
  if (method == Method::Ica && space == DiscoverySpace::Latent &&
      generator.prior == LatentPrior::Gaussian) {
    throw PreconditionError(
        "config: invalid space/method combination: ICA in a Gaussian latent space is not "
        "identifiable (use --space feature or --prior factors)");
  }
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  c.preset = std::string(name);
  if (name == "paper-pca-500") {
    c.method = Method::Pca;
    c.space = DiscoverySpace::Latent;
    c.components = 500;
  } else if (name == "paper-ica-20" || name == "paper-ica-100") {
    c.method = Method::Ica;
    c.space = DiscoverySpace::Latent;
    c.components = name == "paper-ica-20" ? 20 : 100;
    c.generator.prior = LatentPrior::IndependentFactors;
  } else if (name == "paper-ica-500-feature" || name == "paper-ica-1000-feature") {
    c.method = Method::Ica;
    c.space = DiscoverySpace::FeatureTap;
    c.components = name == "paper-ica-500-feature" ? 500 : 1000;
    c.generator.kind = GeneratorKind::TwoLayerMlp;
  } else {
    throw PreconditionError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"paper-pca-500", "paper-ica-20", "paper-ica-100", "paper-ica-500-feature",
          "paper-ica-1000-feature"};
}

void apply_config_json(ExperimentConfig& c, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw PreconditionError("config: malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw PreconditionError("config: top level must be an object");

  static const std::set<std::string> kTop = {
      "preset",     "generator",  "method",   "space",     "components",
      "samples",    "seed",       "alpha_bounds", "eval_count", "embedder",
      "embed_dim",  "embed_seed", "output_dir"};
  static const std::set<std::string> kGen = {"kind",        "prior",      "latent_dim",
                                             "feature_dim", "output_dim", "seed"};
  try {
    for (const auto& [key, value] : doc.items()) {
      if (!kTop.contains(key)) throw PreconditionError("config: unknown field '" + key + "'");
    }
    if (doc.contains("preset")) c.preset = doc["preset"].get<std::string>();
    if (doc.contains("generator")) {
      const json& g = doc["generator"];
      if (!g.is_object()) throw PreconditionError("config: 'generator' must be an object");
      for (const auto& [key, value] : g.items()) {
        if (!kGen.contains(key)) {
          throw PreconditionError("config: unknown generator field '" + key + "'");
        }
      }
      if (g.contains("kind")) c.generator.kind = parse_generator_kind(g["kind"].get<std::string>());
      if (g.contains("prior")) c.generator.prior = parse_latent_prior(g["prior"].get<std::string>());
      if (g.contains("latent_dim")) c.generator.latent_dim = g["latent_dim"].get<std::size_t>();
      if (g.contains("feature_dim")) c.generator.feature_dim = g["feature_dim"].get<std::size_t>();
      if (g.contains("output_dim")) c.generator.output_dim = g["output_dim"].get<std::size_t>();
      if (g.contains("seed")) c.generator.seed = g["seed"].get<std::uint64_t>();
    }
    if (doc.contains("method")) c.method = parse_method(doc["method"].get<std::string>());
    if (doc.contains("space")) c.space = parse_space(doc["space"].get<std::string>());
    if (doc.contains("components")) c.components = doc["components"].get<std::size_t>();
    if (doc.contains("samples")) c.samples = doc["samples"].get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("alpha_bounds")) {
      c.alpha_rows.clear();
      for (const auto& row : doc["alpha_bounds"]) {
        if (!row.is_array() || row.size() != 2) {
          throw PreconditionError("config: alpha_bounds entries must be [lo, hi]");
        }
        c.alpha_rows.push_back({row[0].get<double>(), row[1].get<double>()});
      }
    }
    if (doc.contains("eval_count")) c.eval_count = doc["eval_count"].get<std::size_t>();
    if (doc.contains("embedder")) c.embedder = doc["embedder"].get<std::string>();
    if (doc.contains("embed_dim")) c.embed_dim = doc["embed_dim"].get<std::size_t>();
    if (doc.contains("embed_seed")) c.embed_seed = doc["embed_seed"].get<std::uint64_t>();
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["preset"] = c.preset;
  doc["generator"] = generator_json(c.generator);
  doc["method"] = std::string(to_string(c.method));
  doc["space"] = std::string(to_string(c.space));
  doc["components"] = c.components;
  doc["samples"] = c.samples;
  doc["seed"] = c.seed;
  json rows = json::array();
  for (const auto& r : c.alpha_rows) rows.push_back({r.lo, r.hi});
  doc["alpha_bounds"] = rows;
  doc["eval_count"] = c.eval_count;
  doc["embedder"] = c.embedder;
  doc["embed_dim"] = c.embed_dim;
  doc["embed_seed"] = c.embed_seed;
  doc["output_dir"] = c.output_dir;
  return doc.dump(2) + "\n";
}

std::string format_alpha_label(const StrengthRange& r) {
  std::ostringstream s;
  s << (r.lo == r.hi ? "[" : "U[") << r.lo << "," << r.hi << "]";
  return s.str();
}

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-space direction discovery with PCA/ICA and FID evaluation", "latentdir"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> discover_basis;
  ApplyArgs apply_args;
  std::string evaluate_basis;
  std::optional<std::string> report_path;
  bool verify_json = false;

  CLI::App* discover = app.add_subcommand("discover", "Discover directions and write a basis file");
  add_experiment_options(*discover, o);
  discover->add_option("--basis", discover_basis, "Output basis path (default <output-dir>/basis.json)");

  CLI::App* apply = app.add_subcommand("apply", "Render a manipulation strip for one direction");
  add_experiment_options(*apply, o);
  apply->add_option("--basis", apply_args.basis, "Basis file")->required();
  apply->add_option("--index", apply_args.index, "Direction index");
  apply->add_option("--alpha-min", apply_args.alpha_min);
  apply->add_option("--alpha-max", apply_args.alpha_max);
  apply->add_option("--steps", apply_args.steps, "Number of tiles");
  apply->add_option("--out", apply_args.out_prefix, "Output prefix (writes .pgm and .json)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "FID of random manipulations per strength row");
  add_experiment_options(*evaluate, o);
  evaluate->add_option("--basis", evaluate_basis, "Basis file")->required();
  evaluate->add_option("--report", report_path, "Report path (default <output-dir>/report.json)");

  CLI::App* verify = app.add_subcommand("verify", "Run the built-in oracle suite");
  verify->add_flag("--json", verify_json, "Machine-readable results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (discover->parsed()) return cmd_discover(o, discover_basis, out, err);
    if (apply->parsed()) return cmd_apply(o, apply_args, out);
    if (evaluate->parsed()) return cmd_evaluate(o, evaluate_basis, report_path, out);
    if (verify->parsed()) return cmd_verify(verify_json, out, err);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const RankError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NotPsdError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SymmetryError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace latentdir
