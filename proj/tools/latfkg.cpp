// latfkg: command-line front end for the lattice fractional Klein-Gordon toolkit.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "latfkg/harness.hpp"

namespace {

using latfkg::harness::json;
namespace h = latfkg::harness;

struct CommonFlags {
  std::string config;
  std::string out_dir = ".";
  bool assert_mode = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--out-dir", flags.out_dir, "output directory (created if missing)");
  cmd->add_flag("--assert", flags.assert_mode, "exit 1 when a numerical check fails");
  cmd->add_option("--seed", flags.seed, "seed for randomized data");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice fractional Klein-Gordon toolkit"};
  app.set_version_flag("--version", h::tool_version());
  app.require_subcommand(1);

  CommonFlags flags;
  // Per-subcommand overrides, merged over the config file.
  std::optional<double> alpha;
  std::optional<double> hbar;
  std::optional<long long> dim;
  std::optional<long long> radius;
  std::optional<long long> quad_points;
  std::optional<long long> n_dim;
  std::optional<long long> points;

  auto* coeffs = app.add_subcommand("coeffs", "fractional centered difference weights");
  add_common(coeffs, flags, false);
  coeffs->add_option("--alpha", alpha);
  coeffs->add_option("--dim", dim);
  coeffs->add_option("--radius", radius);
  coeffs->add_option("--quad-points", quad_points);
  coeffs->add_option("--out", flags.out, "CSV file name inside --out-dir");

  auto* solve = app.add_subcommand("solve", "evolve the lattice Cauchy problem");
  add_common(solve, flags, true);

  auto* gap = app.add_subcommand("symbol-gap", "continuum vs lattice symbol on the dual grid");
  add_common(gap, flags, false);
  gap->add_option("--alpha", alpha);
  gap->add_option("--hbar", hbar);
  gap->add_option("--n", n_dim);
  gap->add_option("--N", points);
  gap->add_option("--out", flags.out, "CSV file name inside --out-dir");

  auto* converge = app.add_subcommand("converge", "hbar sweep against the continuum solution");
  add_common(converge, flags, true);
  converge->add_option("--out", flags.out, "CSV file name inside --out-dir");

  auto* energy = app.add_subcommand("energy", "energy parts of one state");
  add_common(energy, flags, true);
  energy->add_option("--out", flags.out, "CSV file name inside --out-dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitInvalid;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const auto cmd = *h::parse_subcommand(chosen->get_name());
  try {
    json config = load_config(flags.config);
    if (!config.is_object()) throw h::ConfigError(std::vector<h::FieldError>{{"", "config must be a JSON object"}});
    if (alpha) config["alpha"] = *alpha;
    if (hbar) config["hbar"] = *hbar;
    if (dim) config["dim"] = *dim;
    if (radius) config["radius"] = *radius;
    if (quad_points) config["quad_points"] = *quad_points;
    if (n_dim) config["n"] = *n_dim;
    if (points) config["N"] = *points;
    if (flags.out) config["out"] = *flags.out;
    if (flags.seed) config["seed"] = *flags.seed;

    h::RunOptions options;
    options.out_dir = flags.out_dir;
    options.assert_mode = flags.assert_mode;
    if (!flags.config.empty()) {
      options.input_dir = std::filesystem::absolute(flags.config).parent_path();
    }
    const auto result = h::dispatch(cmd, config, options);
    for (const auto& name : result.outputs) std::cout << (options.out_dir / name).string() << "\n";
    for (const auto& f : result.failures) {
      std::cerr << (flags.assert_mode ? "assertion failed: " : "check failed: ") << f << "\n";
    }
    return result.status;
  } catch (const h::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return h::kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return h::kExitInvalid;
  }
}
