#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "latfkg/continuum.hpp"
#include "latfkg/convergence.hpp"
#include "latfkg/frac_laplacian.hpp"
#include "latfkg/harness.hpp"
#include "latfkg/kg_solver.hpp"

namespace latfkg::harness {

namespace fs = std::filesystem;

namespace {

// Everything one run reads and writes, for the manifest.
class RunContext {
 public:
  RunContext(const RunOptions& options, std::uint64_t seed)
      : options_(options), rng_(seed) {}

  fs::path input(const std::string& name) {
    fs::path p(name);
    if (p.is_relative()) p = options_.input_dir / p;
    if (!fs::is_regular_file(p)) throw std::runtime_error("input file not found: " + p.string());
    inputs_.push_back({{"path", name}, {"sha256", sha256_file(p)}});
    return p;
  }

  void emit(const std::string& name, const std::string& content) {
    write_atomic(options_.out_dir / name, content);
    outputs_.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
    names_.push_back(name);
  }

  void check(bool ok, const std::string& message) {
    if (!ok) failures_.push_back(message);
  }

  bool assert_mode() const { return options_.assert_mode; }
  std::mt19937_64& rng() { return rng_; }
  const json& inputs() const { return inputs_; }
  const json& outputs() const { return outputs_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  const RunOptions& options_;
  std::mt19937_64 rng_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::vector<std::string> names_;
  std::vector<std::string> failures_;
};

// Bit-portable uniform on [-1, 1): mt19937_64 output is fixed by the standard,
// the library distributions are not.
double symmetric_unit(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

LatticeSpec lattice_of(const json& cfg) {
  return LatticeSpec(cfg["n"].get<int>(), cfg["hbar"].get<double>(), cfg["N"].get<int>());
}

GridFunction load_field(const json& src, const LatticeSpec& spec, RunContext& ctx) {
  if (src.contains("file")) return read_csv(ctx.input(src["file"]).string(), spec);
  const std::string kind = src["builtin"];
  std::vector<Complex> values(spec.size());
  if (kind == "zero") return GridFunction(spec, std::move(values));
  if (kind == "random") {
    const double amp = src["amplitude"];
    for (auto& v : values) {
      const double re = symmetric_unit(ctx.rng());
      v = amp * Complex(re, symmetric_unit(ctx.rng()));
    }
    return GridFunction(spec, std::move(values));
  }
  const double amp = src["amplitude"];
  if (kind == "planewave") {
    const auto m = src["m"].get<std::vector<int>>();
    for_each_index(spec, [&](std::size_t flat, std::span<const int> j) {
      double phase = 0.0;
      for (int a = 0; a < spec.dim(); ++a) {
        phase += 2.0 * std::numbers::pi * j[a] * m[a] / spec.points_per_axis();
      }
      values[flat] = amp * std::polar(1.0, phase);
    });
    return GridFunction(spec, std::move(values));
  }
  const auto center = src["center"].get<std::vector<double>>();
  const auto wave = src["wavenumber"].get<std::vector<double>>();
  const double width = src["width"];
  for_each_index(spec, [&](std::size_t flat, std::span<const int> j) {
    double r2 = 0.0;
    double phase = 0.0;
    for (int a = 0; a < spec.dim(); ++a) {
      const double x = spec.position(j[a]);
      r2 += (x - center[a]) * (x - center[a]);
      phase += 2.0 * std::numbers::pi * wave[a] * x;
    }
    values[flat] = amp * std::exp(-0.5 * r2 / (width * width)) * std::polar(1.0, phase);
  });
  return GridFunction(spec, std::move(values));
}

MassFunction bump_function(const json& bump) {
  const double base = bump["base"];
  const double amp = bump["amplitude"];
  const double width = bump["width"];
  return [=](std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return base + amp * std::exp(-r2 / (width * width));
  };
}

MassField load_mass(const json& m, const LatticeSpec& spec, RunContext& ctx) {
  if (m.contains("const")) return MassField::constant(spec, m["const"].get<double>());
  std::vector<double> values(spec.size());
  if (m.contains("file")) {
    const auto field = read_csv(ctx.input(m["file"]).string(), spec);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (field[i].imag() != 0.0) throw std::runtime_error("mass file has a nonzero imaginary part");
      values[i] = field[i].real();
    }
    return MassField(spec, std::move(values));
  }
  const auto fn = bump_function(m["bump"]);
  std::vector<double> x(spec.dim());
  for_each_index(spec, [&](std::size_t flat, std::span<const int> j) {
    for (int a = 0; a < spec.dim(); ++a) x[a] = spec.position(j[a]);
    values[flat] = fn(x);
  });
  return MassField(spec, std::move(values));
}

std::string csv_of(const GridFunction& u) {
  std::ostringstream out;
  write_csv(out, u);
  return out.str();
}

std::string indexed(const char* stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem, i);
  return buf;
}

json run_coeffs(const json& cfg, RunContext& ctx) {
  const FractionalOrder order(cfg["alpha"].get<double>());
  const int dim = cfg["dim"];
  const auto table = build_table(order, dim, cfg["radius"], cfg["quad_points"]);

  std::ostringstream csv;
  for (int a = 0; a < dim; ++a) csv << "j_" << a << ",";
  csv << "a_j,quad_err\n";
  std::vector<int> j(dim);
  double worst_exact = 0.0;
  for (std::size_t flat = 0; flat < table.weights().size(); ++flat) {
    table.offsets(flat, j);
    for (int a = 0; a < dim; ++a) csv << j[a] << ",";
    csv << format_double(table.weights()[flat]) << "," << format_double(table.errors()[flat])
        << "\n";
    double exact = std::numeric_limits<double>::quiet_NaN();
    if (dim == 1) {
      exact = coeff_closed_form_1d(order, j[0]);
    } else if (order.is_integer()) {
      int l1 = 0;
      for (int v : j) l1 += std::abs(v);
      exact = l1 == 0 ? 2.0 * dim : (l1 == 1 ? -1.0 : 0.0);
    }
    if (!std::isnan(exact)) {
      worst_exact = std::max(worst_exact, std::abs(exact - table.weights()[flat]));
    }
  }
  ctx.emit(cfg["out"], csv.str());

  const bool has_exact = dim == 1 || order.is_integer();
  if (has_exact) {
    const double tol = order.is_integer() ? 1e-10 : 1e-8;
    ctx.check(worst_exact <= tol, "coefficients deviate from exact values by " +
                                      format_double(worst_exact));
  } else {
    ctx.check(table.quad_error_estimate() <= 1e-8,
              "quadrature error estimate " + format_double(table.quad_error_estimate()));
  }
  json summary = {{"entries", table.weights().size()},
                  {"weight_sum", table.weight_sum()},
                  {"quad_error_estimate", table.quad_error_estimate()},
                  {"tail_estimate", table.tail_estimate()}};
  if (has_exact) summary["max_exact_deviation"] = worst_exact;
  return summary;
}

json run_solve(const json& cfg, RunContext& ctx) {
  const auto spec = lattice_of(cfg);
  const FractionalOrder order(cfg["alpha"].get<double>());
  const double end_time = cfg["T"];
  const auto mass = load_mass(cfg["mass"], spec, ctx);
  Forcing forcing = Forcing::zero();
  if (cfg["forcing"].is_object()) {
    forcing = read_forcing_csv(ctx.input(cfg["forcing"]["file"]).string(), spec);
    if (forcing.end_time() < end_time * (1.0 - 1e-12)) {
      throw std::runtime_error("forcing samples end at t = " + format_double(forcing.end_time()) +
                               " before T");
    }
  }
  const auto u0 = load_field(cfg["u0"], spec, ctx);
  const auto u1 = load_field(cfg["u1"], spec, ctx);
  const auto trace =
      solve(u0, u1, order, mass, forcing, end_time, cfg["dt"], cfg["record_every"]);

  std::ostringstream csv;
  csv << "t,kinetic,dirichlet,potential,total,sqrtE_bound\n";
  double drift = 0.0;
  double slack = std::numeric_limits<double>::infinity();
  const double e0 = trace.energies.front().total;
  for (std::size_t i = 0; i < trace.energies.size(); ++i) {
    const auto& e = trace.energies[i];
    csv << format_double(e.time) << "," << format_double(e.kinetic) << ","
        << format_double(e.dirichlet) << "," << format_double(e.potential) << ","
        << format_double(e.total) << "," << format_double(trace.sqrt_energy_bound[i]) << "\n";
    drift = std::max(drift, std::abs(e.total - e0) / std::max(e0, 1.0));
    slack = std::min(slack, trace.sqrt_energy_bound[i] - std::sqrt(e.total));
  }
  ctx.emit("energies.csv", csv.str());
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    ctx.emit(indexed("u", i), csv_of(trace.states[i].u));
    ctx.emit(indexed("du", i), csv_of(trace.states[i].du));
  }

  const auto apriori = apriori_report(trace, u0, u1, mass, forcing);
  ctx.check(slack >= -1e-8, "energy inequality violated by " + format_double(-slack));
  if (trace.exact_propagator && forcing.is_zero()) {
    ctx.check(drift <= 1e-10, "energy drift " + format_double(drift));
  }
  json times = json::array();
  for (const auto& s : trace.states) times.push_back(s.time);
  return {{"exact_propagator", trace.exact_propagator},
          {"steps", static_cast<long long>(std::llround(end_time / trace.dt))},
          {"record_times", times},
          {"energy_initial", e0},
          {"energy_final", trace.energies.back().total},
          {"max_relative_energy_drift", drift},
          {"min_energy_inequality_slack", slack},
          {"apriori_implied_constant", apriori.implied_constant}};
}

json run_symbol_gap(const json& cfg, RunContext& ctx) {
  const auto spec = lattice_of(cfg);
  const FractionalOrder order(cfg["alpha"].get<double>());
  const auto gaps = symbol_gap_grid(spec, order);
  std::ostringstream csv;
  for (int a = 0; a < spec.dim(); ++a) csv << "theta_" << a << ",";
  csv << "gap,normalized\n";
  double max_gap = 0.0;
  double max_norm = 0.0;
  for_each_index(spec, [&](std::size_t flat, std::span<const int> m) {
    for (int a = 0; a < spec.dim(); ++a) csv << format_double(spec.frequency(m[a])) << ",";
    csv << format_double(gaps[flat].gap) << "," << format_double(gaps[flat].normalized) << "\n";
    max_gap = std::max(max_gap, gaps[flat].gap);
    max_norm = std::max(max_norm, gaps[flat].normalized);
  });
  ctx.emit(cfg["out"], csv.str());
  ctx.check(std::isfinite(max_norm), "normalized gap is not finite");
  if (order.is_integer()) {
    const double bound = 4.0 * std::pow(std::numbers::pi, 4) / 3.0;
    ctx.check(max_norm <= bound + 1e-9,
              "normalized gap " + format_double(max_norm) + " exceeds 4 pi^4 / 3");
  }
  return {{"max_gap", max_gap}, {"max_normalized", max_norm}};
}

json run_energy(const json& cfg, RunContext& ctx) {
  const auto spec = lattice_of(cfg);
  const FractionalOrder order(cfg["alpha"].get<double>());
  const auto mass = load_mass(cfg["mass"], spec, ctx);
  auto u = load_field(cfg["u"], spec, ctx);
  auto du = load_field(cfg["du"], spec, ctx);
  const double u_norm = norm(u, Norm::l2);
  const auto e = energy(EvolutionState(0.0, std::move(u), std::move(du)), order, mass);
  const double bound = std::pow(spec.spacing(), -2.0 * order.value()) *
                       std::pow(4.0 * spec.dim(), order.value()) * u_norm * u_norm;
  std::ostringstream csv;
  csv << "kinetic,dirichlet,potential,total,dirichlet_bound\n"
      << format_double(e.kinetic) << "," << format_double(e.dirichlet) << ","
      << format_double(e.potential) << "," << format_double(e.total) << ","
      << format_double(bound) << "\n";
  ctx.emit(cfg["out"], csv.str());
  ctx.check(e.dirichlet <= bound * (1.0 + 1e-12),
            "dirichlet energy " + format_double(e.dirichlet) + " exceeds symbol bound " +
                format_double(bound));
  return {{"kinetic", e.kinetic},
          {"dirichlet", e.dirichlet},
          {"potential", e.potential},
          {"total", e.total},
          {"dirichlet_bound", bound}};
}

BandLimitedProfile build_profile(const json& p, int dim, const json& grid_from) {
  const std::string kind = p["kind"];
  if (kind == "zero") {
    return BandLimitedProfile::zero(dim, grid_from["cutoff"], grid_from["points"]);
  }
  if (kind == "constant") {
    return BandLimitedProfile::constant(dim, p["cutoff"], p["points"], p["value"].get<double>());
  }
  GaussianProfileParams g;
  g.dim = dim;
  g.cutoff = p["cutoff"];
  g.points = p["points"];
  g.width = p["width"];
  g.carrier = p["carrier"].get<std::vector<double>>();
  g.symmetric = p["symmetric"];
  g.amplitude = p["amplitude"];
  g.taper_fraction = p["taper_fraction"];
  return gaussian_profile(g);
}

json run_converge(const json& cfg, RunContext& ctx) {
  const int dim = cfg["dim"];
  const FractionalOrder order(cfg["alpha"].get<double>());
  const bool variable = cfg["mass"].contains("bump");
  SweepPlan plan{
      .order = order,
      .dim = dim,
      .mass = variable ? 0.0 : cfg["mass"]["const"].get<double>(),
      .mass_function = variable ? bump_function(cfg["mass"]["bump"]) : MassFunction{},
      .initial_value = build_profile(cfg["u0"], dim, cfg["u0"]),
      .initial_velocity = build_profile(cfg["u1"], dim, cfg["u0"]),
      .end_time = cfg["T"],
      .hbar_list = cfg["hbar_list"].get<std::vector<double>>(),
      .box_length = cfg["box_length"],
      .time_steps = cfg["time_steps"],
  };
  const auto report =
      variable ? self_convergence(plan, cfg["reference_refinements"]) : run_sweep(plan);

  std::ostringstream csv;
  csv << "hbar,N,D_u,D_du,D_total,D_total_weighted,normalized\n";
  for (const auto& r : report.rows) {
    csv << format_double(r.hbar) << "," << r.points << "," << format_double(r.d_u) << ","
        << format_double(r.d_du) << "," << format_double(r.d_total) << ","
        << format_double(r.d_total_weighted) << "," << format_double(r.normalized) << "\n";
  }
  json summary = {{"method", variable ? "self_convergence" : "continuum"},
                  {"sobolev_weight", report.weight}};
  const double threshold = 2.0 * order.value() - 0.3;
  if (!report.fit) {
    csv << "# fitted_rate=nan residual=nan\n";
    summary["fit_note"] = report.fit_note;
    ctx.check(false, "no rate fit: " + report.fit_note);
  } else if (report.fit->exact) {
    csv << "# fitted_rate=inf residual=0\n";
    summary["fitted_rate"] = "inf";
    summary["exact"] = true;
  } else {
    csv << "# fitted_rate=" << format_double(report.fit->slope)
        << " residual=" << format_double(report.fit->residual) << "\n";
    summary["fitted_rate"] = report.fit->slope;
    summary["fit_residual"] = report.fit->residual;
    ctx.check(report.fit->slope >= threshold, "fitted rate " + format_double(report.fit->slope) +
                                                  " below 2 alpha - 0.3 = " +
                                                  format_double(threshold));
  }
  ctx.emit(cfg["out"], csv.str());
  return summary;
}

}  // namespace

RunResult dispatch(Subcommand cmd, const json& config, const RunOptions& options) {
  const json cfg = validate(cmd, config);
  const std::string started = utc_timestamp();
  fs::create_directories(options.out_dir);
  RunContext ctx(options, cfg["seed"].get<std::uint64_t>());

  json summary;
  try {
    switch (cmd) {
      case Subcommand::coeffs: summary = run_coeffs(cfg, ctx); break;
      case Subcommand::solve: summary = run_solve(cfg, ctx); break;
      case Subcommand::symbol_gap: summary = run_symbol_gap(cfg, ctx); break;
      case Subcommand::converge: summary = run_converge(cfg, ctx); break;
      case Subcommand::energy: summary = run_energy(cfg, ctx); break;
    }
  } catch (const NyquistError& e) {
    throw ConfigError(std::vector<FieldError>{{"", e.what()}});
  } catch (const SpecMismatchError& e) {
    throw std::runtime_error(e.what());
  }

  RunResult result;
  result.summary = summary;
  result.failures = ctx.failures();
  if (options.assert_mode && !result.failures.empty()) result.status = kExitAssertion;

  json manifest = {{"tool", "latfkg"},
                   {"version", tool_version()},
                   {"subcommand", subcommand_name(cmd)},
                   {"config", cfg},
                   {"seed", cfg["seed"]},
                   {"assert", options.assert_mode},
                   {"started_at", started},
                   {"finished_at", utc_timestamp()},
                   {"inputs", ctx.inputs()},
                   {"outputs", ctx.outputs()},
                   {"summary", summary},
                   {"checks_failed", result.failures}};
  write_atomic(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  result.outputs = ctx.names();
  result.outputs.push_back("manifest.json");
  return result;
}

}  // namespace latfkg::harness
