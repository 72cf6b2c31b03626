// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. A criterion also fails when it exceeds its runtime budget.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "latfkg/continuum.hpp"
#include "latfkg/convergence.hpp"
#include "latfkg/harness.hpp"
#include "latfkg/kg_solver.hpp"
#include "oracles.hpp"

using namespace latfkg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

GridFunction gaussian(const LatticeSpec& s, double width, double shift = 0.0) {
  std::vector<Complex> v(s.size());
  for_each_index(s, [&](std::size_t flat, std::span<const int> j) {
    double r2 = 0.0;
    for (int a = 0; a < s.dim(); ++a) r2 += std::pow(s.position(j[a]) - shift, 2);
    v[flat] = std::exp(-0.5 * r2 / (width * width));
  });
  return GridFunction(s, std::move(v));
}

MassField bump_mass(const LatticeSpec& s) {
  std::vector<double> m(s.size());
  for_each_index(s, [&](std::size_t flat, std::span<const int> j) {
    double r2 = 0.0;
    for (int a = 0; a < s.dim(); ++a) r2 += std::pow(s.position(j[a]), 2);
    m[flat] = 1.0 + std::exp(-r2);
  });
  return MassField(s, std::move(m));
}

Forcing smooth_forcing(const LatticeSpec& s, double T, int K, std::uint64_t seed) {
  const auto g = gaussian(s, 0.5, 0.3);
  const auto h = oracle::real_random_field(s, seed);
  std::vector<GridFunction> samples;
  for (int i = 0; i < K; ++i) {
    const double t = T * i / (K - 1);
    samples.push_back(std::sin(3 * t + 1) * g + (0.2 * t) * h);
  }
  return Forcing(T, std::move(samples));
}

// 1: alpha = 1 quadrature coefficients are the second difference.
Outcome degeneration() {
  Outcome out;
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto table = build_table(FractionalOrder(1.0), n, 3, default_quad_points(n));
    std::vector<int> j(n);
    for (std::size_t f = 0; f < table.weights().size(); ++f) {
      table.offsets(f, j);
      int l1 = 0;
      for (int v : j) l1 += std::abs(v);
      const double exact = l1 == 0 ? 2.0 * n : (l1 == 1 ? -1.0 : 0.0);
      worst = std::max(worst, std::abs(table.weights()[f] - exact));
    }
  }
  out.require(worst <= 1e-10, "max deviation " + fmt("%.2e", worst));
  if (out.pass) out.note("max deviation " + fmt("%.2e", worst));
  return out;
}

// 2: closed form against Richardson quadrature, 1D.
Outcome closed_form_agreement() {
  Outcome out;
  double worst = 0.0;
  for (double alpha : {0.25, 0.5, 0.75, 0.9}) {
    for (int j = -20; j <= 20; ++j) {
      const int jj[] = {j};
      const auto q = coeff_richardson(FractionalOrder(alpha), 1, jj, default_quad_points(1));
      worst = std::max(worst, std::abs(q.value - coeff_closed_form_1d(FractionalOrder(alpha), j)));
    }
  }
  out.require(worst <= 1e-8, "max closed/quadrature gap " + fmt("%.2e", worst));
  const double pi = oracle::kPi;
  const double derived[] = {4 / pi, -4 / (3 * pi), -4 / (15 * pi)};
  for (int j = 0; j < 3; ++j) {
    const int jj[] = {j};
    const auto q = coeff_richardson(FractionalOrder(0.5), 1, jj, default_quad_points(1));
    const double c = coeff_closed_form_1d(FractionalOrder(0.5), j);
    out.require(std::abs(q.value - derived[j]) <= 1e-8 && std::abs(c - derived[j]) <= 1e-12,
                "alpha=0.5 j=" + std::to_string(j) + " off its exact value");
  }
  if (out.pass) out.note("max gap " + fmt("%.2e", worst));
  return out;
}

// 3: spectral and convolution operators agree.
Outcome two_path() {
  Outcome out;
  struct Case {
    int n;
    int N;
  };
  for (const Case c : {Case{1, 64}, Case{2, 32}}) {
    const LatticeSpec s(c.n, 0.1, c.N);
    const auto u = oracle::random_field(s, 300 + c.n);
    for (double alpha : {0.5, 1.0}) {
      const int R = alpha == 1.0 ? 1 : c.N / 4;
      const double tol = alpha == 1.0 ? 1e-12 : 1e-6;
      const auto table = build_table(FractionalOrder(alpha), c.n, R, default_quad_points(c.n));
      const auto conv = apply_conv(u, table);
      const auto spec = apply_spectral(u, FractionalOrder(alpha), 1.0, false);
      const double rel = oracle::relative_l2(conv, spec);
      const std::string tag = "n=" + std::to_string(c.n) + " alpha=" + fmt("%g", alpha) +
                              " R=" + std::to_string(R) + ": " + fmt("%.2e", rel);
      if (rel <= tol) {
        out.note(tag);
      } else {
        out.require(false, tag + " > " + fmt("%.0e", tol));
      }
    }
  }
  return out;
}

// 4: self-adjointness and nonnegativity on random pairs.
Outcome self_adjoint() {
  Outcome out;
  double asym = 0.0;
  double lowest = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 2;
    const LatticeSpec s(n, 0.1, n == 1 ? 64 : 16);
    const double alpha = 0.05 + 0.95 * (k % 10) / 9.0;
    const FractionalOrder order(alpha);
    const auto u = oracle::random_field(s, 1000 + 2 * k);
    const auto v = oracle::random_field(s, 1001 + 2 * k);
    const auto au = apply_spectral(u, order, 1.0, false);
    const auto av = apply_spectral(v, order, 1.0, false);
    asym = std::max(asym, std::abs(inner_product(au, v) - inner_product(u, av)));
    lowest = std::min(lowest, inner_product(au, u).real());
  }
  // the convolution path as well
  const LatticeSpec s(1, 0.1, 64);
  const auto table = build_table(FractionalOrder(0.5), 1, 16, default_quad_points(1));
  for (int k = 0; k < 100; ++k) {
    const auto u = oracle::random_field(s, 5000 + 2 * k);
    const auto v = oracle::random_field(s, 5001 + 2 * k);
    const auto au = apply_conv(u, table);
    asym = std::max(asym, std::abs(inner_product(au, v) - inner_product(u, apply_conv(v, table))));
    lowest = std::min(lowest, inner_product(au, u).real());
  }
  out.require(asym <= 1e-10, "asymmetry " + fmt("%.2e", asym));
  out.require(lowest >= -1e-12, "min (Au,u) " + fmt("%.2e", lowest));
  if (out.pass) out.note("asymmetry " + fmt("%.2e", asym) + ", min (Au,u) " + fmt("%.3g", lowest));
  return out;
}

// 5: symbol bound and the energy term it implies.
Outcome symbol_bound() {
  Outcome out;
  for (int n = 1; n <= 3; ++n) {
    const int N = n == 1 ? 64 : (n == 2 ? 32 : 16);
    const LatticeSpec s(n, 0.1, N);
    for (double alpha : {0.1, 0.5, 0.75, 1.0}) {
      const FractionalOrder order(alpha);
      const double cap = std::pow(4.0 * n, alpha);
      const double top = SymbolField(s, order, false).max();
      out.require(top <= cap + 1e-12, "n=" + std::to_string(n) + " symbol max " + fmt("%.17g", top));
      for (int k = 0; k < 5; ++k) {
        const auto u0 = oracle::random_field(s, 70 + 10 * n + k);
        const auto e = energy(EvolutionState(0.0, u0, GridFunction(s)), order,
                              MassField::constant(s, 0.0));
        const double bound = std::pow(0.1, -2 * alpha) * cap * std::pow(oracle::l2(u0), 2);
        out.require(e.dirichlet <= bound * (1 + 1e-12), "energy term above bound");
      }
    }
  }
  return out;
}

// 6: conservation and time reversal with the exact propagator.
Outcome conservation() {
  Outcome out;
  double drift = 0.0;
  double reversal = 0.0;
  for (int n : {1, 2}) {
    const LatticeSpec s(n, 0.1, n == 1 ? 128 : 32);
    for (double alpha : {0.5, 0.75, 1.0}) {
      const FractionalOrder order(alpha);
      const auto mass = MassField::constant(s, 1.0);
      const auto u0 = oracle::random_field(s, 11 + n);
      const auto u1 = oracle::random_field(s, 21 + n);
      const auto fwd = solve(u0, u1, order, mass, Forcing::zero(), 4.0, 4.0 / 1024, 16);
      const double e0 = fwd.energies.front().total;
      for (const auto& e : fwd.energies) drift = std::max(drift, std::abs(e.total - e0) / e0);
      const auto& end = fwd.states.back();
      const auto back =
          solve(end.u, -1.0 * end.du, order, mass, Forcing::zero(), 4.0, 4.0 / 1024, 4096);
      const auto& fin = back.states.back();
      reversal = std::max(reversal, oracle::relative_l2(fin.u, u0));
      reversal = std::max(reversal, oracle::relative_l2(-1.0 * fin.du, u1));
    }
  }
  out.require(drift <= 1e-10, "energy drift " + fmt("%.2e", drift));
  out.require(reversal <= 1e-9, "reversal error " + fmt("%.2e", reversal));
  if (out.pass) out.note("drift " + fmt("%.2e", drift) + ", reversal " + fmt("%.2e", reversal));
  return out;
}

// 7: sqrt E(t) <= sqrt E(0) + int ||f|| on forced runs.
Outcome energy_inequality() {
  Outcome out;
  const LatticeSpec s(1, 0.1, 64);
  double worst = -INFINITY;
  for (bool variable : {false, true}) {
    const auto mass = variable ? bump_mass(s) : MassField::constant(s, 1.0);
    const auto f = smooth_forcing(s, 2.0, 33, 7);
    const auto trace = solve(gaussian(s, 0.5), 0.3 * gaussian(s, 0.4, -0.5),
                             FractionalOrder(0.5), mass, f, 2.0, 2.0 / 1024, 8);
    for (std::size_t i = 0; i < trace.energies.size(); ++i) {
      worst = std::max(worst, std::sqrt(trace.energies[i].total) - trace.sqrt_energy_bound[i]);
    }
  }
  out.require(worst <= 1e-8, "max sqrt(E) - bound " + fmt("%.2e", worst));
  if (out.pass) out.note("max sqrt(E) - bound " + fmt("%.3g", worst));
  return out;
}

// 8: Strang splitting is second order for variable mass.
Outcome strang_order() {
  Outcome out;
  const LatticeSpec s(1, 0.1, 64);
  const double T = 1.0;
  const double dt = 1.0 / 32;
  auto run = [&](double step) {
    return solve(gaussian(s, 0.5), 0.5 * gaussian(s, 0.3, 0.4), FractionalOrder(0.5),
                 bump_mass(s), Forcing::zero(), T, step, 1 << 20)
        .states.back();
  };
  const auto ref = run(dt / 16);
  const auto a = run(dt);
  const auto b = run(dt / 2);
  const double ea = oracle::l2(a.u - ref.u) + oracle::l2(a.du - ref.du);
  const double eb = oracle::l2(b.u - ref.u) + oracle::l2(b.du - ref.du);
  const double ratio = ea / eb;
  out.require(ratio >= 3.4 && ratio <= 4.6, "ratio " + fmt("%.3f", ratio));
  if (out.pass) out.note("ratio " + fmt("%.3f", ratio));
  return out;
}

// 9: normalized symbol gap bounded and stable under hbar halving.
Outcome symbol_gap_bound() {
  Outcome out;
  const double cap1 = 4 * std::pow(oracle::kPi, 4) / 3;
  for (int n : {1, 2}) {
    for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
      double lo = INFINITY;
      double hi = 0.0;
      for (double hbar : {0.2, 0.1, 0.05}) {
        const int N = static_cast<int>(std::lround((n == 1 ? 6.4 : 1.6) / hbar));
        double worst = 0.0;
        for (const auto& g : symbol_gap_grid(LatticeSpec(n, hbar, N), FractionalOrder(alpha))) {
          worst = std::max(worst, g.normalized);
        }
        out.require(std::isfinite(worst), "non-finite normalized gap");
        if (alpha == 1.0) out.require(worst <= cap1 + 1e-9, "alpha=1 bound " + fmt("%.6f", worst));
        lo = std::min(lo, worst);
        hi = std::max(hi, worst);
      }
      out.require(hi <= 2 * lo, "n=" + std::to_string(n) + " alpha=" + fmt("%g", alpha) +
                                    " spread " + fmt("%.3f", hi / lo));
    }
  }
  return out;
}

SweepPlan gaussian_plan(double alpha) {
  GaussianProfileParams p;
  p.cutoff = 1.25;
  p.width = 0.08;
  p.carrier = {0.5};
  return SweepPlan{FractionalOrder(alpha), 1, 1.0, {}, gaussian_profile(p),
                   BandLimitedProfile::zero(1, 1.25, 256), 1.0,
                   {0.4, 0.2, 0.1, 0.05, 0.025}, 51.2, 1024};
}

// 10: lattice solutions converge to the continuum one.
Outcome continuum_limit() {
  Outcome out;
  for (double alpha : {0.5, 0.75}) {
    const auto report = run_sweep(gaussian_plan(alpha));
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      out.require(report.rows[i].d_total < report.rows[i - 1].d_total,
                  "alpha=" + fmt("%g", alpha) + " not monotone at hbar " +
                      fmt("%g", report.rows[i].hbar));
    }
    if (!report.fit) {
      out.require(false, "no fit: " + report.fit_note);
      continue;
    }
    const double rate = report.fit->slope;
    out.require(rate >= 2 * alpha - 0.3, "alpha=" + fmt("%g", alpha) + " rate " + fmt("%.3f", rate));
    out.note("alpha=" + fmt("%g", alpha) + " rate " + fmt("%.3f", rate));
  }
  auto flat = gaussian_plan(0.5);
  flat.initial_value = BandLimitedProfile::constant(1, 1.25, 256, 1.0);
  double worst = 0.0;
  for (const auto& r : run_sweep(flat).rows) worst = std::max(worst, r.d_total);
  out.require(worst <= 1e-10, "constant profile D " + fmt("%.2e", worst));
  return out;
}

// 11: a-priori implied constant does not depend on hbar.
Outcome apriori_uniformity() {
  Outcome out;
  auto constant_at = [](double hbar) {
    const LatticeSpec s(1, hbar, static_cast<int>(std::lround(12.8 / hbar)));
    const auto mass = bump_mass(s);
    const auto u0 = gaussian(s, 0.6);
    const auto u1 = gaussian(s, 0.4, 0.5);
    const auto f = smooth_forcing(s, 1.0, 17, 3);
    const auto trace = solve(u0, u1, FractionalOrder(0.5), mass, f, 1.0, 1.0 / 512, 8);
    return apriori_report(trace, u0, u1, mass, f).implied_constant;
  };
  for (double hbar : {0.2, 0.1, 0.05}) {
    const double a = constant_at(hbar);
    const double b = constant_at(hbar / 2);
    const double spread = std::max(a, b) / std::min(a, b);
    out.require(a > 0 && spread <= 2.0, "hbar=" + fmt("%g", hbar) + " spread " + fmt("%.3f", spread));
    out.note("C(" + fmt("%g", hbar) + ")=" + fmt("%.4f", a) + " C(" + fmt("%g", hbar / 2) +
             ")=" + fmt("%.4f", b));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 12: identical config and seed give identical bytes and digests.
Outcome determinism() {
  using namespace latfkg::harness;
  Outcome out;
  const json solve_cfg = {{"n", 1},
                          {"N", 64},
                          {"hbar", 0.1},
                          {"alpha", 0.5},
                          {"T", 1.0},
                          {"mass", {{"bump", json::object()}}},
                          {"u0", {{"builtin", "random"}}},
                          {"u1", {{"builtin", "gaussian"}, {"width", 0.5}}},
                          {"seed", 20240601}};
  const json coeff_cfg = {{"alpha", 0.5}, {"dim", 2}, {"radius", 4}};
  const std::vector<std::pair<Subcommand, json>> runs{{Subcommand::solve, solve_cfg},
                                                      {Subcommand::coeffs, coeff_cfg}};
  int files = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = fs::current_path() / "acceptance_runs" /
                       (std::to_string(r) + "_" + std::to_string(rep));
      fs::remove_all(dir);
      fs::create_directories(dir);
      dispatch(runs[r].first, runs[r].second, {dir, dir, true});
      dirs.push_back(dir);
    }
    const auto ma = json::parse(slurp(dirs[0] / "manifest.json"));
    const auto mb = json::parse(slurp(dirs[1] / "manifest.json"));
    out.require(ma["outputs"] == mb["outputs"], "manifest digests differ between runs");
    for (const auto& o : ma["outputs"]) {
      const auto name = o["file"].get<std::string>();
      out.require(slurp(dirs[0] / name) == slurp(dirs[1] / name), name + " differs");
      for (const auto& d : dirs) {
        out.require(sha256_file(d / name) == o["sha256"], name + " digest mismatch");
      }
      ++files;
    }
  }
  if (out.pass) out.note(std::to_string(files) + " files identical");
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "alpha=1 coefficient degeneration", 5, degeneration},
      {2, "closed form vs quadrature", 30, closed_form_agreement},
      {3, "two-path operator equivalence", 10, two_path},
      {4, "self-adjointness and nonnegativity", 5, self_adjoint},
      {5, "symbol bound", 5, symbol_bound},
      {6, "exact propagator conservation", 10, conservation},
      {7, "energy inequality", 10, energy_inequality},
      {8, "Strang order", 60, strang_order},
      {9, "symbol-gap bound", 5, symbol_gap_bound},
      {10, "continuum limit", 300, continuum_limit},
      {11, "a-priori constant uniformity", 60, apriori_uniformity},
      {12, "harness determinism", 10, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.note("over budget " + fmt("%.0f s", c.budget_seconds));
    }
    if (!o.pass) ++failed;
    std::printf("%s  #%-2d %-36s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
