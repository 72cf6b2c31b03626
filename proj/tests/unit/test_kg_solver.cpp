#include <doctest.h>

#include <sstream>

#include "latfkg/kg_solver.hpp"
#include "oracles.hpp"

using namespace latfkg;

namespace {

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

double state_distance(const EvolutionState& a, const EvolutionState& b) {
  return oracle::l2(a.u - b.u) + oracle::l2(a.du - b.du);
}

// Smooth sampled source f(t, k) = sin(3t + 1) g(k) + t h(k) on K time samples.
Forcing smooth_forcing(const LatticeSpec& s, double T, int K) {
  const auto g = gaussian(s, 0.4, 0.3);
  const auto h = oracle::real_random_field(s, 99);
  std::vector<GridFunction> samples;
  for (int i = 0; i < K; ++i) {
    const double t = T * i / (K - 1);
    samples.push_back(std::sin(3 * t + 1) * g + (0.2 * t) * h);
  }
  return Forcing(T, std::move(samples));
}

SolutionTrace strang_run(const LatticeSpec& s, double dt, double T) {
  return solve(gaussian(s, 0.5), 0.5 * gaussian(s, 0.3, 0.4), FractionalOrder(0.5), bump_mass(s),
               Forcing::zero(), T, dt, 1 << 20);
}

}  // namespace

TEST_CASE("mass field validation") {
  const LatticeSpec s(1, 0.1, 8);
  CHECK_THROWS_AS(MassField(s, std::vector<double>(8, -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(MassField(s, std::vector<double>(7, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(MassField::constant(s, NAN), std::invalid_argument);
  const auto m = bump_mass(s);
  CHECK(m.sup_norm() == doctest::Approx(2.0));
  CHECK_FALSE(m.constant_value().has_value());
  CHECK(MassField::constant(s, 0.5).constant_value() == 0.5);
}

TEST_CASE("propagator modes") {
  const double hbar = 0.2;
  for (int n = 1; n <= 2; ++n) {
    const LatticeSpec s(n, hbar, 8);
    const std::vector<int> origin(n, 0);
    const std::vector<int> corner(n, s.min_index());
    const auto m0 = build_propagator(s, FractionalOrder(0.6), 0.0);
    const auto m1 = build_propagator(s, FractionalOrder(0.6), 1.0);
    CHECK(m0.beta[s.flat_index(origin)] == 0.0);
    CHECK(m1.beta[s.flat_index(origin)] == doctest::Approx(1.0));
    CHECK(m0.beta[s.flat_index(corner)] ==
          doctest::Approx(std::pow(hbar, -0.6) * std::pow(4.0 * n, 0.3)));
    for (double b : m1.beta) CHECK(b >= 1.0 - 1e-15);
  }
  CHECK_THROWS_AS(build_propagator(LatticeSpec(1, 0.1, 8), FractionalOrder(0.5), -0.1),
                  std::invalid_argument);
}

TEST_CASE("exact propagator: group property") {
  const LatticeSpec s(2, 0.2, 16);
  const auto modes = build_propagator(s, FractionalOrder(0.7), 0.3);
  const EvolutionState st(0.0, oracle::random_field(s, 1), oracle::random_field(s, 2));
  for (double dt : {1e-3, 0.1, 1.7}) {
    const auto fwd = propagate_exact(st, modes, dt, Forcing::zero());
    const auto back = propagate_exact(fwd, modes, -dt, Forcing::zero());
    CHECK(state_distance(back, st) <= 1e-12 * (oracle::l2(st.u) + oracle::l2(st.du)));
    CHECK(back.time == doctest::Approx(0.0));
  }
  const auto one = propagate_exact(st, modes, 0.8, Forcing::zero());
  const auto two = propagate_exact(propagate_exact(st, modes, 0.3, Forcing::zero()), modes, 0.5,
                                   Forcing::zero());
  CHECK(state_distance(one, two) <= 1e-12 * (oracle::l2(st.u) + oracle::l2(st.du)));
}

TEST_CASE("exact propagator: constant mode oscillates as cos t") {
  const LatticeSpec s(1, 0.5, 8);
  const GridFunction one(s, std::vector<Complex>(s.size(), 1.0));
  EvolutionState st(0.0, one, GridFunction(s));
  const auto modes = build_propagator(s, FractionalOrder(0.5), 1.0);
  for (int k = 0; k < 10; ++k) {
    st = propagate_exact(st, modes, 0.37, Forcing::zero());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(st.u[i] - std::cos(st.time)) <= 1e-13);
      CHECK(std::abs(st.du[i] + std::sin(st.time)) <= 1e-13);
    }
  }
}

TEST_CASE("exact propagator: constant force on the zero mode integrates twice") {
  const LatticeSpec s(1, 0.5, 8);
  const double c = 0.7;
  const GridFunction f(s, std::vector<Complex>(s.size(), c));
  const Forcing forcing(2.0, {f, f});
  const auto modes = build_propagator(s, FractionalOrder(0.5), 0.0);
  EvolutionState st(0.0, GridFunction(s), GridFunction(s));
  for (int k = 0; k < 8; ++k) {
    st = propagate_exact(st, modes, 0.25, forcing);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(st.u[i] - 0.5 * c * st.time * st.time) <= 1e-13);
      CHECK(std::abs(st.du[i] - c * st.time) <= 1e-13);
    }
  }
}

TEST_CASE("exact propagator: tiny beta dt uses the series branch smoothly") {
  const LatticeSpec s(1, 0.5, 8);
  const GridFunction one(s, std::vector<Complex>(s.size(), 1.0));
  for (double m : {0.0, 1e-20, 1e-14, 1e-10}) {
    const auto modes = build_propagator(s, FractionalOrder(0.5), m);
    const EvolutionState st(0.0, one, one);
    const auto out = propagate_exact(st, modes, 1e-3, Forcing::zero());
    const auto ref = oracle::oscillator(std::sqrt(m), 1.0, 1.0, 1e-3);
    CHECK(std::abs(out.u[0] - ref.v) <= 1e-15);
    CHECK(std::abs(out.du[0] - ref.dv) <= 1e-15);
  }
}

TEST_CASE("exact propagator refuses variable mass") {
  const LatticeSpec s(1, 0.5, 8);
  const EvolutionState st(0.0, GridFunction(s), GridFunction(s));
  CHECK_THROWS_AS(propagate_exact(st, FractionalOrder(0.5), bump_mass(s), 0.1, Forcing::zero()),
                  UnsupportedError);
  CHECK_NOTHROW(
      propagate_exact(st, FractionalOrder(0.5), MassField::constant(s, 1), 0.1, Forcing::zero()));
}

TEST_CASE("Strang step: degenerates to the exact flow without mass") {
  const LatticeSpec s(1, 0.1, 32);
  const EvolutionState st(0.0, oracle::random_field(s, 3), oracle::random_field(s, 4));
  const auto zero = MassField::constant(s, 0.0);
  const auto a = step_strang(st, FractionalOrder(0.4), zero, 0.05, Forcing::zero());
  const auto b = propagate_exact(st, build_propagator(s, FractionalOrder(0.4), 0.0), 0.05,
                                 Forcing::zero());
  CHECK(state_distance(a, b) <= 1e-12);
}

TEST_CASE("Strang step: one-step defect is third order") {
  const LatticeSpec s(1, 0.1, 32);
  const FractionalOrder order(0.5);
  const EvolutionState st(0.0, gaussian(s, 0.4), gaussian(s, 0.3, 0.2));
  const auto mass = MassField::constant(s, 2.0);
  const auto modes = build_propagator(s, order, 2.0);
  double previous = 0.0;
  for (double dt : {0.04, 0.02, 0.01}) {
    const double defect = state_distance(step_strang(st, order, mass, dt, Forcing::zero()),
                                         propagate_exact(st, modes, dt, Forcing::zero()));
    if (previous > 0.0) {
      const double ratio = previous / defect;
      CHECK(ratio > 7.0);
      CHECK(ratio < 9.0);
    }
    previous = defect;
  }
}

TEST_CASE("Strang: global error and energy drift are second order") {
  const LatticeSpec s(1, 0.1, 64);
  const double T = 1.0;
  const double dt = 1.0 / 32;
  const auto ref = strang_run(s, dt / 16, T).states.back();
  const auto coarse = strang_run(s, dt, T);
  const auto fine = strang_run(s, dt / 2, T);
  const double ratio = state_distance(coarse.states.back(), ref) /
                       state_distance(fine.states.back(), ref);
  CHECK(ratio >= 3.4);
  CHECK(ratio <= 4.6);

  auto drift = [](const SolutionTrace& t) {
    return std::abs(t.energies.back().total - t.energies.front().total);
  };
  const double drift_ratio = drift(coarse) / drift(fine);
  CHECK(drift_ratio >= 3.4);
  CHECK(drift_ratio <= 4.6);
}

TEST_CASE("solve: zero data stay zero") {
  const LatticeSpec s(2, 0.2, 8);
  for (auto mass : {MassField::constant(s, 1.0), bump_mass(s)}) {
    const auto trace =
        solve(GridFunction(s), GridFunction(s), FractionalOrder(0.5), mass, Forcing::zero(), 1.0,
              1.0 / 64, 8);
    for (const auto& st : trace.states) {
      CHECK(oracle::l2(st.u) == 0.0);
      CHECK(oracle::l2(st.du) == 0.0);
    }
    for (const auto& e : trace.energies) CHECK(e.total == 0.0);
  }
}

TEST_CASE("solve: single mode matches the scalar oscillator") {
  const LatticeSpec s(2, 0.25, 16);
  const std::vector<int> m{3, -2};
  const double alpha = 0.65;
  const double mass = 0.8;
  const auto wave = oracle::plane_wave(s, m);
  const Complex a(0.4, 0.1);
  const Complex b(-0.3, 0.9);
  const double T = 2.5;
  const auto trace = solve(a * wave, b * wave, FractionalOrder(alpha),
                           MassField::constant(s, mass), Forcing::zero(), T, T / 100, 7);
  CHECK(trace.exact_propagator);
  const double beta =
      std::sqrt(std::pow(0.25, -2 * alpha) * oracle::symbol(m, 16, alpha) + mass);
  for (const auto& st : trace.states) {
    const auto ref = oracle::oscillator(beta, a, b, st.time);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(st.u[i] - ref.v * wave[i]) <= 1e-10);
      CHECK(std::abs(st.du[i] - ref.dv * wave[i]) <= 1e-10);
    }
  }
  CHECK(trace.states.back().time == T);
}

TEST_CASE("solve: recording schedule and argument checks") {
  const LatticeSpec s(1, 0.1, 16);
  const auto u = oracle::random_field(s, 1);
  const auto mass = MassField::constant(s, 1.0);
  const auto trace = solve(u, u, FractionalOrder(0.5), mass, Forcing::zero(), 1.0, 0.1, 3);
  std::vector<double> times;
  for (const auto& st : trace.states) times.push_back(st.time);
  const std::vector<double> expected{0.0, 0.3, 0.6, 0.9, 1.0};
  REQUIRE(times.size() == expected.size());
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(times[i] == doctest::Approx(expected[i]));

  CHECK_THROWS(solve(u, u, FractionalOrder(0.5), mass, Forcing::zero(), 1.0, 0.3, 1));
  CHECK_THROWS(solve(u, u, FractionalOrder(0.5), mass, Forcing::zero(), 1.0, 0.0, 1));
  CHECK_THROWS(solve(u, u, FractionalOrder(0.5), mass, Forcing::zero(), 1.0, -0.1, 1));
  CHECK_THROWS(solve(u, u, FractionalOrder(0.5), mass, Forcing::zero(), 0.0, 0.1, 1));
  const LatticeSpec other(1, 0.2, 16);
  CHECK_THROWS_AS(solve(u, oracle::random_field(other, 1), FractionalOrder(0.5), mass,
                        Forcing::zero(), 1.0, 0.1, 1),
                  SpecMismatchError);
  CHECK_THROWS(solve(u, u, FractionalOrder(0.5), mass, smooth_forcing(s, 0.5, 4), 1.0, 0.1, 1));
}

TEST_CASE("exact propagator conserves energy") {
  for (int n : {1, 2}) {
    const LatticeSpec s(n, 0.1, n == 1 ? 128 : 32);
    for (double alpha : {0.3, 0.75, 1.0}) {
      const auto trace =
          solve(oracle::random_field(s, 10 + n), oracle::random_field(s, 20 + n),
                FractionalOrder(alpha), MassField::constant(s, 1.5), Forcing::zero(), 4.0,
                4.0 / 1024, 16);
      const double e0 = trace.energies.front().total;
      for (const auto& e : trace.energies) {
        CHECK(std::abs(e.total - e0) / std::max(e0, 1.0) <= 1e-10);
        CHECK(e.total == doctest::Approx(e.kinetic + e.dirichlet + e.potential).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("time reversal returns the initial state") {
  const LatticeSpec s(1, 0.05, 128);
  const auto u0 = oracle::random_field(s, 5);
  const auto u1 = oracle::random_field(s, 6);
  const auto mass = MassField::constant(s, 0.5);
  const FractionalOrder order(0.6);
  const auto fwd = solve(u0, u1, order, mass, Forcing::zero(), 3.0, 3.0 / 256, 1024);
  const auto& end = fwd.states.back();
  const auto back =
      solve(end.u, -1.0 * end.du, order, mass, Forcing::zero(), 3.0, 3.0 / 256, 1024);
  const auto& fin = back.states.back();
  CHECK(oracle::l2(fin.u - u0) <= 1e-9 * oracle::l2(u0));
  CHECK(oracle::l2(-1.0 * fin.du - u1) <= 1e-9 * oracle::l2(u1));
}

TEST_CASE("solution map is linear") {
  const LatticeSpec s(1, 0.1, 32);
  const FractionalOrder order(0.5);
  for (auto mass : {MassField::constant(s, 1.0), bump_mass(s)}) {
    const auto f = smooth_forcing(s, 1.0, 9);
    const auto a0 = oracle::random_field(s, 1);
    const auto a1 = oracle::random_field(s, 2);
    const auto b0 = oracle::random_field(s, 3);
    const auto b1 = oracle::random_field(s, 4);
    const Complex ca(0.7, -0.2);
    const Complex cb(-1.3, 0.4);
    std::vector<GridFunction> fs;
    for (const auto& g : f.samples()) fs.push_back(ca * g);
    const Forcing fa(1.0, fs);
    auto end = [&](const GridFunction& u0, const GridFunction& u1, const Forcing& ff) {
      return solve(u0, u1, order, mass, ff, 1.0, 1.0 / 64, 1000).states.back();
    };
    const auto combined = end(ca * a0 + cb * b0, ca * a1 + cb * b1, fa);
    const auto first = end(a0, a1, f);
    const auto second = end(b0, b1, Forcing::zero());
    CHECK(oracle::l2(combined.u - (ca * first.u + cb * second.u)) <= 1e-10);
    CHECK(oracle::l2(combined.du - (ca * first.du + cb * second.du)) <= 1e-10);
  }
}

TEST_CASE("energy inequality on forced runs") {
  const LatticeSpec s(1, 0.1, 64);
  for (auto mass : {MassField::constant(s, 1.0), bump_mass(s)}) {
    const auto f = smooth_forcing(s, 2.0, 17);
    const auto trace = solve(gaussian(s, 0.5), GridFunction(s), FractionalOrder(0.5), mass, f,
                             2.0, 2.0 / 512, 8);
    for (std::size_t i = 0; i < trace.energies.size(); ++i) {
      CHECK(std::sqrt(trace.energies[i].total) <= trace.sqrt_energy_bound[i] + 1e-8);
    }
    CHECK(trace.forcing_integral.back() > 0.0);
  }
}

TEST_CASE("energy examples") {
  const LatticeSpec s(2, 0.2, 8);
  const FractionalOrder order(0.6);
  const auto mass0 = MassField::constant(s, 0.0);
  const auto z = energy(EvolutionState(0.0, GridFunction(s), GridFunction(s)), order, mass0);
  CHECK(z.total == 0.0);

  const std::vector<int> m{1, -3};
  const auto wave = oracle::plane_wave(s, m);
  const auto e = energy(EvolutionState(0.0, wave, GridFunction(s)), order, mass0);
  const double expected = std::pow(0.2, -1.2) * oracle::symbol(m, 8, 0.6) * 64;
  CHECK(e.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(e.kinetic == 0.0);
  CHECK(e.potential == 0.0);

  const auto u1 = oracle::random_field(s, 8);
  const auto k = energy(EvolutionState(0.0, GridFunction(s), u1), order, bump_mass(s));
  CHECK(k.total == doctest::Approx(std::pow(oracle::l2(u1), 2)).epsilon(1e-14));

  const auto u = oracle::random_field(s, 9);
  const auto bm = bump_mass(s);
  const auto p = energy(EvolutionState(0.0, u, GridFunction(s)), order, bm);
  double pot = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) pot += bm.values()[i] * std::norm(u[i]);
  CHECK(p.potential == doctest::Approx(pot).epsilon(1e-14));
}

TEST_CASE("forcing interpolation, norm and csv") {
  const LatticeSpec s(1, 0.5, 4);
  const GridFunction a(s, {1.0, 2.0, 3.0, 4.0});
  const GridFunction b(s, {3.0, 2.0, 1.0, Complex(0.0, 2.0)});
  const Forcing f(2.0, {a, b});
  CHECK(f.sample_time(1) == 2.0);
  const auto mid = f.at(0.5, s);
  CHECK(mid[0] == Complex(1.5));
  CHECK(mid[3] == Complex(3.0, 0.5));
  CHECK_THROWS(f.at(2.5, s));
  CHECK_THROWS(f.at(-0.1, s));
  CHECK_THROWS(f.at(1.0, LatticeSpec(1, 0.25, 4)));

  // int_0^1 ||a + (b - a) s/2||^2 ds by Simpson on the quadratic integrand.
  auto sq = [&](double t) { return std::pow(oracle::l2(f.at(t, s)), 2); };
  const double simpson = (sq(0.0) + 4.0 * sq(0.5) + sq(1.0)) / 6.0;
  CHECK(f.l2_time_norm_squared(1.0) == doctest::Approx(simpson).epsilon(1e-14));
  CHECK(Forcing::zero().l2_time_norm_squared(3.0) == 0.0);

  std::stringstream io;
  write_forcing_csv(io, f);
  CHECK(io.str().rfind("t,index_0,re,im\n", 0) == 0);
  const auto back = read_forcing_csv(io, s);
  REQUIRE(back.samples().size() == 2);
  CHECK(back.end_time() == 2.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.samples()[1][i] == b[i]);
}

TEST_CASE("a-priori report") {
  const LatticeSpec s(1, 0.1, 32);
  const auto mass = MassField::constant(s, 1.0);
  const auto zero = solve(GridFunction(s), GridFunction(s), FractionalOrder(0.5), mass,
                          Forcing::zero(), 1.0, 1.0 / 32, 4);
  const auto rz = apriori_report(zero, GridFunction(s), GridFunction(s), mass, Forcing::zero());
  CHECK(rz.implied_constant == 0.0);
  for (double r : rz.ratio) CHECK(r == 0.0);

  // Pure velocity data, no mass, no source.
  const auto u1 = oracle::random_field(s, 4);
  const auto m0 = MassField::constant(s, 0.0);
  const auto trace =
      solve(GridFunction(s), u1, FractionalOrder(0.5), m0, Forcing::zero(), 1.0, 1.0 / 64, 4);
  const auto r = apriori_report(trace, GridFunction(s), u1, m0, Forcing::zero());
  CHECK(r.ratio.front() == doctest::Approx(1.0));
  CHECK(std::isfinite(r.implied_constant));
  MESSAGE("pure-velocity implied constant: " << r.implied_constant);
}

TEST_CASE("a-priori constant is stable under hbar halving") {
  auto constant_at = [](double hbar) {
    const double L = 6.4;
    const LatticeSpec s(1, hbar, static_cast<int>(std::lround(L / hbar)));
    const auto mass = bump_mass(s);
    const auto u0 = gaussian(s, 0.6);
    const auto u1 = gaussian(s, 0.4, 0.5);
    const auto f = smooth_forcing(s, 1.0, 9);
    const auto trace = solve(u0, u1, FractionalOrder(0.5), mass, f, 1.0, 1.0 / 256, 8);
    return apriori_report(trace, u0, u1, mass, f).implied_constant;
  };
  const double c1 = constant_at(0.1);
  const double c2 = constant_at(0.05);
  CHECK(c1 > 0.0);
  CHECK(std::max(c1, c2) / std::min(c1, c2) <= 2.0);
}
