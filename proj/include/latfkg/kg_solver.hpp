#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latfkg/frac_laplacian.hpp"
#include "latfkg/lattice.hpp"

namespace latfkg {

/// Nonnegative mass m(k) on the lattice.
class MassField {
 public:
  MassField(const LatticeSpec& spec, std::vector<double> values);
  static MassField constant(const LatticeSpec& spec, double mass);

  const LatticeSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  double sup_norm() const { return sup_norm_; }
  // Set when every site carries the same value.
  std::optional<double> constant_value() const { return constant_; }

 private:
  LatticeSpec spec_;
  std::vector<double> values_;
  double sup_norm_;
  std::optional<double> constant_;
};

/// Source term f(t, k): identically zero, or GridFunction samples on the
/// uniform grid t_i = i * end_time / (K - 1) joined piecewise-linearly.
class Forcing {
 public:
  static Forcing zero() { return Forcing(); }
  Forcing(double end_time, std::vector<GridFunction> samples);

  bool is_zero() const { return samples_.empty(); }
  double end_time() const { return end_time_; }
  const std::vector<GridFunction>& samples() const { return samples_; }
  double sample_time(std::size_t i) const;

  // f(t) on `spec`; throws if the samples live on another lattice or t is
  // outside [0, end_time].
  GridFunction at(double t, const LatticeSpec& spec) const;

  // int_0^upto ||f(s)||^2 ds, exact for the piecewise-linear interpolant.
  double l2_time_norm_squared(double upto) const;

 private:
  Forcing() = default;

  double end_time_ = 0.0;
  std::vector<GridFunction> samples_;
};

// CSV with header "t,index_0,...,index_{n-1},re,im"; rows grouped by time.
void write_forcing_csv(std::ostream& out, const Forcing& forcing);
Forcing read_forcing_csv(std::istream& in, const LatticeSpec& spec);
Forcing read_forcing_csv(const std::string& path, const LatticeSpec& spec);

struct EvolutionState {
  EvolutionState(double time, GridFunction u, GridFunction du);

  double time;
  GridFunction u;
  GridFunction du;  // d/dt u
};

/// Mode frequencies beta(theta) = sqrt(hbar^{-2 alpha} sigma(theta) + m) of the
/// constant-mass problem, in flat dual order.
struct PropagatorModes {
  LatticeSpec spec;
  FractionalOrder order;
  double mass;
  std::vector<double> beta;
};

PropagatorModes build_propagator(const LatticeSpec& spec, FractionalOrder order, double mass);

/// Advances each Fourier mode by the variation-of-constants formula over dt
/// (dt may be negative). The forcing is frozen at the step midpoint and
/// integrated exactly against the sin/cos kernels, so f = 0 gives the exact
/// flow.
EvolutionState propagate_exact(const EvolutionState& state, const PropagatorModes& modes,
                               double dt, const Forcing& forcing);

// Throws UnsupportedError when `mass` is not constant.
EvolutionState propagate_exact(const EvolutionState& state, FractionalOrder order,
                               const MassField& mass, double dt, const Forcing& forcing);

/// Strang splitting: half kick with (f(t + dt/2) - m u), exact free
/// fractional-wave flow over dt, half kick. Second order in dt; no step-size
/// restriction.
class StrangStepper {
 public:
  StrangStepper(const LatticeSpec& spec, FractionalOrder order, MassField mass);

  EvolutionState step(const EvolutionState& state, double dt, const Forcing& forcing) const;

 private:
  PropagatorModes free_modes_;
  MassField mass_;
};

EvolutionState step_strang(const EvolutionState& state, FractionalOrder order,
                           const MassField& mass, double dt, const Forcing& forcing);

struct EnergyRecord {
  double time;
  double kinetic;    // ||d/dt u||^2
  double dirichlet;  // ||hbar^{-alpha} (-L_hbar)^{alpha/2} u||^2
  double potential;  // ||m^{1/2} u||^2
  double total;
};

EnergyRecord energy(const EvolutionState& state, FractionalOrder order, const MassField& mass);

struct SolutionTrace {
  FractionalOrder order;
  double end_time;
  double dt;
  bool exact_propagator;
  std::vector<EvolutionState> states;
  std::vector<EnergyRecord> energies;
  // int_0^t ||f|| ds as consumed by the stepper (midpoint rule)
  std::vector<double> forcing_integral;
  // sqrt(E(0)) + forcing_integral
  std::vector<double> sqrt_energy_bound;
};

/// Solves the lattice Cauchy problem on [0, T]. Constant mass uses the exact
/// propagator, variable mass Strang splitting. States are recorded at t = 0,
/// every `record_every` steps, and at T. T / dt must be an integer up to
/// round-off.
SolutionTrace solve(const GridFunction& u0, const GridFunction& u1, FractionalOrder order,
                    const MassField& mass, const Forcing& forcing, double end_time, double dt,
                    int record_every = 16);

/// Per recorded time, ||u||^2 + ||du||^2 divided by
///   (1 + ||m||_inf) [ (hbar^{-2 alpha} + ||m||_inf) ||u0||^2 + ||u1||^2 + ||f||^2_{L^2(0,T)} ].
/// The maximum ratio is the implied constant of the a-priori estimate for
/// this run; zero data give ratio 0.
struct AprioriReport {
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> ratio;
  double rhs;
  double implied_constant;
};

AprioriReport apriori_report(const SolutionTrace& trace, const GridFunction& u0,
                             const GridFunction& u1, const MassField& mass,
                             const Forcing& forcing);

}  // namespace latfkg
