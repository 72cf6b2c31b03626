#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latfkg/continuum.hpp"
#include "latfkg/kg_solver.hpp"

namespace latfkg {

// m(x) at a physical position; must be bounded and nonnegative.
using MassFunction = std::function<double(std::span<const double>)>;

/// One hbar-refinement experiment on a fixed physical box [-L/2, L/2)^n, so
/// N = L / hbar per axis.
struct SweepPlan {
  FractionalOrder order;
  int dim = 1;
  double mass = 0.0;
  // Variable mass for self_convergence; `mass` is used when empty.
  MassFunction mass_function;
  BandLimitedProfile initial_value;
  BandLimitedProfile initial_velocity;
  double end_time = 1.0;
  std::vector<double> hbar_list;  // strictly decreasing
  double box_length = 0.0;
  int time_steps = 1024;
};

struct ConvergenceRow {
  double hbar;
  int points;
  double d_u;
  double d_du;
  double d_total;
  double d_total_weighted;  // hbar^{n/2} d_total, a volume-weighted L^2 reading
  double normalized;        // d_total / (hbar^{2 alpha} * sobolev weight)
};

struct RateFit {
  double slope;
  double residual;  // RMS of the log-log fit errors
  bool exact;       // every discrepancy was exactly zero; slope is +inf
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // hbar descending
  std::optional<RateFit> fit;
  std::string fit_note;  // why `fit` is empty
  double weight;         // sobolev_weight_norm used for `normalized`
};

/// Least squares slope of log D against log hbar over the rows with D > 0.
/// All-zero input is reported as exact; fewer than three positive rows
/// otherwise throws.
RateFit fit_rate(std::span<const double> hbar, std::span<const double> discrepancy);
RateFit fit_rate(std::span<const ConvergenceRow> rows);

/// Lattice solution (exact propagator, constant mass) against the sampled
/// continuum solution at end_time, for every hbar in the plan. The rate is
/// fitted over the last ceil(k/2) rows.
ConvergenceReport run_sweep(const SweepPlan& plan);

/// Variable-mass fallback with no continuum oracle: the lattice solution at
/// hbar_min / 2^reference_refinements is the reference, restricted to each
/// coarser lattice by site matching. Requires a dyadic hbar list.
ConvergenceReport self_convergence(const SweepPlan& plan, int reference_refinements = 2);

// N = L / hbar, throwing unless it is an even integer.
int points_for(double box_length, double hbar);

}  // namespace latfkg
