#include "latfkg/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "latfkg/parallel.hpp"

namespace latfkg {

namespace {

void check_plan(const SweepPlan& plan) {
  if (plan.dim < 1) throw std::invalid_argument("sweep dim must be >= 1");
  if (plan.initial_value.dim() != plan.dim) {
    throw std::invalid_argument("profile dim does not match sweep dim");
  }
  if (!(plan.end_time > 0.0)) throw std::invalid_argument("sweep end time must be positive");
  if (plan.time_steps < 1) throw std::invalid_argument("time_steps must be >= 1");
  if (plan.hbar_list.empty()) throw std::invalid_argument("hbar list is empty");
  for (std::size_t i = 0; i < plan.hbar_list.size(); ++i) {
    if (!(plan.hbar_list[i] > 0.0)) throw std::invalid_argument("hbar values must be positive");
    if (i > 0 && !(plan.hbar_list[i] < plan.hbar_list[i - 1])) {
      throw std::invalid_argument("hbar list must be strictly decreasing");
    }
  }
  for (double h : plan.hbar_list) {
    points_for(plan.box_length, h);
    if (plan.initial_value.cutoff() > 0.5 / h * (1.0 + 1e-12)) {
      throw NyquistError("hbar = " + format_double(h) + " cannot resolve profile cutoff " +
                             format_double(plan.initial_value.cutoff()),
                         0.5 / plan.initial_value.cutoff());
    }
  }
}

MassField mass_on(const SweepPlan& plan, const LatticeSpec& spec) {
  if (!plan.mass_function) return MassField::constant(spec, plan.mass);
  std::vector<double> values(spec.size());
  std::vector<double> x(spec.dim());
  for_each_index(spec, [&](std::size_t flat, std::span<const int> j) {
    for (int a = 0; a < spec.dim(); ++a) x[a] = spec.position(j[a]);
    values[flat] = plan.mass_function(x);
  });
  return MassField(spec, std::move(values));
}

EvolutionState lattice_final_state(const SweepPlan& plan, const LatticeSpec& spec,
                                   const ContinuumSolutionSampler& sampler) {
  auto [u0, u1] = sample_exact_solution(sampler, 0.0, spec);
  const double dt = plan.end_time / plan.time_steps;
  auto trace = solve(u0, u1, plan.order, mass_on(plan, spec), Forcing::zero(), plan.end_time,
                     dt, plan.time_steps);
  return trace.states.back();
}

ConvergenceRow make_row(double hbar, int points, int dim, double alpha, double d_u,
                        double d_du, double weight) {
  const double total = d_u + d_du;
  const double scale = std::pow(hbar, 2.0 * alpha) * weight;
  return {hbar,  points, d_u, d_du, total, std::pow(hbar, 0.5 * dim) * total,
          scale > 0.0 ? total / scale : 0.0};
}

void fit_tail(ConvergenceReport& report) {
  const std::size_t k = report.rows.size();
  const std::size_t use = (k + 1) / 2;
  std::vector<double> h;
  std::vector<double> d;
  for (std::size_t i = k - use; i < k; ++i) {
    h.push_back(report.rows[i].hbar);
    d.push_back(report.rows[i].d_total);
  }
  try {
    report.fit = fit_rate(h, d);
  } catch (const std::invalid_argument& e) {
    report.fit_note = e.what();
  }
}

}  // namespace

int points_for(double box_length, double hbar) {
  if (!(box_length > 0.0)) throw std::invalid_argument("box length must be positive");
  const double ratio = box_length / hbar;
  const long long n = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio || n < 2 || n % 2 != 0 ||
      n > std::numeric_limits<int>::max()) {
    throw std::invalid_argument("box length " + format_double(box_length) + " / hbar " +
                                format_double(hbar) + " is not an even integer");
  }
  return static_cast<int>(n);
}

RateFit fit_rate(std::span<const double> hbar, std::span<const double> discrepancy) {
  if (hbar.size() != discrepancy.size()) {
    throw std::invalid_argument("fit_rate: hbar and discrepancy lengths differ");
  }
  if (!discrepancy.empty() &&
      std::all_of(discrepancy.begin(), discrepancy.end(), [](double d) { return d == 0.0; })) {
    return {std::numeric_limits<double>::infinity(), 0.0, true};
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < hbar.size(); ++i) {
    if (discrepancy[i] > 0.0 && hbar[i] > 0.0) {
      x.push_back(std::log(hbar[i]));
      y.push_back(std::log(discrepancy[i]));
    }
  }
  if (x.size() < 3) {
    throw std::invalid_argument("fit_rate: need at least 3 rows with positive discrepancy, got " +
                                std::to_string(x.size()));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: hbar values are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    sse += e * e;
  }
  return {slope, std::sqrt(sse / n), false};
}

RateFit fit_rate(std::span<const ConvergenceRow> rows) {
  std::vector<double> h;
  std::vector<double> d;
  for (const auto& r : rows) {
    h.push_back(r.hbar);
    d.push_back(r.d_total);
  }
  return fit_rate(h, d);
}

ConvergenceReport run_sweep(const SweepPlan& plan) {
  check_plan(plan);
  if (plan.mass_function) {
    throw UnsupportedError("run_sweep needs a constant mass; use self_convergence");
  }
  const ContinuumSolutionSampler sampler(plan.initial_value, plan.initial_velocity, plan.order,
                                         plan.mass);
  ConvergenceReport report;
  report.weight = sobolev_weight_norm(sampler, plan.end_time);
  report.rows.resize(plan.hbar_list.size());

  parallel_for(plan.hbar_list.size(), [&](std::size_t i) {
    const double hbar = plan.hbar_list[i];
    const LatticeSpec spec(plan.dim, hbar, points_for(plan.box_length, hbar));
    const auto lattice = lattice_final_state(plan, spec, sampler);
    const auto [v, dv] = sample_exact_solution(sampler, plan.end_time, spec);
    report.rows[i] = make_row(hbar, spec.points_per_axis(), plan.dim, plan.order.value(),
                              norm(v - lattice.u, Norm::l2), norm(dv - lattice.du, Norm::l2),
                              report.weight);
  });
  fit_tail(report);
  return report;
}

ConvergenceReport self_convergence(const SweepPlan& plan, int reference_refinements) {
  check_plan(plan);
  if (reference_refinements < 0) {
    throw std::invalid_argument("reference_refinements must be >= 0");
  }
  for (std::size_t i = 1; i < plan.hbar_list.size(); ++i) {
    const double r = plan.hbar_list[i - 1] / plan.hbar_list[i];
    if (std::abs(r - 2.0) > 1e-9) {
      throw std::invalid_argument("self_convergence needs a dyadic hbar list (ratio 2)");
    }
  }
  // Initial data only; the mass enters through the lattice solve.
  const ContinuumSolutionSampler sampler(plan.initial_value, plan.initial_velocity, plan.order,
                                         0.0);
  std::vector<double> levels = plan.hbar_list;
  double finest = levels.back();
  for (int r = 0; r < reference_refinements; ++r) {
    finest *= 0.5;
    levels.push_back(finest);
  }
  points_for(plan.box_length, finest);

  std::vector<std::optional<EvolutionState>> finals(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    const LatticeSpec spec(plan.dim, levels[i], points_for(plan.box_length, levels[i]));
    finals[i] = lattice_final_state(plan, spec, sampler);
  });

  const auto& reference = *finals.back();
  const auto& ref_spec = reference.u.spec();

  ConvergenceReport report;
  if (plan.mass_function) {
    report.weight = sobolev_weight_norm(sampler, 0.0);
  } else {
    report.weight = sobolev_weight_norm(
        ContinuumSolutionSampler(plan.initial_value, plan.initial_velocity, plan.order,
                                 plan.mass),
        plan.end_time);
  }
  for (std::size_t i = 0; i < plan.hbar_list.size(); ++i) {
    const auto& coarse = *finals[i];
    const auto& spec = coarse.u.spec();
    const int stride = ref_spec.points_per_axis() / spec.points_per_axis();
    std::vector<Complex> du(spec.size());
    std::vector<Complex> ddu(spec.size());
    std::vector<int> fine(spec.dim());
    for_each_index(spec, [&](std::size_t flat, std::span<const int> j) {
      for (int a = 0; a < spec.dim(); ++a) fine[a] = j[a] * stride;
      const std::size_t f = ref_spec.flat_index(fine);
      du[flat] = coarse.u[flat] - reference.u[f];
      ddu[flat] = coarse.du[flat] - reference.du[f];
    });
    report.rows.push_back(make_row(spec.spacing(), spec.points_per_axis(), plan.dim,
                                   plan.order.value(),
                                   norm(GridFunction(spec, std::move(du)), Norm::l2),
                                   norm(GridFunction(spec, std::move(ddu)), Norm::l2),
                                   report.weight));
  }
  fit_tail(report);
  return report;
}

}  // namespace latfkg
