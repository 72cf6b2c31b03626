#include "latfkg/kg_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace latfkg {

namespace {

constexpr double kSeriesThreshold = 1e-6;

// sin(beta dt) / beta and (1 - cos(beta dt)) / beta^2, with Taylor series
// below the threshold so beta = 0 is regular.
struct ModeKernels {
  double cos_term;
  double sinc;
  double versine;
};

ModeKernels mode_kernels(double beta, double dt) {
  const double x = beta * dt;
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return {std::cos(x), dt * (1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0),
            dt * dt * (0.5 - x2 / 24.0 + x2 * x2 / 720.0 - x2 * x2 * x2 / 40320.0)};
  }
  const double half_sin = std::sin(0.5 * x);
  return {std::cos(x), std::sin(x) / beta, 2.0 * half_sin * half_sin / (beta * beta)};
}

std::vector<double> sqrt_scaled_symbol(const LatticeSpec& spec, FractionalOrder order) {
  const SymbolField symbol(spec, order, true);
  std::vector<double> out(symbol.values().begin(), symbol.values().end());
  for (auto& v : out) v = std::sqrt(v);
  return out;
}

EnergyRecord energy_with(const EvolutionState& state, std::span<const double> sqrt_symbol,
                         const MassField& mass) {
  EnergyRecord rec{};
  rec.time = state.time;
  const double du = norm(state.du, Norm::l2);
  rec.kinetic = du * du;
  const double dir = norm(apply_multiplier(state.u, sqrt_symbol), Norm::l2);
  rec.dirichlet = dir * dir;
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    rec.potential += mass.values()[i] * std::norm(state.u[i]);
  }
  rec.total = rec.kinetic + rec.dirichlet + rec.potential;
  return rec;
}

}  // namespace

MassField::MassField(const LatticeSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)), sup_norm_(0.0) {
  if (values_.size() != spec.size()) {
    throw std::invalid_argument("mass field has the wrong number of values");
  }
  bool uniform = true;
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("mass must be finite and nonnegative");
    }
    sup_norm_ = std::max(sup_norm_, v);
    uniform = uniform && v == values_.front();
  }
  if (uniform) constant_ = values_.front();
}

MassField MassField::constant(const LatticeSpec& spec, double mass) {
  return MassField(spec, std::vector<double>(spec.size(), mass));
}

Forcing::Forcing(double end_time, std::vector<GridFunction> samples)
    : end_time_(end_time), samples_(std::move(samples)) {
  if (!(end_time > 0.0) || !std::isfinite(end_time)) {
    throw std::invalid_argument("forcing end time must be positive");
  }
  if (samples_.size() < 2) {
    throw std::invalid_argument("sampled forcing needs at least two time samples");
  }
  for (const auto& s : samples_) samples_.front().require_same_spec(s);
}

double Forcing::sample_time(std::size_t i) const {
  return end_time_ * static_cast<double>(i) / static_cast<double>(samples_.size() - 1);
}

GridFunction Forcing::at(double t, const LatticeSpec& spec) const {
  if (is_zero()) return GridFunction(spec);
  require_same_spec(samples_.front().spec(), spec);
  const double slack = 1e-9 * end_time_;
  if (t < -slack || t > end_time_ + slack) {
    throw std::invalid_argument("forcing evaluated at t = " + format_double(t) +
                                " outside [0, " + format_double(end_time_) + "]");
  }
  const std::size_t intervals = samples_.size() - 1;
  const double pos = std::clamp(t / end_time_, 0.0, 1.0) * static_cast<double>(intervals);
  const std::size_t i = std::min(static_cast<std::size_t>(pos), intervals - 1);
  const double w = pos - static_cast<double>(i);
  std::vector<Complex> out(spec.size());
  const auto& a = samples_[i];
  const auto& b = samples_[i + 1];
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - w) * a[k] + w * b[k];
  return GridFunction(spec, std::move(out));
}

double Forcing::l2_time_norm_squared(double upto) const {
  if (is_zero()) return 0.0;
  upto = std::clamp(upto, 0.0, end_time_);
  const std::size_t intervals = samples_.size() - 1;
  const double h = end_time_ / static_cast<double>(intervals);
  // int_0^1 |a + (b - a) s|^2 ds = (|a|^2 + Re(a conj b) + |b|^2) / 3
  auto segment = [](const GridFunction& a, const GridFunction& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      acc += std::norm(a[k]) + (a[k] * std::conj(b[k])).real() + std::norm(b[k]);
    }
    return acc / 3.0;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < intervals; ++i) {
    const double t0 = h * static_cast<double>(i);
    if (t0 >= upto) break;
    const double t1 = std::min(t0 + h, upto);
    if (t1 - t0 >= h) {
      total += h * segment(samples_[i], samples_[i + 1]);
    } else {
      total += (t1 - t0) * segment(samples_[i], at(t1, samples_[i].spec()));
    }
  }
  return total;
}

void write_forcing_csv(std::ostream& out, const Forcing& forcing) {
  if (forcing.is_zero()) throw std::invalid_argument("zero forcing has no samples to write");
  const auto& spec = forcing.samples().front().spec();
  out << 't';
  for (int a = 0; a < spec.dim(); ++a) out << ",index_" << a;
  out << ",re,im\n";
  for (std::size_t i = 0; i < forcing.samples().size(); ++i) {
    const auto t = format_double(forcing.sample_time(i));
    const auto& f = forcing.samples()[i];
    for_each_index(spec, [&](std::size_t flat, std::span<const int> multi) {
      out << t;
      for (int j : multi) out << ',' << j;
      out << ',' << format_double(f[flat].real()) << ',' << format_double(f[flat].imag())
          << '\n';
    });
  }
}

Forcing read_forcing_csv(std::istream& in, const LatticeSpec& spec) {
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument("forcing csv: missing header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::string expected = "t";
  for (int a = 0; a < spec.dim(); ++a) expected += ",index_" + std::to_string(a);
  expected += ",re,im";
  if (header != expected) {
    throw std::invalid_argument("forcing csv: header '" + header + "' does not match '" +
                                expected + "'");
  }
  // Split rows by time, then hand each block to the grid reader.
  std::vector<double> times;
  std::vector<std::string> blocks;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("forcing csv row " + std::to_string(row) + ": malformed");
    }
    double t = 0.0;
    try {
      t = std::stod(line.substr(0, comma));
    } catch (const std::exception&) {
      throw std::invalid_argument("forcing csv row " + std::to_string(row) + ": bad time");
    }
    if (times.empty() || t != times.back()) {
      if (!times.empty() && t <= times.back()) {
        throw std::invalid_argument("forcing csv: times must be increasing");
      }
      times.push_back(t);
      blocks.emplace_back();
    }
    blocks.back() += line.substr(comma + 1);
    blocks.back() += '\n';
  }
  if (times.size() < 2) throw std::invalid_argument("forcing csv: need at least two times");
  if (times.front() != 0.0) throw std::invalid_argument("forcing csv: first time must be 0");
  const double end_time = times.back();
  const double h = end_time / static_cast<double>(times.size() - 1);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - h * static_cast<double>(i)) > 1e-9 * end_time) {
      throw std::invalid_argument("forcing csv: times must be uniformly spaced");
    }
  }
  std::string grid_header;
  for (int a = 0; a < spec.dim(); ++a) grid_header += "index_" + std::to_string(a) + ",";
  grid_header += "re,im\n";
  std::vector<GridFunction> samples;
  samples.reserve(blocks.size());
  for (const auto& block : blocks) {
    std::istringstream is(grid_header + block);
    samples.push_back(read_csv(is, spec));
  }
  return Forcing(end_time, std::move(samples));
}

Forcing read_forcing_csv(const std::string& path, const LatticeSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_forcing_csv(in, spec);
}

EvolutionState::EvolutionState(double t, GridFunction u_in, GridFunction du_in)
    : time(t), u(std::move(u_in)), du(std::move(du_in)) {
  u.require_same_spec(du);
}

PropagatorModes build_propagator(const LatticeSpec& spec, FractionalOrder order, double mass) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("mass must be finite and nonnegative, got " +
                                format_double(mass));
  }
  const SymbolField symbol(spec, order, true);
  std::vector<double> beta(spec.size());
  for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = std::sqrt(symbol[i] + mass);
  return PropagatorModes{spec, order, mass, std::move(beta)};
}

EvolutionState propagate_exact(const EvolutionState& state, const PropagatorModes& modes,
                               double dt, const Forcing& forcing) {
  const auto& spec = state.u.spec();
  require_same_spec(spec, modes.spec);
  if (!std::isfinite(dt)) throw std::invalid_argument("dt must be finite");

  auto v = std::move(forward_transform(state.u)).release();
  auto dv = std::move(forward_transform(state.du)).release();
  std::vector<Complex> f;
  if (!forcing.is_zero()) {
    f = std::move(forward_transform(forcing.at(state.time + 0.5 * dt, spec))).release();
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double beta = modes.beta[i];
    const auto k = mode_kernels(beta, dt);
    Complex v_new = k.cos_term * v[i] + k.sinc * dv[i];
    Complex dv_new = -beta * beta * k.sinc * v[i] + k.cos_term * dv[i];
    if (!f.empty()) {
      v_new += k.versine * f[i];
      dv_new += k.sinc * f[i];
    }
    v[i] = v_new;
    dv[i] = dv_new;
  }
  return EvolutionState(state.time + dt, inverse_transform(SpectralFunction(spec, std::move(v))),
                        inverse_transform(SpectralFunction(spec, std::move(dv))));
}

EvolutionState propagate_exact(const EvolutionState& state, FractionalOrder order,
                               const MassField& mass, double dt, const Forcing& forcing) {
  const auto m = mass.constant_value();
  if (!m) {
    throw UnsupportedError("exact propagation needs a constant mass; use step_strang");
  }
  return propagate_exact(state, build_propagator(state.u.spec(), order, *m), dt, forcing);
}

StrangStepper::StrangStepper(const LatticeSpec& spec, FractionalOrder order, MassField mass)
    : free_modes_(build_propagator(spec, order, 0.0)), mass_(std::move(mass)) {
  require_same_spec(spec, mass_.spec());
}

EvolutionState StrangStepper::step(const EvolutionState& state, double dt,
                                   const Forcing& forcing) const {
  const auto& spec = state.u.spec();
  require_same_spec(spec, mass_.spec());
  const auto f_mid = forcing.at(state.time + 0.5 * dt, spec);
  const auto m = mass_.values();

  auto kick = [&](const GridFunction& u, const GridFunction& du) {
    std::vector<Complex> out(du.values().begin(), du.values().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * dt * (f_mid[i] - m[i] * u[i]);
    return GridFunction(spec, std::move(out));
  };

  EvolutionState half(state.time, state.u, kick(state.u, state.du));
  auto rotated = propagate_exact(half, free_modes_, dt, Forcing::zero());
  auto du = kick(rotated.u, rotated.du);
  return EvolutionState(state.time + dt, std::move(rotated.u), std::move(du));
}

EvolutionState step_strang(const EvolutionState& state, FractionalOrder order,
                           const MassField& mass, double dt, const Forcing& forcing) {
  return StrangStepper(state.u.spec(), order, mass).step(state, dt, forcing);
}

EnergyRecord energy(const EvolutionState& state, FractionalOrder order, const MassField& mass) {
  require_same_spec(state.u.spec(), mass.spec());
  return energy_with(state, sqrt_scaled_symbol(state.u.spec(), order), mass);
}

SolutionTrace solve(const GridFunction& u0, const GridFunction& u1, FractionalOrder order,
                    const MassField& mass, const Forcing& forcing, double end_time, double dt,
                    int record_every) {
  const auto& spec = u0.spec();
  u0.require_same_spec(u1);
  require_same_spec(spec, mass.spec());
  if (!forcing.is_zero()) require_same_spec(spec, forcing.samples().front().spec());
  if (!(end_time > 0.0) || !std::isfinite(end_time)) {
    throw std::invalid_argument("T must be positive");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const double ratio = end_time / dt;
  const long long steps = std::llround(ratio);
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("dt = " + format_double(dt) + " does not divide T = " +
                                format_double(end_time));
  }
  if (!forcing.is_zero() && forcing.end_time() < end_time * (1.0 - 1e-12)) {
    throw std::invalid_argument("forcing samples end before T");
  }
  const double step = end_time / static_cast<double>(steps);

  const auto sqrt_symbol = sqrt_scaled_symbol(spec, order);
  const auto constant_mass = mass.constant_value();
  std::optional<PropagatorModes> modes;
  std::optional<StrangStepper> strang;
  if (constant_mass) {
    modes = build_propagator(spec, order, *constant_mass);
  } else {
    strang.emplace(spec, order, mass);
  }

  SolutionTrace trace{order, end_time, step, constant_mass.has_value(), {}, {}, {}, {}};
  EvolutionState state(0.0, u0, u1);
  double forcing_integral = 0.0;
  double sqrt_e0 = 0.0;
  auto record = [&] {
    const auto e = energy_with(state, sqrt_symbol, mass);
    if (trace.states.empty()) sqrt_e0 = std::sqrt(e.total);
    trace.states.push_back(state);
    trace.energies.push_back(e);
    trace.forcing_integral.push_back(forcing_integral);
    trace.sqrt_energy_bound.push_back(sqrt_e0 + forcing_integral);
  };
  record();
  for (long long n = 1; n <= steps; ++n) {
    if (!forcing.is_zero()) {
      forcing_integral += step * norm(forcing.at(state.time + 0.5 * step, spec), Norm::l2);
    }
    state = modes ? propagate_exact(state, *modes, step, forcing)
                  : strang->step(state, step, forcing);
    // pin the clock to the grid so round-off does not drift
    state.time = end_time * static_cast<double>(n) / static_cast<double>(steps);
    if (n % record_every == 0 || n == steps) record();
  }
  return trace;
}

AprioriReport apriori_report(const SolutionTrace& trace, const GridFunction& u0,
                             const GridFunction& u1, const MassField& mass,
                             const Forcing& forcing) {
  const auto& spec = u0.spec();
  const double m_sup = mass.sup_norm();
  const double u0_sq = std::pow(norm(u0, Norm::l2), 2);
  const double u1_sq = std::pow(norm(u1, Norm::l2), 2);
  const double f_sq = forcing.l2_time_norm_squared(trace.end_time);
  const double scaled = std::pow(spec.spacing(), -2.0 * trace.order.value());

  AprioriReport report;
  report.rhs = (1.0 + m_sup) * ((scaled + m_sup) * u0_sq + u1_sq + f_sq);
  report.implied_constant = 0.0;
  for (const auto& s : trace.states) {
    const double lhs = std::pow(norm(s.u, Norm::l2), 2) + std::pow(norm(s.du, Norm::l2), 2);
    const double ratio = report.rhs > 0.0 ? lhs / report.rhs : 0.0;
    report.times.push_back(s.time);
    report.lhs.push_back(lhs);
    report.ratio.push_back(ratio);
    report.implied_constant = std::max(report.implied_constant, ratio);
  }
  return report;
}

}  // namespace latfkg
