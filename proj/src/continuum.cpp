#include "latfkg/continuum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace latfkg {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t grid_size(int dim, int points) {
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(points);
  return total;
}

// Calls fn(flat, xi) for every node of the profile grid.
template <class Fn>
void for_each_node(const BandLimitedProfile& p, Fn&& fn) {
  std::vector<int> pos(p.dim(), 0);
  std::vector<double> xi(p.dim());
  const std::size_t total = grid_size(p.dim(), p.points());
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (int a = 0; a < p.dim(); ++a) xi[a] = p.node(pos[a]);
    fn(flat, std::span<const double>(xi));
    for (int a = p.dim() - 1; a >= 0; --a) {
      if (++pos[a] < p.points()) break;
      pos[a] = 0;
    }
  }
}

// Smooth step: 1 for r <= 1 - width, 0 for r >= 1.
double taper(double r, double width) {
  if (width <= 0.0) return r < 1.0 ? 1.0 : 0.0;
  const double x = (r - (1.0 - width)) / width;
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  auto psi = [](double y) { return y > 0.0 ? std::exp(-1.0 / y) : 0.0; };
  return psi(1.0 - x) / (psi(1.0 - x) + psi(x));
}

double frequency(std::span<const double> xi, FractionalOrder order, double mass) {
  return std::sqrt(continuum_symbol(xi, order) + mass);
}

/// out[j_0..j_{n-1}] = sum_i coeffs[i_0..i_{n-1}] prod_a exp(2 pi i x_{j_a} xi_{i_a}),
/// one axis at a time.
std::vector<Complex> synthesize(std::vector<Complex> tensor, int dim,
                                std::span<const double> nodes,
                                std::span<const double> positions) {
  const std::size_t m = nodes.size();
  const std::size_t n = positions.size();
  std::vector<Complex> kernel(n * m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const double angle = 2.0 * kPi * positions[j] * nodes[i];
      kernel[j * m + i] = Complex(std::cos(angle), std::sin(angle));
    }
  }
  // Contract the leading axis and append the result as the trailing axis.
  std::size_t lead = m;
  for (int step = 0; step < dim; ++step) {
    const std::size_t rest = tensor.size() / lead;
    std::vector<Complex> out(rest * n);
    for (std::size_t i = 0; i < lead; ++i) {
      const Complex* row = tensor.data() + i * rest;
      for (std::size_t r = 0; r < rest; ++r) {
        const Complex c = row[r];
        if (c == Complex(0.0)) continue;
        Complex* dst = out.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += c * kernel[j * m + i];
      }
    }
    tensor = std::move(out);
    lead = (step + 1 < dim) ? m : n;
  }
  return tensor;
}

}  // namespace

double continuum_symbol(std::span<const double> xi, FractionalOrder order) {
  double radial = 0.0;
  for (double x : xi) radial += 4.0 * kPi * kPi * x * x;
  return radial > 0.0 ? std::pow(radial, order.value()) : 0.0;
}

BandLimitedProfile::BandLimitedProfile(int dim, double cutoff, int points,
                                       std::vector<Complex> samples)
    : dim_(dim), cutoff_(cutoff), points_(points), samples_(std::move(samples)) {
  if (dim < 1) throw std::invalid_argument("profile dim must be >= 1");
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
    throw std::invalid_argument("profile cutoff must be positive");
  }
  if (points < 2 || points % 2 != 0) {
    throw std::invalid_argument("profile points per axis must be even and >= 2");
  }
  if (samples_.size() != grid_size(dim, points)) {
    throw std::invalid_argument("profile has the wrong number of samples");
  }
  for (const auto& s : samples_) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw std::invalid_argument("profile contains a non-finite sample");
    }
  }
}

BandLimitedProfile BandLimitedProfile::zero(int dim, double cutoff, int points) {
  return BandLimitedProfile(dim, cutoff, points, std::vector<Complex>(grid_size(dim, points)));
}

BandLimitedProfile BandLimitedProfile::constant(int dim, double cutoff, int points,
                                                Complex value) {
  auto p = zero(dim, cutoff, points);
  std::vector<Complex> samples(p.samples().begin(), p.samples().end());
  // xi = 0 sits at index points/2 on every axis
  std::size_t flat = 0;
  for (int a = 0; a < dim; ++a) flat = flat * points + static_cast<std::size_t>(points / 2);
  samples[flat] = value / std::pow(p.step(), dim);
  return BandLimitedProfile(dim, cutoff, points, std::move(samples));
}

bool BandLimitedProfile::same_grid(const BandLimitedProfile& other) const {
  return dim_ == other.dim_ && cutoff_ == other.cutoff_ && points_ == other.points_;
}

BandLimitedProfile gaussian_profile(const GaussianProfileParams& params) {
  auto grid = BandLimitedProfile::zero(params.dim, params.cutoff, params.points);
  if (!(params.width > 0.0)) throw std::invalid_argument("gaussian width must be positive");
  if (!(params.taper_fraction >= 0.0 && params.taper_fraction < 1.0)) {
    throw std::invalid_argument("taper fraction must be in [0, 1)");
  }
  std::vector<double> carrier = params.carrier;
  if (carrier.empty()) carrier.assign(params.dim, 0.0);
  if (static_cast<int>(carrier.size()) != params.dim) {
    throw std::invalid_argument("carrier has the wrong dimension");
  }
  const double s2 = params.width * params.width;
  const double scale =
      params.amplitude / std::pow(std::sqrt(2.0 * kPi) * params.width, params.dim);

  std::vector<Complex> samples(grid.samples().size());
  for_each_node(grid, [&](std::size_t flat, std::span<const double> xi) {
    double window = 1.0;
    double plus = 0.0;
    double minus = 0.0;
    for (int a = 0; a < params.dim; ++a) {
      window *= taper(std::abs(xi[a]) / params.cutoff, params.taper_fraction);
      plus += (xi[a] - carrier[a]) * (xi[a] - carrier[a]);
      minus += (xi[a] + carrier[a]) * (xi[a] + carrier[a]);
    }
    double bump = std::exp(-0.5 * plus / s2);
    if (params.symmetric) bump += std::exp(-0.5 * minus / s2);
    samples[flat] = scale * window * bump;
  });
  return BandLimitedProfile(params.dim, params.cutoff, params.points, std::move(samples));
}

ContinuumSolutionSampler::ContinuumSolutionSampler(BandLimitedProfile u0_hat,
                                                   BandLimitedProfile u1_hat,
                                                   FractionalOrder order, double mass)
    : u0_hat_(std::move(u0_hat)), u1_hat_(std::move(u1_hat)), order_(order), mass_(mass) {
  if (!u0_hat_.same_grid(u1_hat_)) {
    throw std::invalid_argument("initial value and velocity profiles use different grids");
  }
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("mass must be finite and nonnegative");
  }
}

std::pair<std::vector<Complex>, std::vector<Complex>> ContinuumSolutionSampler::spectrum(
    double t) const {
  std::vector<Complex> v(u0_hat_.samples().size());
  std::vector<Complex> dv(v.size());
  const auto a = u0_hat_.samples();
  const auto b = u1_hat_.samples();
  for_each_node(u0_hat_, [&](std::size_t flat, std::span<const double> xi) {
    if (a[flat] == Complex(0.0) && b[flat] == Complex(0.0)) return;
    const double gamma = frequency(xi, order_, mass_);
    const double x = gamma * t;
    const double c = std::cos(x);
    const double sinc = std::abs(x) < 1e-6 ? t * (1.0 - x * x / 6.0) : std::sin(x) / gamma;
    v[flat] = c * a[flat] + sinc * b[flat];
    dv[flat] = -gamma * gamma * sinc * a[flat] + c * b[flat];
  });
  return {std::move(v), std::move(dv)};
}

std::pair<GridFunction, GridFunction> sample_exact_solution(
    const ContinuumSolutionSampler& sampler, double t, const LatticeSpec& spec) {
  const auto& profile = sampler.initial_value();
  if (profile.dim() != spec.dim()) {
    throw SpecMismatchError("profile dim does not match lattice dim");
  }
  const double nyquist = 0.5 / spec.spacing();
  if (profile.cutoff() > nyquist * (1.0 + 1e-12)) {
    throw NyquistError("profile cutoff " + format_double(profile.cutoff()) +
                           " exceeds 1/(2 hbar) = " + format_double(nyquist) +
                           "; need hbar <= " + format_double(0.5 / profile.cutoff()),
                       0.5 / profile.cutoff());
  }
  auto [v, dv] = sampler.spectrum(t);
  const double weight = std::pow(profile.step(), profile.dim());
  for (auto& c : v) c *= weight;
  for (auto& c : dv) c *= weight;

  std::vector<double> nodes(profile.points());
  for (int i = 0; i < profile.points(); ++i) nodes[i] = profile.node(i);
  std::vector<double> positions(spec.points_per_axis());
  for (int p = 0; p < spec.points_per_axis(); ++p) {
    positions[p] = spec.position(p + spec.min_index());
  }
  return {GridFunction(spec, synthesize(std::move(v), spec.dim(), nodes, positions)),
          GridFunction(spec, synthesize(std::move(dv), spec.dim(), nodes, positions))};
}

double continuum_modal_energy(const ContinuumSolutionSampler& sampler, double t) {
  const auto [v, dv] = sampler.spectrum(t);
  double acc = 0.0;
  for_each_node(sampler.initial_value(), [&](std::size_t flat, std::span<const double> xi) {
    const double gamma = frequency(xi, sampler.order(), sampler.mass());
    acc += std::norm(dv[flat]) + gamma * gamma * std::norm(v[flat]);
  });
  return acc * std::pow(sampler.initial_value().step(), sampler.initial_value().dim());
}

double sobolev_weight_norm(const ContinuumSolutionSampler& sampler, double t) {
  const auto [v, dv] = sampler.spectrum(t);
  const double power = 4.0 * sampler.order().value();
  double acc = 0.0;
  for_each_node(sampler.initial_value(), [&](std::size_t flat, std::span<const double> xi) {
    double r2 = 0.0;
    for (double x : xi) r2 += x * x;
    // |xi|^{4a} squared
    const double w = r2 > 0.0 ? std::pow(r2, power) : 0.0;
    acc += w * std::norm(v[flat]);
  });
  return std::sqrt(acc * std::pow(sampler.initial_value().step(), sampler.initial_value().dim()));
}

SymbolGap symbol_gap(std::span<const double> theta, double hbar, FractionalOrder order) {
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  const double limit = 0.5 / hbar * (1.0 + 1e-12);
  double lattice = 0.0;
  double r2 = 0.0;
  for (double th : theta) {
    if (std::abs(th) > limit) {
      throw std::invalid_argument("theta component " + format_double(th) +
                                  " outside the dual cell");
    }
    const double s = std::sin(kPi * hbar * th);
    lattice += 4.0 * s * s;
    r2 += th * th;
  }
  const double a = order.value();
  const double lattice_symbol = lattice > 0.0 ? std::pow(lattice, a) : 0.0;
  const double gap =
      std::abs(continuum_symbol(theta, order) - std::pow(hbar, -2.0 * a) * lattice_symbol);
  const double scale = std::pow(hbar, 2.0 * a) * std::pow(r2, 2.0 * a);
  return {gap, r2 > 0.0 ? gap / scale : 0.0};
}

std::vector<SymbolGap> symbol_gap_grid(const LatticeSpec& spec, FractionalOrder order) {
  std::vector<SymbolGap> out(spec.size());
  std::vector<double> theta(spec.dim());
  for_each_index(spec, [&](std::size_t flat, std::span<const int> m) {
    for (int a = 0; a < spec.dim(); ++a) theta[a] = spec.frequency(m[a]);
    out[flat] = symbol_gap(theta, spec.spacing(), order);
  });
  return out;
}

}  // namespace latfkg
