#include "latfkg/frac_laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "latfkg/fft.hpp"

namespace latfkg {

namespace {

constexpr double kPi = std::numbers::pi;

void check_quad_points(int quad_points) {
  if (quad_points < 64 || !is_power_of_two(quad_points)) {
    throw std::invalid_argument("quad_points must be a power of two >= 64, got " +
                                std::to_string(quad_points));
  }
}

void check_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
}

// Richardson with leading exponents p and p+2 over levels M, M/2, M/4.
QuadratureValue richardson(double fine, double mid, double coarse, double p) {
  const double f1 = std::pow(2.0, p);
  const double r1_fine = (f1 * fine - mid) / (f1 - 1.0);
  const double r1_mid = (f1 * mid - coarse) / (f1 - 1.0);
  const double f2 = std::pow(2.0, p + 2.0);
  const double r2 = (f2 * r1_fine - r1_mid) / (f2 - 1.0);
  return {r2, std::abs(r2 - r1_fine)};
}

// Trapezoid sums on the nested grids with M, M/2 and M/4 points per axis.
struct NestedSums {
  double fine = 0.0;
  double mid = 0.0;
  double coarse = 0.0;
};

NestedSums trapezoid_sums(FractionalOrder order, int dim, std::span<const int> j,
                          int quad_points) {
  check_dim(dim);
  check_quad_points(quad_points);
  if (static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument("multi-index length does not match dim");
  }
  const int m = quad_points;
  const int half = m / 2;
  std::vector<double> sin2(m);
  for (int p = 0; p < m; ++p) {
    const double s = std::sin(kPi * (p - half) / m);
    sin2[p] = 4.0 * s * s;
  }
  // phase[a][p] = exp(2 pi i j_a s / M), s = p - M/2
  std::vector<std::vector<Complex>> phase(dim, std::vector<Complex>(m));
  for (int a = 0; a < dim; ++a) {
    for (int p = 0; p < m; ++p) {
      const long long t = (static_cast<long long>(j[a]) * (p - half)) % m;
      const double angle = 2.0 * kPi * static_cast<double>(t) / m;
      phase[a][p] = Complex(std::cos(angle), std::sin(angle));
    }
  }

  NestedSums sums;
  std::vector<int> pos(dim, 0);
  const double alpha = order.value();
  while (true) {
    double radial = 0.0;
    Complex wave = 1.0;
    bool even = true;
    bool quad = true;
    for (int a = 0; a < dim; ++a) {
      radial += sin2[pos[a]];
      wave *= phase[a][pos[a]];
      const int s = pos[a] - half;
      even = even && (s % 2 == 0);
      quad = quad && (s % 4 == 0);
    }
    const double f = (radial > 0.0 ? std::pow(radial, alpha) : 0.0) * wave.real();
    sums.fine += f;
    if (even) sums.mid += f;
    if (quad) sums.coarse += f;

    int axis = dim - 1;
    while (axis >= 0 && ++pos[axis] == m) pos[axis--] = 0;
    if (axis < 0) break;
  }
  sums.fine /= std::pow(m, dim);
  sums.mid /= std::pow(m / 2, dim);
  sums.coarse /= std::pow(m / 4, dim);
  return sums;
}

double extrapolation_exponent(FractionalOrder order, int dim) {
  return 2.0 * order.value() + dim;
}

}  // namespace

FractionalOrder::FractionalOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must satisfy 0 < alpha <= 1, got " +
                                format_double(alpha));
  }
}

int default_quad_points(int dim) {
  check_dim(dim);
  if (dim == 1) return 4096;
  if (dim == 2) return 512;
  return 128;
}

QuadratureValue coeff_quadrature(FractionalOrder order, int dim, std::span<const int> j,
                                 int quad_points) {
  const auto sums = trapezoid_sums(order, dim, j, quad_points);
  return {sums.fine, std::abs(sums.fine - sums.mid)};
}

QuadratureValue coeff_richardson(FractionalOrder order, int dim, std::span<const int> j,
                                 int quad_points) {
  const auto sums = trapezoid_sums(order, dim, j, quad_points);
  return richardson(sums.fine, sums.mid, sums.coarse, extrapolation_exponent(order, dim));
}

double coeff_closed_form_1d(FractionalOrder order, int j) {
  const double a = order.value();
  const long long k = std::llabs(static_cast<long long>(j));
  const double sign_j = (k % 2 == 0) ? 1.0 : -1.0;
  // Gamma(a - k + 1): pole when a is an integer and k > a
  const double z = a - static_cast<double>(k) + 1.0;
  double log_inv_gamma_z = 0.0;
  double sign_inv_gamma_z = 1.0;
  if (z > 0.0) {
    log_inv_gamma_z = -std::lgamma(z);
  } else {
    if (order.is_integer()) return 0.0;
    // 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi with sin(pi (a - (k-1))) = (-1)^(k-1) sin(pi a)
    const double sin_pi_z = (((k - 1) % 2 == 0) ? 1.0 : -1.0) * std::sin(kPi * a);
    sign_inv_gamma_z = sin_pi_z < 0.0 ? -1.0 : 1.0;
    log_inv_gamma_z = std::log(std::abs(sin_pi_z)) + std::lgamma(1.0 - z) - std::log(kPi);
  }
  const double log_mag =
      std::lgamma(2.0 * a + 1.0) - std::lgamma(a + static_cast<double>(k) + 1.0) +
      log_inv_gamma_z;
  return sign_j * sign_inv_gamma_z * std::exp(log_mag);
}

double coeff_closed_form(FractionalOrder order, std::span<const int> j) {
  if (j.size() != 1) {
    throw UnsupportedError("closed-form coefficients exist only for dim = 1, got dim = " +
                           std::to_string(j.size()));
  }
  return coeff_closed_form_1d(order, j[0]);
}

CoefficientTable::CoefficientTable(FractionalOrder order, int dim, int radius,
                                   std::vector<double> weights, std::vector<double> errors)
    : order_(order),
      dim_(dim),
      radius_(radius),
      weights_(std::move(weights)),
      errors_(std::move(errors)),
      quad_error_(0.0),
      tail_(0.0) {
  check_dim(dim);
  if (radius < 1) throw std::invalid_argument("radius must be >= 1");
  std::size_t expected = 1;
  for (int a = 0; a < dim; ++a) expected *= static_cast<std::size_t>(width());
  if (weights_.size() != expected || errors_.size() != expected) {
    throw std::invalid_argument("coefficient table has the wrong number of entries");
  }
  std::vector<int> off(dim);
  for (std::size_t e = 0; e < weights_.size(); ++e) {
    quad_error_ = std::max(quad_error_, errors_[e]);
    offsets(e, off);
    int inf = 0;
    for (int o : off) inf = std::max(inf, std::abs(o));
    if (inf == radius_) tail_ = std::max(tail_, std::abs(weights_[e]));
  }
}

std::size_t CoefficientTable::flat(std::span<const int> j) const {
  std::size_t f = 0;
  for (int o : j) f = f * width() + static_cast<std::size_t>(o + radius_);
  return f;
}

void CoefficientTable::offsets(std::size_t f, std::span<int> out) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    out[a] = static_cast<int>(f % width()) - radius_;
    f /= width();
  }
}

double CoefficientTable::weight(std::span<const int> j) const {
  if (static_cast<int>(j.size()) != dim_) {
    throw std::invalid_argument("multi-index length does not match table dim");
  }
  for (int o : j) {
    if (std::abs(o) > radius_) return 0.0;
  }
  return weights_[flat(j)];
}

double CoefficientTable::error(std::span<const int> j) const {
  for (int o : j) {
    if (std::abs(o) > radius_) return 0.0;
  }
  return errors_[flat(j)];
}

double CoefficientTable::weight_sum() const {
  double acc = 0.0;
  for (double w : weights_) acc += w;
  return acc;
}

CoefficientTable build_table(FractionalOrder order, int dim, int radius, int quad_points) {
  check_dim(dim);
  check_quad_points(quad_points);
  if (radius < 1) throw std::invalid_argument("radius must be >= 1");
  if (radius > quad_points / 8) {
    throw std::invalid_argument("radius " + std::to_string(radius) +
                                " needs at least " + std::to_string(8 * radius) +
                                " quadrature points per axis");
  }

  const double alpha = order.value();
  const int width = 2 * radius + 1;
  std::size_t entries = 1;
  for (int a = 0; a < dim; ++a) entries *= width;

  // Trapezoid sums for every table entry at one level.
  auto level_sums = [&](int points) {
    std::vector<double> sin2(points);
    for (int p = 0; p < points; ++p) {
      const double s = std::sin(kPi * (p - points / 2) / points);
      sin2[p] = 4.0 * s * s;
    }
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= points;
    std::vector<Complex> grid(total);
    std::vector<int> pos(dim, 0);
    for (std::size_t f = 0; f < total; ++f) {
      double radial = 0.0;
      for (int a = 0; a < dim; ++a) radial += sin2[pos[a]];
      grid[f] = radial > 0.0 ? std::pow(radial, alpha) : 0.0;
      for (int a = dim - 1; a >= 0; --a) {
        if (++pos[a] < points) break;
        pos[a] = 0;
      }
    }
    dft_all_axes(grid, dim, points, -1);

    const double norm = std::pow(static_cast<double>(points), dim);
    std::vector<double> out(entries);
    std::vector<int> off(dim);
    for (std::size_t e = 0; e < entries; ++e) {
      std::size_t rem = e;
      for (int a = dim - 1; a >= 0; --a) {
        off[a] = static_cast<int>(rem % width) - radius;
        rem /= width;
      }
      std::size_t g = 0;
      for (int a = 0; a < dim; ++a) {
        // signed index j wrapped into [-points/2, points/2)
        const int wrapped = ((off[a] + points / 2) % points + points) % points;
        g = g * points + static_cast<std::size_t>(wrapped);
      }
      out[e] = grid[g].real() / norm;
    }
    return out;
  };

  const auto fine = level_sums(quad_points);
  const auto mid = level_sums(quad_points / 2);
  const auto coarse = level_sums(quad_points / 4);
  const double p = extrapolation_exponent(order, dim);

  std::vector<double> weights(entries);
  std::vector<double> errors(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    const auto r = richardson(fine[e], mid[e], coarse[e], p);
    weights[e] = r.value;
    errors[e] = r.error_estimate;
  }
  return CoefficientTable(order, dim, radius, std::move(weights), std::move(errors));
}

double lattice_symbol(const LatticeSpec& spec, FractionalOrder order, std::span<const int> m) {
  double radial = 0.0;
  for (int mi : m) {
    const double s = std::sin(kPi * mi / spec.points_per_axis());
    radial += 4.0 * s * s;
  }
  return radial > 0.0 ? std::pow(radial, order.value()) : 0.0;
}

SymbolField::SymbolField(const LatticeSpec& spec, FractionalOrder order, bool scaled)
    : spec_(spec), order_(order), scaled_(scaled), values_(spec.size()) {
  const double scale = scaled ? std::pow(spec.spacing(), -2.0 * order.value()) : 1.0;
  // pi hbar theta_m = pi m / N, so the unscaled symbol depends only on m/N
  for_each_index(spec, [&](std::size_t flat, std::span<const int> m) {
    values_[flat] = scale * lattice_symbol(spec, order, m);
  });
}

double SymbolField::max() const {
  double best = 0.0;
  for (double v : values_) best = std::max(best, v);
  return best;
}

GridFunction apply_conv(const GridFunction& u, const CoefficientTable& table) {
  const auto& spec = u.spec();
  if (table.dim() != spec.dim()) {
    throw SpecMismatchError("coefficient table dim " + std::to_string(table.dim()) +
                            " does not match lattice dim " + std::to_string(spec.dim()));
  }
  const int n_pts = spec.points_per_axis();
  if (table.radius() >= n_pts / 2) {
    throw std::invalid_argument("radius " + std::to_string(table.radius()) +
                                " too large for a box of " + std::to_string(n_pts) +
                                " points per axis");
  }
  std::vector<Complex> out(spec.size());
  std::vector<int> off(spec.dim());
  const int lo = spec.min_index();
  for (std::size_t e = 0; e < table.weights().size(); ++e) {
    const double a = table.weights()[e];
    if (a == 0.0) continue;
    table.offsets(e, off);
    for_each_index(spec, [&](std::size_t flat, std::span<const int> multi) {
      std::size_t nb = 0;
      for (int axis = 0; axis < spec.dim(); ++axis) {
        const int p = ((multi[axis] + off[axis] - lo) % n_pts + n_pts) % n_pts;
        nb = nb * n_pts + static_cast<std::size_t>(p);
      }
      out[flat] += a * u[nb];
    });
  }
  return GridFunction(spec, std::move(out));
}

GridFunction apply_multiplier(const GridFunction& u, std::span<const double> multiplier) {
  if (multiplier.size() != u.size()) {
    throw SpecMismatchError("multiplier size does not match the field");
  }
  auto spectrum = std::move(forward_transform(u)).release();
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= multiplier[i];
  return inverse_transform(SpectralFunction(u.spec(), std::move(spectrum)));
}

GridFunction apply_spectral(const GridFunction& u, FractionalOrder order, double power_scale,
                            bool scaled) {
  if (!(power_scale >= 0.0) || !std::isfinite(power_scale)) {
    throw std::invalid_argument("power_scale must be finite and >= 0");
  }
  const SymbolField symbol(u.spec(), order, scaled);
  std::vector<double> multiplier(symbol.values().begin(), symbol.values().end());
  if (power_scale != 1.0) {
    for (auto& v : multiplier) v = std::pow(v, power_scale);
  }
  return apply_multiplier(u, multiplier);
}

}  // namespace latfkg
