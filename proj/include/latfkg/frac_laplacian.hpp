#pragma once

#include <span>
#include <vector>

#include "latfkg/lattice.hpp"

namespace latfkg {

/// Order alpha of the discrete fractional Laplacian, 0 < alpha <= 1.
/// alpha = 1 is the nearest-neighbour lattice Laplacian.
class FractionalOrder {
 public:
  explicit FractionalOrder(double alpha);

  double value() const { return alpha_; }
  bool is_integer() const { return alpha_ == 1.0; }

  bool operator==(const FractionalOrder&) const = default;

 private:
  double alpha_;
};

struct QuadratureValue {
  double value;
  double error_estimate;
};

// Default trapezoid points per axis: 4096 (n=1), 512 (n=2), 128 (n>=3).
int default_quad_points(int dim);

/// Tensor trapezoid approximation of
///   a_j = int_{[-1/2,1/2]^n} [sum_i 4 sin^2(pi theta_i)]^alpha cos(2 pi j.theta) dtheta
/// on quad_points^n nodes. The error estimate is |T(M) - T(M/2)|.
/// quad_points must be a power of two >= 64.
QuadratureValue coeff_quadrature(FractionalOrder order, int dim, std::span<const int> j,
                                 int quad_points);

/// Same integral with two Richardson steps over M, M/2, M/4.
///
/// The integrand behaves like |theta|^{2 alpha} times a smooth even function
/// at the origin and is smooth elsewhere on the torus, so the trapezoid error
/// expands in h^{2 alpha + n + 2k}; the first two terms are removed. The error
/// estimate is the change made by the second step.
QuadratureValue coeff_richardson(FractionalOrder order, int dim, std::span<const int> j,
                                 int quad_points);

// (-1)^j Gamma(2a+1) / (Gamma(a-j+1) Gamma(a+j+1)), via log-Gamma and the
// reflection formula. Exactly zero at the Gamma poles (alpha = 1, |j| > 1).
double coeff_closed_form_1d(FractionalOrder order, int j);

// Throws UnsupportedError unless j has exactly one component.
double coeff_closed_form(FractionalOrder order, std::span<const int> j);

/// Coefficients a_j for ||j||_inf <= radius, stored axis-major with offsets
/// -radius..radius per axis.
class CoefficientTable {
 public:
  CoefficientTable(FractionalOrder order, int dim, int radius, std::vector<double> weights,
                   std::vector<double> errors);

  FractionalOrder order() const { return order_; }
  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int width() const { return 2 * radius_ + 1; }

  // Zero outside the table.
  double weight(std::span<const int> j) const;
  double error(std::span<const int> j) const;

  std::span<const double> weights() const { return weights_; }
  std::span<const double> errors() const { return errors_; }

  // Offsets of entry `flat`.
  void offsets(std::size_t flat, std::span<int> out) const;

  double quad_error_estimate() const { return quad_error_; }
  // max |a_j| on the shell ||j||_inf = radius
  double tail_estimate() const { return tail_; }
  double weight_sum() const;

 private:
  std::size_t flat(std::span<const int> j) const;

  FractionalOrder order_;
  int dim_;
  int radius_;
  std::vector<double> weights_;
  std::vector<double> errors_;
  double quad_error_;
  double tail_;
};

/// Builds the table from the Richardson-extrapolated trapezoid rule. All
/// trapezoid sums come from one FFT per level, which evaluates the same sum
/// as coeff_quadrature for every j at once. Requires radius <= quad_points/8.
CoefficientTable build_table(FractionalOrder order, int dim, int radius, int quad_points);

/// Fourier multiplier [sum_i 4 sin^2(pi hbar theta_i)]^alpha on the dual grid,
/// optionally scaled by hbar^{-2 alpha}. Flat order matches SpectralFunction.
class SymbolField {
 public:
  SymbolField(const LatticeSpec& spec, FractionalOrder order, bool scaled);

  const LatticeSpec& spec() const { return spec_; }
  FractionalOrder order() const { return order_; }
  bool scaled() const { return scaled_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double max() const;

 private:
  LatticeSpec spec_;
  FractionalOrder order_;
  bool scaled_;
  std::vector<double> values_;
};

inline SymbolField symbol_field(const LatticeSpec& spec, FractionalOrder order, bool scaled) {
  return SymbolField(spec, order, scaled);
}

// Unscaled symbol at one dual multi-index.
double lattice_symbol(const LatticeSpec& spec, FractionalOrder order, std::span<const int> m);

// Periodic convolution sum_j a_j u(k + j hbar). Requires radius < N/2.
GridFunction apply_conv(const GridFunction& u, const CoefficientTable& table);

// inverse_transform(symbol^power_scale * forward_transform(u)).
GridFunction apply_spectral(const GridFunction& u, FractionalOrder order, double power_scale,
                            bool scaled);

// Multiplies the spectrum of u pointwise by `multiplier` (flat dual order).
GridFunction apply_multiplier(const GridFunction& u, std::span<const double> multiplier);

}  // namespace latfkg
