#pragma once

#include <span>
#include <utility>
#include <vector>

#include "latfkg/frac_laplacian.hpp"
#include "latfkg/lattice.hpp"

namespace latfkg {

// [sum_j 4 pi^2 xi_j^2]^alpha
double continuum_symbol(std::span<const double> xi, FractionalOrder order);

/// Spectrum hat u(xi) sampled on the uniform grid xi_i = -B + i h,
/// h = 2B/M, i = 0..M-1 per axis (axis-major). The spectrum vanishes outside
/// [-B, B]^n, so the trapezoid sum over the grid is the Fourier integral.
class BandLimitedProfile {
 public:
  BandLimitedProfile(int dim, double cutoff, int points, std::vector<Complex> samples);

  static BandLimitedProfile zero(int dim, double cutoff, int points);

  // Single nonzero cell at xi = 0 whose inverse transform is u == value.
  static BandLimitedProfile constant(int dim, double cutoff, int points, Complex value);

  int dim() const { return dim_; }
  double cutoff() const { return cutoff_; }
  int points() const { return points_; }
  double step() const { return 2.0 * cutoff_ / points_; }
  double node(int i) const { return -cutoff_ + step() * i; }
  std::span<const Complex> samples() const { return samples_; }

  bool same_grid(const BandLimitedProfile& other) const;

 private:
  int dim_;
  double cutoff_;
  int points_;
  std::vector<Complex> samples_;
};

/// Gaussian bump(s) of spectral width `width` centred at +carrier (and at
/// -carrier when symmetric, which makes the profile real), multiplied per
/// axis by a C-infinity taper that falls from 1 to 0 over the outer
/// `taper_fraction` of [-B, B]. `amplitude` is the peak of one untapered
/// bump in physical space.
struct GaussianProfileParams {
  int dim = 1;
  double cutoff = 1.0;
  int points = 256;
  double width = 0.1;
  std::vector<double> carrier;  // empty means the origin
  bool symmetric = true;
  double amplitude = 1.0;
  double taper_fraction = 0.1;
};

BandLimitedProfile gaussian_profile(const GaussianProfileParams& params);

/// Exact solution of the continuum problem with constant mass and no source:
///   hat v(t, xi) = cos(gamma t) hat u0 + sin(gamma t)/gamma hat u1,
///   gamma = sqrt(|2 pi xi|^{2 alpha} + m).
class ContinuumSolutionSampler {
 public:
  ContinuumSolutionSampler(BandLimitedProfile u0_hat, BandLimitedProfile u1_hat,
                           FractionalOrder order, double mass);

  const BandLimitedProfile& initial_value() const { return u0_hat_; }
  const BandLimitedProfile& initial_velocity() const { return u1_hat_; }
  FractionalOrder order() const { return order_; }
  double mass() const { return mass_; }

  // hat v(t) and d/dt hat v(t) on the xi-grid.
  std::pair<std::vector<Complex>, std::vector<Complex>> spectrum(double t) const;

 private:
  BandLimitedProfile u0_hat_;
  BandLimitedProfile u1_hat_;
  FractionalOrder order_;
  double mass_;
};

/// v(t, hbar j) and d/dt v(t, hbar j) on the sites of `spec` by trapezoid
/// quadrature of the inverse Fourier integral. Throws NyquistError when the
/// cutoff exceeds 1/(2 hbar).
std::pair<GridFunction, GridFunction> sample_exact_solution(
    const ContinuumSolutionSampler& sampler, double t, const LatticeSpec& spec);

// Fourier-side energy h^n sum (|d/dt hat v|^2 + gamma^2 |hat v|^2), constant in t.
double continuum_modal_energy(const ContinuumSolutionSampler& sampler, double t);

// || |xi|^{4 alpha} hat v(t) ||_{L^2}
double sobolev_weight_norm(const ContinuumSolutionSampler& sampler, double t);

struct SymbolGap {
  double gap;         // | |2 pi theta|^{2a} - hbar^{-2a} [sum 4 sin^2(pi hbar theta_i)]^a |
  double normalized;  // gap / (hbar^{2a} |theta|^{4a}), 0 at theta = 0
};

// theta must lie in the dual cell [-1/(2 hbar), 1/(2 hbar)]^n.
SymbolGap symbol_gap(std::span<const double> theta, double hbar, FractionalOrder order);

// symbol_gap at every dual grid point of `spec`, flat dual order.
std::vector<SymbolGap> symbol_gap_grid(const LatticeSpec& spec, FractionalOrder order);

}  // namespace latfkg
