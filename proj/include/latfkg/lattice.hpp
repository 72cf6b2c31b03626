#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "latfkg/errors.hpp"

namespace latfkg {

using Complex = std::complex<double>;

/// Periodic box of N^n sites on the lattice hbar*Z^n.
///
/// Sites are k = hbar*j with j in {-N/2, ..., N/2-1}^n and the dual grid is
/// theta = m/(N*hbar) with m in the same signed range, so theta lies in the
/// torus [-1/(2 hbar), 1/(2 hbar))^n. Multi-indices are flattened axis-major
/// (axis 0 slowest) in signed order.
class LatticeSpec {
 public:
  LatticeSpec(int dim, double spacing, int points_per_axis);

  int dim() const { return dim_; }
  double spacing() const { return spacing_; }
  int points_per_axis() const { return points_; }

  // N^n.
  std::size_t size() const { return size_; }
  double box_length() const { return spacing_ * points_; }
  int min_index() const { return -points_ / 2; }
  int max_index() const { return points_ / 2 - 1; }

  double position(int j) const { return spacing_ * j; }
  double frequency(int m) const { return m / box_length(); }

  std::size_t flat_index(std::span<const int> multi) const;
  void multi_index(std::size_t flat, std::span<int> out) const;

  bool operator==(const LatticeSpec&) const = default;

 private:
  int dim_;
  double spacing_;
  int points_;
  std::size_t size_;
};

std::string describe(const LatticeSpec& spec);

// Calls fn(flat, multi) for every site in flat order.
template <class Fn>
void for_each_index(const LatticeSpec& spec, Fn&& fn) {
  std::vector<int> multi(spec.dim(), spec.min_index());
  const std::size_t total = spec.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, std::span<const int>(multi));
    for (int axis = spec.dim() - 1; axis >= 0; --axis) {
      if (++multi[axis] <= spec.max_index()) break;
      multi[axis] = spec.min_index();
    }
  }
}

struct SpatialDomain {};
struct SpectralDomain {};

/// Complex field on the sites (SpatialDomain) or on the dual grid
/// (SpectralDomain) of a LatticeSpec. Holds exactly N^n finite values.
template <class Domain>
class LatticeField {
 public:
  explicit LatticeField(const LatticeSpec& spec)
      : spec_(spec), values_(spec.size()) {}

  LatticeField(const LatticeSpec& spec, std::vector<Complex> values)
      : spec_(spec), values_(std::move(values)) {
    check_values();
  }

  const LatticeSpec& spec() const { return spec_; }
  std::span<const Complex> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  const Complex& operator[](std::size_t flat) const { return values_[flat]; }
  const Complex& at(std::span<const int> multi) const {
    return values_[spec_.flat_index(multi)];
  }

  // Returns the underlying storage, leaving this field empty.
  std::vector<Complex> release() && { return std::move(values_); }

  LatticeField& operator+=(const LatticeField& other) {
    require_same_spec(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  LatticeField& operator-=(const LatticeField& other) {
    require_same_spec(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  LatticeField& operator*=(Complex scale) {
    for (auto& v : values_) v *= scale;
    return *this;
  }

  friend LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
  friend LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
  friend LatticeField operator*(Complex s, LatticeField a) { return a *= s; }
  friend LatticeField operator*(LatticeField a, Complex s) { return a *= s; }

  void require_same_spec(const LatticeField& other) const {
    if (!(spec_ == other.spec_)) {
      throw SpecMismatchError("lattice mismatch: " + describe(spec_) + " vs " +
                              describe(other.spec_));
    }
  }

 private:
  void check_values() const;

  LatticeSpec spec_;
  std::vector<Complex> values_;
};

using GridFunction = LatticeField<SpatialDomain>;
using SpectralFunction = LatticeField<SpectralDomain>;

extern template class LatticeField<SpatialDomain>;
extern template class LatticeField<SpectralDomain>;

void require_same_spec(const LatticeSpec& a, const LatticeSpec& b);

// hat u(theta_m) = hbar^{n/2} sum_j u(hbar j) exp(-2 pi i j.m/N)
SpectralFunction forward_transform(const GridFunction& u);

// u(hbar j) = hbar^{n/2} (N hbar)^{-n} sum_m v(theta_m) exp(2 pi i j.m/N)
GridFunction inverse_transform(const SpectralFunction& v);

// (u, v) = sum_k u(k) conj(v(k)), unweighted.
Complex inner_product(const GridFunction& u, const GridFunction& v);

// Riemann sum of hat u conj(hat v) over the dual grid, i.e. (N hbar)^{-n} sum_m.
Complex spectral_inner_product(const SpectralFunction& u, const SpectralFunction& v);

enum class Norm { l1, l2, linf };

// Unweighted l^p norms: no hbar^n volume factor.
double norm(const GridFunction& u, Norm p);

/// CSV with header "index_0,...,index_{n-1},re,im", one row per site in flat
/// order. Doubles are written with 17 significant digits.
void write_csv(std::ostream& out, const GridFunction& u);
void write_csv(const std::string& path, const GridFunction& u);

// Reads a field written by write_csv. Every site must appear exactly once;
// row order is free.
GridFunction read_csv(std::istream& in, const LatticeSpec& spec);
GridFunction read_csv(const std::string& path, const LatticeSpec& spec);

// "%.17g".
std::string format_double(double x);

}  // namespace latfkg
