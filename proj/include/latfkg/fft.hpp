#pragma once

#include <complex>
#include <span>
#include <vector>

namespace latfkg {

/// Discrete Fourier transform along one axis of an n-dimensional array with
/// `points` entries per axis, stored axis-major.
///
/// Entries are in signed order: position p holds index s = p - points/2, and
/// the transform computes out[m] = sum_s in[s] exp(sign * 2 pi i s m / points)
/// for signed s, m. No normalization is applied. Power-of-two lengths use a
/// radix-2 FFT, other even lengths a direct O(N^2) sum.
void dft_axis(std::span<std::complex<double>> data, int dim, int points, int axis,
              int sign);

// dft_axis over every axis.
void dft_all_axes(std::span<std::complex<double>> data, int dim, int points, int sign);

bool is_power_of_two(long long n);

}  // namespace latfkg
