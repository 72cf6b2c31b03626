#include "latfkg/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace latfkg {

namespace {

using Complex = std::complex<double>;

class LinePlan {
 public:
  LinePlan(int points, int sign) : points_(points), radix2_(is_power_of_two(points)) {
    const std::size_t table = radix2_ ? points / 2 : points;
    twiddle_.resize(table);
    for (std::size_t k = 0; k < table; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / points;
      twiddle_[k] = Complex(std::cos(angle), std::sin(angle));
    }
    if (radix2_) {
      reversed_.resize(points);
      int bits = 0;
      while ((1 << bits) < points) ++bits;
      for (int i = 0; i < points; ++i) {
        int r = 0;
        for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
        reversed_[i] = r;
      }
    }
    scratch_.resize(points);
  }

  // In place on a wrapped-order line (index w = s mod points).
  void run(std::vector<Complex>& line) {
    if (radix2_) {
      run_radix2(line);
    } else {
      run_direct(line);
    }
  }

 private:
  void run_radix2(std::vector<Complex>& a) {
    const int n = points_;
    for (int i = 0; i < n; ++i) {
      if (i < reversed_[i]) std::swap(a[i], a[reversed_[i]]);
    }
    for (int len = 2; len <= n; len <<= 1) {
      const int half = len / 2;
      const int step = n / len;
      for (int start = 0; start < n; start += len) {
        for (int k = 0; k < half; ++k) {
          const Complex t = twiddle_[k * step] * a[start + k + half];
          a[start + k + half] = a[start + k] - t;
          a[start + k] += t;
        }
      }
    }
  }

  void run_direct(std::vector<Complex>& a) {
    const long long n = points_;
    for (long long k = 0; k < n; ++k) {
      Complex acc = 0.0;
      for (long long w = 0; w < n; ++w) acc += a[w] * twiddle_[(w * k) % n];
      scratch_[k] = acc;
    }
    a.swap(scratch_);
  }

  int points_;
  bool radix2_;
  std::vector<Complex> twiddle_;
  std::vector<int> reversed_;
  std::vector<Complex> scratch_;
};

}  // namespace

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

void dft_axis(std::span<Complex> data, int dim, int points, int axis, int sign) {
  if (points < 2 || points % 2 != 0) {
    throw std::invalid_argument("dft_axis: points per axis must be even and >= 2");
  }
  if (axis < 0 || axis >= dim) throw std::invalid_argument("dft_axis: axis out of range");

  std::size_t stride = 1;
  for (int a = axis + 1; a < dim; ++a) stride *= points;
  const std::size_t block = stride * points;
  const std::size_t blocks = data.size() / block;
  const int half = points / 2;

  LinePlan plan(points, sign);
  std::vector<Complex> line(points);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      Complex* base = data.data() + b * block + inner;
      // signed position p holds s = p - N/2, wrapped slot is (p + N/2) mod N
      for (int p = 0; p < points; ++p) line[(p + half) % points] = base[p * stride];
      plan.run(line);
      for (int p = 0; p < points; ++p) base[p * stride] = line[(p + half) % points];
    }
  }
}

void dft_all_axes(std::span<Complex> data, int dim, int points, int sign) {
  for (int axis = 0; axis < dim; ++axis) dft_axis(data, dim, points, axis, sign);
}

}  // namespace latfkg
