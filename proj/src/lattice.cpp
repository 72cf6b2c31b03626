#include "latfkg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "latfkg/fft.hpp"

namespace latfkg {

LatticeSpec::LatticeSpec(int dim, double spacing, int points_per_axis)
    : dim_(dim), spacing_(spacing), points_(points_per_axis), size_(1) {
  if (dim < 1) throw std::invalid_argument("LatticeSpec: dim must be >= 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("LatticeSpec: spacing must be positive and finite");
  }
  if (points_per_axis < 2 || points_per_axis % 2 != 0) {
    throw std::invalid_argument("LatticeSpec: points_per_axis must be even and >= 2");
  }
  for (int a = 0; a < dim; ++a) {
    if (size_ > (std::size_t{1} << 40) / static_cast<std::size_t>(points_per_axis)) {
      throw std::invalid_argument("LatticeSpec: too many sites");
    }
    size_ *= static_cast<std::size_t>(points_per_axis);
  }
}

std::size_t LatticeSpec::flat_index(std::span<const int> multi) const {
  if (static_cast<int>(multi.size()) != dim_) {
    throw std::invalid_argument("flat_index: multi-index has wrong length");
  }
  std::size_t flat = 0;
  for (int j : multi) {
    if (j < min_index() || j > max_index()) {
      throw std::out_of_range("flat_index: index " + std::to_string(j) + " outside box");
    }
    flat = flat * points_ + static_cast<std::size_t>(j - min_index());
  }
  return flat;
}

void LatticeSpec::multi_index(std::size_t flat, std::span<int> out) const {
  for (int axis = dim_ - 1; axis >= 0; --axis) {
    out[axis] = static_cast<int>(flat % points_) + min_index();
    flat /= points_;
  }
}

std::string describe(const LatticeSpec& spec) {
  std::ostringstream os;
  os << "{dim=" << spec.dim() << ", hbar=" << format_double(spec.spacing())
     << ", N=" << spec.points_per_axis() << "}";
  return os.str();
}

void require_same_spec(const LatticeSpec& a, const LatticeSpec& b) {
  if (!(a == b)) {
    throw SpecMismatchError("lattice mismatch: " + describe(a) + " vs " + describe(b));
  }
}

template <class Domain>
void LatticeField<Domain>::check_values() const {
  if (values_.size() != spec_.size()) {
    throw std::invalid_argument("field has " + std::to_string(values_.size()) +
                                " values, lattice " + describe(spec_) + " needs " +
                                std::to_string(spec_.size()));
  }
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::invalid_argument("field contains a non-finite value");
    }
  }
}

template class LatticeField<SpatialDomain>;
template class LatticeField<SpectralDomain>;

SpectralFunction forward_transform(const GridFunction& u) {
  const auto& spec = u.spec();
  std::vector<Complex> data(u.values().begin(), u.values().end());
  dft_all_axes(data, spec.dim(), spec.points_per_axis(), -1);
  const double scale = std::pow(spec.spacing(), 0.5 * spec.dim());
  for (auto& v : data) v *= scale;
  return SpectralFunction(spec, std::move(data));
}

GridFunction inverse_transform(const SpectralFunction& v) {
  const auto& spec = v.spec();
  std::vector<Complex> data(v.values().begin(), v.values().end());
  dft_all_axes(data, spec.dim(), spec.points_per_axis(), +1);
  const double scale = std::pow(spec.spacing(), 0.5 * spec.dim()) /
                       std::pow(spec.box_length(), spec.dim());
  for (auto& x : data) x *= scale;
  return GridFunction(spec, std::move(data));
}

Complex inner_product(const GridFunction& u, const GridFunction& v) {
  u.require_same_spec(v);
  Complex acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * std::conj(v[i]);
  return acc;
}

Complex spectral_inner_product(const SpectralFunction& u, const SpectralFunction& v) {
  u.require_same_spec(v);
  Complex acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * std::conj(v[i]);
  return acc / std::pow(u.spec().box_length(), u.spec().dim());
}

double norm(const GridFunction& u, Norm p) {
  switch (p) {
    case Norm::l1: {
      double acc = 0.0;
      for (const auto& v : u.values()) acc += std::abs(v);
      return acc;
    }
    case Norm::l2: {
      double acc = 0.0;
      for (const auto& v : u.values()) acc += std::norm(v);
      return std::sqrt(acc);
    }
    case Norm::linf: {
      double acc = 0.0;
      for (const auto& v : u.values()) acc = std::max(acc, std::abs(v));
      return acc;
    }
  }
  throw std::invalid_argument("norm: unknown norm");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& out, const GridFunction& u) {
  const auto& spec = u.spec();
  for (int a = 0; a < spec.dim(); ++a) out << "index_" << a << ',';
  out << "re,im\n";
  for_each_index(spec, [&](std::size_t flat, std::span<const int> multi) {
    for (int j : multi) out << j << ',';
    out << format_double(u[flat].real()) << ',' << format_double(u[flat].imag()) << '\n';
  });
}

void write_csv(const std::string& path, const GridFunction& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, u);
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text, std::size_t row) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("csv row " + std::to_string(row) + ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

GridFunction read_csv(std::istream& in, const LatticeSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected;
  for (int a = 0; a < spec.dim(); ++a) expected += "index_" + std::to_string(a) + ",";
  expected += "re,im";
  if (line != expected) {
    throw std::invalid_argument("csv: header '" + line + "' does not match '" + expected + "'");
  }

  std::vector<Complex> values(spec.size());
  std::vector<char> seen(spec.size(), 0);
  std::vector<int> multi(spec.dim());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != spec.dim() + 2) {
      throw std::invalid_argument("csv row " + std::to_string(row) + ": wrong column count");
    }
    for (int a = 0; a < spec.dim(); ++a) {
      const double j = parse_double(cells[a], row);
      if (j != std::floor(j)) {
        throw std::invalid_argument("csv row " + std::to_string(row) + ": non-integer index");
      }
      multi[a] = static_cast<int>(j);
    }
    std::size_t flat = 0;
    try {
      flat = spec.flat_index(multi);
    } catch (const std::out_of_range& e) {
      throw std::invalid_argument("csv row " + std::to_string(row) + ": " + e.what());
    }
    if (seen[flat]) {
      throw std::invalid_argument("csv row " + std::to_string(row) + ": duplicate site");
    }
    seen[flat] = 1;
    values[flat] = Complex(parse_double(cells[spec.dim()], row),
                           parse_double(cells[spec.dim() + 1], row));
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0) {
    throw std::invalid_argument("csv: not every lattice site is present");
  }
  return GridFunction(spec, std::move(values));
}

GridFunction read_csv(const std::string& path, const LatticeSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_csv(in, spec);
}

}  // namespace latfkg
