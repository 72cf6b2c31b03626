#pragma once

#include <stdexcept>
#include <string>

namespace latfkg {

// Two fields were built on different lattices.
class SpecMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The requested operation exists but not for this configuration
// (closed-form coefficients in n > 1, exact propagation with variable mass).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A band-limited profile does not fit inside the dual cell of the lattice.
class NyquistError : public std::invalid_argument {
 public:
  NyquistError(const std::string& what, double max_spacing)
      : std::invalid_argument(what), max_spacing_(max_spacing) {}

  // Largest lattice spacing that resolves the profile.
  double max_spacing() const { return max_spacing_; }

 private:
  double max_spacing_;
};

}  // namespace latfkg
