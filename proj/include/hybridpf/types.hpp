#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hybridpf {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad file contents, violated preconditions, bad options.
class InvalidInput : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
public:
  using InvalidInput::InvalidInput;
};

class SingularSystem : public Error {
public:
  using Error::Error;
};

/// Raised by the fixed-point oracle. `sample()` is the offending sample index
/// when the failure happened during data generation, -1 otherwise.
class NonConvergence : public Error {
public:
  explicit NonConvergence(const std::string& what, long sample = -1)
      : Error(what), sample_(sample) {}
  long sample() const noexcept { return sample_; }

private:
  long sample_;
};

/// Both anchor states coincide, so the blend coefficients carry no information.
class UnidentifiableAnchors : public Error {
public:
  using Error::Error;
};

/// A single node-phase whose blend coefficient cannot be fitted.
class UnidentifiableElement : public Error {
public:
  UnidentifiableElement(const std::string& what, Index element)
      : Error(what), element_(element) {}
  Index element() const noexcept { return element_; }

private:
  Index element_;
};

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " +
                            std::to_string(expected) + ", got " + std::to_string(actual));
  }
}

}  // namespace hybridpf
