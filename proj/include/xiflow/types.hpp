#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace xiflow {

/// Universal scalar: complex double. All values crossing module boundaries
/// must be finite; NaN/Inf is an error state, never a return value.
using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279503;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kEulerGamma = 0.577215664901532860606512090082402431;

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const Complex& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline bool is_nonpositive_integer(const Complex& z) {
  return z.imag() == 0.0 && z.real() <= 0.0 &&
         z.real() == std::floor(z.real());
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluation at a pole of the requested function.
struct PoleError : Error {
  using Error::Error;
};

/// Arguments outside the operation's stated domain.
struct DomainError : Error {
  using Error::Error;
};

/// A factor or denominator vanished (zero of xi, coincident catalogue zero).
struct SingularityError : Error {
  using Error::Error;
};

/// Iterative refinement failed to reach the requested tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

/// Adaptive integration forced the step below the representable floor;
/// signals blow-up or extreme stiffness along the trajectory.
struct StepSizeUnderflow : Error {
  using Error::Error;
};

/// Newton-flow path ran into the zero set of xi' (separatrix skeleton).
struct SeparatrixSingularity : Error {
  using Error::Error;
};

/// No Poincare-section return within the allotted flow time.
struct NoReturnError : Error {
  using Error::Error;
};

/// xi'(rho) below tolerance: the zero is (numerically) not simple.
struct DegenerateZeroError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
struct FormatError : Error {
  explicit FormatError(const std::string& msg, long line_number = 0)
      : Error(line_number > 0
                  ? "line " + std::to_string(line_number) + ": " + msg
                  : msg),
        line(line_number) {}
  long line = 0;
};

/// Truncation knobs for every sum/product over zeros, primes and the
/// digamma series.
///   m    — number of conjugate zero PAIRS in zero sums/products
///   pmax — largest prime in prime sums
///   mmax — largest prime-power exponent
///   nmax — digamma-series truncation index
struct TruncationConfig {
  int m = 64;
  int pmax = 100000;
  int mmax = 40;
  int nmax = 400;

  void validate() const {
    if (m < 1) throw DomainError("TruncationConfig: m must be >= 1");
    if (pmax < 2) throw DomainError("TruncationConfig: pmax must be >= 2");
    if (mmax < 1) throw DomainError("TruncationConfig: mmax must be >= 1");
    if (nmax < 1) throw DomainError("TruncationConfig: nmax must be >= 1");
  }
};

}  // namespace xiflow
