#pragma once

#include "xiflow/types.hpp"
#include "xiflow/zeros.hpp"

namespace xiflow::specfun {

/// Gamma function, Lanczos approximation (g = 607/128, 15 terms) with the
/// reflection formula for Re z < 1/2. Relative error well below 1e-12 for
/// |Im z| <= 60, -10 <= Re z <= 10. Throws PoleError at 0, -1, -2, ...
Complex gamma(Complex z);

/// 1/gamma(z); entire, returns exact 0 at nonpositive integers.
Complex gamma_reciprocal(Complex z);

/// Digamma psi(z) = -gamma + sum_{n>=0} (1/(n+1) - 1/(n+z)). The series is
/// summed to cfg.nmax and closed with an Euler-Maclaurin tail (the tail is
/// continued far enough that the expansion is reliable), giving total error
/// <= 1e-10 for |z| <= 100. Throws PoleError at nonpositive integers.
Complex digamma(Complex z, const TruncationConfig& cfg = {});

/// Trigamma psi'(z) = sum_{n>=0} 1/(n+z)^2, same summation scheme.
Complex trigamma(Complex z, const TruncationConfig& cfg = {});

/// Riemann zeta. Euler-Maclaurin for Re s >= 1/2 with
/// N = max(25, ceil(1.3*|Im s|)) direct terms and Bernoulli corrections
/// through B20; for Re s < 1/2 evaluated through the xi functional equation.
/// Throws PoleError at s = 1.
Complex zeta(Complex s);

/// d^order/ds^order zeta(s), order in {0,1,2}, by term-differentiated
/// Euler-Maclaurin. Same validity region as zeta for Re s >= 1/2 (callers
/// below the strip go through xi). Internal building block for xi_jet.
Complex zeta_derivative(Complex s, int order);

/// Formal prime sum -sum_{p<=pmax, m<=mmax} ln p * p^{-m s} for zeta'/zeta.
/// Convergent for Re s > 1; for Re s <= 1 the caller must opt into the
/// formal (divergent) regime via allow_formal, else DomainError.
Complex zeta_log_derivative(Complex s, const TruncationConfig& cfg = {},
                            bool allow_formal = false);

/// Completed zeta: xi(s) = 1/2 s(s-1) Gamma(s/2) pi^{-s/2} zeta(s), entire.
/// Computed as (s-1) Gamma(s/2+1) pi^{-s/2} zeta(s) (the s Gamma(s/2) pair
/// folded into Gamma(s/2+1) removes the 0*inf ambiguity at s=0); for
/// Re s < 1/2 returns xi(1-s) (functional equation used as algorithm).
Complex xi(Complex s);

/// xi value with first and second derivative at s.
struct XiJet {
  Complex f0, f1, f2;
};

/// Fast analytic jet: xi'/xi assembled from 1/(s-1) + psi/2 - ln(pi)/2 +
/// zeta'/zeta and differentiated once more for xi''. Falls back to the
/// contour route in a small neighbourhood of s = 1 where the pole/zero
/// cancellation in the decomposition loses digits.
XiJet xi_jet(Complex s);

/// Cauchy-integral derivative of xi, order in {1,2}: a 64-node periodic
/// trapezoid on the circle of radius 0.25 around s. Relative error below
/// 1e-9 for |Im s| <= 60.
Complex xi_derivative(Complex s, int order);

/// Truncated log-derivative sum_{n} 1/(q - rho_n) over the first cfg.m
/// conjugate pairs of the catalogue, each pair combined before
/// accumulation. Throws SingularityError if q is within 1e-12 of an
/// included zero.
Complex xi_log_derivative_via_zeros(Complex q,
                                    const zeros::ZeroCatalogue& catalogue,
                                    const TruncationConfig& cfg = {});

/// Truncated Hadamard product xi(0) * prod_n (1 - q/rho_n) over the first
/// cfg.m conjugate pairs, conjugate factors multiplied together first.
Complex xi_hadamard_truncated(Complex q, const zeros::ZeroCatalogue& catalogue,
                              const TruncationConfig& cfg = {});

}  // namespace xiflow::specfun
