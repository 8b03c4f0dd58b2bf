#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xiflow/types.hpp"
#include "xiflow/zeros.hpp"

namespace xiflow::formulas {

/// All primes <= pmax, ascending. Results are cached immutably per pmax.
const std::vector<int>& prime_sieve(int pmax);

/// Momentum along the Hamiltonian flow in closed form:
/// p = p0 * xi(q0) / xi(q). Throws SingularityError at zeros of xi.
Complex momentum_closed_form(Complex q0, Complex p0, Complex q);

/// Momentum-perturbation transport in compact closed form:
/// dp = (p0 dq0 (xi'(q0) - xi'(q)) + xi(q0) dp0) / xi(q).
Complex delta_p_closed_form(Complex q0, Complex p0, Complex dq0, Complex dp0,
                            Complex q);

/// Spectral form of the same transport, the truncated zero sum standing in
/// for xi'(q)/xi(q):
/// dp = p0 dq0 (xi'(q0)/xi(q) - sum_n 1/(q - rho_n)) + (xi(q0)/xi(q)) dp0.
Complex delta_p_closed_form(Complex q0, Complex p0, Complex dq0, Complex dp0,
                            Complex q, const zeros::ZeroCatalogue& catalogue,
                            const TruncationConfig& cfg);

/// Flow-map differential: (dq, dp)^T at q equals M (dq0, dp0)^T.
/// Lower-triangular with m11 m22 = 1; m21 is the q-p coupling constant.
struct FlowMapDifferential {
  Complex m11, m12, m21, m22;

  Eigen::Matrix2cd matrix() const {
    Eigen::Matrix2cd m;
    m << m11, m12, m21, m22;
    return m;
  }
  Complex det() const { return m11 * m22 - m12 * m21; }
  Eigen::Vector2cd apply(Complex dq0, Complex dp0) const {
    return matrix() * Eigen::Vector2cd(dq0, dp0);
  }
};

/// Exact flow-map differential (the infinite zero sum evaluated in closed
/// form through xi'/xi): m21 = p0 (xi'(q0) - xi'(q)) / xi(q).
FlowMapDifferential flow_map_differential(Complex q0, Complex p0, Complex q);

/// Spectral flow-map differential with the zero sum truncated at cfg.m
/// conjugate pairs: m21 = p0 xi'(q0)/xi(q) - sum_n p0/(q - rho_n).
FlowMapDifferential flow_map_differential(Complex q0, Complex p0, Complex q,
                                          const zeros::ZeroCatalogue& catalogue,
                                          const TruncationConfig& cfg);

/// Residual of the product identity
/// prod_n (q - rho_n)/(q0 - rho_n) = p0/p  (mod 2pi i):
/// returns prod_n (q-rho_n)/(q0-rho_n) * p/p0 - 1 over cfg.m conjugate
/// pairs (exponential comparison; no logs, no branch bookkeeping).
Complex product_identity_residual(Complex q0, Complex p0, Complex q, Complex p,
                                  const zeros::ZeroCatalogue& catalogue,
                                  const TruncationConfig& cfg);

/// P_m(q,p,q0,p0) = p prod (q-rho_n)(q-conj rho_n)
///                - p0 prod (q0-rho_n)(q0-conj rho_n), m conjugate pairs.
Complex pm_polynomial(Complex q, Complex p, Complex q0, Complex p0,
                      const zeros::ZeroCatalogue& catalogue,
                      const TruncationConfig& cfg);

/// Complex-time reparameterization between two xi-flow points:
/// T = ln xi(q0) - ln xi(q) + 2 pi i k (principal logs; the winding integer
/// k exposes the mod-2pi i ambiguity; identities should be tested through
/// exponentials, where k drops out).
Complex newton_time_reparam(Complex q0, Complex q, int winding_k = 0);

/// Action along the periodic orbit of `zero` through (q0, p0):
/// S = H(q0,p0) * t* = xi(q0) p0 * 2pi/|xi'(rho_n)|.
Complex action(Complex q0, Complex p0, const zeros::ZeroRecord& zero);

/// Complex closed-orbit period 2 pi i / xi'(rho_n); the real flow-time
/// period is its modulus. Throws DegenerateZeroError if |xi'| < 1e-10.
Complex orbit_period(const zeros::ZeroRecord& zero);

/// Quantized spectrum of the closed orbit: E(k) = k h nu, nu = 1/t*.
struct SpectrumTable {
  int zero_index = 0;
  double period = 0.0;
  double frequency = 0.0;  // nu = 1/period
  double h = 1.0;
  std::vector<std::pair<int, double>> energies;  // (k, E)
};

SpectrumTable quantized_energies(const zeros::ZeroRecord& zero, int k_min,
                                 int k_max, double h = 1.0);

/// Counting-function fluctuation sum
/// -sum_{p<=pmax, m<=mmax} (1/m) e^{-m sigma ln p} sin(m ln p tau).
/// Formally divergent for sigma <= 1; the caller must acknowledge that
/// regime via allow_formal, else DomainError.
double fluctuation_term(double sigma, double tau, const TruncationConfig& cfg,
                        bool allow_formal = false);

/// Elementary-term decomposition of the complex Newton-flow time between
/// s0 and s: logs of the rational factors, the pi and Euler-gamma pieces,
/// the prime double sum (exponent sign selectable via prime_sign, +1/-1),
/// and the digamma-series sum with an Euler-Maclaurin tail. Compare
/// exp(result) against xi(s)/xi(s0); prime_sign = -1 is the reading that
/// reproduces the ratio.
Complex newton_flow_elementary_time(Complex s, Complex s0,
                                    const TruncationConfig& cfg,
                                    int prime_sign);

}  // namespace xiflow::formulas
