#include "xiflow/formulas.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "xiflow/specfun.hpp"

namespace xiflow::formulas {

namespace {

constexpr double kLnPi = 1.144729885849400174143427351353058;

Complex xi_checked(Complex q, const char* who) {
  const Complex v = specfun::xi(q);
  if (!is_finite(v) || v == Complex(0.0, 0.0))
    throw SingularityError(std::string(who) + ": xi vanishes at q");
  return v;
}

}  // namespace

const std::vector<int>& prime_sieve(int pmax) {
  if (pmax < 2) throw DomainError("prime_sieve: pmax must be >= 2");
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<const std::vector<int>>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(pmax);
  if (it != cache.end()) return *it->second;

  std::vector<char> composite(std::size_t(pmax) + 1, 0);
  std::vector<int> primes;
  for (int n = 2; n <= pmax; ++n) {
    if (composite[n]) continue;
    primes.push_back(n);
    for (long long k = (long long)n * n; k <= pmax; k += n)
      composite[std::size_t(k)] = 1;
  }
  auto stored = std::make_unique<const std::vector<int>>(std::move(primes));
  const std::vector<int>& ref = *stored;
  cache.emplace(pmax, std::move(stored));
  return ref;
}

Complex momentum_closed_form(Complex q0, Complex p0, Complex q) {
  if (q == q0) return p0;  // zero elapsed flow
  const Complex xq = xi_checked(q, "momentum_closed_form");
  return p0 * specfun::xi(q0) / xq;
}

Complex delta_p_closed_form(Complex q0, Complex p0, Complex dq0, Complex dp0,
                            Complex q) {
  if (q == q0) return dp0;  // zero elapsed flow
  const Complex xq = xi_checked(q, "delta_p_closed_form");
  const specfun::XiJet j0 = specfun::xi_jet(q0);
  const specfun::XiJet j = specfun::xi_jet(q);
  return (p0 * dq0 * (j0.f1 - j.f1) + j0.f0 * dp0) / xq;
}

Complex delta_p_closed_form(Complex q0, Complex p0, Complex dq0, Complex dp0,
                            Complex q, const zeros::ZeroCatalogue& catalogue,
                            const TruncationConfig& cfg) {
  const Complex xq = xi_checked(q, "delta_p_closed_form");
  const specfun::XiJet j0 = specfun::xi_jet(q0);
  const Complex zero_sum =
      specfun::xi_log_derivative_via_zeros(q, catalogue, cfg);
  return p0 * dq0 * (j0.f1 / xq - zero_sum) + (j0.f0 / xq) * dp0;
}

FlowMapDifferential flow_map_differential(Complex q0, Complex p0, Complex q) {
  const Complex xq0 = xi_checked(q0, "flow_map_differential");
  const Complex xq = xi_checked(q, "flow_map_differential");
  const specfun::XiJet j0 = specfun::xi_jet(q0);
  const specfun::XiJet j = specfun::xi_jet(q);
  FlowMapDifferential m;
  m.m11 = xq / xq0;
  m.m12 = 0.0;
  m.m21 = p0 * (j0.f1 - j.f1) / xq;
  m.m22 = xq0 / xq;
  return m;
}

FlowMapDifferential flow_map_differential(Complex q0, Complex p0, Complex q,
                                          const zeros::ZeroCatalogue& catalogue,
                                          const TruncationConfig& cfg) {
  const Complex xq0 = xi_checked(q0, "flow_map_differential");
  const Complex xq = xi_checked(q, "flow_map_differential");
  const Complex xp0 = specfun::xi_jet(q0).f1;
  const Complex zero_sum =
      specfun::xi_log_derivative_via_zeros(q, catalogue, cfg);
  FlowMapDifferential m;
  m.m11 = xq / xq0;
  m.m12 = 0.0;
  m.m21 = p0 * xp0 / xq - p0 * zero_sum;
  m.m22 = xq0 / xq;
  return m;
}

Complex product_identity_residual(Complex q0, Complex p0, Complex q, Complex p,
                                  const zeros::ZeroCatalogue& catalogue,
                                  const TruncationConfig& cfg) {
  cfg.validate();
  if (p0 == Complex(0.0, 0.0) || p == Complex(0.0, 0.0))
    throw DomainError("product_identity_residual: p, p0 must be nonzero");
  if (q == q0 && p == p0) return 0.0;  // all factors unity
  catalogue.require_pairs(cfg.m);
  Complex prod = p / p0;
  for (int n = 1; n <= cfg.m; ++n) {
    const Complex rho = catalogue.record(n).rho;
    const Complex rho_bar = std::conj(rho);
    const Complex num = (q - rho) * (q - rho_bar);
    const Complex den = (q0 - rho) * (q0 - rho_bar);
    if (num == Complex(0.0, 0.0) || den == Complex(0.0, 0.0))
      throw SingularityError("product_identity_residual: zero factor at n = " +
                             std::to_string(n));
    prod *= num / den;
  }
  return prod - 1.0;
}

Complex pm_polynomial(Complex q, Complex p, Complex q0, Complex p0,
                      const zeros::ZeroCatalogue& catalogue,
                      const TruncationConfig& cfg) {
  cfg.validate();
  catalogue.require_pairs(cfg.m);
  Complex prod_q = 1.0, prod_q0 = 1.0;
  for (int n = 1; n <= cfg.m; ++n) {
    const Complex rho = catalogue.record(n).rho;
    const Complex rho_bar = std::conj(rho);
    prod_q *= (q - rho) * (q - rho_bar);
    prod_q0 *= (q0 - rho) * (q0 - rho_bar);
  }
  return p * prod_q - p0 * prod_q0;
}

Complex newton_time_reparam(Complex q0, Complex q, int winding_k) {
  const Complex extra(0.0, kTwoPi * winding_k);
  if (q == q0) return extra;
  const Complex xq0 = xi_checked(q0, "newton_time_reparam");
  const Complex xq = xi_checked(q, "newton_time_reparam");
  return std::log(xq0) - std::log(xq) + extra;
}

Complex action(Complex q0, Complex p0, const zeros::ZeroRecord& zero) {
  const Complex xq0 = xi_checked(q0, "action");
  return xq0 * p0 * zero.period;  // H(q0,p0) * t*
}

Complex orbit_period(const zeros::ZeroRecord& zero) {
  const double mag = std::abs(zero.xi_prime);
  if (!(mag >= 1e-10))
    throw DegenerateZeroError("orbit_period: |xi'(rho)| below 1e-10");
  return Complex(0.0, kTwoPi) / zero.xi_prime;
}

SpectrumTable quantized_energies(const zeros::ZeroRecord& zero, int k_min,
                                 int k_max, double h) {
  if (!(h > 0.0)) throw DomainError("quantized_energies: h must be positive");
  if (k_min > k_max)
    throw DomainError("quantized_energies: empty k range");
  const double mag = std::abs(zero.xi_prime);
  if (!(mag >= 1e-10) || !(zero.period > 0.0) || !std::isfinite(zero.period))
    throw DegenerateZeroError("quantized_energies: degenerate zero");
  SpectrumTable table;
  table.zero_index = zero.index;
  table.period = zero.period;
  table.frequency = 1.0 / zero.period;
  table.h = h;
  const double E1 = h * table.frequency;
  table.energies.reserve(std::size_t(k_max - k_min) + 1);
  for (int k = k_min; k <= k_max; ++k)
    table.energies.emplace_back(k, double(k) * E1);
  return table;
}

double fluctuation_term(double sigma, double tau, const TruncationConfig& cfg,
                        bool allow_formal) {
  cfg.validate();
  if (sigma <= 1.0 && !allow_formal)
    throw DomainError(
        "fluctuation_term: sigma <= 1 is the divergent regime; pass "
        "allow_formal to evaluate the formal partial sum");
  double acc = 0.0;
  for (int p : prime_sieve(cfg.pmax)) {
    const double lp = std::log(double(p));
    for (int m = 1; m <= cfg.mmax; ++m) {
      acc += std::exp(-m * sigma * lp) * std::sin(m * lp * tau) / m;
    }
  }
  return -acc;
}

Complex newton_flow_elementary_time(Complex s, Complex s0,
                                    const TruncationConfig& cfg,
                                    int prime_sign) {
  cfg.validate();
  if (prime_sign != 1 && prime_sign != -1)
    throw DomainError("newton_flow_elementary_time: prime_sign must be +-1");
  for (const Complex& z : {s, s0}) {
    if (!is_finite(z))
      throw DomainError("newton_flow_elementary_time: non-finite argument");
    if (std::abs(z) < 1e-9 || std::abs(z - 1.0) < 1e-9)
      throw DomainError(
          "newton_flow_elementary_time: argument at a component pole");
  }
  if (s == s0) return 0.0;  // every term cancels

  Complex acc = std::log(s / s0) + std::log((s - 1.0) / (s0 - 1.0));
  acc -= 0.5 * kLnPi * (s - s0);
  // Half of Euler's gamma: the Gamma(s/2) factor differentiates with a
  // chain-rule 1/2, matching the digamma-series sum below.
  acc -= 0.5 * kEulerGamma * (s - s0);

  const double sign = double(prime_sign);
  for (int p : prime_sieve(cfg.pmax)) {
    const double lp = std::log(double(p));
    const Complex base_s = std::exp(sign * s * lp);
    const Complex base_s0 = std::exp(sign * s0 * lp);
    Complex ws = base_s, ws0 = base_s0;
    for (int n = 1; n <= cfg.mmax; ++n) {
      acc += (ws - ws0) / double(n);
      ws *= base_s;
      ws0 *= base_s0;
    }
  }

  // Digamma-series part with an Euler-Maclaurin tail.
  const Complex a = 0.5 * s, b = 0.5 * s0;
  const int n_stop = std::max(
      cfg.nmax + 1,
      int(std::ceil(2.0 * std::max(std::abs(s), std::abs(s0)))) + 24);
  for (int n = 0; n < n_stop; ++n) {
    const Complex na = double(n) + a, nb = double(n) + b;
    if (std::abs(na) < 1e-9 || std::abs(nb) < 1e-9)
      throw DomainError(
          "newton_flow_elementary_time: digamma-series pole at n = " +
          std::to_string(n));
    acc += (a - b) / (n + 1.0) - std::log(na) + std::log(nb);
  }
  const double nn = double(n_stop);
  const Complex x1 = nn + 1.0, xa = nn + a, xb = nn + b;
  // F is the antiderivative of f(x) = (a-b)/(x+1) - ln(x+a) + ln(x+b),
  // normalized so F -> 0 at infinity; the tail integral is -F(n_stop).
  const Complex F = (a - b) * std::log(x1) - xa * std::log(xa) + xa +
                    xb * std::log(xb) - xb;
  acc -= F;
  acc += 0.5 * ((a - b) / x1 - std::log(xa) + std::log(xb));
  acc -= (-(a - b) / (x1 * x1) - 1.0 / xa + 1.0 / xb) / 12.0;
  acc += (-6.0 * (a - b) / (x1 * x1 * x1 * x1) - 2.0 / (xa * xa * xa) +
          2.0 / (xb * xb * xb)) /
         720.0;
  return acc;
}

}  // namespace xiflow::formulas
