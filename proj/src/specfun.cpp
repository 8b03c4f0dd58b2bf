#include "xiflow/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "xiflow/formulas.hpp"

namespace xiflow::specfun {

namespace {

constexpr double kLnPi = 1.144729885849400174143427351353058;
constexpr double kSqrtTwoPi = 2.506628274631000502415765284811045;
constexpr Complex kXiAtZero{0.5, 0.0};  // xi(0) = xi(1) = 1/2

// Lanczos coefficients, g = 607/128, 15 terms (Godfrey). Relative error
// below 1e-13 across the strip this project evaluates in.
constexpr double kLanczosG = 4.7421875;
constexpr std::array<double, 15> kLanczos = {
    0.99999999999999709182,     57.156235665862923517,
    -59.597960355475491248,     14.136097974741747174,
    -0.49191381609762019978,    0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4,
    0.15808870322491248884e-3,  -0.21026444172410488319e-3,
    0.21743961811521264320e-3,  -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

// B_{2k}/(2k)! for the Euler-Maclaurin corrections, k = 1..10 (through B20).
constexpr std::array<double, 10> kBernoulliOverFactorial = {
    8.3333333333333333e-02, -1.3888888888888889e-03, 3.3068783068783069e-05,
    -8.2671957671957672e-07, 2.0876756987868099e-08, -5.2841901386874932e-10,
    1.3382536530684679e-11, -3.3896802963225829e-13, 8.5860620562778446e-15,
    -2.1748686985580619e-16,
};

// ln n for the direct Euler-Maclaurin terms; sized for heights well above
// the catalogue cap (N = 1.3 * 200 < 512).
constexpr int kLogTableSize = 512;
const std::array<double, kLogTableSize>& log_table() {
  static const auto table = [] {
    std::array<double, kLogTableSize> t{};
    for (int n = 1; n < kLogTableSize; ++n) t[n] = std::log(double(n));
    return t;
  }();
  return table;
}

inline double log_int(int n) {
  return n < kLogTableSize ? log_table()[n] : std::log(double(n));
}

struct EmJet {
  Complex f0, f1, f2;
};

// Euler-Maclaurin zeta with term-differentiated first and second
// derivatives. Valid for Re s >= 1/2, s != 1; remainder below the last
// Bernoulli term, < 1e-15 relative for |Im s| <= 260.
EmJet zeta_em_jet(const Complex& s, int max_order) {
  const int N = std::max(25, int(std::ceil(1.3 * std::abs(s.imag()))));
  Complex f0 = 0.0, f1 = 0.0, f2 = 0.0;
  for (int n = 1; n < N; ++n) {
    const double ln = log_int(n);
    const Complex w = std::exp(-s * ln);
    f0 += w;
    if (max_order >= 1) f1 -= ln * w;
    if (max_order >= 2) f2 += ln * ln * w;
  }
  const double lnN = log_int(N);
  const Complex wN = std::exp(-s * lnN);
  const Complex sm1 = s - 1.0;
  const Complex pole = double(N) * wN / sm1;  // N^{1-s}/(s-1)
  f0 += pole + 0.5 * wN;
  if (max_order >= 1) f1 += pole * (-lnN - 1.0 / sm1) - 0.5 * lnN * wN;
  if (max_order >= 2) {
    const Complex u = lnN + 1.0 / sm1;
    f2 += pole * (u * u + 1.0 / (sm1 * sm1)) + 0.5 * lnN * lnN * wN;
  }
  // Correction terms C_k * s(s+1)...(s+2k-2) * N^{-s-2k+1}.
  Complex prod = s;
  Complex sum_inv = 1.0 / s;
  Complex sum_inv2 = 1.0 / (s * s);
  double npow = 1.0 / double(N);
  for (int k = 1; k <= int(kBernoulliOverFactorial.size()); ++k) {
    if (k > 1) {
      const Complex g1 = s + double(2 * k - 3);
      const Complex g2 = s + double(2 * k - 2);
      prod *= g1 * g2;
      sum_inv += 1.0 / g1 + 1.0 / g2;
      sum_inv2 += 1.0 / (g1 * g1) + 1.0 / (g2 * g2);
      npow /= double(N) * double(N);
    }
    const Complex term = kBernoulliOverFactorial[k - 1] * prod * wN * npow;
    f0 += term;
    if (max_order >= 1) f1 += term * (sum_inv - lnN);
    if (max_order >= 2) {
      const Complex u = sum_inv - lnN;
      f2 += term * (u * u - sum_inv2);
    }
  }
  return {f0, f1, f2};
}

XiJet xi_contour_jet(const Complex& s) {
  constexpr int kNodes = 64;
  constexpr double kRadius = 0.25;
  Complex c0 = 0.0, c1 = 0.0, c2 = 0.0;
  for (int k = 0; k < kNodes; ++k) {
    const double theta = kTwoPi * k / kNodes;
    const Complex e = std::polar(1.0, theta);
    const Complex v = xi(s + kRadius * e);
    const Complex em = std::conj(e);
    c0 += v;
    c1 += v * em;
    c2 += v * em * em;
  }
  return {c0 / double(kNodes), c1 / (kNodes * kRadius),
          2.0 * c2 / (kNodes * kRadius * kRadius)};
}

}  // namespace

Complex gamma(Complex z) {
  if (!is_finite(z)) throw DomainError("gamma: non-finite argument");
  if (is_nonpositive_integer(z))
    throw PoleError("gamma pole at z = " + std::to_string(z.real()));
  if (z.real() < 0.5) return kPi / (std::sin(kPi * z) * gamma(1.0 - z));
  Complex sum = kLanczos[0];
  for (int k = 1; k < int(kLanczos.size()); ++k)
    sum += kLanczos[k] / (z - 1.0 + double(k));
  const Complex t = z + (kLanczosG - 0.5);
  return kSqrtTwoPi * std::pow(t, z - 0.5) * std::exp(-t) * sum;
}

Complex gamma_reciprocal(Complex z) {
  if (is_nonpositive_integer(z)) return 0.0;
  if (z.real() < 0.5) return std::sin(kPi * z) * gamma(1.0 - z) / kPi;
  return 1.0 / gamma(z);
}

Complex digamma(Complex z, const TruncationConfig& cfg) {
  cfg.validate();
  if (!is_finite(z)) throw DomainError("digamma: non-finite argument");
  if (is_nonpositive_integer(z))
    throw PoleError("digamma pole at z = " + std::to_string(z.real()));
  // Direct series to nmax, continued until the Euler-Maclaurin tail is
  // reliable, then closed with the tail.
  const int n_stop =
      std::max(cfg.nmax + 1, int(std::ceil(2.0 * std::abs(z))) + 24);
  Complex acc = -kEulerGamma;
  for (int n = 0; n < n_stop; ++n)
    acc += 1.0 / (n + 1.0) - 1.0 / (double(n) + z);
  const double nn = double(n_stop);
  const Complex a = nn + 1.0, b = nn + z;
  const Complex a2 = a * a, b2 = b * b;
  acc += std::log(b / a);
  acc += 0.5 * (1.0 / a - 1.0 / b);
  acc -= (1.0 / b2 - 1.0 / a2) / 12.0;
  acc += (1.0 / (b2 * b2) - 1.0 / (a2 * a2)) / 120.0;
  acc -= (1.0 / (b2 * b2 * b2) - 1.0 / (a2 * a2 * a2)) / 252.0;
  return acc;
}

Complex trigamma(Complex z, const TruncationConfig& cfg) {
  cfg.validate();
  if (!is_finite(z)) throw DomainError("trigamma: non-finite argument");
  if (is_nonpositive_integer(z))
    throw PoleError("trigamma pole at z = " + std::to_string(z.real()));
  const int n_stop =
      std::max(cfg.nmax + 1, int(std::ceil(2.0 * std::abs(z))) + 24);
  Complex acc = 0.0;
  for (int n = 0; n < n_stop; ++n) {
    const Complex d = double(n) + z;
    acc += 1.0 / (d * d);
  }
  const Complex b = double(n_stop) + z;
  const Complex b2 = b * b;
  acc += 1.0 / b + 0.5 / b2 + 1.0 / (6.0 * b2 * b) - 1.0 / (30.0 * b2 * b2 * b);
  return acc;
}

Complex zeta(Complex s) {
  if (!is_finite(s)) throw DomainError("zeta: non-finite argument");
  if (s == Complex(1.0, 0.0)) throw PoleError("pole at s=1");
  if (s.real() >= 0.5) return zeta_em_jet(s, 0).f0;
  // Functional equation routed through xi (one code path, xi symmetry):
  // zeta(s) = xi(1-s) pi^{s/2} / ((s-1) Gamma(s/2+1)).
  return xi(1.0 - s) * std::exp(0.5 * s * kLnPi) *
         gamma_reciprocal(0.5 * s + 1.0) / (s - 1.0);
}

Complex zeta_derivative(Complex s, int order) {
  if (order < 0 || order > 2)
    throw DomainError("zeta_derivative: order must be in {0,1,2}");
  if (s == Complex(1.0, 0.0)) throw PoleError("pole at s=1");
  if (s.real() < 0.5)
    throw DomainError("zeta_derivative: valid for Re s >= 1/2");
  const EmJet jet = zeta_em_jet(s, order);
  return order == 0 ? jet.f0 : (order == 1 ? jet.f1 : jet.f2);
}

Complex zeta_log_derivative(Complex s, const TruncationConfig& cfg,
                            bool allow_formal) {
  cfg.validate();
  if (!is_finite(s)) throw DomainError("zeta_log_derivative: non-finite s");
  if (s.real() <= 1.0 && !allow_formal)
    throw DomainError(
        "zeta_log_derivative: Re s <= 1 is the divergent regime; pass "
        "allow_formal to evaluate the formal partial sum");
  Complex acc = 0.0;
  for (int p : formulas::prime_sieve(cfg.pmax)) {
    const double lp = std::log(double(p));
    const Complex base = std::exp(-s * lp);
    Complex w = base;
    for (int m = 1; m <= cfg.mmax; ++m) {
      acc += lp * w;
      w *= base;
    }
  }
  return -acc;
}

Complex xi(Complex s) {
  if (!is_finite(s)) throw DomainError("xi: non-finite argument");
  if (s.real() < 0.5) s = 1.0 - s;  // functional equation as algorithm
  if (s == Complex(1.0, 0.0)) return kXiAtZero;
  return (s - 1.0) * gamma(0.5 * s + 1.0) * std::exp(-0.5 * s * kLnPi) *
         zeta_em_jet(s, 0).f0;
}

XiJet xi_jet(Complex s) {
  if (!is_finite(s)) throw DomainError("xi_jet: non-finite argument");
  double parity = 1.0;
  if (s.real() < 0.5) {
    s = 1.0 - s;
    parity = -1.0;  // xi'(s) = -xi'(1-s), xi''(s) = xi''(1-s)
  }
  if (std::abs(s - 1.0) < 1e-3) {
    // The 1/(s-1) + zeta'/zeta decomposition cancels catastrophically at
    // the zeta pole; the contour route does not.
    XiJet j = xi_contour_jet(s);
    return {j.f0, parity * j.f1, j.f2};
  }
  const EmJet z = zeta_em_jet(s, 2);
  const Complex w = z.f1 / z.f0;
  const Complex w1 = z.f2 / z.f0 - w * w;
  const Complex inv = 1.0 / (s - 1.0);
  const Complex logd =
      inv + 0.5 * digamma(0.5 * s + 1.0) - 0.5 * kLnPi + w;
  const Complex logd1 = -inv * inv + 0.25 * trigamma(0.5 * s + 1.0) + w1;
  const Complex f0 = (s - 1.0) * gamma(0.5 * s + 1.0) *
                     std::exp(-0.5 * s * kLnPi) * z.f0;
  return {f0, parity * f0 * logd, f0 * (logd * logd + logd1)};
}

Complex xi_derivative(Complex s, int order) {
  if (order != 1 && order != 2)
    throw DomainError("xi_derivative: order must be 1 or 2");
  if (!is_finite(s)) throw DomainError("xi_derivative: non-finite argument");
  const XiJet jet = xi_contour_jet(s);
  return order == 1 ? jet.f1 : jet.f2;
}

Complex xi_log_derivative_via_zeros(Complex q,
                                    const zeros::ZeroCatalogue& catalogue,
                                    const TruncationConfig& cfg) {
  cfg.validate();
  catalogue.require_pairs(cfg.m);
  Complex acc = 0.0;
  for (int n = 1; n <= cfg.m; ++n) {
    const Complex rho = catalogue.record(n).rho;
    const Complex rho_bar = std::conj(rho);
    if (std::abs(q - rho) < 1e-12 || std::abs(q - rho_bar) < 1e-12)
      throw SingularityError("xi_log_derivative_via_zeros: q at zero " +
                             std::to_string(n));
    acc += 1.0 / (q - rho) + 1.0 / (q - rho_bar);  // pair first
  }
  return acc;
}

Complex xi_hadamard_truncated(Complex q, const zeros::ZeroCatalogue& catalogue,
                              const TruncationConfig& cfg) {
  cfg.validate();
  catalogue.require_pairs(cfg.m);
  Complex prod = 1.0;
  for (int n = 1; n <= cfg.m; ++n) {
    const Complex rho = catalogue.record(n).rho;
    const Complex rho_bar = std::conj(rho);
    // (1 - q/rho) written as (rho - q)/rho so q == rho gives an exact zero.
    prod *= ((rho - q) / rho) * ((rho_bar - q) / rho_bar);
  }
  return kXiAtZero * prod;
}

}  // namespace xiflow::specfun
