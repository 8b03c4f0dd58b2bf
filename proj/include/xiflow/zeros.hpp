#pragma once

#include <filesystem>
#include <vector>

#include "xiflow/types.hpp"

namespace xiflow::zeros {

/// One nontrivial xi-zero on the critical line together with the derived
/// per-zero quantities every orbit formula needs.
struct ZeroRecord {
  int index = 0;        // 1-based, ordered by Im rho
  Complex rho;          // the zero, Re rho = 1/2 up to locator tolerance
  Complex xi_prime;     // xi'(rho), purely imaginary at critical-line zeros
  double period = 0.0;  // closed-orbit flow time, 2*pi/|xi_prime|
};

/// Ordered, conjugate-paired zero catalogue. Stores upper-half-plane zeros
/// only; every sum/product expands each record to the pair {rho, conj(rho)}.
/// Immutable after construction.
class ZeroCatalogue {
 public:
  ZeroCatalogue() = default;
  ZeroCatalogue(std::vector<ZeroRecord> records, double tau_max,
                double tolerance);

  const std::vector<ZeroRecord>& records() const { return records_; }
  int size() const { return static_cast<int>(records_.size()); }
  bool empty() const { return records_.empty(); }

  /// 1-based access, matching ZeroRecord::index.
  const ZeroRecord& record(int n) const;

  double tau_max() const { return tau_max_; }
  double tolerance() const { return tolerance_; }

  /// Number of catalogued zeros with Im rho <= t.
  int count_below(double t) const;

  /// Throws DomainError unless at least m conjugate pairs are available.
  void require_pairs(int m) const;

 private:
  std::vector<ZeroRecord> records_;
  double tau_max_ = 0.0;
  double tolerance_ = 0.0;
};

/// Re xi(1/2 + i*tau). xi is real on the critical line; the imaginary part
/// is checked against a reality tolerance as an internal consistency guard.
double hardy_xi_real(double tau);

/// Derivative of hardy_xi_real, used by the Newton refinement.
double hardy_xi_real_derivative(double tau);

/// Smooth zero-count estimate (T/2pi)*ln(T/(2pi*e)) + 7/8.
double smooth_zero_count(double tau);

/// Scan [0, tau_max] with step 0.05, bracket sign changes of xi(1/2+i*tau),
/// refine by bisection + Newton until |xi| <= tol, and fill xi'(rho) and the
/// closed-orbit period per record.
ZeroCatalogue locate_zeros(double tau_max, double tol = 1e-12);

/// Catalogue persistence: UTF-8 text, one JSON object per line. First line
/// is a header {tau_max, tolerance, count}; each record line carries
/// {index, re, im, xi_prime_re, xi_prime_im, period} with 17 significant
/// digits (exact double round-trip).
void save_catalogue(const ZeroCatalogue& catalogue,
                    const std::filesystem::path& path);
ZeroCatalogue load_catalogue(const std::filesystem::path& path);

}  // namespace xiflow::zeros
