#include "xiflow/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "xiflow/specfun.hpp"

namespace xiflow::zeros {

namespace {

constexpr double kScanStep = 0.05;     // below the minimal zero gap here
constexpr double kTauMaxLimit = 200.0;  // validated scan range
constexpr double kMinGap = 0.1;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void validate_record_sequence(const std::vector<ZeroRecord>& records,
                              double tolerance) {
  double prev_im = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ZeroRecord& r = records[i];
    if (r.index != int(i) + 1)
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": index out of order");
    if (i > 0 && r.rho.imag() - prev_im <= kMinGap)
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": zeros not strictly increasing (gap <= 0.1)");
    prev_im = r.rho.imag();
    if (std::abs(r.rho.real() - 0.5) > std::max(1e-6, tolerance))
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": Re rho away from the critical line");
    const double mag = std::abs(r.xi_prime);
    if (!(mag > 0.0) || !is_finite(r.xi_prime))
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": degenerate xi_prime");
    if (std::abs(r.xi_prime.real()) > 1e-8 * mag)
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": xi_prime not purely imaginary");
    if (!(r.period > 0.0) ||
        std::abs(r.period - kTwoPi / mag) > 1e-12 * r.period)
      throw DomainError("catalogue record " + std::to_string(i + 1) +
                        ": period inconsistent with xi_prime");
  }
}

}  // namespace

ZeroCatalogue::ZeroCatalogue(std::vector<ZeroRecord> records, double tau_max,
                             double tolerance)
    : records_(std::move(records)), tau_max_(tau_max), tolerance_(tolerance) {
  validate_record_sequence(records_, tolerance_);
}

const ZeroRecord& ZeroCatalogue::record(int n) const {
  if (n < 1 || n > size())
    throw DomainError("catalogue record index " + std::to_string(n) +
                      " out of range [1," + std::to_string(size()) + "]");
  return records_[n - 1];
}

int ZeroCatalogue::count_below(double t) const {
  int count = 0;
  for (const auto& r : records_)
    if (r.rho.imag() <= t) ++count;
  return count;
}

void ZeroCatalogue::require_pairs(int m) const {
  if (m > size())
    throw DomainError("truncation m = " + std::to_string(m) +
                      " exceeds catalogue size " + std::to_string(size()));
}

double hardy_xi_real(double tau) {
  const Complex v = specfun::xi(Complex(0.5, tau));
  if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v)))
    throw Error("xi not real on the critical line at tau = " +
                std::to_string(tau));
  return v.real();
}

double hardy_xi_real_derivative(double tau) {
  // d/dtau xi(1/2 + i tau) = i xi'; the value is real, so the derivative
  // is -Im xi'.
  return -specfun::xi_jet(Complex(0.5, tau)).f1.imag();
}

double smooth_zero_count(double tau) {
  const double x = tau / kTwoPi;
  return x * std::log(x / 2.718281828459045235360287471352663) + 0.875;
}

ZeroCatalogue locate_zeros(double tau_max, double tol) {
  if (!(tau_max >= 0.0) || tau_max > kTauMaxLimit)
    throw DomainError("locate_zeros: tau_max must lie in [0, 200]");
  if (!(tol >= 1e-12))
    throw DomainError("locate_zeros: tol must be >= 1e-12");

  std::vector<ZeroRecord> records;
  const int steps = int(std::ceil(tau_max / kScanStep));
  double prev_tau = 0.0;
  double prev_val = tau_max > 0.0 ? hardy_xi_real(0.0) : 0.0;
  for (int i = 1; i <= steps; ++i) {
    const double tau = std::min(i * kScanStep, tau_max);
    const double val = hardy_xi_real(tau);
    if (prev_val * val < 0.0) {
      // Bisection narrows the bracket, Newton polishes.
      double lo = prev_tau, hi = tau, flo = prev_val;
      for (int it = 0; it < 18; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = hardy_xi_real(mid);
        if (flo * fmid <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fmid;
        }
      }
      double root = 0.5 * (lo + hi);
      bool converged = false;
      for (int it = 0; it < 50; ++it) {
        const double f = hardy_xi_real(root);
        const double fp = hardy_xi_real_derivative(root);
        if (fp == 0.0) break;
        const double step = f / fp;
        root -= step;
        if (std::abs(step) <= 1e-13 * (1.0 + std::abs(root))) {
          converged = true;
          break;
        }
      }
      if (!converged || std::abs(hardy_xi_real(root)) > tol)
        throw ConvergenceError(
            "locate_zeros: Newton refinement failed near tau = " +
            std::to_string(0.5 * (lo + hi)));
      const Complex rho(0.5, root);
      const Complex xi_prime = specfun::xi_derivative(rho, 1);
      ZeroRecord rec;
      rec.index = int(records.size()) + 1;
      rec.rho = rho;
      rec.xi_prime = xi_prime;
      rec.period = kTwoPi / std::abs(xi_prime);
      records.push_back(rec);
    }
    prev_tau = tau;
    prev_val = val;
  }
  return ZeroCatalogue(std::move(records), tau_max, tol);
}

void save_catalogue(const ZeroCatalogue& catalogue,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "{\"tau_max\":" << fmt17(catalogue.tau_max())
      << ",\"tolerance\":" << fmt17(catalogue.tolerance())
      << ",\"count\":" << catalogue.size() << "}\n";
  for (const auto& r : catalogue.records()) {
    out << "{\"index\":" << r.index << ",\"re\":" << fmt17(r.rho.real())
        << ",\"im\":" << fmt17(r.rho.imag())
        << ",\"xi_prime_re\":" << fmt17(r.xi_prime.real())
        << ",\"xi_prime_im\":" << fmt17(r.xi_prime.imag())
        << ",\"period\":" << fmt17(r.period) << "}\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ZeroCatalogue load_catalogue(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  long line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw FormatError("empty catalogue file", 1);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad header: ") + e.what(), line_no);
  }
  if (!header.contains("tau_max") || !header.contains("tolerance") ||
      !header.contains("count"))
    throw FormatError("header must carry tau_max, tolerance, count", line_no);
  const double tau_max = header["tau_max"].get<double>();
  const double tolerance = header["tolerance"].get<double>();
  const long count = header["count"].get<long>();

  std::vector<ZeroRecord> records;
  double prev_im = 0.0;
  while (next_line()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad record: ") + e.what(), line_no);
    }
    for (const char* key :
         {"index", "re", "im", "xi_prime_re", "xi_prime_im", "period"})
      if (!j.contains(key))
        throw FormatError(std::string("missing field: ") + key, line_no);
    ZeroRecord r;
    r.index = j["index"].get<int>();
    r.rho = Complex(j["re"].get<double>(), j["im"].get<double>());
    r.xi_prime =
        Complex(j["xi_prime_re"].get<double>(), j["xi_prime_im"].get<double>());
    r.period = j["period"].get<double>();

    if (r.index != int(records.size()) + 1)
      throw FormatError("record index out of sequence", line_no);
    if (!records.empty() && r.rho.imag() - prev_im <= kMinGap)
      throw FormatError("records not strictly increasing in Im rho", line_no);
    prev_im = r.rho.imag();
    if (std::abs(r.rho.real() - 0.5) > std::max(1e-6, tolerance))
      throw FormatError("Re rho away from the critical line", line_no);
    const double mag = std::abs(r.xi_prime);
    if (!(mag > 0.0) || std::abs(r.xi_prime.real()) > 1e-8 * mag)
      throw FormatError("xi_prime must be (purely imaginary) nonzero",
                        line_no);
    if (!(r.period > 0.0) ||
        std::abs(r.period - kTwoPi / mag) > 1e-12 * r.period)
      throw FormatError("period inconsistent with xi_prime", line_no);
    records.push_back(r);
  }
  if (long(records.size()) != count)
    throw FormatError("header count " + std::to_string(count) +
                          " does not match " +
                          std::to_string(records.size()) + " records",
                      line_no);
  return ZeroCatalogue(std::move(records), tau_max, tolerance);
}

}  // namespace xiflow::zeros
