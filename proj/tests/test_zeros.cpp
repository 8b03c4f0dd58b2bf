#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "xiflow/specfun.hpp"
#include "xiflow/zeros.hpp"

using namespace xiflow;
using oracles::catalogue_50;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("zeros") {

TEST_CASE("hardy values and symmetry") {
  // -(1/8) Gamma(1/4) pi^{-1/4} zeta(1/2) from independent constants
  const double want = -0.125 * 3.62560990822190831193068515586767200 *
                      std::pow(kPi, -0.25) *
                      (-1.46035450880958681288949915251529801);
  CHECK(std::abs(zeros::hardy_xi_real(0.0) - want) < 1e-12);
  CHECK(zeros::hardy_xi_real(14.0) * zeros::hardy_xi_real(14.2) < 0.0);
  for (double tau : {3.7, 14.1, 29.95}) {
    const double a = zeros::hardy_xi_real(tau);
    const double b = zeros::hardy_xi_real(-tau);
    CHECK(std::abs(a - b) <= 1e-15 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("locate_zeros finds the first zero to full accuracy") {
  const auto cat = zeros::locate_zeros(20.0, 1e-12);
  REQUIRE(cat.size() == 1);
  const double oracle = oracles::bisect_hardy_zero(14.0, 14.2, 1e-12);
  CHECK(std::abs(cat.record(1).rho.imag() - oracle) <= 1e-8);
  CHECK(std::abs(cat.record(1).rho.imag() - 14.134725141734693) <= 1e-9);
  CHECK(cat.record(1).rho.real() == 0.5);
  CHECK(std::abs(specfun::xi(cat.record(1).rho)) <= 1e-12);
}

TEST_CASE("zero counts at desk heights") {
  CHECK(catalogue_50().size() == 10);
  CHECK(zeros::locate_zeros(5.0, 1e-12).size() == 0);
  for (double T : {30.0, 40.0, 50.0}) {
    const double est = zeros::smooth_zero_count(T);
    CHECK(std::abs(catalogue_50().count_below(T) - est) <= 1.0);
  }
}

TEST_CASE("locate_zeros domain checks") {
  CHECK_THROWS_AS(zeros::locate_zeros(500.0, 1e-12), DomainError);
  CHECK_THROWS_AS(zeros::locate_zeros(-1.0, 1e-12), DomainError);
  CHECK_THROWS_AS(zeros::locate_zeros(20.0, 1e-13), DomainError);
}

TEST_CASE("records carry consistent derived quantities") {
  for (const auto& rec : catalogue_50().records()) {
    CHECK(std::abs(specfun::xi(rec.rho)) <= 1e-10);
    // each zero stays inside half a scan step of its originating bracket
    CHECK(zeros::hardy_xi_real(rec.rho.imag() - 0.025) *
              zeros::hardy_xi_real(rec.rho.imag() + 0.025) <
          0.0);
    CHECK(rec.period > 0.0);
    CHECK(std::isfinite(rec.period));
    CHECK(std::abs(rec.xi_prime.real()) <= 1e-8 * std::abs(rec.xi_prime));
    CHECK(std::abs(rec.xi_prime - specfun::xi_derivative(rec.rho, 1)) <=
          1e-9 * std::abs(rec.xi_prime));
    CHECK(rec.period == kTwoPi / std::abs(rec.xi_prime));
    // the slope of the real restriction is the only surviving component
    const double h = 1e-5;
    const double fd = (zeros::hardy_xi_real(rec.rho.imag() + h) -
                       zeros::hardy_xi_real(rec.rho.imag() - h)) /
                      (2.0 * h);
    CHECK(std::abs(rec.xi_prime - Complex(0.0, -fd)) <=
          1e-6 * std::abs(rec.xi_prime));
  }
}

TEST_CASE("catalogue round trip is exact field for field") {
  const auto& cat = catalogue_50();
  const auto path = temp_file("xiflow_cat_roundtrip.jsonl");
  zeros::save_catalogue(cat, path);
  const auto back = zeros::load_catalogue(path);
  REQUIRE(back.size() == cat.size());
  CHECK(back.tau_max() == cat.tau_max());
  CHECK(back.tolerance() == cat.tolerance());
  for (int n = 1; n <= cat.size(); ++n) {
    CHECK(back.record(n).index == cat.record(n).index);
    CHECK(back.record(n).rho == cat.record(n).rho);
    CHECK(back.record(n).xi_prime == cat.record(n).xi_prime);
    CHECK(back.record(n).period == cat.record(n).period);
  }
  std::filesystem::remove(path);
}

TEST_CASE("empty catalogue round trips; empty file does not") {
  const auto empty_cat = zeros::locate_zeros(5.0, 1e-12);
  const auto path = temp_file("xiflow_cat_empty.jsonl");
  zeros::save_catalogue(empty_cat, path);
  const auto back = zeros::load_catalogue(path);
  CHECK(back.size() == 0);
  CHECK(back.tau_max() == 5.0);

  std::ofstream(path) << "";
  CHECK_THROWS_AS(zeros::load_catalogue(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("shuffled records are rejected with a line number") {
  const auto& cat = catalogue_50();
  const auto good = temp_file("xiflow_cat_good.jsonl");
  zeros::save_catalogue(cat, good);
  std::ifstream in(good);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  in.close();
  REQUIRE(lines.size() == 11);

  const auto bad = temp_file("xiflow_cat_shuffled.jsonl");
  {
    std::ofstream out(bad);
    out << lines[0] << "\n" << lines[2] << "\n" << lines[1] << "\n";
    for (std::size_t i = 3; i < lines.size(); ++i) out << lines[i] << "\n";
  }
  try {
    zeros::load_catalogue(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("malformed records are rejected") {
  const auto path = temp_file("xiflow_cat_bad.jsonl");
  std::ofstream(path)
      << "{\"tau_max\":20,\"tolerance\":1e-12,\"count\":1}\n"
      << "{\"index\":1,\"re\":0.5,\"im\":14.134725141734693}\n";
  CHECK_THROWS_AS(zeros::load_catalogue(path), FormatError);

  std::ofstream(path) << "not json\n";
  CHECK_THROWS_AS(zeros::load_catalogue(path), FormatError);

  std::ofstream(path)
      << "{\"tau_max\":20,\"tolerance\":1e-12,\"count\":2}\n"
      << "{\"index\":1,\"re\":0.5,\"im\":14.134725141734693,"
         "\"xi_prime_re\":0,\"xi_prime_im\":6.283185307179586,"
         "\"period\":1.0}\n";
  CHECK_THROWS_AS(zeros::load_catalogue(path), FormatError);  // count mismatch

  CHECK_THROWS_AS(zeros::load_catalogue(temp_file("no_such_catalogue.jsonl")),
                  IoError);
  std::filesystem::remove(path);
}

TEST_CASE("catalogue record lines keep the documented field order") {
  const auto path = temp_file("xiflow_cat_order.jsonl");
  zeros::save_catalogue(catalogue_50(), path);
  std::ifstream in(path);
  std::string header, record;
  std::getline(in, header);
  std::getline(in, record);
  std::size_t pos = 0;
  for (const char* key : {"\"index\"", "\"re\"", "\"im\"", "\"xi_prime_re\"",
                          "\"xi_prime_im\"", "\"period\""}) {
    const auto at = record.find(key, pos);
    CHECK(at != std::string::npos);
    pos = at;
  }
  std::filesystem::remove(path);
}

TEST_CASE("save_catalogue output is deterministic") {
  const auto a = temp_file("xiflow_cat_a.jsonl");
  const auto b = temp_file("xiflow_cat_b.jsonl");
  zeros::save_catalogue(catalogue_50(), a);
  zeros::save_catalogue(catalogue_50(), b);
  CHECK(slurp(a) == slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

}  // TEST_SUITE
