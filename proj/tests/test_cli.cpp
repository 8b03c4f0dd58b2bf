// End-to-end checks of the CLI binary; driven through a shell so exit
// codes, stdout, and file outputs are what a scripting user sees. The
// binary path comes from XIFLOW_BIN (set by ctest).

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "xiflow/types.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

const char* binary() { return std::getenv("XIFLOW_BIN"); }

RunResult run(const std::string& args, const std::string& env = "") {
  RunResult result;
  const std::string cmd =
      env + (env.empty() ? "" : " ") + binary() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
    result.out.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double first_number_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  const auto eq = text.find('=', pos);
  REQUIRE(eq != std::string::npos);
  return std::stod(text.substr(eq + 1));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("eval prints values and maps error classes to exit codes") {
  if (!binary()) {
    MESSAGE("XIFLOW_BIN not set; skipping CLI tests");
    return;
  }
  auto r = run("eval --fn xi --s 0+0i");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "0.5+0i\n");

  r = run("eval --fn gamma --s 5+0i");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "24+0i\n");

  r = run("eval --fn zeta --s 1+0i");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("pole at s=1") != std::string::npos);

  r = run("eval --fn zeta --s nonsense");
  CHECK(r.exit_code == 2);

  r = run("eval --fn zeta --s 2+0i --no-such-flag");
  CHECK(r.exit_code == 2);

  r = run("eval --fn gamma --s -3+0i");
  CHECK(r.exit_code == 3);

  const auto out = temp_file("xiflow_cli_eval.txt");
  r = run("eval --fn xi --s 1+0i --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(out) == "0.5+0i\n");
  const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
  CHECK(meta["configuration"]["fn"] == "xi");
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("zeros writes a deterministic catalogue with its sidecar") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_cat.jsonl");
  auto r = run("zeros --tau-max 50 --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("located 10 zeros") != std::string::npos);
  const std::string first = slurp(out);

  // 1 header + 10 records
  CHECK(std::count(first.begin(), first.end(), '\n') == 11);

  r = run("zeros --tau-max 50 --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(out) == first);  // byte-identical rerun

  const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
  CHECK(meta["command"] == "zeros");
  CHECK(meta["configuration"]["tau_max"] == 50.0);
  CHECK(meta["identities"].is_array());

  r = run("zeros --tau-max 5");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("located 0 zeros") != std::string::npos);

  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("hamiltonian flow run reports conservation quality") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_ham.csv");
  auto r = run("flow --kind hamiltonian --q0 0.3+20.2i --p0 1+0.5i "
               "--t-end 10 --out " +
               out.string());
  CHECK(r.exit_code == 0);
  CHECK(first_number_after(r.out, "max relative H drift") <= 1e-8);
  std::ifstream csv(out);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,q_re,q_im,p_re,p_im");
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("newton flow on an imaginary-time ray preserves the modulus") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_newton.csv");
  auto r = run("flow --kind newton --q0 2+0.5i --T 0+3.1416i --out " +
               out.string());
  CHECK(r.exit_code == 0);
  CHECK(first_number_after(r.out, "max | |xi(s)|/|xi(s0)| - 1 |") <= 1e-7);
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("variational flow checks the closed-form flow map") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_var.csv");
  auto r = run("flow --kind variational --q0 0.45+21.3i --p0 1.2+0.3i "
               "--dq0 0.6-0.8i --dp0 -0.3+1.1i --t-end 5 --check-M --out " +
               out.string());
  CHECK(r.exit_code == 0);
  CHECK(first_number_after(r.out, "max flow-map closed-form deviation") <=
        1e-6);
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("newton flow from a separatrix point exits with code 4") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_sep.csv");
  auto r = run("flow --kind newton --q0 0.5+0i --T 1+0i --out " +
               out.string());
  CHECK(r.exit_code == 4);

  r = run("flow --kind newton --q0 2+0.5i --out " + out.string());
  CHECK(r.exit_code == 3);  // newton runs need --T or --path

  r = run("flow --kind newton --q0 2+0.5i --path \"1+0i;1+1i\" --out " +
          out.string());
  CHECK(r.exit_code == 0);
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("periods compares the residue formula with numeric return times") {
  if (!binary()) return;
  const auto cat = temp_file("xiflow_cli_cat172.jsonl");
  auto r = run("zeros --tau-max 30 --out " + cat.string());
  REQUIRE(r.exit_code == 0);

  const auto out = temp_file("xiflow_cli_periods.csv");
  r = run("--catalogue " + cat.string() + " periods --n 3 --out " +
          out.string());
  CHECK(r.exit_code == 0);
  std::ifstream csv(out);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "n,rho_im,period,frequency,period_numeric,rel_gap");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto last_comma = line.rfind(',');
    CHECK(std::stod(line.substr(last_comma + 1)) <= 1e-3);
  }
  CHECK(rows == 3);

  // the environment variable is an equivalent catalogue source
  r = run("periods --n 1", "XIFLOW_CATALOGUE=" + cat.string());
  CHECK(r.exit_code == 0);

  std::filesystem::remove(cat);
  std::filesystem::remove(cat.string() + ".meta.json");
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("spectrum table is exactly linear in k") {
  if (!binary()) return;
  auto r = run("spectrum --n 1 --k 5 --h 1");
  CHECK(r.exit_code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,rho_im,period,frequency,k,E");
  double period = 0.0;
  int k = 0;
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 6);
    period = std::stod(cells[2]);
    CHECK(std::stoi(cells[4]) == k);
    CHECK(std::stod(cells[5]) == double(k) * (1.0 / period));
    ++k;
  }
  CHECK(k == 6);
}

TEST_CASE("portrait grid output and metadata") {
  if (!binary()) return;
  const auto out = temp_file("xiflow_cli_portrait.csv");
  auto r = run("portrait --window -1,2,5,15 --resolution 12,10 --out " +
               out.string());
  CHECK(r.exit_code == 0);
  const std::string body = slurp(out);
  CHECK(std::count(body.begin(), body.end(), '\n') == 121);  // header + 120
  const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
  CHECK(meta["configuration"]["resolution"] == "12,10");

  r = run("portrait --window -1,2,5,15 --resolution 12,10 --out " +
          out.string());
  CHECK(slurp(out) == body);  // deterministic
  std::filesystem::remove(out);
  std::filesystem::remove(out.string() + ".meta.json");
}

TEST_CASE("verify aggregates the identity suites") {
  if (!binary()) return;
  auto r = run("verify --suite functional");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("PASS functional-equation") != std::string::npos);

  r = run("verify --suite elementary-time");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("validated sign: -1") != std::string::npos);
}

}  // TEST_SUITE
