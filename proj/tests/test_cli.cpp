#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(CPR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::path(CPR_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("cli gen is reproducible") {
  fs::path a = scratch("gen_a"), b = scratch("gen_b");
  REQUIRE(run("--seed 7 --out " + a.string() + " gen --n 20 --k 3 --m 50") == 0);
  REQUIRE(run("--seed 7 --out " + b.string() + " gen --n 20 --k 3 --m 50") == 0);
  for (const char* f : {"signal.json", "ensemble.json", "measurements.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  auto sig = nlohmann::json::parse(slurp(a / "signal.json"));
  CHECK(sig["support"].size() == 3);
  CHECK(nlohmann::json::parse(slurp(a / "measurements.json")).size() == 50);
}

TEST_CASE("cli recover writes records and dedupes lambdas") {
  fs::path d = scratch("recover");
  REQUIRE(run("--seed 3 --out " + d.string() + " gen --n 12 --k 1 --m 40") == 0);
  CHECK(run("--out " + d.string() + " recover --input " + d.string() + " --lambdas 3,3") == 0);
  std::string csv = slurp(d / "records.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 2);
  CHECK(csv.find("schema_version") == 0);
  CHECK(run("--out " + d.string() + " recover --input " + d.string() + " --lambdas -1") == 2);
  CHECK(run("--out " + d.string() + " recover --input " + d.string() + "/missing") == 2);
}

TEST_CASE("cli exit codes") {
  fs::path d = scratch("codes");
  CHECK(run("") == 2);
  CHECK(run("--out " + d.string() + " gen --n 10 --k 2 --m 0") == 2);
  CHECK(run("--out " + d.string() + " gen --n 10 --k 11 --m 5") == 2);
  CHECK(run("--json --csv bound --k 4 --n 64") == 2);
  CHECK(run("--out " + d.string() +
            " phase-diagram --n 10 --k-grid 1 --m-grid 10 --trials 0") == 2);
  CHECK(run("--out " + d.string() +
            " phase-diagram --n 10 --k-grid 1 --m-grid 10 --trials 1 --budget 1") == 3);
  REQUIRE(run("--out " + d.string() + " gen --n 64 --k 3 --m 5") == 0);
  CHECK(run("--out " + d.string() + " certify --input " + d.string()) == 3);
}

TEST_CASE("cli certify writes a report with three flags") {
  fs::path d = scratch("certify");
  REQUIRE(run("--seed 2 --out " + d.string() + " gen --n 32 --k 2 --m 320") == 0);
  REQUIRE(run("--out " + d.string() + " certify --input " + d.string()) == 0);
  auto rep = nlohmann::json::parse(slurp(d / "certificate.json"));
  CHECK(rep["passed"].size() == 3);
  CHECK(rep["groups"] == 9);
}

TEST_CASE("cli bound and verify-lemmas") {
  fs::path d = scratch("bound");
  REQUIRE(run("--out " + d.string() + " bound --k 8 --n 1024") == 0);
  auto b = nlohmann::json::parse(slurp(d / "bound.json"));
  CHECK(b["m_lower"].get<double>() == doctest::Approx(6.66e-4).epsilon(1e-3));

  fs::path cfg = d / "suite.json";
  std::ofstream(cfg) << R"({"sandwich_trials": 2, "lowrank_trials": 2, "l1_trials": 2,
    "moment_trials": 1, "moment_m": 200, "chi2_samples": 1000, "e0_trials": 50})";
  fs::path a = d / "a", c = d / "c";
  REQUIRE(run("--out " + a.string() + " verify-lemmas --config " + cfg.string()) == 0);
  REQUIRE(run("--out " + c.string() + " verify-lemmas --config " + cfg.string()) == 0);
  auto strip = [](std::string s) {
    std::string out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
      auto p = line.find(',');
      auto q = line.find(',', p + 1);
      out += line.substr(0, p + 1) + line.substr(q) + "\n";
    }
    return out;
  };
  std::string ra = slurp(a / "lemmas.csv"), rc = slurp(c / "lemmas.csv");
  CHECK(strip(ra) == strip(rc));
  std::size_t lines = 0;
  for (char ch : ra) lines += ch == '\n';
  CHECK(lines == 7);
}
