#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcd/cli.hpp"
#include "mcd/table_io.hpp"

using namespace mcd;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSimConfig = R"(command = simulate
seed = 4242

[model]
family = gaussian

[estimators]
tags = Lik, NED

[simulation]
n = 31
replications = 6
true_beta = 1, 1, 1, 1
true_log_sigma = 0

[bootstrap]
B = 0
)";

}  // namespace

TEST_CASE("ini parsing: sections, lists, comments, errors") {
  const IniMap ini = IniMap::parse("a = 1\n# comment\n[s]\nkey = x, y , z\nnum = 2.5\n");
  CHECK(ini.get("a") == "1");
  CHECK(ini.get_list("s.key").size() == 3);
  CHECK(ini.get_list("s.key")[1] == "y");
  CHECK(ini.get_double("s.num", 0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(IniMap::parse("nonsense line\n"), Error);
}

TEST_CASE("config requires a seed and known fields") {
  CHECK_THROWS_AS(parse_config_text("command = simulate\n[estimators]\ntags = Lik\n"), Error);
  CHECK_THROWS_AS(parse_config_text("command = dance\nseed = 1\n[estimators]\ntags = Lik\n"), Error);
  const RunConfig ok = parse_config_text(kSimConfig);
  CHECK(ok.command == "simulate");
  CHECK(ok.seed == 4242);
  CHECK(ok.estimators.size() == 2);
}

TEST_CASE("fmt6 output parses back losslessly at six significant digits") {
  for (double v : {1.0 / 3.0, 56.2512345, -0.000123456789, 1234567.0, 0.96}) {
    const std::string s = fmt6(v);
    const double back = std::stod(s);
    CHECK(std::abs(back - v) <= 5e-7 * std::max(1.0, std::abs(v)));
  }
}

TEST_CASE("simulate smoke run emits all files and reruns byte-identically from its manifest") {
  RunConfig cfg = parse_config_text(kSimConfig);
  cfg.out_dir = "build/test_out/sim1";
  std::filesystem::remove_all(cfg.out_dir);
  CHECK(run_command(cfg) == 0);
  const std::string csv1 = slurp(cfg.out_dir + "/summary.csv");
  CHECK(!csv1.empty());
  CHECK(slurp(cfg.out_dir + "/summary.md").find("| Lik |") != std::string::npos);

  // round-trip: reload the manifest, rerun into a fresh directory
  RunConfig again = load_config(cfg.out_dir + "/manifest.json");
  again.out_dir = "build/test_out/sim2";
  std::filesystem::remove_all(again.out_dir);
  CHECK(run_command(again) == 0);
  CHECK(slurp(again.out_dir + "/summary.csv") == csv1);
}

TEST_CASE("csv ingestion validates schema and types") {
  const std::string dir = "build/test_out";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/toy.csv");
    f << "a,b,y\n1.0,2.0,3.0\n2.0,1.0,4.0\n";
  }
  RunConfig cfg;
  cfg.command = "fit";
  cfg.data_file = dir + "/toy.csv";
  cfg.response = "y";
  cfg.covariates = {"a", "b"};
  const Dataset ds = load_dataset(cfg);
  CHECK(ds.n() == 2);
  CHECK(ds.dx() == 2);
  CHECK(ds.y_cont(1, 0) == doctest::Approx(4.0));

  cfg.response = "missing";
  CHECK_THROWS_AS(load_dataset(cfg), Error);
  {
    std::ofstream f(dir + "/bad.csv");
    f << "a,b,y\n1.0,oops,3.0\n";
  }
  cfg.response = "y";
  cfg.data_file = dir + "/bad.csv";
  CHECK_THROWS_AS(load_dataset(cfg), Error);
}

TEST_CASE("fit on a tiny exact-fit csv floors sigma and zeroes the residual bootstrap sd") {
  const std::string dir = "build/test_out/fit_toy";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/line.csv");
    f << "x,y\n";
    for (int i = 0; i < 8; ++i) f << 0.1 * i << "," << 2.0 + 3.0 * (0.1 * i) << "\n";
  }
  std::ostringstream cfgtext;
  cfgtext << "command = fit\nseed = 7\nout = " << dir << "\n[data]\nfile = " << dir
          << "/line.csv\nresponse = y\ncovariates = x\n[model]\nfamily = gaussian\n"
          << "[estimators]\ntags = Lik\n[bootstrap]\nB = 20\n";
  const RunConfig cfg = parse_config_text(cfgtext.str());
  CHECK(run_command(cfg) == 0);
  const CsvTable t = read_csv(dir + "/estimates.csv");
  REQUIRE(t.rows.size() == 3);  // log_sigma, beta0, beta1
  // row order: log_sigma first for the gaussian family
  CHECK(t.rows[0][1] == "log_sigma");
  CHECK(std::stod(t.rows[0][2]) == doctest::Approx(std::log(1e-8)));
  CHECK(std::stod(t.rows[1][2]) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::stod(t.rows[2][2]) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::stod(t.rows[1][4]) == doctest::Approx(0.0));  // bootstrap sd
}

TEST_CASE("exit codes: config error 2, data error 3") {
  RunConfig cfg = parse_config_text(kSimConfig);
  cfg.command = "breakdown";  // missing z grid -> config error
  cfg.out_dir = "build/test_out/err";
  CHECK(run_command(cfg) == 2);

  RunConfig fit = parse_config_text(
      "command = fit\nseed = 1\n[data]\nfile = /nonexistent.csv\nresponse = y\n"
      "covariates = x\n[estimators]\ntags = Lik\n");
  fit.out_dir = "build/test_out/err2";
  CHECK(run_command(fit) == 3);
}

TEST_CASE("breakdown command writes a complete long-format curve table") {
  std::ostringstream cfgtext;
  cfgtext << "command = breakdown\nseed = 11\n[model]\nfamily = gaussian\n"
          << "[estimators]\ntags = Lik, NED\n[simulation]\nn = 31\nreplications = 2\n"
          << "true_beta = 1, 1, 1, 1\n[contamination]\nscenario = 1\nk = 3\nz_grid = 3, 5\n";
  RunConfig cfg = parse_config_text(cfgtext.str());
  cfg.out_dir = "build/test_out/bd";
  std::filesystem::remove_all(cfg.out_dir);
  CHECK(run_command(cfg) == 0);
  const CsvTable t = read_csv(cfg.out_dir + "/curves.csv");
  // 2 grid points x 2 estimators x 5 parameters
  CHECK(t.rows.size() == 2 * 2 * 5);
  CHECK(t.header == std::vector<std::string>{"z", "estimator", "parameter", "mean"});
}
