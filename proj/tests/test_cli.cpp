#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "qes/cli.hpp"
#include "qes/csv.hpp"
#include "qes/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = qes::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

qes::csv::Table parse(const std::string& text) {
  std::istringstream in(text);
  return qes::csv::read(in);
}

std::string reemit(const std::string& text) {
  std::ostringstream out;
  qes::csv::write(out, parse(text));
  return out.str();
}

double num(const std::string& cell) { return qes::csv::parse_double(cell); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qes_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("doubles survive format and parse exactly") {
  using qes::csv::format_double;
  using qes::csv::parse_double;
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), qes::InvalidArgument);
  CHECK_THROWS_AS(parse_double(""), qes::InvalidArgument);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint64_t> bits;
  int tested = 0;
  while (tested < 5000) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    ++tested;
    const double back = parse_double(format_double(x));
    CHECK((back == x || (x == 0.0 && back == 0.0)));
  }
}

TEST_CASE("csv tables re-emit byte for byte") {
  qes::csv::Table t{{"a", "b"}, {{"1", "0.25"}, {"-3", "1e-300"}}};
  std::ostringstream out;
  qes::csv::write(out, t);
  CHECK(out.str() == "a,b\n1,0.25\n-3,1e-300\n");
  CHECK(reemit(out.str()) == out.str());
}

TEST_CASE("truncate") {
  SUBCASE("n <= 1") {
    const Result r = run_cli({"truncate", "--l", "0", "--n-max", "1", "--i-max", "3"});
    REQUIRE(r.code == qes::cli::kExitOk);
    const auto t = parse(r.out);
    CHECK(t.header == std::vector<std::string>{"l", "n", "i", "nu", "W"});
    REQUIRE(t.rows.size() == 3);
    bool found = false;
    for (const auto& row : t.rows) {
      if (row[1] == "1" && row[2] == "1") {
        found = true;
        CHECK(row[0] == "0");
        CHECK(num(row[3]) == doctest::Approx(1.6329932).epsilon(1e-7));
        CHECK(num(row[4]) == doctest::Approx(3.3333333).epsilon(1e-7));
      }
    }
    CHECK(found);
    CHECK(reemit(r.out) == r.out);
  }
  SUBCASE("n = 0") {
    const Result r = run_cli({"truncate", "--l", "0", "--n-max", "0", "--i-max", "1"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "l,n,i,nu,W\n0,0,1,0,2\n");
  }
  SUBCASE("full inventory with negative roots") {
    const Result r = run_cli({"truncate", "--l", "0", "--n-max", "22", "--i-max", "3"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    CHECK(t.rows.size() == 66);
    int negative = 0;
    for (const auto& row : t.rows) negative += num(row[3]) < 0.0 ? 1 : 0;
    CHECK(negative > 0);
    CHECK(reemit(r.out) == r.out);
  }
  SUBCASE("json") {
    const Result r = run_cli({"truncate", "--n-max", "1", "--format", "json"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.size() == 3);
    CHECK(j[0]["n"] == 0);
    CHECK(j[0]["W"].get<double>() == 2.0);
  }
  SUBCASE("out file") {
    const fs::path dir = scratch_dir("truncate");
    const Result r = run_cli({"truncate", "--n-max", "2", "--out", (dir / "t.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    CHECK(parse(slurp(dir / "t.csv")).rows.size() == 6);
  }
  SUBCASE("bad values") {
    CHECK(run_cli({"truncate", "--n-max", "-1"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"truncate", "--i-max", "0"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"truncate", "--format", "xml"}).code == qes::cli::kExitUsage);
  }
}

TEST_CASE("spectrum") {
  SUBCASE("oscillator") {
    const Result r = run_cli({"spectrum", "--l", "0", "--branches", "3", "--nu", "0"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    CHECK(t.header == std::vector<std::string>{"l", "j", "nu", "W"});
    REQUIRE(t.rows.size() == 3);
    for (int j = 0; j < 3; ++j) {
      CHECK(t.rows[static_cast<std::size_t>(j)][1] == std::to_string(j));
      CHECK(std::fabs(num(t.rows[static_cast<std::size_t>(j)][3]) - (2.0 + 4.0 * j)) <= 1e-7);
    }
  }
  SUBCASE("l = 1") {
    const Result r = run_cli({"spectrum", "--l", "1", "--branches", "1", "--nu", "0"});
    REQUIRE(r.code == 0);
    CHECK(std::fabs(num(parse(r.out).rows.at(0)[3]) - 4.0) <= 1e-7);
  }
  SUBCASE("n = 1 root") {
    const Result r = run_cli({"spectrum", "--l", "0", "--branches", "1", "--nu", "1.6329932"});
    REQUIRE(r.code == 0);
    CHECK(num(parse(r.out).rows.at(0)[3]) == doctest::Approx(3.3333333).epsilon(1e-7));
  }
  SUBCASE("range") {
    const Result r = run_cli({"spectrum", "--branches", "2", "--nu-range", "0", "2", "5"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    REQUIRE(t.rows.size() == 10);
    CHECK(num(t.rows[4][2]) == 2.0);
    CHECK(reemit(r.out) == r.out);
  }
  SUBCASE("bad range") {
    CHECK(run_cli({"spectrum", "--nu-range", "0", "2", "2.5"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"spectrum", "--branches", "0"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"spectrum", "--grid-points", "10"}).code == qes::cli::kExitUsage);
  }
}

TEST_CASE("verify") {
  SUBCASE("match") {
    const Result r = run_cli({"verify", "--match", "--l", "0", "--n-max", "8"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL ") == std::string::npos);
    CHECK(r.out.find("verify: PASS") != std::string::npos);
  }
  SUBCASE("hft at the Gaussian ground state") {
    const Result r = run_cli({"verify", "--hft", "--l", "0", "--nu", "0", "--branch", "0", "--format", "json"});
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    const json& c = j["suites"]["hft"]["checks"][0];
    CHECK(c["dW_numeric"].get<double>() == doctest::Approx(0.8862).epsilon(1e-4));
    CHECK(c["r_expectation"].get<double>() == doctest::Approx(0.8862).epsilon(1e-4));
    CHECK(j["passed"] == true);
  }
  SUBCASE("residual") {
    const Result r = run_cli({"verify", "--residual", "--n", "1", "--i", "1", "--l", "0"});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS residual  n=1 i=1 l=0") != std::string::npos);
  }
  SUBCASE("failures identify the point and exit 1") {
    const Result r = run_cli({"verify", "--residual", "--n", "2", "--l", "0", "--residual-tol", "1e-300"});
    CHECK(r.code == qes::cli::kExitFailure);
    CHECK(r.out.find("FAIL residual  n=2 i=1 l=0 nu=") != std::string::npos);
    CHECK(r.out.find("verify: FAIL") != std::string::npos);
  }
  SUBCASE("parity") {
    const Result r = run_cli({"verify", "--parity", "--n-max", "22"});
    CHECK(r.code == 0);
    CHECK(r.out.find("parity: 69/69 passed") != std::string::npos);
  }
  SUBCASE("usage") {
    CHECK(run_cli({"verify"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"verify", "--bogus"}).code == qes::cli::kExitUsage);
    CHECK(run_cli({"verify", "--residual", "--n", "1", "--i", "9"}).code == qes::cli::kExitFailure);
  }
}

TEST_CASE("top-level usage") {
  CHECK(run_cli({}).code == qes::cli::kExitUsage);
  CHECK(run_cli({"nonsense"}).code == qes::cli::kExitUsage);
  const Result help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("truncate") != std::string::npos);
}

TEST_CASE("config file") {
  const fs::path dir = scratch_dir("config");
  const fs::path cfg = dir / "run.json";
  {
    std::ofstream f(cfg);
    f << R"({"l": 0, "truncate": {"n-max": 1, "i-max": 3}, "spectrum": {"nu": [0, 1], "branches": 2}})";
  }
  SUBCASE("values from the file") {
    const Result a = run_cli({"truncate", "--config", cfg.string()});
    const Result b = run_cli({"truncate", "--l", "0", "--n-max", "1", "--i-max", "3"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const Result s = run_cli({"--config", cfg.string(), "spectrum"});
    REQUIRE(s.code == 0);
    CHECK(parse(s.out).rows.size() == 4);
  }
  SUBCASE("flags override the file") {
    const Result r = run_cli({"truncate", "--config", cfg.string(), "--n-max", "0"});
    REQUIRE(r.code == 0);
    CHECK(parse(r.out).rows.size() == 1);
  }
  SUBCASE("bad files") {
    CHECK(run_cli({"truncate", "--config", (dir / "missing.json").string()}).code == qes::cli::kExitUsage);
    {
      std::ofstream f(dir / "broken.json");
      f << "{not json";
    }
    CHECK(run_cli({"truncate", "--config", (dir / "broken.json").string()}).code == qes::cli::kExitUsage);
  }
  SUBCASE("expansion") {
    const auto args = qes::cli::expand_config({"truncate", "--config", cfg.string(), "--l", "2"});
    const std::vector<std::string> expected{"truncate", "--i-max", "3", "--n-max", "1", "--l", "2"};
    CHECK(args == expected);
  }
}

// Generated once; doctest re-enters the test case for every subcase.
const fs::path& figure_dir() {
  static const fs::path dir = [] {
    const fs::path d = scratch_dir("figure");
    const Result r = run_cli({"figure", "--out-dir", d.string(), "--samples", "61"});
    if (r.code != 0) throw std::runtime_error("figure failed: " + r.err);
    return d;
  }();
  return dir;
}

TEST_CASE("figure dataset") {
  const fs::path& dir = figure_dir();
  for (const char* name : {"truncation_points.csv", "branch_curves.csv", "parabola.csv", "plot_figure.gp"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto points = parse(slurp(dir / "truncation_points.csv"));
  const auto curves = parse(slurp(dir / "branch_curves.csv"));
  const auto parabola = parse(slurp(dir / "parabola.csv"));
  CHECK(points.header == std::vector<std::string>{"l", "n", "i", "nu", "W"});
  CHECK(curves.header == std::vector<std::string>{"l", "j", "nu", "W"});
  CHECK(parabola.header == std::vector<std::string>{"kind", "nu", "W"});

  // Every point has nu >= 0 and the inventory is n <= 22, i <= min(n+1, 3) among non-negative roots.
  std::map<int, int> per_n;
  for (const auto& row : points.rows) {
    CHECK(num(row[3]) >= 0.0);
    per_n[std::stoi(row[1])] += 1;
  }
  CHECK(per_n.size() == 23);
  CHECK(per_n[0] == 1);
  CHECK(per_n[10] == 3);
  CHECK(per_n[22] == 3);

  // Linear interpolation in a sampled curve.
  const auto interpolate = [](const std::vector<std::pair<double, double>>& xy, double x) {
    for (std::size_t k = 0; k + 1 < xy.size(); ++k) {
      if (xy[k].first <= x && x <= xy[k + 1].first) {
        const double t = (x - xy[k].first) / (xy[k + 1].first - xy[k].first);
        return xy[k].second + t * (xy[k + 1].second - xy[k].second);
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  std::vector<std::pair<double, double>> parab;
  for (const auto& row : parabola.rows) {
    CHECK(row[0] == "parabola_n10");
    parab.emplace_back(num(row[1]), num(row[2]));
  }
  std::map<int, std::vector<std::pair<double, double>>> branch;
  for (const auto& row : curves.rows) branch[std::stoi(row[1])].emplace_back(num(row[2]), num(row[3]));
  REQUIRE(branch.size() == 3);

  SUBCASE("n = 10 points lie on the parabola") {
    int count = 0;
    for (const auto& row : points.rows) {
      if (row[1] != "10") continue;
      ++count;
      CHECK(std::fabs(interpolate(parab, num(row[3])) - num(row[4])) <= 1e-9);
    }
    CHECK(count == 3);
  }
  SUBCASE("points lie on branch i-1") {
    for (const auto& row : points.rows) {
      const int i = std::stoi(row[2]);
      const double w = interpolate(branch[i - 1], num(row[3]));
      INFO("n=" << row[1] << " i=" << i << " nu=" << row[3]);
      CHECK(std::fabs(w - num(row[4])) <= 1e-6);
    }
  }
  SUBCASE("branches increase along nu and span [0, nu_{22,1}]") {
    double nu_hi = 0.0;
    for (const auto& row : points.rows) nu_hi = std::max(nu_hi, num(row[3]));
    for (const auto& [j, xy] : branch) {
      CHECK(xy.front().first == 0.0);
      CHECK(xy.back().first == nu_hi);
      for (std::size_t k = 1; k < xy.size(); ++k) {
        CHECK(xy[k].first > xy[k - 1].first);
        CHECK(xy[k].second > xy[k - 1].second);
      }
    }
  }
  SUBCASE("files re-emit byte for byte and are deterministic") {
    for (const char* name : {"truncation_points.csv", "branch_curves.csv", "parabola.csv"}) {
      const std::string text = slurp(dir / name);
      CHECK(reemit(text) == text);
    }
    const fs::path again = scratch_dir("figure_again");
    REQUIRE(run_cli({"figure", "--out-dir", again.string(), "--samples", "61"}).code == 0);
    for (const char* name : {"truncation_points.csv", "branch_curves.csv", "parabola.csv", "plot_figure.gp"}) {
      CHECK(slurp(dir / name) == slurp(again / name));
    }
  }
}

TEST_CASE("fit") {
  SUBCASE("branch 0 coefficients") {
    const Result r = run_cli({"fit", "--l", "0", "--branch", "0", "--n-max", "22", "--format", "json"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["intercept"].get<double>() == 2.0);
    CHECK(j["b1"].get<double>() == doctest::Approx(0.85).epsilon(0.05));
    CHECK(j["b2"].get<double>() == doctest::Approx(-0.03).epsilon(0.1));
    CHECK(j["b3"].get<double>() == doctest::Approx(0.0009).epsilon(0.15));
    CHECK(j["reference_max_deviation"]["value"].get<double>() <= 0.05);
  }
  SUBCASE("branch 1 intercept is exactly 6") {
    const Result r = run_cli({"fit", "--l", "0", "--branch", "1", "--n-max", "22"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("W_1,0(nu) = 6 + ", 0) == 0);
  }
  SUBCASE("too few points") {
    const Result r = run_cli({"fit", "--l", "0", "--branch", "0", "--n-max", "2"});
    CHECK(r.code == qes::cli::kExitFailure);
    CHECK(r.err.find("error:") != std::string::npos);
  }
}

TEST_CASE("energy") {
  SUBCASE("W = 2 at theta = 2") {
    const Result r = run_cli({"energy", "--W", "2", "--theta", "2", "--varpi", "0", "--l", "0"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "W,E\n2,1\n");
  }
  SUBCASE("degenerate alpha and mass") {
    const Result a = run_cli({"energy", "--W", "2", "--theta", "1", "--varpi", "-0.25"});
    CHECK(a.code == qes::cli::kExitFailure);
    CHECK(a.err.find("error:") != std::string::npos);
    CHECK(run_cli({"energy", "--m", "0", "--a", "1"}).code == qes::cli::kExitFailure);
  }
  SUBCASE("theta sweep is smooth") {
    const Result r = run_cli({"energy", "--a", "0.5", "--theta-range", "0.5", "3", "26"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    CHECK(t.header == std::vector<std::string>{"theta", "nu", "j", "W", "E"});
    REQUIRE(t.rows.size() == 26);
    std::vector<double> E;
    for (const auto& row : t.rows) {
      E.push_back(num(row[4]));
      CHECK(std::isfinite(E.back()));
    }
    // Second differences stay far below first differences: no jumps or gaps.
    double max_first = 0.0, max_second = 0.0;
    for (std::size_t k = 1; k < E.size(); ++k) max_first = std::max(max_first, std::fabs(E[k] - E[k - 1]));
    for (std::size_t k = 2; k < E.size(); ++k) {
      max_second = std::max(max_second, std::fabs(E[k] - 2 * E[k - 1] + E[k - 2]));
    }
    CHECK(max_second < 0.2 * max_first);
  }
}
