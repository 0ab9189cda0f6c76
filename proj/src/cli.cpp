#include "qes/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "qes/analysis.hpp"
#include "qes/csv.hpp"
#include "qes/errors.hpp"
#include "qes/frobenius.hpp"
#include "qes/spectrum.hpp"

namespace qes::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string>& subcommand_names() {
  static const std::set<std::string> names{"truncate", "spectrum", "verify", "figure", "fit", "energy"};
  return names;
}

// ---------------------------------------------------------------------------
// Output helpers

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw InvalidArgument("cannot open output file '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

std::string fmt(double x) { return csv::format_double(x); }

std::string fmt_short(double x, int digits = 8) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

csv::Table truncation_table(const std::vector<TruncationSolution>& pts) {
  csv::Table t{{"l", "n", "i", "nu", "W"}, {}};
  for (const auto& p : pts) {
    t.rows.push_back({std::to_string(p.l), std::to_string(p.n), std::to_string(p.i), fmt(p.nu), fmt(p.W)});
  }
  return t;
}

csv::Table curve_table(const std::vector<SpectralCurve>& curves) {
  csv::Table t{{"l", "j", "nu", "W"}, {}};
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      t.rows.push_back({std::to_string(c.l), std::to_string(c.branch), fmt(s.nu), fmt(s.W)});
    }
  }
  return t;
}

json table_to_json(const csv::Table& t) {
  json arr = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      const std::string& cell = row[k];
      if (cell.find_first_not_of("-0123456789") == std::string::npos) {
        obj[t.header[k]] = std::stol(cell);
      } else {
        try {
          obj[t.header[k]] = csv::parse_double(cell);
        } catch (const InvalidArgument&) {
          obj[t.header[k]] = cell;
        }
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

void emit_table(const csv::Table& t, const std::string& format, const std::string& out_path, std::ostream& out) {
  Sink sink(out_path, out);
  if (format == "json") {
    *sink << table_to_json(t).dump(2) << '\n';
  } else {
    csv::write(*sink, t);
  }
}

// ---------------------------------------------------------------------------
// Shared option groups

struct SolverOptions {
  int grid_points = 4000;
  double r_max = 0.0;
  double tol = 1e-8;

  void attach(CLI::App* app) {
    app->add_option("--grid-points", grid_points, "Base grid size of the direct solver")->capture_default_str();
    app->add_option("--r-max", r_max, "Outer radius (0: max(12, |nu|/2 + 12))")->capture_default_str();
    app->add_option("--tol", tol, "Convergence tolerance on W")->capture_default_str();
  }
  SolverConfig config(int levels = 3) const {
    SolverConfig c;
    c.grid_points = grid_points;
    c.r_max = r_max;
    c.convergence_tol = tol;
    c.max_grid_points = std::max(c.max_grid_points, 4 * grid_points);
    c.levels = levels;
    c.retain_eigenfunctions = false;
    c.validate();
    return c;
  }
};

struct OutputOptions {
  std::string format = "csv";
  std::string out;

  void attach(CLI::App* app, std::vector<std::string> formats = {"csv", "json"}) {
    format = formats.front();
    app->add_option("--format", format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
    app->add_option("--out", out, "Output file (default: stdout)");
  }
};

std::vector<double> build_nu_grid(const std::vector<double>& explicit_nu, const std::vector<double>& range) {
  std::vector<double> grid = explicit_nu;
  if (!range.empty()) {
    if (range.size() != 3) throw InvalidArgument("--nu-range takes LO HI COUNT");
    const int count = static_cast<int>(range[2]);
    if (count < 1 || range[2] != count) throw InvalidArgument("--nu-range COUNT must be a positive integer");
    for (int k = 0; k < count; ++k) grid.push_back(count == 1 ? range[0] : range[0] + (range[1] - range[0]) * k / (count - 1));
  }
  if (grid.empty()) grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// ---------------------------------------------------------------------------
// Verification report

struct Check {
  std::string suite;
  std::string label;
  bool passed = false;
  json detail;
};

class Report {
 public:
  void add(Check c) { checks_.push_back(std::move(c)); }
  bool passed() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.passed; });
  }

  void print_text(std::ostream& out) const {
    std::map<std::string, std::pair<int, int>> tally;
    for (const auto& c : checks_) {
      out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(9) << c.suite << ' ' << c.label << '\n';
      auto& t = tally[c.suite];
      t.second += 1;
      t.first += c.passed ? 1 : 0;
    }
    out << "----\n";
    for (const auto& [suite, t] : tally) out << suite << ": " << t.first << "/" << t.second << " passed\n";
    out << (passed() ? "verify: PASS" : "verify: FAIL") << '\n';
  }

  json to_json() const {
    json suites = json::object();
    for (const auto& c : checks_) {
      json& s = suites[c.suite];
      if (s.is_null()) s = {{"passed", true}, {"checks", json::array()}};
      json entry = c.detail;
      entry["label"] = c.label;
      entry["passed"] = c.passed;
      s["checks"].push_back(std::move(entry));
      if (!c.passed) s["passed"] = false;
    }
    return {{"passed", passed()}, {"suites", suites}};
  }

 private:
  std::vector<Check> checks_;
};

std::string point_label(int n, int i, int l, double nu) {
  std::ostringstream s;
  s << "n=" << n << " i=" << i << " l=" << l << " nu=" << fmt_short(nu);
  return s.str();
}

// ---------------------------------------------------------------------------
// Subcommands

struct TruncateCmd {
  int l = 0;
  int n_max = 10;
  int i_max = 3;
  OutputOptions output;

  void attach(CLI::App* app) {
    app->add_option("--l", l, "Rotational quantum number")->capture_default_str();
    app->add_option("--n-max", n_max, "Largest truncation order")->capture_default_str();
    app->add_option("--i-max", i_max, "Largest root index per order")->capture_default_str();
    output.attach(app);
  }

  int run(std::ostream& out, std::ostream& err) const {
    require(n_max >= 0, "--n-max must be non-negative");
    require(i_max >= 1, "--i-max must be at least 1");
    for (int n = 0; n <= n_max; ++n) {
      const TruncationRoots roots = truncation_roots(n, l);
      if (!roots.complete()) {
        err << "warning: c_" << n + 1 << " (l=" << l << ") has " << roots.found_count() << " real roots, expected "
            << roots.expected_count << '\n';
      }
    }
    emit_table(truncation_table(truncation_point_set(n_max, i_max, l)), output.format, output.out, out);
    return kExitOk;
  }
};

struct SpectrumCmd {
  int l = 0;
  int branches = 3;
  std::vector<double> nu;
  std::vector<double> nu_range;
  SolverOptions solver;
  OutputOptions output;

  void attach(CLI::App* app) {
    app->add_option("--l", l, "Rotational quantum number")->capture_default_str();
    app->add_option("--branches", branches, "Number of branches j = 0..branches-1")->capture_default_str();
    app->add_option("--nu", nu, "Coupling values")->expected(1, -1);
    app->add_option("--nu-range", nu_range, "Uniform grid: LO HI COUNT")->expected(3);
    solver.attach(app);
    output.attach(app);
  }

  int run(std::ostream& out, std::ostream&) const {
    require(branches >= 1, "--branches must be at least 1");
    const std::vector<double> grid = build_nu_grid(nu, nu_range);
    const auto curves = curve_scan(l, branches, grid, solver.config(branches));
    emit_table(curve_table(curves), output.format, output.out, out);
    return kExitOk;
  }
};

struct VerifyCmd {
  bool hft = false;
  bool match = false;
  bool residual = false;
  bool parity = false;
  bool anti_hft = false;
  bool all = false;
  std::vector<int> ls{0, 1, 2};
  int n_max = 12;
  std::optional<double> nu;
  int branch = 0;
  std::optional<int> n;
  std::optional<int> i;
  double match_tol = 1e-6;
  double hft_tol = 1e-4;
  double residual_tol = 1e-8;
  int hft_samples = 20;
  unsigned seed = 20170901u;
  SolverOptions solver;
  OutputOptions output;

  void attach(CLI::App* app) {
    app->add_flag("--hft", hft, "Slope of each branch against <r>");
    app->add_flag("--match", match, "Truncation points against the direct solver");
    app->add_flag("--residual", residual, "Radial-equation residual of the polynomial solutions");
    app->add_flag("--parity", parity, "Root parity, count and parabola identity");
    app->add_flag("--anti-hft", anti_hft, "Opposite orderings of truncation energies and branches");
    app->add_flag("--all", all, "Every suite");
    app->add_option("--l", ls, "Quantum numbers to cover")->capture_default_str();
    app->add_option("--n-max", n_max, "Largest truncation order")->capture_default_str();
    app->add_option("--nu", nu, "Single nu for --hft (default: random samples)");
    app->add_option("--branch", branch, "Branch for --hft with --nu")->capture_default_str();
    app->add_option("--n", n, "Single order for --residual");
    app->add_option("--i", i, "Single root index for --residual");
    app->add_option("--match-tol", match_tol)->capture_default_str();
    app->add_option("--hft-tol", hft_tol)->capture_default_str();
    app->add_option("--residual-tol", residual_tol)->capture_default_str();
    app->add_option("--hft-samples", hft_samples)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    solver.attach(app);
    output.attach(app, {"text", "json"});
  }

  void run_match(Report& report) const {
    for (int l : ls) {
      const auto pts = truncation_point_set(n_max, 3, l);
      const MatchReport m = match_truncation_to_curves(pts, match_tol, solver.config());
      for (const auto& e : m.entries) {
        std::ostringstream label;
        label << point_label(e.n, e.i, e.l, e.nu) << " W=" << fmt_short(e.W_truncation) << " branch="
              << e.nearest_branch << " (expected " << e.expected_branch() << ") |dW|=" << fmt_short(e.distance, 3);
        report.add({"match", label.str(), m.passed(e),
                    {{"n", e.n}, {"i", e.i}, {"l", e.l}, {"nu", e.nu}, {"W_truncation", e.W_truncation},
                     {"W_branch", e.W_branch}, {"branch", e.nearest_branch}, {"distance", e.distance}}});
      }
    }
  }

  void add_hft(Report& report, int l, double nu_val, int j) const {
    const HftResult h = hft_check({l, nu_val}, j, 1e-4, solver.config(j + 1));
    const bool ok = h.discrepancy <= hft_tol && h.dW_numeric > 0.0 && h.r_expectation > 0.0;
    std::ostringstream label;
    label << "l=" << l << " nu=" << fmt_short(nu_val) << " j=" << j << " dW/dnu=" << fmt_short(h.dW_numeric)
          << " <r>=" << fmt_short(h.r_expectation) << " diff=" << fmt_short(h.discrepancy, 3);
    report.add({"hft", label.str(), ok,
                {{"l", l}, {"nu", nu_val}, {"j", j}, {"dW_numeric", h.dW_numeric}, {"r_expectation", h.r_expectation},
                 {"discrepancy", h.discrepancy}}});
  }

  void run_hft(Report& report) const {
    if (nu) {
      for (int l : ls) add_hft(report, l, *nu, branch);
      return;
    }
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> pick_l(0, static_cast<int>(ls.size()) - 1);
    std::uniform_real_distribution<double> pick_nu(0.0, 8.0);
    std::uniform_int_distribution<int> pick_j(0, 2);
    for (int k = 0; k < hft_samples; ++k) {
      const int l = ls[static_cast<std::size_t>(pick_l(rng))];
      const double v = pick_nu(rng);
      add_hft(report, l, v, pick_j(rng));
    }
  }

  void add_residual(Report& report, const TruncationSolution& s) const {
    double worst = 0.0;
    for (int k = 1; k <= 100; ++k) worst = std::max(worst, relative_ode_residual(s, 0.1 * k));
    std::ostringstream label;
    label << point_label(s.n, s.i, s.l, s.nu) << " max relative residual=" << fmt_short(worst, 3);
    report.add({"residual", label.str(), worst <= residual_tol,
                {{"n", s.n}, {"i", s.i}, {"l", s.l}, {"nu", s.nu}, {"max_relative_residual", worst}}});
  }

  void run_residual(Report& report) const {
    for (int l : ls) {
      if (n) {
        const int order = *n;
        require(order >= 0, "--n must be non-negative");
        const TruncationRoots roots = truncation_roots(order, l);
        if (i) {
          add_residual(report, polynomial_solution(roots, *i));
        } else {
          for (int k = 1; k <= roots.found_count(); ++k) add_residual(report, polynomial_solution(roots, k));
        }
        continue;
      }
      for (int order = 0; order <= n_max; ++order) {
        const TruncationRoots roots = truncation_roots(order, l);
        for (int k = 1; k <= roots.found_count(); ++k) add_residual(report, polynomial_solution(roots, k));
      }
    }
  }

  void run_parity(Report& report) const {
    for (int l : ls) {
      for (int order = 0; order <= n_max; ++order) {
        const TruncationRoots roots = truncation_roots(order, l);
        bool symmetric = true;
        const std::size_t count = roots.nu.size();
        for (std::size_t k = 0; k < count; ++k) {
          if (std::fabs(roots.nu[k] + roots.nu[count - 1 - k]) > 1e-12 * (1.0 + std::fabs(roots.nu[k]))) symmetric = false;
        }
        const bool has_zero = std::any_of(roots.nu.begin(), roots.nu.end(), [](double v) { return v == 0.0; });
        const bool zero_ok = has_zero == ((order + 1) % 2 == 1);
        double parabola = 0.0;
        for (double v : roots.nu) {
          parabola = std::max(parabola, std::fabs(truncation_energy(order, std::abs(l), v) + v * v / 4.0 -
                                                  2.0 * (order + std::abs(l) + 1)));
        }
        std::ostringstream label;
        label << "n=" << order << " l=" << l << " real roots " << roots.found_count() << "/" << roots.expected_count
              << (symmetric ? " symmetric" : " asymmetric") << (has_zero ? " with" : " without") << " zero root";
        report.add({"parity", label.str(), roots.complete() && symmetric && zero_ok && parabola <= 1e-10,
                    {{"n", order}, {"l", l}, {"found", roots.found_count()}, {"expected", roots.expected_count},
                     {"symmetric", symmetric}, {"zero_root", has_zero}, {"parabola_error", parabola}}});
      }
    }
  }

  void run_anti_hft(Report& report) const {
    const int order = std::min(n_max, 10);
    for (int l : ls) {
      const AntiHftReport a = anti_hft_signature(order, l, 3, solver.config());
      std::ostringstream label;
      label << "n=" << order << " l=" << l << " points=" << a.points.size() << " truncation W "
            << (a.truncation_decreasing ? "decreasing" : "NOT decreasing") << " in nu, branches "
            << (a.branches_increasing ? "increasing" : "NOT increasing");
      json pts = json::array();
      for (const auto& p : a.points) {
        pts.push_back({{"i", p.i}, {"nu", p.nu}, {"W_truncation", p.W_truncation}, {"W_branches", p.W_branches},
                       {"matched_slope", p.matched_slope}});
      }
      report.add({"anti-hft", label.str(), a.holds() && a.points.size() >= 2,
                  {{"n", order}, {"l", l}, {"points", pts}}});
    }
  }

  int run(std::ostream& out, std::ostream&) const {
    const bool do_match = all || match;
    const bool do_hft = all || hft;
    const bool do_residual = all || residual;
    const bool do_parity = all || parity;
    const bool do_anti = all || anti_hft;
    require(do_match || do_hft || do_residual || do_parity || do_anti,
            "select at least one of --hft, --match, --residual, --parity, --anti-hft, --all");
    require(n_max >= 0, "--n-max must be non-negative");
    require(!ls.empty(), "--l needs at least one value");
    require(hft_samples >= 1, "--hft-samples must be positive");
    require(branch >= 0, "--branch must be non-negative");

    Report report;
    if (do_parity) run_parity(report);
    if (do_residual) run_residual(report);
    if (do_match) run_match(report);
    if (do_hft) run_hft(report);
    if (do_anti) run_anti_hft(report);

    Sink sink(output.out, out);
    if (output.format == "json") {
      *sink << report.to_json().dump(2) << '\n';
    } else {
      report.print_text(*sink);
    }
    return report.passed() ? kExitOk : kExitFailure;
  }
};

constexpr const char* kPlotScript = R"(# gnuplot script for the truncation points and continuous branches (l = 0)
set datafile separator ','
set terminal pngcairo size 900,650
set output 'figure.png'
set xlabel 'nu'
set ylabel 'W'
set yrange [0:34]
set key top left
plot for [j=0:2] 'branch_curves.csv' using ($2==j ? $3 : NaN):($2==j ? $4 : NaN) every ::1 \
       with lines lw 2 title sprintf('W_{%d,0}(nu)', j), \
     'parabola.csv' using 2:3 every ::1 with lines dt 2 lc rgb 'gray40' title 'W = 22 - nu^2/4', \
     'truncation_points.csv' using 4:5 every ::1 with points pt 7 ps 1.2 lc rgb 'black' title 'truncation points'
)";

struct FigureCmd {
  std::string out_dir = "figure";
  int samples = 241;
  int n_max = 22;
  int i_max = 3;
  SolverOptions solver;

  void attach(CLI::App* app) {
    app->add_option("--out-dir", out_dir, "Directory for the CSV files and plot script")->capture_default_str();
    app->add_option("--samples", samples, "Uniform nu samples along each branch")->capture_default_str();
    app->add_option("--n-max", n_max)->capture_default_str();
    app->add_option("--i-max", i_max)->capture_default_str();
    solver.attach(app);
  }

  int run(std::ostream& out, std::ostream&) const {
    require(samples >= 2, "--samples must be at least 2");
    require(n_max >= 0 && i_max >= 1, "--n-max must be >= 0 and --i-max >= 1");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw InvalidArgument("cannot create output directory '" + out_dir + "': " + ec.message());

    std::vector<TruncationSolution> points;
    for (auto& p : truncation_point_set(n_max, i_max, 0)) {
      if (p.nu >= 0.0) points.push_back(std::move(p));
    }
    const double nu_hi = truncation_roots(n_max, 0).nu.front();

    std::vector<double> grid;
    for (int k = 0; k < samples; ++k) grid.push_back(nu_hi * k / (samples - 1));
    // Include every root so points sit on curve samples exactly.
    for (const auto& p : points) grid.push_back(p.nu);
    std::sort(grid.begin(), grid.end());
    std::vector<double> merged;
    for (double v : grid) {
      if (merged.empty() || v - merged.back() > 1e-12 * (1.0 + v)) merged.push_back(v);
    }

    const int branches = i_max;
    const auto curves = curve_scan(0, branches, merged, solver.config(branches));

    csv::Table parabola{{"kind", "nu", "W"}, {}};
    for (double v : merged) parabola.rows.push_back({"parabola_n10", fmt(v), fmt(truncation_energy(10, 0, v))});

    const auto write_file = [&](const std::string& name, const csv::Table& t) {
      std::ofstream f(fs::path(out_dir) / name);
      if (!f) throw InvalidArgument("cannot write " + name);
      csv::write(f, t);
    };
    write_file("truncation_points.csv", truncation_table(points));
    write_file("branch_curves.csv", curve_table(curves));
    write_file("parabola.csv", parabola);
    {
      std::ofstream f(fs::path(out_dir) / "plot_figure.gp");
      f << kPlotScript;
    }
    out << "wrote " << points.size() << " truncation points, " << branches << " branches x " << merged.size()
        << " nu samples on [0, " << fmt_short(nu_hi) << "] to " << out_dir << '\n';
    return kExitOk;
  }
};

struct FitCmd {
  int l = 0;
  int branch = 0;
  int n_max = 22;
  OutputOptions output;

  void attach(CLI::App* app) {
    app->add_option("--l", l)->capture_default_str();
    app->add_option("--branch", branch)->capture_default_str();
    app->add_option("--n-max", n_max)->capture_default_str();
    output.attach(app, {"text", "json"});
  }

  int run(std::ostream& out, std::ostream&) const {
    require(n_max >= 0, "--n-max must be non-negative");
    require(branch >= 0, "--branch must be non-negative");
    const FitModel fit = fit_branch(l, branch, n_max);
    std::optional<FitDeviation> dev;
    if (reference_cubic(l, branch)) dev = compare_fit_to_reference(fit);

    Sink sink(output.out, out);
    if (output.format == "json") {
      json j = {{"l", fit.l},
                {"branch", fit.branch},
                {"intercept", fit.intercept},
                {"b1", fit.b[0]},
                {"b2", fit.b[1]},
                {"b3", fit.b[2]},
                {"points", fit.point_count},
                {"domain", {fit.domain_lo, fit.domain_hi}},
                {"rms_residual", fit.rms_residual}};
      if (dev) j["reference_max_deviation"] = {{"value", dev->max_abs}, {"at_nu", dev->at_nu}};
      *sink << j.dump(2) << '\n';
    } else {
      auto& o = *sink;
      o << "W_" << fit.branch << "," << fit.l << "(nu) = " << fmt(fit.intercept) << " + " << fmt(fit.b[0])
        << " nu + " << fmt(fit.b[1]) << " nu^2 + " << fmt(fit.b[2]) << " nu^3\n";
      o << "points: " << fit.point_count << "  domain: [" << fmt_short(fit.domain_lo) << ", "
        << fmt_short(fit.domain_hi) << "]\n";
      o << "rms residual: " << fmt_short(fit.rms_residual, 4) << '\n';
      if (dev) {
        o << "max deviation from reference cubic: " << fmt_short(dev->max_abs, 4) << " at nu=" << fmt_short(dev->at_nu, 5)
          << '\n';
      }
    }
    return kExitOk;
  }
};

struct EnergyCmd {
  double m = 1.0;
  double a = 0.0;
  double theta = 1.0;
  double varpi = 0.0;
  int l = 0;
  std::vector<double> W;
  int branches = 1;
  std::vector<double> theta_range;
  SolverOptions solver;
  OutputOptions output;

  void attach(CLI::App* app) {
    app->add_option("--m", m, "Mass")->capture_default_str();
    app->add_option("--a", a, "Scalar-potential strength")->capture_default_str();
    app->add_option("--theta", theta, "Cyclotron frequency")->capture_default_str();
    app->add_option("--varpi", varpi, "Rotating-frame angular velocity")->capture_default_str();
    app->add_option("--l", l)->capture_default_str();
    app->add_option("--W", W, "Reduced eigenvalues to convert (skips the solver)")->expected(1, -1);
    app->add_option("--branches", branches, "Branches to solve when --W is absent")->capture_default_str();
    app->add_option("--theta-range", theta_range, "Sweep theta: LO HI COUNT")->expected(3);
    solver.attach(app);
    output.attach(app);
  }

  int run(std::ostream& out, std::ostream&) const {
    require(branches >= 1, "--branches must be at least 1");
    PhysicalParams p{m, a, theta, varpi, l};
    if (!W.empty()) {
      csv::Table t{{"W", "E"}, {}};
      for (double w : W) t.rows.push_back({fmt(w), fmt(map_W_to_E(w, p))});
      emit_table(t, output.format, output.out, out);
      return kExitOk;
    }
    std::vector<double> thetas{theta};
    if (!theta_range.empty()) {
      const int count = static_cast<int>(theta_range[2]);
      require(count >= 1 && theta_range[2] == count, "--theta-range COUNT must be a positive integer");
      thetas.clear();
      for (int k = 0; k < count; ++k) {
        thetas.push_back(count == 1 ? theta_range[0]
                                    : theta_range[0] + (theta_range[1] - theta_range[0]) * k / (count - 1));
      }
    }
    csv::Table t{{"theta", "nu", "j", "W", "E"}, {}};
    for (double th : thetas) {
      p.theta = th;
      const double nu = map_physical_to_nu(p);
      const Spectrum s = solve_spectrum({l, nu}, solver.config(branches));
      for (const auto& st : s.states) {
        t.rows.push_back({fmt(th), fmt(nu), std::to_string(st.branch), fmt(st.W), fmt(map_W_to_E(st.W, p))});
      }
    }
    emit_table(t, output.format, output.out, out);
    return kExitOk;
  }
};

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

void append_json_value(std::vector<std::string>& tokens, const std::string& flag, const json& v) {
  if (v.is_boolean()) {
    if (v.get<bool>()) tokens.push_back(flag);
    return;
  }
  tokens.push_back(flag);
  const auto scalar = [](const json& x) -> std::string {
    if (x.is_string()) return x.get<std::string>();
    if (x.is_number_integer()) return std::to_string(x.get<long long>());
    if (x.is_number()) return csv::format_double(x.get<double>());
    throw InvalidArgument("unsupported config value: " + x.dump());
  };
  if (v.is_array()) {
    for (const auto& x : v) tokens.push_back(scalar(x));
  } else {
    tokens.push_back(scalar(v));
  }
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file path");
      config_path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config_path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (config_path.empty()) return rest;

  std::ifstream in(config_path);
  if (!in) throw InvalidArgument("cannot read config file '" + config_path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw InvalidArgument("config file '" + config_path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw InvalidArgument("config file must hold a JSON object");

  const auto sub = std::find_if(rest.begin(), rest.end(), [](const std::string& a) { return subcommand_names().count(a) > 0; });
  if (sub == rest.end()) throw InvalidArgument("config file given without a subcommand");
  const std::string name = *sub;

  std::map<std::string, json> merged;
  for (const auto& [key, value] : cfg.items()) {
    if (subcommand_names().count(key)) continue;
    merged[key] = value;
  }
  if (cfg.contains(name)) {
    for (const auto& [key, value] : cfg[name].items()) merged[key] = value;
  }

  std::vector<std::string> injected;
  for (const auto& [key, value] : merged) {
    const std::string flag = "--" + key;
    if (given_on_command_line(rest, flag)) continue;
    append_json_value(injected, flag, value);
  }
  std::vector<std::string> out(rest.begin(), sub + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), sub + 1, rest.end());
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated power-series solutions versus the continuous spectrum of a radial eigenproblem", "qes"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  std::string config_path;  // consumed by expand_config; declared for --help
  app.add_option("--config", config_path, "JSON file mirroring the flags; command-line flags take precedence");

  TruncateCmd truncate;
  SpectrumCmd spectrum;
  VerifyCmd verify;
  FigureCmd figure;
  FitCmd fit;
  EnergyCmd energy;
  truncate.attach(app.add_subcommand("truncate", "Roots and energies of the truncated series (l,n,i,nu,W)"));
  spectrum.attach(app.add_subcommand("spectrum", "Direct-solver branches W_j(nu) (l,j,nu,W)"));
  verify.attach(app.add_subcommand("verify", "Run invariant suites; exit 0 iff all pass"));
  figure.attach(app.add_subcommand("figure", "Truncation points, branch curves, parabola and plot script"));
  fit.attach(app.add_subcommand("fit", "Constrained cubic fit of one branch through its truncation points"));
  energy.attach(app.add_subcommand("energy", "Map reduced eigenvalues to physical energies"));

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("truncate")) return truncate.run(out, err);
    if (app.got_subcommand("spectrum")) return spectrum.run(out, err);
    if (app.got_subcommand("verify")) return verify.run(out, err);
    if (app.got_subcommand("figure")) return figure.run(out, err);
    if (app.got_subcommand("fit")) return fit.run(out, err);
    if (app.got_subcommand("energy")) return energy.run(out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace qes::cli
