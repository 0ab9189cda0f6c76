// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qes/analysis.hpp"
#include "qes/cli.hpp"
#include "qes/csv.hpp"
#include "qes/errors.hpp"
#include "qes/frobenius.hpp"
#include "qes/spectrum.hpp"

using namespace qes;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> body;
};

const std::vector<int> kLs{0, 1, 2};

Outcome oscillator_limit() {
  std::ostringstream out, err;
  const int code = cli::run({"spectrum", "--l", "0", "--branches", "3", "--nu", "0"}, out, err);
  if (code != 0) return {false, "spectrum exited " + std::to_string(code) + ": " + err.str()};
  std::istringstream in(out.str());
  const csv::Table t = csv::read(in);
  if (t.rows.size() != 3) return {false, "expected 3 rows"};
  double worst = 0.0;
  std::ostringstream d;
  for (std::size_t j = 0; j < 3; ++j) {
    const double w = csv::parse_double(t.rows[j][3]);
    worst = std::max(worst, std::fabs(w - (2.0 + 4.0 * static_cast<double>(j))));
    d << "W_" << j << "=" << t.rows[j][3] << " ";
  }
  d << "max error " << worst;
  return {worst <= 1e-7, d.str()};
}

Outcome parabola_identity() {
  double worst = 0.0, worst_defect = 0.0;
  int roots = 0;
  for (int l : kLs) {
    for (int n = 0; n <= 22; ++n) {
      const TruncationRoots tr = truncation_roots(n, l);
      for (int i = 1; i <= tr.found_count(); ++i) {
        const TruncationSolution s = polynomial_solution(tr, i);
        worst = std::max(worst, std::fabs(s.W + s.nu * s.nu / 4.0 - 2.0 * (n + std::abs(l) + 1)));
        worst_defect = std::max(worst_defect, s.closure_defect);
        ++roots;
      }
    }
  }
  std::ostringstream d;
  d << roots << " roots, max |W + nu^2/4 - 2(n+|l|+1)| = " << worst << ", max closure defect " << worst_defect;
  return {worst <= 1e-10 && worst_defect <= 1e-10, d.str()};
}

Outcome matching() {
  int total = 0, failed = 0;
  double worst = 0.0;
  std::ostringstream d;
  for (int l : kLs) {
    const auto pts = truncation_point_set(12, 3, l);
    const MatchReport m = match_truncation_to_curves(pts, 1e-6);
    for (const auto& e : m.entries) {
      ++total;
      worst = std::max(worst, e.distance);
      if (!m.passed(e)) {
        ++failed;
        d << "[n=" << e.n << " i=" << e.i << " l=" << e.l << " nu=" << e.nu << " branch=" << e.nearest_branch
          << " |dW|=" << e.distance << "] ";
      }
    }
  }
  d << total << " points, " << failed << " unmatched, max |dW| = " << worst;
  return {failed == 0 && total > 0, d.str()};
}

Outcome hft_consistency() {
  std::mt19937 rng(20170901u);
  std::uniform_int_distribution<int> pick_l(0, 2), pick_j(0, 2);
  std::uniform_real_distribution<double> pick_nu(0.0, 8.0);
  double worst = 0.0;
  bool positive = true;
  std::ostringstream d;
  for (int k = 0; k < 20; ++k) {
    const int l = pick_l(rng);
    const double nu = pick_nu(rng);
    const int j = pick_j(rng);
    const HftResult h = hft_check({l, nu}, j);
    worst = std::max(worst, h.discrepancy);
    if (!(h.dW_numeric > 0.0 && h.r_expectation > 0.0)) {
      positive = false;
      d << "[non-positive at l=" << l << " nu=" << nu << " j=" << j << "] ";
    }
  }
  d << "20 samples, max |dW/dnu - <r>| = " << worst;
  return {positive && worst <= 1e-4, d.str()};
}

Outcome continuity() {
  const ContinuityTable t = continuity_demonstration(0, 0, 0.1, 0.2, 11);
  bool valid = t.rows.size() == 11;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const double w = t.rows[k].W;
    if (!std::isfinite(w) || (k > 0 && !(w > t.rows[k - 1].W))) valid = false;
  }
  std::ostringstream d;
  d << t.rows.size() << " samples on [0.1, 0.2], W from " << t.rows.front().W << " to " << t.rows.back().W << ", "
    << t.coincidence_count() << " coincidences with truncation roots";
  return {valid && t.coincidence_count() == 0, d.str()};
}

Outcome fit_reproduction() {
  bool ok = true;
  std::ostringstream d;
  for (int j = 0; j < 3; ++j) {
    const FitModel fit = fit_branch(0, j, 22);
    const FitDeviation dev = compare_fit_to_reference(fit);
    d << "j=" << j << ": max dev " << dev.max_abs << " on [" << dev.lo << ", " << dev.hi << "]  ";
    if (!(dev.max_abs <= 0.05)) ok = false;
  }
  return {ok, d.str()};
}

Outcome residual() {
  double worst = 0.0;
  int count = 0;
  std::ostringstream d;
  for (int l : kLs) {
    for (int n = 0; n <= 10; ++n) {
      const TruncationRoots tr = truncation_roots(n, l);
      for (int i = 1; i <= tr.found_count(); ++i) {
        const TruncationSolution s = polynomial_solution(tr, i);
        ++count;
        for (int k = 1; k <= 100; ++k) worst = std::max(worst, relative_ode_residual(s, 0.1 * k));
      }
    }
  }
  d << count << " solutions x 100 radii in (0, 10], max relative residual " << worst;
  return {worst <= 1e-8, d.str()};
}

Outcome parity() {
  int failures = 0;
  std::ostringstream d;
  for (int l : kLs) {
    for (int n = 0; n <= 22; ++n) {
      const TruncationRoots tr = truncation_roots(n, l);
      const std::size_t c = tr.nu.size();
      bool symmetric = true;
      for (std::size_t k = 0; k < c; ++k) symmetric = symmetric && tr.nu[k] == -tr.nu[c - 1 - k];
      const bool zero = std::find(tr.nu.begin(), tr.nu.end(), 0.0) != tr.nu.end();
      if (!symmetric || zero != ((n + 1) % 2 == 1) || !tr.complete()) {
        ++failures;
        d << "[n=" << n << " l=" << l << "] ";
      }
    }
  }
  d << 23 * kLs.size() << " root sets, " << failures << " violations";
  return {failures == 0, d.str()};
}

Outcome anti_hft() {
  const AntiHftReport a = anti_hft_signature(10, 0, 3);
  std::ostringstream d;
  for (const auto& p : a.points) {
    d << "[i=" << p.i << " nu=" << p.nu << " W_trunc=" << p.W_truncation << " W_" << p.i - 1 << "="
      << p.W_branches[static_cast<std::size_t>(p.i - 1)] << "] ";
  }
  d << "truncation " << (a.truncation_decreasing ? "decreasing" : "not decreasing") << ", branches "
    << (a.branches_increasing ? "increasing" : "not increasing");
  return {a.points.size() == 3 && a.holds(), d.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oscillator limit", 5.0, oscillator_limit},
      {2, "truncation closed form", 10.0, parabola_identity},
      {3, "matching theorem", 120.0, matching},
      {4, "Hellmann-Feynman consistency", 60.0, hft_consistency},
      {5, "continuity refutation", 0.0, continuity},
      {6, "fit reproduction", 0.0, fit_reproduction},
      {7, "polynomial-solution residual", 0.0, residual},
      {8, "parity and zero root", 0.0, parity},
      {9, "anti-HFT signature", 0.0, anti_hft},
  };

  int passed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
    const bool ok = o.ok && in_time;
    passed += ok ? 1 : 0;
    std::printf("%s %d %s (%.2f s%s) %s%s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.limit_s > 0.0 ? (" / limit " + std::to_string(static_cast<int>(c.limit_s)) + " s").c_str() : "",
                o.detail.c_str(), in_time ? "" : " [over time limit]");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
