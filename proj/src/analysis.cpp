#include "qes/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "internal/parallel.hpp"
#include "qes/errors.hpp"

namespace qes {

double alpha(const PhysicalParams& p) {
  const double alpha2 = p.theta * p.theta + 4.0 * p.varpi * p.theta;
  if (!(alpha2 > 0.0)) {
    std::ostringstream msg;
    msg << "theta^2 + 4 varpi theta = " << alpha2 << " must be positive (theta=" << p.theta
        << ", varpi=" << p.varpi << ")";
    throw InvalidAlpha(msg.str());
  }
  return std::sqrt(alpha2);
}

double map_W_to_E(double W, const PhysicalParams& p) {
  return alpha(p) * W / 4.0 - 0.5 * p.theta * p.l - p.l * p.varpi;
}

double map_E_to_W(double E, const PhysicalParams& p) {
  return 4.0 / alpha(p) * (E + 0.5 * p.theta * p.l + p.l * p.varpi);
}

namespace {
void require_mass(const PhysicalParams& p) {
  if (!(p.m > 0.0)) {
    std::ostringstream msg;
    msg << "mass must be positive, got " << p.m;
    throw InvalidMass(msg.str());
  }
}
}  // namespace

double map_physical_to_nu(const PhysicalParams& p) {
  require_mass(p);
  const double al = alpha(p);
  return std::pow(2.0, 2.5) * p.a / std::sqrt(p.m * al * al * al);
}

double map_nu_to_a(double nu, const PhysicalParams& p) {
  require_mass(p);
  const double al = alpha(p);
  return nu * std::sqrt(p.m * al * al * al) / std::pow(2.0, 2.5);
}

double oscillator_energy(int branch, int l) { return 2.0 * (2 * branch + std::abs(l) + 1); }

std::vector<TruncationSolution> truncation_point_set(int n_max, int i_max, int l) {
  if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
  if (i_max < 1) throw InvalidArgument("i_max must be at least 1");
  std::vector<std::vector<TruncationSolution>> per_order(static_cast<std::size_t>(n_max) + 1);
  detail::parallel_for(per_order.size(), [&](std::size_t idx) {
    const int n = static_cast<int>(idx);
    const TruncationRoots roots = truncation_roots(n, l);
    const int count = std::min({n + 1, i_max, roots.found_count()});
    for (int i = 1; i <= count; ++i) per_order[idx].push_back(polynomial_solution(roots, i));
  });
  std::vector<TruncationSolution> out;
  for (auto& v : per_order) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

int MatchReport::failures() const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(), [&](const MatchEntry& e) { return !passed(e); }));
}

MatchReport match_truncation_to_curves(std::span<const TruncationSolution> points, double tol,
                                       const SolverConfig& config) {
  if (!(tol > 0.0)) throw InvalidArgument("match tolerance must be positive");
  MatchReport report;
  report.tol = tol;
  report.entries.resize(points.size());
  detail::parallel_for(points.size(), [&](std::size_t k) {
    const TruncationSolution& pt = points[k];
    SolverConfig cfg = config;
    cfg.retain_eigenfunctions = false;
    cfg.levels = std::max(config.levels, pt.i + 1);
    const std::vector<double> w = solve_spectrum({pt.l, pt.nu}, cfg).eigenvalues();

    MatchEntry e;
    e.n = pt.n;
    e.i = pt.i;
    e.l = pt.l;
    e.nu = pt.nu;
    e.W_truncation = pt.W;
    e.distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double d = std::fabs(w[j] - pt.W);
      if (d < e.distance) {
        e.distance = d;
        e.nearest_branch = static_cast<int>(j);
        e.W_branch = w[j];
      }
    }
    report.entries[k] = e;
  });
  return report;
}

FitModel fit_cubic(std::span<const FitPoint> points, double fixed_intercept) {
  if (points.size() < 4) {
    std::ostringstream msg;
    msg << "cubic fit needs at least 4 points, got " << points.size();
    throw DegenerateFit(msg.str());
  }
  const auto rows = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double nu = points[static_cast<std::size_t>(k)].nu;
    design(k, 0) = nu;
    design(k, 1) = nu * nu;
    design(k, 2) = nu * nu * nu;
    rhs(k) = points[static_cast<std::size_t>(k)].W - fixed_intercept;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3) throw DegenerateFit("cubic fit design matrix is rank deficient (too few distinct nonzero nu)");
  const Eigen::Vector3d b = qr.solve(rhs);

  FitModel fit;
  fit.intercept = fixed_intercept;
  fit.b = {b(0), b(1), b(2)};
  fit.point_count = static_cast<int>(points.size());
  fit.domain_lo = std::numeric_limits<double>::infinity();
  fit.domain_hi = -std::numeric_limits<double>::infinity();
  double ss = 0.0;
  for (const FitPoint& pt : points) {
    fit.domain_lo = std::min(fit.domain_lo, pt.nu);
    fit.domain_hi = std::max(fit.domain_hi, pt.nu);
    const double res = pt.W - fit(pt.nu);
    ss += res * res;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(points.size()));
  return fit;
}

std::vector<FitPoint> branch_fit_points(int l, int branch, int n_max) {
  if (branch < 0) throw InvalidArgument("branch must be non-negative");
  std::vector<FitPoint> out;
  for (const TruncationSolution& s : truncation_point_set(n_max, branch + 1, l)) {
    if (s.i == branch + 1 && s.nu >= 0.0) out.push_back({s.nu, s.W});
  }
  return out;
}

FitModel fit_branch(int l, int branch, int n_max) {
  const std::vector<FitPoint> pts = branch_fit_points(l, branch, n_max);
  FitModel fit = fit_cubic(pts, oscillator_energy(branch, l));
  fit.branch = branch;
  fit.l = l;
  return fit;
}

std::optional<FitModel> reference_cubic(int l, int branch) {
  if (l != 0 || branch < 0 || branch > 2) return std::nullopt;
  static constexpr std::array<std::array<double, 3>, 3> kCoeffs{{
      {0.8523002844, -0.02975046592, 0.0008706577439},
      {1.547791990, -0.04202730246, 0.001218822726},
      {2.010156364, -0.04562156939, 0.001269456909},
  }};
  FitModel ref;
  ref.branch = branch;
  ref.l = 0;
  ref.intercept = oscillator_energy(branch, 0);
  ref.b = kCoeffs[static_cast<std::size_t>(branch)];
  return ref;
}

FitDeviation compare_fit_to_reference(const FitModel& fit, int samples) {
  const std::optional<FitModel> ref = reference_cubic(fit.l, fit.branch);
  if (!ref) throw InvalidArgument("reference cubics exist only for l = 0 and branches 0..2");
  if (samples < 2) throw InvalidArgument("need at least two comparison samples");
  FitDeviation dev;
  dev.lo = fit.domain_lo;
  dev.hi = fit.domain_hi;
  dev.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const double nu = dev.lo + (dev.hi - dev.lo) * k / (samples - 1);
    const double d = std::fabs(fit(nu) - (*ref)(nu));
    if (d > dev.max_abs) {
      dev.max_abs = d;
      dev.at_nu = nu;
    }
  }
  return dev;
}

int ContinuityTable::coincidence_count() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const ContinuityRow& r) { return r.coincides; }));
}

ContinuityTable continuity_demonstration(int l, int branch, double nu_lo, double nu_hi, int samples, int root_n_max,
                                         double coincidence_tol, const SolverConfig& config) {
  if (samples < 1) throw InvalidArgument("need at least one sample");
  if (samples > 1 && !(nu_hi > nu_lo)) throw InvalidArgument("nu interval must have nu_hi > nu_lo");
  if (branch < 0) throw InvalidArgument("branch must be non-negative");

  std::vector<double> grid(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    grid[static_cast<std::size_t>(k)] = samples == 1 ? nu_lo : nu_lo + (nu_hi - nu_lo) * k / (samples - 1);
  }
  const std::vector<SpectralCurve> curves = curve_scan(l, branch + 1, grid, config);
  const SpectralCurve& curve = curves.back();

  std::vector<TruncationSolution> roots;
  for (TruncationSolution& s : truncation_point_set(root_n_max, branch + 1, l)) {
    if (s.i == branch + 1) roots.push_back(std::move(s));
  }

  ContinuityTable table;
  table.l = l;
  table.branch = branch;
  for (const CurveSample& smp : curve.samples) {
    ContinuityRow row;
    row.nu = smp.nu;
    row.W = smp.W;
    for (const TruncationSolution& s : roots) {
      const double d = std::fabs(s.nu - smp.nu);
      if (!row.nearest || d < row.nearest->distance) row.nearest = NearestTruncation{s.n, s.i, s.nu, s.W, d};
    }
    row.coincides = row.nearest && row.nearest->distance <= coincidence_tol * (1.0 + std::fabs(smp.nu));
    table.rows.push_back(row);
  }
  return table;
}

AntiHftReport anti_hft_signature(int n, int l, int i_max, const SolverConfig& config) {
  AntiHftReport report;
  report.n = n;
  report.l = l;
  const TruncationRoots roots = truncation_roots(n, l);
  const int branches = i_max;
  for (int i = 1; i <= std::min(i_max, roots.found_count()); ++i) {
    const TruncationSolution sol = polynomial_solution(roots, i);
    if (!(sol.nu > 0.0)) break;
    SolverConfig cfg = config;
    cfg.levels = branches;
    cfg.retain_eigenfunctions = false;
    AntiHftPoint pt;
    pt.i = i;
    pt.nu = sol.nu;
    pt.W_truncation = sol.W;
    pt.W_branches = solve_spectrum({l, sol.nu}, cfg).eigenvalues();
    pt.matched_slope = hft_check({l, sol.nu}, i - 1, 1e-4, cfg).dW_numeric;
    report.points.push_back(std::move(pt));
  }
  if (report.points.size() < 2) return report;

  report.truncation_decreasing = true;
  report.branches_increasing = true;
  for (std::size_t k = 0; k + 1 < report.points.size(); ++k) {
    const AntiHftPoint& hi = report.points[k];      // larger nu
    const AntiHftPoint& lo = report.points[k + 1];  // smaller nu
    if (!(hi.W_truncation < lo.W_truncation)) report.truncation_decreasing = false;
    for (const AntiHftPoint& pt : report.points) {
      const auto j = static_cast<std::size_t>(pt.i - 1);
      if (!(hi.W_branches[j] > lo.W_branches[j])) report.branches_increasing = false;
    }
  }
  for (const AntiHftPoint& pt : report.points) {
    if (!(pt.matched_slope > 0.0)) report.branches_increasing = false;
  }
  return report;
}

}  // namespace qes
