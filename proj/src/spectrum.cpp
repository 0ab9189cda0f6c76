#include "qes/spectrum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "internal/parallel.hpp"
#include "qes/errors.hpp"

namespace qes {

void SolverConfig::validate() const {
  if (!(r_max >= 0.0)) throw InvalidArgument("r_max must be positive (or 0 for the default)");
  if (grid_points < 100) throw InvalidArgument("grid_points must be at least 100");
  if (levels < 1) throw InvalidArgument("levels must be at least 1");
  if (!(convergence_tol > 0.0)) throw InvalidArgument("convergence_tol must be positive");
  if (!(tail_tolerance > 0.0)) throw InvalidArgument("tail_tolerance must be positive");
  if (max_grid_points < 4 * grid_points) throw InvalidArgument("max_grid_points must be at least 4 * grid_points");
}

double default_r_max(double nu) { return std::max(12.0, std::fabs(nu) / 2.0 + 12.0); }

std::vector<double> Spectrum::eigenvalues() const {
  std::vector<double> w;
  w.reserve(states.size());
  for (const auto& st : states) w.push_back(st.W);
  return w;
}

namespace {

struct DiscreteSolution {
  std::vector<double> W;
  std::vector<RadialFunction> functions;  // empty unless vectors were requested
};

DiscreteSolution discrete_solve(const ReducedProblem& problem, double r_max, int n, int levels, bool vectors) {
  if (levels > n) throw InvalidArgument("more levels requested than grid points");
  const double h = r_max / (n + 0.5);
  const double inv_h2 = 1.0 / (h * h);
  const double l2 = static_cast<double>(problem.l) * problem.l;

  std::vector<double> r(static_cast<std::size_t>(n));
  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    const double rk = (k + 0.5) * h;
    r[static_cast<std::size_t>(k)] = rk;
    d[static_cast<std::size_t>(k)] = 2.0 * inv_h2 + rk * rk + problem.nu * rk + l2 / (rk * rk);
  }
  for (int k = 0; k + 1 < n; ++k) {
    const double face = (k + 1) * h;
    e[static_cast<std::size_t>(k)] =
        -face * inv_h2 / std::sqrt(r[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(k + 1)]);
  }

  lapack_int found = 0;
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(vectors ? static_cast<std::size_t>(n) * levels : 1);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(levels));
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, levels, 0.0,
                     &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != levels) {
    std::ostringstream msg;
    msg << "tridiagonal eigensolver failed (info=" << info << ", found " << found << " of " << levels << ")";
    throw NotConverged(msg.str());
  }

  DiscreteSolution out;
  out.W.assign(w.begin(), w.begin() + levels);
  if (vectors) {
    const double inv_sqrt_h = 1.0 / std::sqrt(h);
    for (int j = 0; j < levels; ++j) {
      RadialFunction f;
      f.h = h;
      f.r = r;
      f.F.resize(static_cast<std::size_t>(n));
      const double* u = z.data() + static_cast<std::size_t>(j) * n;
      double peak = 0.0;
      for (int k = 0; k < n; ++k) peak = std::max(peak, std::fabs(u[k]));
      double sign = 1.0;
      for (int k = 0; k < n; ++k) {
        if (std::fabs(u[k]) > 1e-6 * peak) {
          sign = u[k] > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
      for (int k = 0; k < n; ++k) {
        f.F[static_cast<std::size_t>(k)] = sign * u[k] * inv_sqrt_h / std::sqrt(r[static_cast<std::size_t>(k)]);
      }
      out.functions.push_back(std::move(f));
    }
  }
  return out;
}

double tail_ratio(const RadialFunction& f) {
  const std::size_t n = f.F.size();
  const std::size_t outer = std::max<std::size_t>(1, n / 100);
  double peak = 0.0;
  double tail = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = std::fabs(f.F[k]);
    peak = std::max(peak, v);
    if (k + outer >= n) tail = std::max(tail, v);
  }
  return peak > 0.0 ? tail / peak : 1.0;
}

}  // namespace

std::vector<double> discrete_eigenvalues(const ReducedProblem& problem, double r_max, int grid_points, int levels) {
  return discrete_solve(problem, r_max, grid_points, levels, false).W;
}

Spectrum solve_spectrum(const ReducedProblem& problem, const SolverConfig& config) {
  config.validate();
  const double r_max = config.r_max > 0.0 ? config.r_max : default_r_max(problem.nu);
  const int levels = config.levels;

  int n = config.grid_points;
  std::vector<double> coarse = discrete_solve(problem, r_max, n, levels, false).W;
  std::vector<double> middle = discrete_solve(problem, r_max, 2 * n, levels, false).W;
  while (true) {
    DiscreteSolution fine = discrete_solve(problem, r_max, 4 * n, levels, true);
    // The finest grid resolves the tail best; a truncated domain is rejected before convergence is judged.
    const double tail = tail_ratio(fine.functions.front());
    if (!(tail <= config.tail_tolerance)) {
      std::ostringstream msg;
      msg << "r_max=" << r_max << " too small for l=" << problem.l << ", nu=" << problem.nu
          << ": ground-state tail ratio " << tail;
      throw DomainTooSmall(msg.str());
    }
    double change = 0.0;
    std::vector<double> extrapolated(static_cast<std::size_t>(levels));
    for (std::size_t j = 0; j < extrapolated.size(); ++j) {
      const double r1 = (4.0 * middle[j] - coarse[j]) / 3.0;
      const double r2 = (4.0 * fine.W[j] - middle[j]) / 3.0;
      extrapolated[j] = r2;
      change = std::max(change, std::fabs(r2 - r1));
    }

    if (change < config.convergence_tol) {
      Spectrum out;
      out.problem = problem;
      out.r_max = r_max;
      out.grid_points = n;
      out.extrapolation_change = change;
      for (int j = 0; j < levels; ++j) {
        Eigenstate st;
        st.branch = j;
        st.W = extrapolated[static_cast<std::size_t>(j)];
        if (config.retain_eigenfunctions) st.eigenfunction = std::move(fine.functions[static_cast<std::size_t>(j)]);
        out.states.push_back(std::move(st));
      }
      return out;
    }

    if (8L * n > config.max_grid_points) {
      std::ostringstream msg;
      msg << "eigenvalues for l=" << problem.l << ", nu=" << problem.nu << " still moved by " << change
          << " at " << 4 * n << " grid points";
      throw NotConverged(msg.str());
    }
    n *= 2;
    coarse = std::move(middle);
    middle = std::move(fine.W);
  }
}

double norm_squared(const RadialFunction& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.F.size(); ++k) acc += f.F[k] * f.F[k] * f.r[k];
  return acc * f.h;
}

double expectation_r(const RadialFunction& f) {
  // Midpoint rule on the cell centres: the same quadrature that defines the
  // discrete inner product, so <r> is exactly the derivative of the discrete eigenvalue.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < f.F.size(); ++k) {
    const double w = f.F[k] * f.F[k] * f.r[k];
    num += w * f.r[k];
    den += w;
  }
  if (!(den > 0.0)) throw InvalidArgument("eigenfunction has zero norm");
  return num / den;
}

HftResult hft_check(const ReducedProblem& problem, int branch, double delta, const SolverConfig& config) {
  if (branch < 0) throw InvalidArgument("branch must be non-negative");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  SolverConfig cfg = config;
  cfg.levels = branch + 1;
  // One grid for all three solves so the difference quotient sees a single discretisation.
  if (cfg.r_max <= 0.0) cfg.r_max = default_r_max(std::fabs(problem.nu) + delta);

  cfg.retain_eigenfunctions = false;
  const double w_plus = solve_spectrum({problem.l, problem.nu + delta}, cfg).states.back().W;
  const double w_minus = solve_spectrum({problem.l, problem.nu - delta}, cfg).states.back().W;
  cfg.retain_eigenfunctions = true;
  const Spectrum centre = solve_spectrum(problem, cfg);

  HftResult out;
  out.dW_numeric = (w_plus - w_minus) / (2.0 * delta);
  out.r_expectation = expectation_r(*centre.states.back().eigenfunction);
  out.discrepancy = std::fabs(out.dW_numeric - out.r_expectation);
  out.tolerance = std::max(1e-4, 10.0 * config.convergence_tol / delta);
  return out;
}

std::vector<SpectralCurve> curve_scan(int l, int branches, std::span<const double> nu_grid, SolverConfig config) {
  if (branches < 1) throw InvalidArgument("branches must be at least 1");
  for (std::size_t k = 1; k < nu_grid.size(); ++k) {
    if (!(nu_grid[k] > nu_grid[k - 1])) throw InvalidArgument("nu grid must be strictly increasing");
  }
  config.levels = branches;

  std::vector<Spectrum> spectra(nu_grid.size());
  detail::parallel_for(nu_grid.size(), [&](std::size_t k) { spectra[k] = solve_spectrum({l, nu_grid[k]}, config); });

  std::vector<SpectralCurve> curves(static_cast<std::size_t>(branches));
  for (int j = 0; j < branches; ++j) {
    SpectralCurve& c = curves[static_cast<std::size_t>(j)];
    c.l = l;
    c.branch = j;
    for (std::size_t k = 0; k < spectra.size(); ++k) {
      Eigenstate& st = spectra[k].states[static_cast<std::size_t>(j)];
      if (j > 0 && !(st.W > spectra[k].states[static_cast<std::size_t>(j - 1)].W)) {
        std::ostringstream msg;
        msg << "branches " << j - 1 << " and " << j << " not strictly ordered at nu=" << nu_grid[k];
        throw MonotonicityViolation(msg.str());
      }
      if (!c.samples.empty() && !(st.W > c.samples.back().W)) {
        std::ostringstream msg;
        msg << "branch " << j << " (l=" << l << ") decreases between nu=" << c.samples.back().nu << " and nu="
            << nu_grid[k];
        throw MonotonicityViolation(msg.str());
      }
      c.samples.push_back({nu_grid[k], st.W});
      if (config.retain_eigenfunctions && st.eigenfunction) c.eigenfunctions.push_back(std::move(*st.eigenfunction));
    }
  }
  return curves;
}

}  // namespace qes
