#pragma once

// Direct numerical eigensolver for the radial problem, independent of the
// power-series route. The operator
//   -(1/r)(r F')' + (r^2 + nu r + l^2/r^2) F = W F
// is discretised in flux form on the cell-centred grid r_k = (k + 1/2) h; the
// substitution u = sqrt(r) F (the Liouville normal form, effective potential
// (l^2 - 1/4)/r^2) turns it into a symmetric tridiagonal eigenproblem with
// u(0) = u(r_max) = 0.

#include <optional>
#include <span>
#include <vector>

#include "qes/frobenius.hpp"

namespace qes {

struct SolverConfig {
  /// Outer boundary; 0 selects default_r_max(nu).
  double r_max = 0.0;
  int grid_points = 4000;
  int levels = 3;
  double convergence_tol = 1e-8;
  /// The convergence loop keeps doubling while 4 * grid_points stays below this.
  int max_grid_points = 128000;
  /// Largest ground-state |F| over the outer 1% of nodes, relative to its peak.
  double tail_tolerance = 1e-12;
  bool retain_eigenfunctions = true;

  void validate() const;
};

/// max(12, |nu|/2 + 12)
double default_r_max(double nu);

/// F sampled at the cell centres r_k = (k + 1/2) h, normalised under sum F^2 r h = 1.
struct RadialFunction {
  double h = 0.0;
  std::vector<double> r;
  std::vector<double> F;
};

struct Eigenstate {
  int branch = 0;
  double W = 0.0;
  std::optional<RadialFunction> eigenfunction;
};

struct Spectrum {
  ReducedProblem problem;
  double r_max = 0.0;
  /// Coarsest grid of the accepted N, 2N, 4N triple.
  int grid_points = 0;
  /// max_j |R(2N,4N) - R(N,2N)| of the accepted triple.
  double extrapolation_change = 0.0;
  std::vector<Eigenstate> states;

  std::vector<double> eigenvalues() const;
};

/// Lowest `levels` eigenvalues of the discrete operator on one grid, with no extrapolation.
std::vector<double> discrete_eigenvalues(const ReducedProblem& problem, double r_max, int grid_points, int levels);

/// Richardson-extrapolated lowest eigenvalues; eigenfunctions come from the finest grid.
Spectrum solve_spectrum(const ReducedProblem& problem, const SolverConfig& config = {});

/// sum F^2 r h
double norm_squared(const RadialFunction& f);

/// <r> = int r |F|^2 r dr on the solver grid.
double expectation_r(const RadialFunction& f);

struct HftResult {
  double dW_numeric = 0.0;
  double r_expectation = 0.0;
  double discrepancy = 0.0;
  /// max(1e-4, 10 * convergence_tol / delta)
  double tolerance = 0.0;

  bool passed() const { return discrepancy <= tolerance; }
};

/// Central-difference slope of branch j against <r> at the same nu.
HftResult hft_check(const ReducedProblem& problem, int branch, double delta = 1e-4, const SolverConfig& config = {});

struct CurveSample {
  double nu = 0.0;
  double W = 0.0;
};

struct SpectralCurve {
  int l = 0;
  int branch = 0;
  std::vector<CurveSample> samples;
  /// Parallel to samples when retained.
  std::vector<RadialFunction> eigenfunctions;
};

/// One curve per branch j < branches over a strictly increasing nu grid.
/// Eigenfunctions are kept only if config.retain_eigenfunctions is set.
/// Throws MonotonicityViolation if any branch fails to increase.
std::vector<SpectralCurve> curve_scan(int l, int branches, std::span<const double> nu_grid,
                                      SolverConfig config = {.retain_eigenfunctions = false});

}  // namespace qes
