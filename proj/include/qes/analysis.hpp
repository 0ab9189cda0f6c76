#pragma once

// Cross-checks between the truncation and direct-solver routes, the constrained
// cubic fits of the continuous branches, and the reduced <-> physical maps.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "qes/frobenius.hpp"
#include "qes/spectrum.hpp"

namespace qes {

// ---------------------------------------------------------------------------
// Physical parameters

/// Mass m, scalar-potential strength a, cyclotron frequency theta, rotation
/// angular velocity varpi and quantum number l, in dimensionless units.
struct PhysicalParams {
  double m = 1.0;
  double a = 0.0;
  double theta = 1.0;
  double varpi = 0.0;
  int l = 0;
};

/// alpha = sqrt(theta^2 + 4 varpi theta). Throws InvalidAlpha when the radicand is not positive.
double alpha(const PhysicalParams& p);

/// E = alpha W / 4 - theta l / 2 - l varpi
double map_W_to_E(double W, const PhysicalParams& p);
double map_E_to_W(double E, const PhysicalParams& p);

/// nu = 2^{5/2} a / sqrt(m alpha^3). Throws InvalidMass for m <= 0.
double map_physical_to_nu(const PhysicalParams& p);
/// Inverse of map_physical_to_nu in a at fixed (m, theta, varpi).
double map_nu_to_a(double nu, const PhysicalParams& p);

// ---------------------------------------------------------------------------
// Truncation points and their place on the continuous branches

/// 2(2j + |l| + 1), the nu = 0 eigenvalue of branch j.
double oscillator_energy(int branch, int l);

/// All solutions with n <= n_max and i <= min(n+1, i_max), both signs of nu.
std::vector<TruncationSolution> truncation_point_set(int n_max, int i_max, int l);

struct MatchEntry {
  int n = 0;
  int i = 0;
  int l = 0;
  double nu = 0.0;
  double W_truncation = 0.0;
  int nearest_branch = -1;
  double W_branch = 0.0;
  double distance = 0.0;

  int expected_branch() const { return i - 1; }
};

struct MatchReport {
  double tol = 0.0;
  std::vector<MatchEntry> entries;

  bool passed(const MatchEntry& e) const { return e.nearest_branch == e.expected_branch() && e.distance <= tol; }
  int failures() const;
  bool all_passed() const { return failures() == 0; }
};

/// Solves the spectrum at every root and locates the nearest branch.
MatchReport match_truncation_to_curves(std::span<const TruncationSolution> points, double tol = 1e-6,
                                       const SolverConfig& config = {.retain_eigenfunctions = false});

// ---------------------------------------------------------------------------
// Constrained cubic fits

struct FitPoint {
  double nu = 0.0;
  double W = 0.0;
};

struct FitModel {
  int branch = -1;
  int l = 0;
  double intercept = 0.0;
  std::array<double, 3> b{};  // W ~ intercept + b1 nu + b2 nu^2 + b3 nu^3
  double domain_lo = 0.0;
  double domain_hi = 0.0;
  double rms_residual = 0.0;
  int point_count = 0;

  double operator()(double nu) const { return intercept + nu * (b[0] + nu * (b[1] + nu * b[2])); }
};

/// Least squares for (b1, b2, b3) with the intercept held fixed. Needs at least
/// four points and three distinct nonzero nu values, else DegenerateFit.
FitModel fit_cubic(std::span<const FitPoint> points, double fixed_intercept);

/// Truncation points that lie on branch j: i = j + 1, n <= n_max, nu >= 0.
std::vector<FitPoint> branch_fit_points(int l, int branch, int n_max);

/// fit_cubic over branch_fit_points with the oscillator intercept.
FitModel fit_branch(int l, int branch, int n_max);

/// Reference least-squares cubics for l = 0, branches 0..2.
std::optional<FitModel> reference_cubic(int l, int branch);

struct FitDeviation {
  double max_abs = 0.0;
  double at_nu = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int samples = 0;
};

/// Max |fit - reference| on a uniform grid over the fit's domain.
FitDeviation compare_fit_to_reference(const FitModel& fit, int samples = 100);

// ---------------------------------------------------------------------------
// Continuity of the spectrum in nu

struct NearestTruncation {
  int n = 0;
  int i = 0;
  double nu = 0.0;
  double W = 0.0;
  double distance = 0.0;
};

struct ContinuityRow {
  double nu = 0.0;
  double W = 0.0;
  std::optional<NearestTruncation> nearest;
  bool coincides = false;
};

struct ContinuityTable {
  int l = 0;
  int branch = 0;
  std::vector<ContinuityRow> rows;

  int coincidence_count() const;
};

/// Samples branch j at `samples` uniformly spaced nu in [nu_lo, nu_hi] and marks
/// each sample whose nu equals a root nu_{n, j+1, l} (n <= root_n_max) to within
/// coincidence_tol * (1 + |nu|).
ContinuityTable continuity_demonstration(int l, int branch, double nu_lo, double nu_hi, int samples,
                                         int root_n_max = 22, double coincidence_tol = 1e-9,
                                         const SolverConfig& config = {.retain_eigenfunctions = false});

// ---------------------------------------------------------------------------
// Opposite orderings of the truncation family and the true branches

struct AntiHftPoint {
  int i = 0;
  double nu = 0.0;
  double W_truncation = 0.0;
  /// W_j(nu) for j = 0 .. branches-1
  std::vector<double> W_branches;
  /// Central-difference slope of the matched branch i-1 at nu.
  double matched_slope = 0.0;
};

struct AntiHftReport {
  int n = 0;
  int l = 0;
  std::vector<AntiHftPoint> points;  // decreasing nu
  bool truncation_decreasing = false;
  bool branches_increasing = false;

  bool holds() const { return truncation_decreasing && branches_increasing; }
};

/// Uses the positive roots nu_{n,i,l}, i <= i_max: truncation energies must fall
/// with nu while every matched branch rises with nu across the same roots.
AntiHftReport anti_hft_signature(int n, int l, int i_max = 3,
                                 const SolverConfig& config = {.retain_eigenfunctions = false});

}  // namespace qes
