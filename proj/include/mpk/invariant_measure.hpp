#pragma once

#include "mpk/types.hpp"
#include "mpk/verdict.hpp"

#include <functional>
#include <vector>

namespace mpk {

/// Passes iff every row sum is 0 (ctmc) resp. 1 (dtmc) within 1e-12.
Verdict check_markovian(const MarkovModel& model, double tol = 1e-12);

/// m is auxiliary iff null sets are preserved by every P_t; on a finite space
/// this is exactly: no positive-mass state reaches a zero-mass state in the
/// support digraph of U_1.
Verdict check_auxiliary(const MarkovModel& model);

/// Generator of the adjoint semigroup on densities w.r.t. m, embedded with
/// zero rows and columns on zero-mass states.
Matrix adjoint_generator(const MarkovModel& model);

/// P_t^* as a matrix acting on densities.
Matrix adjoint_transition(const MarkovModel& model, double t);

/// Density of (rho m) P_t with respect to m. Requires a Markovian model with
/// auxiliary m; throws MassLeak when <P_t^* rho, m> drifts from <rho, m> by
/// more than 1e-10.
StateFunction adjoint_apply(const MarkovModel& model, double t, const StateFunction& rho);

/// One Krylov-Bogoliubov window: (1/T) int_0^T P_t^* rho dt via composite
/// Gauss-Legendre quadrature (panel width 1/4, 8 nodes) for ctmc models, the
/// Cesaro average (1/T) sum_{k<T} P^{*k} rho for dtmc models (T integer).
StateFunction time_average(const MarkovModel& model, const StateFunction& rho, double window);

struct AverageSchedule {
  double max_horizon = 1024.0;  // doubling checkpoints up to here
  double cauchy_tol = 1e-8;     // mass-weighted 1-norm between checkpoints
  double co_excessive_tol = 1e-8;
  double invariance_tol = 1e-6;
};

struct DensityCheckpoint {
  double horizon = 0.0;
  double diff = 0.0;  // mass-weighted 1-norm against the previous checkpoint
  double co_excessive = 0.0;
  double invariance = 0.0;
  StateFunction rho;
};

struct DensityResult {
  StateFunction rho;
  double co_excessive_residual = 0.0;  // max over the grid of (P_t^* rho - rho)^+
  double invariance_residual = 0.0;    // grid max of ||P_t^* rho - rho||_{1,m}
  long iterations = 0;                 // averaging passes
  bool converged = false;
  double horizon = 0.0;  // cumulative averaging time at the accepting checkpoint
  double mass_error = 0.0;
  std::vector<DensityCheckpoint> checkpoints;
};

/// Iterated Krylov-Bogoliubov averaging of the adjoint orbit started at rho0,
/// with checkpoints at doubling cumulative horizons. Converged means the
/// checkpoint densities are Cauchy at 1e-8 and the limit is certified
/// co-excessive (1e-8) and invariant (1e-6) on the suprema grid. Throws
/// NoConvergence with oscillation diagnostics when the schedule is exhausted.
DensityResult cesaro_invariant_density(const MarkovModel& model, const StateFunction& rho0,
                                       const AverageSchedule& schedule = {});

/// Direct left-null-space route: invariant measures of the primal chain live
/// on its closed recurrent classes; solves for the per-class stationary
/// vectors and assembles the density w.r.t. m. Used as the cross-check
/// oracle for the averaging route.
DensityResult stationary_density_eigen(const MarkovModel& model);

/// Geometric suprema grid {2^-10 .. 2^6} (16 points per decade) plus t = 0;
/// distinct integers for dtmc models.
std::vector<double> suprema_time_grid(const MarkovModel& model);

struct AlmostInvarianceCertificate {
  double delta = 0.0;
  std::vector<std::vector<int>> subsets;
  std::vector<double> phi;  // phi*(A) = sup over the grid of m(P_t 1_A)
  std::vector<double> grid;
  bool satisfied = false;
  double min_atom_mass = 0.0;  // positive-mass floor justifying absolute continuity
  std::string subset_policy;   // "exhaustive" or "atoms-and-blocks"
};

/// Builds the canonical certificate with delta = 0 and
/// phi*(A) = sup_t m(P_t 1_A) (the sup includes t -> 0+, i.e. m(A)).
/// Exhaustive over all subsets for n <= 16, atoms and unions of invariant
/// blocks otherwise.
AlmostInvarianceCertificate almost_invariance_report(const MarkovModel& model);

/// Report-mode check of a user-supplied (delta, phi) pair against
/// m(P_t 1_A) <= delta m(E) + phi(A) + 1e-10 on the grid.
Verdict check_almost_invariance(const MarkovModel& model, double delta,
                                const std::function<double(const std::vector<int>&)>& phi,
                                const std::vector<std::vector<int>>& subsets);

/// Runs the certificate and the averaging search and asserts they agree:
/// certificate satisfied iff a converged density exists. When m is also
/// sub-invariant, additionally asserts the generator-kernel equivalence
/// (nonzero harmonic function exists, and the converged density is killed by
/// the dual generator). Disagreement throws InconsistentVerdict.
Verdict invariant_measure_harness(const MarkovModel& model);

}  // namespace mpk
