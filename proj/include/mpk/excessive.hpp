#pragma once

#include "mpk/types.hpp"
#include "mpk/verdict.hpp"

#include <vector>

namespace mpk {

/// Geometric test grid with 16 points per decade over [2^-5, 2^10].
std::vector<double> rate_test_grid();

/// Time grid used for pointwise semigroup checks: the geometric grid above
/// for ctmc models, its distinct integer roundings for dtmc models.
std::vector<double> time_test_grid(const MarkovModel& model);

struct GridWitness {
  int state = -1;
  double parameter = 0.0;
  std::string kind;  // "alpha" or "time"
};

struct ExcessiveVerdict {
  bool is_supermedian = false;
  bool is_excessive = false;
  double worst_violation = 0.0;  // signed max of the tested inequality gaps
  GridWitness witness;
  double tolerance = 0.0;
  // residual of alpha U_{alpha+beta} u - u at the largest tested alpha,
  // together with the finite-space rate bound it is certified against
  double limit_residual = 0.0;
  double limit_bound = 0.0;

  Verdict to_verdict(const MarkovModel& model, const std::string& property) const;
};

/// Decides whether u >= 0 satisfies e^{-beta t} P_t u <= u on the time grid
/// and alpha U_{alpha+beta} u <= u on the rate grid, with
/// tol = tolerance_scale * (1 + ||u||_inf). Throws NegativeFunction.
ExcessiveVerdict is_supermedian(const MarkovModel& model, const StateFunction& u, double beta,
                                double tolerance_scale = 1e-10);

/// Supermedian check strengthened by the resolvent limit certificate at
/// alpha = 2^20. On a finite space every supermedian function passes the
/// limit, and the verdict records the measured residual against the exact
/// O(1/alpha) bound.
ExcessiveVerdict is_excessive(const MarkovModel& model, const StateFunction& u, double beta,
                              double tolerance_scale = 1e-10);

/// u written as a difference of two beta-excessive functions via the charge
/// f = (beta I - L) u split into positive and negative parts.
struct RaoDecomposition {
  double beta = 0.0;
  StateFunction u1, u2;           // beta-excessive parts, u1 - u2 = u
  StateFunction f_plus, f_minus;  // charges, nonnegative with disjoint supports
};

RaoDecomposition rao_decompose(const MarkovModel& model, const StateFunction& u, double beta);

/// ||L u||_inf.
double harmonic_residual(const MarkovModel& model, const StateFunction& u);

bool is_harmonic(const MarkovModel& model, const StateFunction& u, double tolerance_scale = 1e-10);

}  // namespace mpk
