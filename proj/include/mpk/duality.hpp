#pragma once

#include "mpk/types.hpp"
#include "mpk/verdict.hpp"

#include <array>
#include <vector>

namespace mpk {

/// Finite-space sub-invariance test: m^T Q <= 0 (ctmc) or m^T P <= m^T (dtmc)
/// entrywise at 1e-12; the verdict names the worst column.
Verdict check_subinvariant(const MarkovModel& model, double tol = 1e-12);

/// The m-dual of the model. The dual generator/kernel is D_m^{-1} A^T D_m on
/// the positive-mass states and identically zero on the rest, so functions
/// supported off the support stay there.
struct DualModel {
  MarkovModel base;
  Matrix dual_transition;    // embedded: zero rows and columns off the support
  std::vector<int> support;  // states with m > 0
  bool sub_invariant = false;

  /// The dual restricted to the support as a model of its own, carrying the
  /// restricted measure. Only valid as a sub-Markovian model when
  /// sub_invariant holds.
  MarkovModel reduced_model() const;
};

DualModel make_dual(const MarkovModel& model);

/// \hat U_alpha f. Requires m sub-invariant (NotSubInvariant otherwise).
/// Entries off the support are returned as 0.
StateFunction dual_resolvent_apply(const DualModel& dual, double alpha, const StateFunction& f);

Matrix dual_resolvent_matrix(const DualModel& dual, double alpha);

/// Max residual of the weak duality pairing <f, U_alpha g>_m = <g, \hat U_alpha f>_m
/// over the supplied test functions.
double duality_pairing_residual(const DualModel& dual, double alpha,
                                const std::vector<StateFunction>& test_functions);

/// Tests U_alpha(v f) = v U_alpha f m-a.e. for f over the indicator basis and
/// alpha in {1/2, 1, 2}; zero-mass states are excluded from the comparison.
Verdict is_U_invariant(const MarkovModel& model, const StateFunction& v,
                       double tolerance_scale = 1e-9);

struct InvariancePartition {
  std::vector<std::vector<int>> blocks;  // minimal invariant atoms, positive-mass states
  std::vector<int> excluded;             // zero-mass states
  StateFunction block_indicator(int block, int n) const;
};

/// Finest partition of the positive-mass states into invariant atoms, via
/// connected components of the support graph of U_1.
InvariancePartition invariant_partition(const MarkovModel& model);

/// Five-way invariance characterization for a single function, together with
/// the conservativity flags of both resolvents.
struct EquivalenceMatrix {
  // 0: alpha U_alpha u = u      1: alpha \hat U_alpha u = u
  // 2: u is U-invariant          3: U_alpha u = u U_alpha 1 (both sides)
  // 4: u measurable w.r.t. the invariant sigma-algebra
  std::array<bool, 5> holds{};
  std::array<double, 5> residuals{};
  bool conservative_primal = false;
  bool conservative_dual = false;
  std::string recurrence_regime;  // "conservative" or "killed"
  std::vector<int> excluded_states;
  double tolerance = 0.0;

  bool structure_ok() const;  // 0<=>1, 2<=>3<=>4, 0=>2, full agreement when conservative
  bool full_agreement() const;
};

nlohmann::json to_json(const EquivalenceMatrix& m);

/// Evaluates all five conditions at tolerance_scale * (1 + ||u||_inf) m-a.e.
/// and asserts the structural implications between them. Requires m
/// sub-invariant (NotSubInvariant); throws InconsistentVerdict if the computed
/// booleans ever violate the structure, which signals a numerical defect.
EquivalenceMatrix equivalence_suite(const MarkovModel& model, const StateFunction& u,
                                    double tolerance_scale = 1e-8);

/// Asserts that min, max, sum and scalar multiples of two invariant functions
/// stay invariant. Throws InputNotInvariant when u or v is not.
Verdict lattice_closure_check(const MarkovModel& model, const StateFunction& u,
                              const StateFunction& v);

/// The finite-space semi-Dirichlet form <-L u, v>_m.
double dirichlet_form(const MarkovModel& model, const StateFunction& u, const StateFunction& v);

/// Minimal c with E(u, v) <= c ||v||_inf over v supported in the given state
/// set: sum over the set of |(-L u)(x)| m(x).
double dirichlet_bound_constant(const MarkovModel& model, const StateFunction& u,
                                const std::vector<int>& states);

}  // namespace mpk
