#pragma once

#include "mpk/types.hpp"
#include "mpk/verdict.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mpk {

/// A finite partition 0 = t_0 < t_1 < ... < t_n of the time axis.
struct Partition {
  std::vector<double> times;

  int intervals() const { return static_cast<int>(times.size()) - 1; }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

Partition make_partition(std::vector<double> times);

struct AdmissibilityCertificate {
  std::string rule;        // generator rule, e.g. "dyadic"
  bool nested = false;     // tau_k included in tau_{k+1}, checked on the levels
  bool union_dense = false;      // property of the generating family
  bool shift_stable = false;     // closure of the family under shifts
};

struct AdmissibleSequence {
  double horizon = 0.0;
  int levels = 0;
  std::vector<Partition> partitions;
  AdmissibilityCertificate certificate;
};

/// tau_k = { j 2^-k : 0 <= j <= T 2^k } for k = 1..levels. The dyadic family
/// is nested, has dense union and is closed under shifts by its own points;
/// nesting is verified on the generated levels, the asymptotic clauses are
/// certified by the rule.
AdmissibleSequence dyadic_sequence(double horizon, int levels);

/// Integer analogue for dtmc models: spacing 2^{levels-k} down to 1.
AdmissibleSequence integer_sequence(double horizon, int levels);

AdmissibleSequence admissible_sequence_for(const MarkovModel& model, double horizon, int levels);

/// The partition variation sum
///   sum_i P^beta_{t_{i-1}} |u - P^beta_{t_i - t_{i-1}} u| + P^beta_{t_n} |u|
/// evaluated entrywise with the exact semigroup.
StateFunction variation_on_partition(const MarkovModel& model, const StateFunction& u, double beta,
                                     const Partition& tau);

struct VariationReport {
  double beta = 0.0;
  double horizon = 0.0;  // horizon actually used (may have been grown)
  std::vector<StateFunction> level_values;
  StateFunction sup_estimate;
  std::vector<bool> converged;  // per state
  bool is_quasimartingale = false;
  double cauchy_gap = 0.0;
  double cauchy_tolerance = 0.0;
  StateFunction tail;  // final-level tail term P^beta_{t_n} |u|
  bool beta_zero_conservative = false;
  double refinement_violation = 0.0;  // max decrease between consecutive levels
  // decomposition cross-certificate (beta > 0 only)
  bool bound_checked = false;
  StateFunction bound;  // u1 + u2
  double bound_slack = 0.0;

  Verdict to_verdict(const MarkovModel& model) const;
};

/// Evaluates the variation along the sequence, doubles the horizon (dyadic
/// rule, up to 2^10) until the tail term is negligible unless beta = 0 on a
/// conservative model, and certifies the levels against the decomposition
/// bound u1 + u2 when beta > 0. Throws HorizonTooShort when the tail cannot
/// be driven below tolerance.
VariationReport quasimartingale_verdict(const MarkovModel& model, const StateFunction& u,
                                        double beta, const AdmissibleSequence& seq);

/// Checks sup_{f in family} int |P_t u - u| f dm <= bound_constant * t on the
/// time grid, after verifying that the family members are unit densities,
/// stable under the dual semigroup (FamilyNotStable) and jointly supported on
/// every positive-mass state (SupportGap).
Verdict criterion_dual_family(const MarkovModel& model, const StateFunction& u,
                              const std::vector<StateFunction>& family, double horizon,
                              double bound_constant);

/// Resolvent-side criteria: clause checks for the three certificate variants
/// (drift bound |P_t u - u| <= c t, discounted boundedness, anchored resolvent
/// growth) and the beta ranges they certify.
Verdict criterion_resolvent(const MarkovModel& model, const StateFunction& u, double alpha,
                            const StateFunction& c, int anchor_state = 0);

}  // namespace mpk
