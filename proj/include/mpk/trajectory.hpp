#pragma once

#include "mpk/types.hpp"
#include "mpk/quasivar.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace mpk {

/// Counter-based generator keyed by (seed, path index): every draw is a pure
/// function of the key and a running counter, so paths are reproducible under
/// any parallel schedule.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t path_index);

  double uniform();               // in [0, 1)
  double exponential(double rate);
  /// Index into the cumulative weights, weights summing to <= 1; returns
  /// weights.size() for the leftover mass.
  size_t categorical(const std::vector<double>& weights);

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

struct Trajectory {
  std::vector<double> times;   // times[0] = 0, then jump times
  std::vector<int> states;     // state occupied from times[i] on; -1 = cemetery
  double lifetime = std::numeric_limits<double>::infinity();
  double horizon = 0.0;

  /// State occupied at time t (t <= horizon), -1 once dead.
  int state_at(double t) const;
  /// u(X_t) with the cemetery convention u(Delta) = 0.
  double evaluate(const StateFunction& u, double t) const;
};

/// Gillespie sampling of the killed chain: exponential holding times with
/// rate |Q(x,x)|, jump probabilities Q(x,y)/|Q(x,x)| and the row-sum deficit
/// as the killing probability. Deterministic given (seed, path_index).
Trajectory sample_path(const MarkovModel& model, int start, double horizon, uint64_t seed,
                       uint64_t path_index = 0);

struct EmpiricalRow {
  double time = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;  // analytic comparison value
  double z = 0.0;
  bool pass = false;
};

struct EmpiricalReport {
  std::string property;
  std::vector<EmpiricalRow> rows;
  long paths = 0;
  uint64_t seed = 0;
  bool precondition_ok = true;  // analytic side of the property
  bool pass = false;

  Verdict to_verdict(const MarkovModel& model) const;
};

/// Estimates E^x[e^{-beta t} u(X_t)] at each time and asserts the
/// supermartingale drift (estimate <= u(x) + 3 SE) together with concordance
/// with the analytic e^{-beta t} P_t u(x) within 3 SE. The precondition flag
/// records whether u is actually beta-excessive; a function that fails it
/// analytically is expected to fail empirically (negative control).
/// Throws PrecisionBudget when the achieved standard error stays above
/// se_budget after spending the full path budget.
EmpiricalReport supermartingale_test(const MarkovModel& model, const StateFunction& u, double beta,
                                     int start, const std::vector<double>& times, long paths,
                                     uint64_t seed,
                                     double se_budget = std::numeric_limits<double>::infinity());

/// |Ê^x[u(X_t)] - u(x)| <= 3 SE at every grid time.
EmpiricalReport martingale_test(const MarkovModel& model, const StateFunction& u, int start,
                                const std::vector<double>& times, long paths, uint64_t seed,
                                double se_budget = std::numeric_limits<double>::infinity());

/// Estimates the conditional-variation sum over the partition, computing each
/// conditional expectation analytically as e^{-beta t_i}(P_dt u)(X_{t_{i-1}})
/// along the simulated path, and compares with variation_on_partition at 3 SE.
EmpiricalReport empirical_variation(const MarkovModel& model, const StateFunction& u, double beta,
                                    int start, const Partition& tau, long paths, uint64_t seed,
                                    double se_budget = std::numeric_limits<double>::infinity());

}  // namespace mpk
