#include "mpk/trajectory.hpp"

#include "mpk/excessive.hpp"
#include "mpk/semigroup.hpp"
#include "mpk/verdict.hpp"

#include <algorithm>
#include <cmath>

namespace mpk {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t splitmix64(uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(uint64_t seed, uint64_t path_index) {
  key_ = splitmix64(splitmix64(seed) ^ (path_index * 0xda942042e4dd58b5ULL + 1));
}

double CounterRng::uniform() {
  const uint64_t bits = splitmix64(key_ + (++counter_) * kGolden);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double CounterRng::exponential(double rate) {
  return -std::log1p(-uniform()) / rate;
}

size_t CounterRng::categorical(const std::vector<double>& weights) {
  const double draw = uniform();
  double cumulative = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (draw < cumulative) return i;
  }
  return weights.size();
}

int Trajectory::state_at(double t) const {
  if (t >= lifetime) return -1;
  size_t idx = 0;
  while (idx + 1 < times.size() && times[idx + 1] <= t) ++idx;
  return states[idx];
}

double Trajectory::evaluate(const StateFunction& u, double t) const {
  const int s = state_at(t);
  return s < 0 ? 0.0 : u(s);
}

Trajectory sample_path(const MarkovModel& model, int start, double horizon, uint64_t seed,
                       uint64_t path_index) {
  if (!model.is_ctmc()) throw InvariantViolation("path sampling runs on ctmc models");
  if (start < 0 || start >= model.size()) throw InvariantViolation("start state out of range");
  if (!(horizon >= 0.0)) throw InvariantViolation("horizon must be nonnegative");

  CounterRng rng(seed, path_index);
  Trajectory traj;
  traj.horizon = horizon;
  traj.times.push_back(0.0);
  traj.states.push_back(start);

  double now = 0.0;
  int state = start;
  while (true) {
    const double rate = -model.transition(state, state);
    if (rate <= 0.0) break;  // absorbing, sits here forever
    now += rng.exponential(rate);
    if (now > horizon) break;

    std::vector<double> weights;
    weights.reserve(static_cast<size_t>(model.size()) - 1);
    std::vector<int> targets;
    for (int y = 0; y < model.size(); ++y) {
      if (y == state) continue;
      weights.push_back(std::max(model.transition(state, y), 0.0) / rate);
      targets.push_back(y);
    }
    const size_t pick = rng.categorical(weights);
    traj.times.push_back(now);
    if (pick == weights.size()) {
      // the row-sum deficit sends the path to the cemetery
      traj.states.push_back(-1);
      traj.lifetime = now;
      break;
    }
    state = targets[pick];
    traj.states.push_back(state);
  }
  return traj;
}

namespace {

double pairwise_sum(const std::vector<double>& values, size_t lo, size_t hi) {
  if (hi - lo <= 32) {
    double sum = 0.0;
    for (size_t i = lo; i < hi; ++i) sum += values[i];
    return sum;
  }
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi);
}

// order-independent mean and standard error
std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  const auto n = values.size();
  const double mean = pairwise_sum(values, 0, n) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = n > 1 ? pairwise_sum(sq, 0, n) / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

// degenerate samples (se = 0) count as concordant only on exact-level agreement
double z_score(double mean, double target, double se) {
  if (se > 0.0) return (mean - target) / se;
  const bool equal = std::abs(mean - target) <= 1e-12 * (1.0 + std::abs(target));
  return equal ? 0.0 : std::numeric_limits<double>::infinity();
}

void enforce_budget(const EmpiricalReport& report, double se_budget) {
  for (const auto& row : report.rows) {
    if (row.std_error > se_budget) {
      throw PrecisionBudget("standard error " + std::to_string(row.std_error) +
                            " above budget " + std::to_string(se_budget) + " at t = " +
                            std::to_string(row.time));
    }
  }
}

}  // namespace

EmpiricalReport supermartingale_test(const MarkovModel& model, const StateFunction& u, double beta,
                                     int start, const std::vector<double>& times, long paths,
                                     uint64_t seed, double se_budget) {
  EmpiricalReport report;
  report.property = "supermartingale";
  report.paths = paths;
  report.seed = seed;
  try {
    report.precondition_ok = is_excessive(model, u, beta).is_excessive;
  } catch (const NegativeFunction&) {
    report.precondition_ok = false;
  }

  const double horizon = *std::max_element(times.begin(), times.end());
  std::vector<std::vector<double>> samples(times.size(), std::vector<double>(static_cast<size_t>(paths)));
  for (long p = 0; p < paths; ++p) {
    const Trajectory traj = sample_path(model, start, horizon, seed, static_cast<uint64_t>(p));
    for (size_t k = 0; k < times.size(); ++k) {
      samples[k][static_cast<size_t>(p)] = std::exp(-beta * times[k]) * traj.evaluate(u, times[k]);
    }
  }

  report.pass = report.precondition_ok;
  for (size_t k = 0; k < times.size(); ++k) {
    const auto [mean, se] = mean_and_se(samples[k]);
    EmpiricalRow row;
    row.time = times[k];
    row.estimate = mean;
    row.std_error = se;
    row.target = std::exp(-beta * times[k]) * semigroup_apply(model, times[k], u)(start);
    row.z = z_score(mean, row.target, se);
    const bool drift_ok = mean <= u(start) + 3.0 * se + 1e-12;
    row.pass = drift_ok && std::abs(row.z) <= 3.0;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  enforce_budget(report, se_budget);
  return report;
}

EmpiricalReport martingale_test(const MarkovModel& model, const StateFunction& u, int start,
                                const std::vector<double>& times, long paths, uint64_t seed,
                                double se_budget) {
  EmpiricalReport report;
  report.property = "martingale";
  report.paths = paths;
  report.seed = seed;
  report.precondition_ok = is_harmonic(model, u);

  const double horizon = *std::max_element(times.begin(), times.end());
  std::vector<std::vector<double>> samples(times.size(), std::vector<double>(static_cast<size_t>(paths)));
  for (long p = 0; p < paths; ++p) {
    const Trajectory traj = sample_path(model, start, horizon, seed, static_cast<uint64_t>(p));
    for (size_t k = 0; k < times.size(); ++k) {
      samples[k][static_cast<size_t>(p)] = traj.evaluate(u, times[k]);
    }
  }

  report.pass = report.precondition_ok;
  for (size_t k = 0; k < times.size(); ++k) {
    const auto [mean, se] = mean_and_se(samples[k]);
    EmpiricalRow row;
    row.time = times[k];
    row.estimate = mean;
    row.std_error = se;
    row.target = u(start);
    row.z = z_score(mean, row.target, se);
    row.pass = std::abs(mean - row.target) <= 3.0 * se + 1e-12;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  enforce_budget(report, se_budget);
  return report;
}

EmpiricalReport empirical_variation(const MarkovModel& model, const StateFunction& u, double beta,
                                    int start, const Partition& tau, long paths, uint64_t seed,
                                    double se_budget) {
  EmpiricalReport report;
  report.property = "empirical-variation";
  report.paths = paths;
  report.seed = seed;

  const int n_int = tau.intervals();
  // conditional increments are evaluated analytically through the Markov
  // property, which removes the nested-simulation variance entirely
  std::vector<StateFunction> increment(static_cast<size_t>(n_int));
  for (int i = 0; i < n_int; ++i) {
    const double gap = tau.times[static_cast<size_t>(i) + 1] - tau.times[static_cast<size_t>(i)];
    increment[static_cast<size_t>(i)] =
        (u - std::exp(-beta * gap) * semigroup_apply(model, gap, u)).cwiseAbs();
  }
  const StateFunction abs_u = u.cwiseAbs();

  const double horizon = tau.horizon();
  std::vector<double> samples(static_cast<size_t>(paths));
  for (long p = 0; p < paths; ++p) {
    const Trajectory traj = sample_path(model, start, horizon, seed, static_cast<uint64_t>(p));
    double total = 0.0;
    for (int i = 0; i < n_int; ++i) {
      const double t_prev = tau.times[static_cast<size_t>(i)];
      total += std::exp(-beta * t_prev) * traj.evaluate(increment[static_cast<size_t>(i)], t_prev);
    }
    total += std::exp(-beta * horizon) * traj.evaluate(abs_u, horizon);
    samples[static_cast<size_t>(p)] = total;
  }

  const auto [mean, se] = mean_and_se(samples);
  EmpiricalRow row;
  row.time = horizon;
  row.estimate = mean;
  row.std_error = se;
  row.target = variation_on_partition(model, u, beta, tau)(start);
  row.z = z_score(mean, row.target, se);
  row.pass = std::abs(row.z) <= 3.0;
  report.rows.push_back(row);
  report.pass = row.pass;
  enforce_budget(report, se_budget);
  return report;
}

Verdict EmpiricalReport::to_verdict(const MarkovModel& model) const {
  (void)model;
  Verdict v;
  v.property = property;
  v.pass = pass;
  v.tolerance = 3.0;  // standard-error units
  double worst = 0.0;
  for (const auto& row : rows) {
    if (std::abs(row.z) > worst) {
      worst = std::abs(row.z);
      v.witness.parameter = row.time;
    }
  }
  v.worst_violation = worst - 3.0;
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    rows_json.push_back({{"time", row.time},
                         {"estimate", row.estimate},
                         {"std_error", row.std_error},
                         {"target", row.target},
                         {"z", row.z},
                         {"pass", row.pass}});
  }
  v.details = {{"rows", rows_json},
               {"paths", paths},
               {"seed", seed},
               {"analytic_precondition", precondition_ok}};
  return v;
}

}  // namespace mpk
