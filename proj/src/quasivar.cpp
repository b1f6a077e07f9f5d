#include "mpk/quasivar.hpp"

#include "mpk/excessive.hpp"
#include "mpk/invariant_measure.hpp"
#include "mpk/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mpk {

Partition make_partition(std::vector<double> times) {
  if (times.empty()) throw InvariantViolation("partition must be nonempty");
  if (times.front() != 0.0) throw InvariantViolation("partition must start at 0");
  for (size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] < times[i + 1])) {
      throw InvariantViolation("partition times must be strictly increasing");
    }
  }
  for (double t : times) {
    if (!std::isfinite(t)) throw InvariantViolation("partition times must be finite");
  }
  return Partition{std::move(times)};
}

AdmissibleSequence dyadic_sequence(double horizon, int levels) {
  if (!(horizon > 0.0)) throw InvariantViolation("dyadic sequence wants horizon > 0");
  if (levels < 1) throw InvariantViolation("dyadic sequence wants levels >= 1");

  AdmissibleSequence seq;
  seq.horizon = horizon;
  seq.levels = levels;
  for (int k = 1; k <= levels; ++k) {
    const double spacing = std::ldexp(1.0, -k);
    const long jmax = static_cast<long>(std::floor(horizon / spacing + 1e-9));
    std::vector<double> times;
    times.reserve(static_cast<size_t>(jmax) + 1);
    for (long j = 0; j <= jmax; ++j) times.push_back(static_cast<double>(j) * spacing);
    seq.partitions.push_back(make_partition(std::move(times)));
  }

  seq.certificate.rule = "dyadic";
  // dyadic points are exact doubles, so nesting is checked literally
  bool nested = true;
  for (int k = 0; k + 1 < levels; ++k) {
    const auto& fine = seq.partitions[static_cast<size_t>(k) + 1].times;
    for (double t : seq.partitions[static_cast<size_t>(k)].times) {
      nested = nested && std::binary_search(fine.begin(), fine.end(), t);
    }
  }
  seq.certificate.nested = nested;
  seq.certificate.union_dense = true;   // dyadic rationals are dense
  seq.certificate.shift_stable = true;  // and closed under addition
  return seq;
}

AdmissibleSequence integer_sequence(double horizon, int levels) {
  if (!(horizon >= 1.0)) throw InvariantViolation("integer sequence wants horizon >= 1");
  if (levels < 1) throw InvariantViolation("integer sequence wants levels >= 1");
  const long t_max = static_cast<long>(std::nearbyint(horizon));

  AdmissibleSequence seq;
  seq.horizon = static_cast<double>(t_max);
  seq.levels = levels;
  for (int k = 1; k <= levels; ++k) {
    const long spacing = 1L << (levels - k);
    std::vector<double> times;
    for (long t = 0; t <= t_max; t += spacing) times.push_back(static_cast<double>(t));
    if (times.back() != static_cast<double>(t_max)) times.push_back(static_cast<double>(t_max));
    seq.partitions.push_back(make_partition(std::move(times)));
  }
  seq.certificate = {"integer", true, true, true};
  return seq;
}

AdmissibleSequence admissible_sequence_for(const MarkovModel& model, double horizon, int levels) {
  return model.is_ctmc() ? dyadic_sequence(horizon, levels) : integer_sequence(horizon, levels);
}

namespace {

bool uniform_spacing(const Partition& tau, double& delta) {
  if (tau.intervals() < 1) return false;
  delta = tau.times[1] - tau.times[0];
  for (int i = 1; i < tau.intervals(); ++i) {
    if (tau.times[static_cast<size_t>(i) + 1] - tau.times[static_cast<size_t>(i)] != delta) {
      return false;
    }
  }
  return true;
}

}  // namespace

StateFunction variation_on_partition(const MarkovModel& model, const StateFunction& u, double beta,
                                     const Partition& tau) {
  if (tau.times.empty() || tau.times.front() != 0.0) {
    throw InvariantViolation("variation wants a partition starting at 0");
  }
  const StateFunction abs_u = u.cwiseAbs();
  const int n_int = tau.intervals();
  if (n_int == 0) return abs_u;  // only the tail term at t = 0

  double delta = 0.0;
  if (uniform_spacing(tau, delta)) {
    const Matrix step = std::exp(-beta * delta) * transition_matrix(model, delta);
    const StateFunction w = (u - step * u).cwiseAbs();
    StateFunction acc = StateFunction::Zero(u.size());
    StateFunction cur = w;
    StateFunction tail = abs_u;
    for (int i = 0; i < n_int; ++i) {
      acc += cur;
      cur = step * cur;
      tail = step * tail;
    }
    return acc + tail;
  }

  // general partitions keep a running matrix P^beta_{t_{i-1}} and cache the
  // per-gap step matrices
  std::map<double, Matrix> steps;
  Matrix running = Matrix::Identity(model.size(), model.size());
  StateFunction result = StateFunction::Zero(u.size());
  for (int i = 0; i < n_int; ++i) {
    const double gap = tau.times[static_cast<size_t>(i) + 1] - tau.times[static_cast<size_t>(i)];
    auto it = steps.find(gap);
    if (it == steps.end()) {
      it = steps.emplace(gap, std::exp(-beta * gap) * transition_matrix(model, gap)).first;
    }
    const StateFunction w = (u - it->second * u).cwiseAbs();
    result += running * w;
    running = running * it->second;
  }
  result += running * abs_u;
  return result;
}

namespace {

StateFunction tail_term(const MarkovModel& model, const StateFunction& u, double beta,
                        double horizon) {
  return std::exp(-beta * horizon) * semigroup_apply(model, horizon, u.cwiseAbs());
}

AdmissibleSequence regrow(const MarkovModel& model, const AdmissibleSequence& seq,
                          double horizon) {
  if (seq.certificate.rule == "integer") return integer_sequence(horizon, seq.levels);
  if (seq.certificate.rule == "dyadic") return dyadic_sequence(horizon, seq.levels);
  (void)model;
  throw HorizonTooShort("cannot grow a custom partition sequence; rebuild it with a larger horizon");
}

}  // namespace

VariationReport quasimartingale_verdict(const MarkovModel& model, const StateFunction& u,
                                        double beta, const AdmissibleSequence& seq) {
  const double unorm = u.lpNorm<Eigen::Infinity>();
  const double tol = 1e-6 * (1.0 + unorm);

  VariationReport report;
  report.beta = beta;
  report.cauchy_tolerance = tol;
  report.beta_zero_conservative = beta == 0.0 && model.is_conservative();

  AdmissibleSequence work = seq;
  if (!report.beta_zero_conservative) {
    // the tail must vanish for the level values to approximate the full
    // variation; double the horizon until it does
    while (tail_term(model, u, beta, work.horizon).lpNorm<Eigen::Infinity>() > tol &&
           work.horizon < 1024.0) {
      work = regrow(model, seq, std::min(2.0 * work.horizon, 1024.0));
    }
    const double tail_norm = tail_term(model, u, beta, work.horizon).lpNorm<Eigen::Infinity>();
    if (tail_norm > tol) {
      throw HorizonTooShort("tail term " + std::to_string(tail_norm) + " at horizon " +
                            std::to_string(work.horizon) + " exceeds " + std::to_string(tol));
    }
  }
  report.horizon = work.horizon;

  for (const auto& tau : work.partitions) {
    report.level_values.push_back(variation_on_partition(model, u, beta, tau));
  }
  const size_t n_levels = report.level_values.size();

  report.sup_estimate = report.level_values.front();
  report.refinement_violation = 0.0;
  for (size_t k = 1; k < n_levels; ++k) {
    const StateFunction drop = report.level_values[k - 1] - report.level_values[k];
    report.refinement_violation = std::max(report.refinement_violation, drop.maxCoeff());
    report.sup_estimate = report.sup_estimate.cwiseMax(report.level_values[k]);
  }

  report.tail = tail_term(model, u, beta, work.horizon);

  // the dyadic level values converge first order in the spacing, so a state
  // counts as converged when its increment is already below tolerance or
  // still decaying geometrically (certified finite limit)
  if (n_levels >= 2) {
    const StateFunction gap = report.level_values[n_levels - 1] - report.level_values[n_levels - 2];
    report.cauchy_gap = gap.cwiseAbs().lpNorm<Eigen::Infinity>();
    StateFunction previous_gap = gap;
    if (n_levels >= 3) {
      previous_gap = report.level_values[n_levels - 2] - report.level_values[n_levels - 3];
    }
    for (int i = 0; i < u.size(); ++i) {
      const bool small = std::abs(gap(i)) < tol;
      const bool decaying =
          n_levels >= 3 && std::abs(gap(i)) <= 0.66 * std::abs(previous_gap(i)) + tol;
      report.converged.push_back(small || decaying);
    }
  } else {
    report.cauchy_gap = 0.0;
    report.converged.assign(static_cast<size_t>(u.size()), true);
  }

  if (beta > 0.0) {
    // the decomposition bound sup_k V <= u1 + u2 is the definitive finiteness
    // certificate; the level values quantify the sup it dominates
    const RaoDecomposition parts = rao_decompose(model, u, beta);
    report.bound = parts.u1 + parts.u2;
    report.bound_checked = true;
    report.bound_slack = (report.sup_estimate - report.bound).maxCoeff();
    report.is_quasimartingale = report.bound_slack <= 1e-8;
  } else {
    report.is_quasimartingale = report.cauchy_gap < tol;
  }
  return report;
}

Verdict VariationReport::to_verdict(const MarkovModel& model) const {
  Verdict v;
  v.property = "quasimartingale-variation";
  v.pass = is_quasimartingale;
  v.worst_violation = cauchy_gap;
  v.tolerance = cauchy_tolerance;
  if (!level_values.empty() && level_values.back().size() > 0) {
    int idx = 0;
    StateFunction last = level_values.back();
    if (level_values.size() >= 2) {
      last = (level_values.back() - level_values[level_values.size() - 2]).cwiseAbs();
    }
    last.maxCoeff(&idx);
    v.witness.state = model.space.label_of(idx);
    v.witness.parameter = horizon;
  }
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : level_values) levels.push_back(vector_json(lv));
  v.details = {{"beta", beta},
               {"horizon", horizon},
               {"levels", levels},
               {"sup_estimate", vector_json(sup_estimate)},
               {"tail", vector_json(tail)},
               {"refinement_violation", refinement_violation},
               {"beta_zero_conservative", beta_zero_conservative}};
  if (bound_checked) {
    v.details["decomposition_bound"] = vector_json(bound);
    v.details["bound_slack"] = bound_slack;
  }
  return v;
}

Verdict criterion_dual_family(const MarkovModel& model, const StateFunction& u,
                              const std::vector<StateFunction>& family, double horizon,
                              double bound_constant) {
  if (family.empty()) throw SupportGap("empty density family cannot cover the space");
  const auto& m = model.measure;

  for (size_t i = 0; i < family.size(); ++i) {
    const auto& f = family[i];
    if (f.size() != m.size()) throw InvariantViolation("family member has wrong length");
    if (f.minCoeff() < -1e-12) {
      throw NegativeFunction("family member " + std::to_string(i) + " is negative");
    }
    const double norm1 = f.cwiseAbs().dot(m);
    if (norm1 > 1.0 + 1e-9) {
      throw InvariantViolation("family member " + std::to_string(i) + " has unit-ball norm " +
                               std::to_string(norm1));
    }
  }

  for (int x : model.support()) {
    bool covered = false;
    for (const auto& f : family) covered = covered || f(x) > 0.0;
    if (!covered) {
      throw SupportGap("positive-mass state " + model.space.label_of(x) +
                       " is outside every family support");
    }
  }

  // stability of the family under the dual semigroup, up to membership
  // distance in the density norm
  std::vector<double> grid;
  for (double t : time_test_grid(model)) {
    if (t <= horizon) grid.push_back(t);
  }
  double stability_worst = 0.0;
  for (double s : grid) {
    const Matrix dual_step = adjoint_transition(model, s);
    for (size_t i = 0; i < family.size(); ++i) {
      const StateFunction moved = dual_step * family[i];
      double best = std::numeric_limits<double>::infinity();
      for (const auto& g : family) {
        best = std::min(best, (moved - g).cwiseAbs().dot(m));
      }
      stability_worst = std::max(stability_worst, best);
      if (best > 1e-9) {
        throw FamilyNotStable("dual step at s = " + std::to_string(s) + " moves member " +
                              std::to_string(i) + " a distance " + std::to_string(best) +
                              " from the family");
      }
    }
  }

  Verdict v;
  v.property = "dual-family-criterion";
  v.tolerance = 1e-9 * (1.0 + u.lpNorm<Eigen::Infinity>());
  double worst = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    const StateFunction diff = (semigroup_apply(model, t, u) - u).cwiseAbs();
    double lhs = 0.0;
    for (const auto& f : family) lhs = std::max(lhs, diff.dot(f.cwiseProduct(m)));
    const double gap = lhs - bound_constant * t;
    if (gap > worst) {
      worst = gap;
      v.witness.parameter = t;
    }
  }
  v.worst_violation = worst;
  v.pass = worst <= v.tolerance;

  // a passing family bound certifies the quasimartingale property for every
  // beta > 0; cross-check one level directly
  const VariationReport cross =
      quasimartingale_verdict(model, u, 1.0, admissible_sequence_for(model, std::min(horizon, 8.0), 5));
  v.details = {{"bound_constant", bound_constant},
               {"stability_worst", stability_worst},
               {"family_size", family.size()},
               {"certifies", "quasimartingale for every beta > 0"},
               {"cross_check_beta_1", cross.is_quasimartingale}};
  return v;
}

Verdict criterion_resolvent(const MarkovModel& model, const StateFunction& u, double alpha,
                            const StateFunction& c, int anchor_state) {
  if (c.minCoeff() < 0.0) throw NegativeFunction("the drift bound function c must be nonnegative");
  if (!(alpha >= 0.0)) throw InvariantViolation("criterion wants alpha >= 0");
  if (anchor_state < 0 || anchor_state >= model.size()) {
    throw InvariantViolation("anchor state out of range");
  }

  const StateFunction abs_u = u.cwiseAbs();
  const double unorm = abs_u.lpNorm<Eigen::Infinity>();
  const double tol = 1e-9 * (1.0 + unorm);

  // alpha = 0 resolvents exist only on transient chains; treat a singular
  // system as "infinite potential", which is verdict content, not an error
  auto potential = [&](const StateFunction& f) -> std::pair<bool, StateFunction> {
    if (alpha > 0.0) return {true, resolvent_apply(model, alpha, f)};
    try {
      Eigen::PartialPivLU<Matrix> lu(-generator_matrix(model));
      if (!(lu.rcond() > 1e-14)) return {false, StateFunction()};
      return {true, StateFunction(lu.solve(f))};
    } catch (const Error&) {
      return {false, StateFunction()};
    }
  };

  double drift_worst = -std::numeric_limits<double>::infinity();
  double drift_time = 0.0;
  double discounted_sup = (abs_u + c).lpNorm<Eigen::Infinity>();  // the t = 0 value
  double tail_value = 0.0;
  double anchored_ratio = 0.0;
  const auto grid = time_test_grid(model);
  for (double t : grid) {
    const StateFunction pu = semigroup_apply(model, t, u);
    const double drift_gap = ((pu - u).cwiseAbs() - t * c).maxCoeff();
    if (drift_gap > drift_worst) {
      drift_worst = drift_gap;
      drift_time = t;
    }
    const double discounted =
        (std::exp(-alpha * t) * semigroup_apply(model, t, abs_u + c)).lpNorm<Eigen::Infinity>();
    discounted_sup = std::max(discounted_sup, discounted);
    if (t == grid.back()) {
      tail_value = (std::exp(-alpha * t) * semigroup_apply(model, t, abs_u)).lpNorm<Eigen::Infinity>();
    }
    const auto anchored = potential((pu - u).cwiseAbs());
    if (anchored.first && t > 0.0) {
      anchored_ratio = std::max(anchored_ratio, anchored.second(anchor_state) / t);
    }
  }

  const bool drift_ok = drift_worst <= tol;
  const auto pot_abs = potential(abs_u + c);
  const bool variant_i = pot_abs.first && drift_ok;    // certifies beta = alpha
  const bool variant_ii = drift_ok;                    // discounted sup is finite here
  const auto pot_anchor = potential(abs_u);
  const bool variant_iii = pot_anchor.first;           // anchored growth, beta > alpha

  Verdict v;
  v.property = "resolvent-criterion";
  v.pass = variant_i || variant_ii || variant_iii;
  v.worst_violation = drift_worst;
  v.tolerance = tol;
  v.witness.state = model.space.label_of(anchor_state);
  v.witness.parameter = drift_time;
  v.details = {
      {"alpha", alpha},
      {"clauses",
       {{"potential_finite", pot_abs.first},
        {"discounted_limsup", tail_value},
        {"drift_bound_holds", drift_ok},
        {"discounted_sup", discounted_sup},
        {"anchored_potential_finite", pot_anchor.first},
        {"anchored_growth_constant", anchored_ratio}}},
      {"variants",
       {{"i", {{"certifies", variant_i}, {"beta_range", "beta = alpha"}}},
        {"ii", {{"certifies", variant_ii}, {"beta_range", "beta > alpha"}}},
        {"iii", {{"certifies", variant_iii}, {"beta_range", "beta > alpha"}}}}},
      {"finite_space_note", "potential and boundedness clauses are vacuous on finite spaces"},
  };
  return v;
}

}  // namespace mpk
