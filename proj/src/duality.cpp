#include "mpk/duality.hpp"

#include "mpk/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpk {

Verdict check_subinvariant(const MarkovModel& model, double tol) {
  const Eigen::RowVectorXd flow = model.measure.transpose() * model.transition;
  const Eigen::RowVectorXd excess =
      model.is_ctmc() ? flow : Eigen::RowVectorXd(flow - model.measure.transpose());

  Verdict v;
  v.property = "sub-invariant";
  v.tolerance = tol;
  int idx = 0;
  v.worst_violation = excess.maxCoeff(&idx);
  v.witness.state = model.space.label_of(idx);
  v.pass = v.worst_violation <= tol;
  v.details = {{"column_flow", vector_json(excess.transpose())}};
  return v;
}

DualModel make_dual(const MarkovModel& model) {
  const int n = model.size();
  DualModel dual;
  dual.base = model;
  dual.support = model.support();
  dual.dual_transition = Matrix::Zero(n, n);
  for (int x : dual.support) {
    for (int y : dual.support) {
      dual.dual_transition(x, y) = model.measure(y) * model.transition(y, x) / model.measure(x);
    }
  }
  dual.sub_invariant = check_subinvariant(model).pass;
  return dual;
}

MarkovModel DualModel::reduced_model() const {
  const int k = static_cast<int>(support.size());
  MarkovModel reduced;
  reduced.mode = base.mode;
  reduced.transition.resize(k, k);
  reduced.measure.resize(k);
  for (int a = 0; a < k; ++a) {
    reduced.space.labels.push_back(base.space.label_of(support[static_cast<size_t>(a)]));
    reduced.measure(a) = base.measure(support[static_cast<size_t>(a)]);
    for (int b = 0; b < k; ++b) {
      reduced.transition(a, b) =
          dual_transition(support[static_cast<size_t>(a)], support[static_cast<size_t>(b)]);
    }
  }
  return reduced;
}

Matrix dual_resolvent_matrix(const DualModel& dual, double alpha) {
  if (!dual.sub_invariant) {
    throw NotSubInvariant("dual resolvent wants a sub-invariant reference measure");
  }
  const Matrix reduced = resolvent_matrix(dual.reduced_model(), alpha);
  Matrix embedded = Matrix::Zero(dual.base.size(), dual.base.size());
  const int k = static_cast<int>(dual.support.size());
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      embedded(dual.support[static_cast<size_t>(a)], dual.support[static_cast<size_t>(b)]) =
          reduced(a, b);
    }
  }
  return embedded;
}

StateFunction dual_resolvent_apply(const DualModel& dual, double alpha, const StateFunction& f) {
  return dual_resolvent_matrix(dual, alpha) * f;
}

double duality_pairing_residual(const DualModel& dual, double alpha,
                                const std::vector<StateFunction>& test_functions) {
  const Matrix primal = resolvent_matrix(dual.base, alpha);
  const Matrix adjoint = dual_resolvent_matrix(dual, alpha);
  const auto& m = dual.base.measure;
  double worst = 0.0;
  for (const auto& f : test_functions) {
    for (const auto& g : test_functions) {
      const double lhs = f.cwiseProduct(m).dot(primal * g);
      const double rhs = g.cwiseProduct(m).dot(adjoint * f);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

Verdict is_U_invariant(const MarkovModel& model, const StateFunction& v,
                       double tolerance_scale) {
  const double tol = tolerance_scale * (1.0 + v.lpNorm<Eigen::Infinity>());
  const auto support = model.support();

  Verdict out;
  out.property = "U-invariant";
  out.tolerance = tol;
  double worst = 0.0;
  double worst_alpha = 0.0;
  int worst_state = 0;
  int worst_basis = 0;
  // with f running over the indicator basis the identity U_alpha(v f) =
  // v U_alpha f reads U_alpha(x, y) (v(y) - v(x)) = 0; linearity covers
  // every bounded f
  for (double alpha : {0.5, 1.0, 2.0}) {
    const Matrix resolvent = resolvent_matrix(model, alpha);
    for (int x : support) {
      for (int y = 0; y < model.size(); ++y) {
        const double gap = std::abs(resolvent(x, y) * (v(y) - v(x)));
        if (gap > worst) {
          worst = gap;
          worst_alpha = alpha;
          worst_state = x;
          worst_basis = y;
        }
      }
    }
  }
  out.worst_violation = worst;
  out.pass = worst <= tol;
  out.witness.state = model.space.label_of(worst_state);
  out.witness.parameter = worst_alpha;
  out.details = {{"basis_state", model.space.label_of(worst_basis)},
                 {"excluded_states", static_cast<int>(model.size() - support.size())}};
  return out;
}

StateFunction InvariancePartition::block_indicator(int block, int n) const {
  StateFunction ind = StateFunction::Zero(n);
  for (int x : blocks.at(static_cast<size_t>(block))) ind(x) = 1.0;
  return ind;
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<size_t>(x)] != x) {
    parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    x = parent[static_cast<size_t>(x)];
  }
  return x;
}

void unite(std::vector<int>& parent, int a, int b) {
  parent[static_cast<size_t>(find_root(parent, a))] = find_root(parent, b);
}

}  // namespace

InvariancePartition invariant_partition(const MarkovModel& model) {
  const int n = model.size();
  const Matrix resolvent = resolvent_matrix(model, 1.0);
  constexpr double kEdge = 1e-12;

  // invariant sets admit no resolvent flow in either direction, so the atoms
  // are the connected components of the undirected support graph; components
  // are taken over all states, the partition keeps their positive-mass parts
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (resolvent(x, y) > kEdge || resolvent(y, x) > kEdge) unite(parent, x, y);
    }
  }

  InvariancePartition partition;
  std::vector<int> root_to_block(static_cast<size_t>(n), -1);
  std::vector<StateFunction> component_indicators;
  for (int x = 0; x < n; ++x) {
    const int root = find_root(parent, x);
    if (model.measure(x) <= 0.0) {
      partition.excluded.push_back(x);
    } else {
      if (root_to_block[static_cast<size_t>(root)] < 0) {
        root_to_block[static_cast<size_t>(root)] = static_cast<int>(partition.blocks.size());
        partition.blocks.emplace_back();
        component_indicators.emplace_back(StateFunction::Zero(n));
      }
      partition.blocks[static_cast<size_t>(root_to_block[static_cast<size_t>(root)])].push_back(x);
    }
  }
  // the certified indicator is the whole component, the m-a.e. version of the
  // block indicator that is exactly invariant
  for (int x = 0; x < n; ++x) {
    const int block = root_to_block[static_cast<size_t>(find_root(parent, x))];
    if (block >= 0) component_indicators[static_cast<size_t>(block)](x) = 1.0;
  }

  for (const auto& indicator : component_indicators) {
    if (!is_U_invariant(model, indicator).pass) {
      throw InconsistentVerdict("invariant atom failed its own certificate");
    }
  }
  return partition;
}

bool EquivalenceMatrix::structure_ok() const {
  if (holds[0] != holds[1]) return false;
  if (holds[2] != holds[3] || holds[3] != holds[4]) return false;
  if (holds[0] && !holds[2]) return false;
  if ((conservative_primal || conservative_dual) && holds[2] != holds[0]) return false;
  return true;
}

bool EquivalenceMatrix::full_agreement() const {
  return std::all_of(holds.begin(), holds.end(), [&](bool h) { return h == holds[0]; });
}

nlohmann::json to_json(const EquivalenceMatrix& m) {
  return {
      {"resolvent_fixed", m.holds[0]},
      {"dual_resolvent_fixed", m.holds[1]},
      {"U_invariant", m.holds[2]},
      {"proportional_to_potential_of_one", m.holds[3]},
      {"invariant_sigma_algebra_measurable", m.holds[4]},
      {"residuals",
       {{"i", m.residuals[0]},
        {"ii", m.residuals[1]},
        {"iii", m.residuals[2]},
        {"iv", m.residuals[3]},
        {"v", m.residuals[4]}}},
      {"conservative_primal", m.conservative_primal},
      {"conservative_dual", m.conservative_dual},
      {"recurrence_regime", m.recurrence_regime},
      {"m_recurrent_clause", "not applicable on finite spaces"},
      {"excluded_states", m.excluded_states},
      {"tolerance", m.tolerance},
  };
}

EquivalenceMatrix equivalence_suite(const MarkovModel& model, const StateFunction& u,
                                    double tolerance_scale) {
  if (!check_subinvariant(model).pass) {
    throw NotSubInvariant("the equivalence suite wants a sub-invariant reference measure");
  }
  const DualModel dual = make_dual(model);
  const auto support = model.support();
  const double tol = tolerance_scale * (1.0 + u.lpNorm<Eigen::Infinity>());

  EquivalenceMatrix out;
  out.tolerance = tol;
  for (int x = 0; x < model.size(); ++x) {
    if (model.measure(x) <= 0.0) out.excluded_states.push_back(x);
  }

  const StateFunction ones = StateFunction::Ones(model.size());
  auto support_max = [&](const StateFunction& w) {
    double worst = 0.0;
    for (int x : support) worst = std::max(worst, std::abs(w(x)));
    return worst;
  };

  double r_fixed = 0.0, r_dual_fixed = 0.0, r_ratio = 0.0;
  double cons_primal = 0.0, cons_dual = 0.0;
  for (double alpha : {0.5, 1.0, 2.0}) {
    const Matrix primal = resolvent_matrix(model, alpha);
    const Matrix adjoint = dual_resolvent_matrix(dual, alpha);
    const StateFunction pu = primal * u;
    const StateFunction du = adjoint * u;
    const StateFunction p1 = primal * ones;
    const StateFunction d1 = adjoint * ones;
    r_fixed = std::max(r_fixed, support_max(alpha * pu - u));
    r_dual_fixed = std::max(r_dual_fixed, support_max(alpha * du - u));
    r_ratio = std::max(r_ratio, support_max(pu - u.cwiseProduct(p1)));
    r_ratio = std::max(r_ratio, support_max(du - u.cwiseProduct(d1)));
    cons_primal = std::max(cons_primal, support_max(alpha * p1 - ones));
    cons_dual = std::max(cons_dual, support_max(alpha * d1 - ones));
  }

  const Verdict invariance = is_U_invariant(model, u, tolerance_scale);

  const InvariancePartition partition = invariant_partition(model);
  double r_atoms = 0.0;
  for (const auto& block : partition.blocks) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int x : block) {
      lo = std::min(lo, u(x));
      hi = std::max(hi, u(x));
    }
    r_atoms = std::max(r_atoms, hi - lo);
  }

  out.residuals = {r_fixed, r_dual_fixed, invariance.worst_violation, r_ratio, r_atoms};
  for (size_t i = 0; i < 5; ++i) out.holds[i] = out.residuals[i] <= tol;
  out.conservative_primal = cons_primal <= tol;
  out.conservative_dual = cons_dual <= tol;
  out.recurrence_regime = model.is_conservative() ? "conservative" : "killed";

  if (!out.structure_ok()) {
    throw InconsistentVerdict("equivalence matrix violates its structural implications");
  }
  return out;
}

Verdict lattice_closure_check(const MarkovModel& model, const StateFunction& u,
                              const StateFunction& v) {
  if (!is_U_invariant(model, u).pass || !is_U_invariant(model, v).pass) {
    throw InputNotInvariant("lattice closure wants two invariant inputs");
  }

  Verdict out;
  out.property = "invariant-lattice-closure";
  double worst = 0.0;
  std::string worst_op;
  auto check = [&](const StateFunction& w, const std::string& op) {
    const Verdict verdict = is_U_invariant(model, w);
    if (verdict.worst_violation > worst) {
      worst = verdict.worst_violation;
      worst_op = op;
      out.witness = verdict.witness;
      out.tolerance = verdict.tolerance;
    }
    return verdict.pass;
  };

  bool pass = true;
  pass = check(u.cwiseMin(v), "min") && pass;
  pass = check(u.cwiseMax(v), "max") && pass;
  pass = check(u + v, "sum") && pass;
  for (double scale : {0.0, 0.5, 2.0, -1.0}) {
    pass = check(scale * u, "scale " + std::to_string(scale)) && pass;
  }
  out.pass = pass;
  out.worst_violation = worst;
  if (out.tolerance == 0.0) out.tolerance = is_U_invariant(model, u).tolerance;
  out.details = {{"worst_operation", worst_op}};
  return out;
}

namespace {

void require_full_support_subinvariant(const MarkovModel& model) {
  if (!check_subinvariant(model).pass) {
    throw NotSubInvariant("the energy form wants a sub-invariant reference measure");
  }
  if (model.measure.minCoeff() <= 0.0) {
    throw InvariantViolation("the energy form wants a fully supported reference measure");
  }
}

}  // namespace

double dirichlet_form(const MarkovModel& model, const StateFunction& u, const StateFunction& v) {
  require_full_support_subinvariant(model);
  const StateFunction neg_lu = -generator_apply(model, u);
  return neg_lu.cwiseProduct(v).dot(model.measure);
}

double dirichlet_bound_constant(const MarkovModel& model, const StateFunction& u,
                                const std::vector<int>& states) {
  require_full_support_subinvariant(model);
  const StateFunction neg_lu = -generator_apply(model, u);
  double c = 0.0;
  for (int x : states) {
    if (x < 0 || x >= model.size()) throw InvariantViolation("state index out of range");
    c += std::abs(neg_lu(x)) * model.measure(x);
  }
  return c;
}

}  // namespace mpk
