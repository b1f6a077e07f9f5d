#include "mpk/invariant_measure.hpp"

#include "mpk/duality.hpp"
#include "mpk/semigroup.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mpk {

Verdict check_markovian(const MarkovModel& model, double tol) {
  const double target = model.is_ctmc() ? 0.0 : 1.0;
  Verdict v;
  v.property = "markovian";
  v.tolerance = tol;
  double worst = 0.0;
  int worst_row = 0;
  for (int i = 0; i < model.size(); ++i) {
    const double defect = std::abs(model.transition.row(i).sum() - target);
    if (defect > worst) {
      worst = defect;
      worst_row = i;
    }
  }
  v.worst_violation = worst;
  v.pass = worst <= tol;
  v.witness.state = model.space.label_of(worst_row);
  return v;
}

Verdict check_auxiliary(const MarkovModel& model) {
  // null sets of m are preserved by every P_t iff no positive-mass state
  // reaches a zero-mass state; U_1 support encodes reachability exactly
  const Matrix potential = resolvent_matrix(model, 1.0);
  constexpr double kEdge = 1e-12;

  Verdict v;
  v.property = "auxiliary";
  v.tolerance = kEdge;
  v.pass = true;
  v.worst_violation = 0.0;
  for (int x : model.support()) {
    for (int y = 0; y < model.size(); ++y) {
      if (model.measure(y) > 0.0) continue;
      if (potential(x, y) > v.worst_violation) {
        v.worst_violation = potential(x, y);
        v.witness.state = model.space.label_of(x);
        v.details = {{"reaches_null_state", model.space.label_of(y)}};
      }
    }
  }
  v.pass = v.worst_violation <= kEdge;
  return v;
}

namespace {

// Adjoint dynamics restricted to the support of m; densities live there and
// the embedding back to the full space is by zeros.
struct AdjointOps {
  Mode mode = Mode::Ctmc;
  int full_size = 0;
  std::vector<int> support;
  Matrix reduced;               // \hat Q on the support (ctmc) or \hat P (dtmc)
  Eigen::VectorXd reduced_mass;

  static AdjointOps make(const MarkovModel& model) {
    AdjointOps ops;
    ops.mode = model.mode;
    ops.full_size = model.size();
    ops.support = model.support();
    const int k = static_cast<int>(ops.support.size());
    ops.reduced.resize(k, k);
    ops.reduced_mass.resize(k);
    for (int a = 0; a < k; ++a) {
      const int x = ops.support[static_cast<size_t>(a)];
      ops.reduced_mass(a) = model.measure(x);
      for (int b = 0; b < k; ++b) {
        const int y = ops.support[static_cast<size_t>(b)];
        ops.reduced(a, b) = model.measure(y) * model.transition(y, x) / model.measure(x);
      }
    }
    return ops;
  }

  Matrix reduced_transition(double t) const {
    if (mode == Mode::Ctmc) return matrix_exponential(t * reduced);
    if (t != std::nearbyint(t)) {
      throw NonIntegerTime("dtmc adjoint time grid is the nonnegative integers");
    }
    return matrix_power(reduced, static_cast<long>(t));
  }

  Eigen::VectorXd restrict_vec(const StateFunction& full) const {
    Eigen::VectorXd out(support.size());
    for (size_t a = 0; a < support.size(); ++a) out(static_cast<Eigen::Index>(a)) = full(support[a]);
    return out;
  }

  StateFunction embed_vec(const Eigen::VectorXd& red) const {
    StateFunction out = StateFunction::Zero(full_size);
    for (size_t a = 0; a < support.size(); ++a) out(support[a]) = red(static_cast<Eigen::Index>(a));
    return out;
  }

  Matrix embed_mat(const Matrix& red) const {
    Matrix out = Matrix::Zero(full_size, full_size);
    for (size_t a = 0; a < support.size(); ++a) {
      for (size_t b = 0; b < support.size(); ++b) {
        out(support[a], support[b]) = red(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
    return out;
  }
};

void require_markovian_auxiliary(const MarkovModel& model, const char* op) {
  if (!check_markovian(model).pass) {
    throw InvariantViolation(std::string(op) + " wants a Markovian (conservative) model");
  }
  if (!check_auxiliary(model).pass) {
    throw InvariantViolation(std::string(op) + " wants an auxiliary reference measure");
  }
}

// 8-point Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::array<double, 8> nodes;
  std::array<double, 8> weights;

  static QuadratureRule unit_interval() {
    // abscissas/weights on [-1, 1], mapped to [0, 1]
    const std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                  0.9602898564975363};
    const std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                  0.1012285362903763};
    QuadratureRule rule{};
    for (int i = 0; i < 4; ++i) {
      rule.nodes[static_cast<size_t>(2 * i)] = 0.5 * (1.0 - x[static_cast<size_t>(i)]);
      rule.nodes[static_cast<size_t>(2 * i + 1)] = 0.5 * (1.0 + x[static_cast<size_t>(i)]);
      rule.weights[static_cast<size_t>(2 * i)] = 0.5 * w[static_cast<size_t>(i)];
      rule.weights[static_cast<size_t>(2 * i + 1)] = 0.5 * w[static_cast<size_t>(i)];
    }
    return rule;
  }
};

// One averaging window of length 1 for ctmc models (4 Gauss-Legendre panels
// of width 1/4), one Cesaro pair (I + \hat P)/2 for dtmc models.
struct AveragingWindow {
  Mode mode = Mode::Ctmc;
  double length = 1.0;
  std::vector<Matrix> node_ops;     // ctmc: weighted node propagators per panel
  std::vector<double> node_weights;
  Matrix panel_step;                // propagator across one panel
  Matrix kernel;                    // dtmc one-step adjoint

  static AveragingWindow make(const AdjointOps& ops) {
    AveragingWindow window;
    window.mode = ops.mode;
    if (ops.mode == Mode::Dtmc) {
      window.length = 2.0;
      window.kernel = ops.reduced;
      return window;
    }
    window.length = 1.0;
    const QuadratureRule rule = QuadratureRule::unit_interval();
    constexpr double kPanel = 0.25;
    window.panel_step = matrix_exponential(kPanel * ops.reduced);
    for (int i = 0; i < 8; ++i) {
      window.node_ops.push_back(
          matrix_exponential(kPanel * rule.nodes[static_cast<size_t>(i)] * ops.reduced));
      window.node_weights.push_back(kPanel * rule.weights[static_cast<size_t>(i)]);
    }
    return window;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& rho) const {
    if (mode == Mode::Dtmc) return 0.5 * (rho + kernel * rho);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(rho.size());
    Eigen::VectorXd at_panel_start = rho;
    for (int panel = 0; panel < 4; ++panel) {
      for (size_t i = 0; i < node_ops.size(); ++i) {
        acc += node_weights[i] * (node_ops[i] * at_panel_start);
      }
      at_panel_start = panel_step * at_panel_start;
    }
    return acc;  // window length 1, so the average needs no rescaling
  }
};

}  // namespace

Matrix adjoint_generator(const MarkovModel& model) {
  const AdjointOps ops = AdjointOps::make(model);
  if (model.is_ctmc()) return ops.embed_mat(ops.reduced);
  const auto k = ops.reduced.rows();
  return ops.embed_mat(ops.reduced - Matrix::Identity(k, k));
}

Matrix adjoint_transition(const MarkovModel& model, double t) {
  const AdjointOps ops = AdjointOps::make(model);
  return ops.embed_mat(ops.reduced_transition(t));
}

StateFunction adjoint_apply(const MarkovModel& model, double t, const StateFunction& rho) {
  require_markovian_auxiliary(model, "adjoint_apply");
  const AdjointOps ops = AdjointOps::make(model);
  const Eigen::VectorXd before = ops.restrict_vec(rho);
  const Eigen::VectorXd after = ops.reduced_transition(t) * before;
  const double drift = std::abs(after.dot(ops.reduced_mass) - before.dot(ops.reduced_mass));
  if (drift > 1e-10) {
    throw MassLeak("adjoint step leaked mass " + std::to_string(drift));
  }
  return ops.embed_vec(after);
}

StateFunction time_average(const MarkovModel& model, const StateFunction& rho, double window) {
  require_markovian_auxiliary(model, "time_average");
  const AdjointOps ops = AdjointOps::make(model);
  if (model.is_ctmc()) {
    if (!(window > 0.0)) throw InvariantViolation("time_average wants window > 0");
    // composite Gauss-Legendre, panel width 1/4 (shorter last panel if needed)
    const QuadratureRule rule = QuadratureRule::unit_interval();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ops.support.size()));
    Eigen::VectorXd at_start = ops.restrict_vec(rho);
    double covered = 0.0;
    while (covered < window - 1e-12) {
      const double width = std::min(0.25, window - covered);
      for (int i = 0; i < 8; ++i) {
        const Matrix node = ops.reduced_transition(width * rule.nodes[static_cast<size_t>(i)]);
        acc += width * rule.weights[static_cast<size_t>(i)] * (node * at_start);
      }
      at_start = ops.reduced_transition(width) * at_start;
      covered += width;
    }
    return ops.embed_vec(acc / window);
  }
  const long steps = static_cast<long>(std::nearbyint(window));
  if (steps < 1 || window != static_cast<double>(steps)) {
    throw NonIntegerTime("dtmc averaging window must be a positive integer");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ops.support.size()));
  Eigen::VectorXd cur = ops.restrict_vec(rho);
  for (long k = 0; k < steps; ++k) {
    acc += cur;
    cur = ops.reduced * cur;
  }
  return ops.embed_vec(acc / static_cast<double>(steps));
}

std::vector<double> suprema_time_grid(const MarkovModel& model) {
  std::vector<double> grid{0.0};
  const double lo = std::ldexp(1.0, -10);
  const double hi = std::ldexp(1.0, 6);
  const double ratio = std::pow(10.0, 1.0 / 16.0);
  if (model.is_ctmc()) {
    for (double v = lo; v < hi * (1.0 - 1e-12); v *= ratio) grid.push_back(v);
    grid.push_back(hi);
    return grid;
  }
  for (double v = 1.0; v <= hi; v = std::max(v + 1.0, std::nearbyint(v * ratio))) {
    grid.push_back(v);
  }
  if (grid.back() != hi) grid.push_back(hi);
  return grid;
}

namespace {

struct Certifier {
  std::vector<Matrix> grid_ops;  // reduced adjoint propagators over the grid
  Eigen::VectorXd mass;

  static Certifier make(const MarkovModel& model, const AdjointOps& ops) {
    Certifier c;
    c.mass = ops.reduced_mass;
    for (double t : suprema_time_grid(model)) {
      if (t == 0.0) continue;
      c.grid_ops.push_back(ops.reduced_transition(t));
    }
    return c;
  }

  // (max positive part of P_t^* rho - rho, max ||P_t^* rho - rho||_{1,m})
  std::pair<double, double> residuals(const Eigen::VectorXd& rho) const {
    double co_excessive = 0.0;
    double invariance = 0.0;
    for (const auto& op : grid_ops) {
      const Eigen::VectorXd diff = op * rho - rho;
      co_excessive = std::max(co_excessive, diff.maxCoeff());
      invariance = std::max(invariance, diff.cwiseAbs().dot(mass));
    }
    return {std::max(co_excessive, 0.0), invariance};
  }
};

Eigen::VectorXd normalized_density(const AdjointOps& ops, const StateFunction& rho0) {
  Eigen::VectorXd rho = ops.restrict_vec(rho0);
  if (rho.minCoeff() < -1e-12) throw NegativeFunction("initial density must be nonnegative");
  rho = rho.cwiseMax(0.0);
  const double mass = rho.dot(ops.reduced_mass);
  if (!(mass > 0.0)) throw InvariantViolation("initial density carries no mass on the support");
  return rho / mass;
}

}  // namespace

DensityResult cesaro_invariant_density(const MarkovModel& model, const StateFunction& rho0,
                                       const AverageSchedule& schedule) {
  require_markovian_auxiliary(model, "cesaro_invariant_density");
  const AdjointOps ops = AdjointOps::make(model);
  const AveragingWindow window = AveragingWindow::make(ops);
  const Certifier certifier = Certifier::make(model, ops);

  DensityResult result;
  Eigen::VectorXd rho = normalized_density(ops, rho0);
  Eigen::VectorXd previous_checkpoint = rho;
  bool have_previous = false;
  double horizon = 0.0;
  double next_checkpoint = window.length;

  while (horizon < schedule.max_horizon) {
    rho = window.apply(rho);
    horizon += window.length;
    ++result.iterations;
    result.mass_error =
        std::max(result.mass_error, std::abs(rho.dot(ops.reduced_mass) - 1.0));

    if (horizon + 1e-9 < next_checkpoint) continue;
    next_checkpoint *= 2.0;

    DensityCheckpoint point;
    point.horizon = horizon;
    point.rho = ops.embed_vec(rho);
    point.diff = have_previous ? (rho - previous_checkpoint).cwiseAbs().dot(ops.reduced_mass)
                               : std::numeric_limits<double>::infinity();
    const auto [co_exc, inv] = certifier.residuals(rho);
    point.co_excessive = co_exc;
    point.invariance = inv;
    result.checkpoints.push_back(point);
    previous_checkpoint = rho;
    have_previous = true;

    if (point.diff < schedule.cauchy_tol && co_exc <= schedule.co_excessive_tol &&
        inv <= schedule.invariance_tol) {
      result.rho = point.rho;
      result.co_excessive_residual = co_exc;
      result.invariance_residual = inv;
      result.converged = true;
      result.horizon = horizon;
      return result;
    }
  }

  std::ostringstream os;
  os << "averaging schedule exhausted at horizon " << horizon << "; checkpoint gaps:";
  for (const auto& p : result.checkpoints) os << " " << p.diff;
  throw NoConvergence(os.str());
}

DensityResult stationary_density_eigen(const MarkovModel& model) {
  require_markovian_auxiliary(model, "stationary_density_eigen");
  const int n = model.size();
  const auto support = model.support();
  const Matrix generator = generator_matrix(model);

  // closed recurrent classes of the primal chain: strongly connected pieces
  // with no outward rate; here found by symmetrizing reachability of U_1
  const Matrix potential = resolvent_matrix(model, 1.0);
  constexpr double kEdge = 1e-12;
  std::vector<int> cls(static_cast<size_t>(n), -1);
  int n_classes = 0;
  for (int x = 0; x < n; ++x) {
    if (cls[static_cast<size_t>(x)] >= 0) continue;
    // mutual reachability marks the communicating class of x
    std::vector<int> members;
    for (int y = 0; y < n; ++y) {
      const bool xy = x == y || potential(x, y) > kEdge;
      const bool yx = x == y || potential(y, x) > kEdge;
      if (xy && yx) members.push_back(y);
    }
    // the class is closed iff x cannot leave it
    bool closed = true;
    for (int member : members) {
      for (int y = 0; y < n; ++y) {
        const bool inside = std::find(members.begin(), members.end(), y) != members.end();
        if (!inside && potential(member, y) > kEdge) closed = false;
      }
    }
    if (!closed) continue;
    for (int member : members) cls[static_cast<size_t>(member)] = n_classes;
    ++n_classes;
  }

  StateFunction rho = StateFunction::Zero(n);
  double covered_mass = 0.0;
  std::vector<StateFunction> class_densities;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int> members;
    for (int x = 0; x < n; ++x) {
      if (cls[static_cast<size_t>(x)] == c) members.push_back(x);
    }
    // classes must sit inside the support: auxiliary m guarantees it
    double class_mass = 0.0;
    for (int x : members) class_mass += model.measure(x);
    if (!(class_mass > 0.0)) continue;

    const int k = static_cast<int>(members.size());
    Matrix restricted(k, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        restricted(a, b) =
            generator(members[static_cast<size_t>(a)], members[static_cast<size_t>(b)]);
      }
    }
    Eigen::FullPivLU<Matrix> lu(restricted.transpose());
    lu.setThreshold(1e-10);
    const Matrix kernel = lu.kernel();
    if (kernel.cols() < 1) {
      throw NoConvergence("closed class without a stationary vector; numerical defect");
    }
    Eigen::VectorXd mu = kernel.col(0);
    if (mu.sum() < 0.0) mu = -mu;
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();

    StateFunction class_density = StateFunction::Zero(n);
    for (int a = 0; a < k; ++a) {
      class_density(members[static_cast<size_t>(a)]) =
          mu(a) / model.measure(members[static_cast<size_t>(a)]);
    }
    class_densities.push_back(class_density);
    rho += class_mass * class_density;
    covered_mass += class_mass;
  }

  if (class_densities.empty()) {
    throw NoConvergence("no invariant density absolutely continuous w.r.t. m");
  }
  rho /= covered_mass;

  const AdjointOps ops = AdjointOps::make(model);
  const Certifier certifier = Certifier::make(model, ops);
  const auto [co_exc, inv] = certifier.residuals(ops.restrict_vec(rho));

  DensityResult result;
  result.rho = rho;
  result.co_excessive_residual = co_exc;
  result.invariance_residual = inv;
  result.converged = co_exc <= 1e-8 && inv <= 1e-6;
  result.mass_error = std::abs(ops.restrict_vec(rho).dot(ops.reduced_mass) - 1.0);
  (void)support;
  return result;
}

namespace {

std::vector<std::vector<int>> certificate_subsets(const MarkovModel& model) {
  const int n = model.size();
  std::vector<std::vector<int>> subsets;
  if (n <= 16) {
    const uint32_t count = 1u << n;
    subsets.reserve(count);
    for (uint32_t mask = 0; mask < count; ++mask) {
      std::vector<int> subset;
      for (int x = 0; x < n; ++x) {
        if (mask & (1u << x)) subset.push_back(x);
      }
      subsets.push_back(std::move(subset));
    }
    return subsets;
  }

  subsets.push_back({});  // the empty set anchors phi(0) = 0
  for (int x = 0; x < n; ++x) subsets.push_back({x});
  const InvariancePartition partition = invariant_partition(model);
  const size_t blocks = partition.blocks.size();
  if (blocks <= 16) {
    for (uint32_t mask = 1; mask < (1u << blocks); ++mask) {
      std::vector<int> subset;
      for (size_t b = 0; b < blocks; ++b) {
        if (mask & (1u << b)) {
          subset.insert(subset.end(), partition.blocks[b].begin(), partition.blocks[b].end());
        }
      }
      std::sort(subset.begin(), subset.end());
      subsets.push_back(std::move(subset));
    }
  } else {
    for (const auto& block : partition.blocks) subsets.push_back(block);
  }
  std::vector<int> everything(static_cast<size_t>(n));
  std::iota(everything.begin(), everything.end(), 0);
  subsets.push_back(std::move(everything));
  return subsets;
}

}  // namespace

AlmostInvarianceCertificate almost_invariance_report(const MarkovModel& model) {
  require_markovian_auxiliary(model, "almost_invariance_report");
  const int n = model.size();

  AlmostInvarianceCertificate cert;
  cert.delta = 0.0;
  cert.grid = suprema_time_grid(model);
  cert.subsets = certificate_subsets(model);
  cert.subset_policy = n <= 16 ? "exhaustive" : "atoms-and-blocks";

  // m(P_t 1_A) as a function of A is linear; precompute the row m^T P_t per
  // grid time (t = 0 contributes m(A) itself, the 0+ endpoint)
  std::vector<Eigen::RowVectorXd> mass_rows;
  for (double t : cert.grid) {
    mass_rows.push_back(model.measure.transpose() * transition_matrix(model, t));
  }

  cert.phi.reserve(cert.subsets.size());
  for (const auto& subset : cert.subsets) {
    double worst = 0.0;
    for (const auto& row : mass_rows) {
      double value = 0.0;
      for (int x : subset) value += row(x);
      worst = std::max(worst, value);
    }
    cert.phi.push_back(worst);
  }

  cert.min_atom_mass = std::numeric_limits<double>::infinity();
  for (int x : model.support()) cert.min_atom_mass = std::min(cert.min_atom_mass, model.measure(x));

  // phi(0) = 0 holds by construction; on a finite space with atom masses
  // bounded below phi* is automatically absolutely continuous w.r.t. m
  cert.satisfied = true;
  for (size_t i = 0; i < cert.subsets.size(); ++i) {
    if (cert.subsets[i].empty() && cert.phi[i] != 0.0) cert.satisfied = false;
  }
  return cert;
}

Verdict check_almost_invariance(const MarkovModel& model, double delta,
                                const std::function<double(const std::vector<int>&)>& phi,
                                const std::vector<std::vector<int>>& subsets) {
  require_markovian_auxiliary(model, "check_almost_invariance");
  if (delta < 0.0 || delta >= 1.0) throw InvariantViolation("delta must sit in [0, 1)");

  const double total_mass = model.total_mass();
  Verdict v;
  v.property = "almost-invariant";
  v.tolerance = 1e-10;
  double worst = -std::numeric_limits<double>::infinity();
  for (double t : suprema_time_grid(model)) {
    const Eigen::RowVectorXd row = model.measure.transpose() * transition_matrix(model, t);
    for (const auto& subset : subsets) {
      double moved = 0.0;
      for (int x : subset) moved += row(x);
      const double gap = moved - delta * total_mass - phi(subset);
      if (gap > worst) {
        worst = gap;
        v.witness.parameter = t;
      }
    }
  }
  v.worst_violation = worst;
  v.pass = worst <= v.tolerance;
  v.details = {{"delta", delta}, {"subsets_checked", subsets.size()}};
  return v;
}

Verdict invariant_measure_harness(const MarkovModel& model) {
  Verdict v;
  v.property = "invariant-measure-equivalence";
  v.tolerance = 1e-8;

  const Verdict markovian = check_markovian(model);
  const Verdict auxiliary = check_auxiliary(model);
  if (!markovian.pass || !auxiliary.pass) {
    v.pass = false;
    v.details = {{"precondition", "model must be Markovian with auxiliary m"},
                 {"markovian", markovian.pass},
                 {"auxiliary", auxiliary.pass}};
    return v;
  }

  const AlmostInvarianceCertificate certificate = almost_invariance_report(model);

  StateFunction rho0 = StateFunction::Zero(model.size());
  for (int x : model.support()) rho0(x) = 1.0;
  rho0 /= model.total_mass();

  bool converged = false;
  DensityResult density;
  std::string failure;
  try {
    density = cesaro_invariant_density(model, rho0);
    converged = density.converged;
  } catch (const NoConvergence& e) {
    failure = e.what();
  }

  if (certificate.satisfied != converged) {
    throw InconsistentVerdict(
        "almost-invariance certificate and averaging search disagree: certificate " +
        std::string(certificate.satisfied ? "satisfied" : "unsatisfied") + ", density " +
        (converged ? "converged" : ("did not converge: " + failure)));
  }

  v.pass = true;
  v.details = {{"certificate_satisfied", certificate.satisfied},
               {"density_converged", converged},
               {"subset_policy", certificate.subset_policy},
               {"min_atom_mass", certificate.min_atom_mass},
               {"averaging", "deterministic window means; finite-space surrogate for subsequence extraction"}};
  if (converged) {
    v.details["density"] = vector_json(density.rho);
    v.details["horizon"] = density.horizon;
  }

  // with a sub-invariant m the generator-kernel form of the statement applies
  if (check_subinvariant(model).pass) {
    Eigen::FullPivLU<Matrix> lu(generator_matrix(model));
    lu.setThreshold(1e-10);
    const bool harmonic_exists = lu.dimensionOfKernel() > 0;
    double dual_residual = 0.0;
    if (converged) {
      const StateFunction krho = adjoint_generator(model) * density.rho;
      for (int x : model.support()) dual_residual = std::max(dual_residual, std::abs(krho(x)));
    }
    if (harmonic_exists != converged || (converged && dual_residual > 1e-8)) {
      throw InconsistentVerdict("sub-invariant generator-kernel check failed: harmonic kernel " +
                                std::string(harmonic_exists ? "nonzero" : "zero") +
                                ", dual residual " + std::to_string(dual_residual));
    }
    v.details["harmonic_kernel_nonzero"] = harmonic_exists;
    v.details["dual_generator_residual"] = dual_residual;
  }

  // per-block stationary densities via the constructive route
  const InvariancePartition partition = invariant_partition(model);
  if (partition.blocks.size() > 1 && partition.blocks.size() <= 8) {
    nlohmann::json blocks = nlohmann::json::array();
    for (size_t b = 0; b < partition.blocks.size(); ++b) {
      StateFunction block_rho0 = StateFunction::Zero(model.size());
      double block_mass = 0.0;
      for (int x : partition.blocks[b]) block_mass += model.measure(x);
      for (int x : partition.blocks[b]) block_rho0(x) = 1.0 / block_mass;
      const DensityResult block_density = cesaro_invariant_density(model, block_rho0);
      blocks.push_back({{"states", partition.blocks[b]},
                        {"density", vector_json(block_density.rho)}});
    }
    v.details["invariant_density_cone"] = blocks;
  }
  return v;
}

}  // namespace mpk
