#include "mpk/semigroup.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

namespace mpk {

namespace {

// Taylor sum of exp(B) for ||B||_inf <= 1/2, run to machine precision. At
// that norm the series needs ~20 terms; the cap is just a safety stop.
Matrix exp_taylor(const Matrix& b) {
  const auto n = b.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 64; ++k) {
    term = (term * b) * (1.0 / k);
    sum += term;
    if (term.lpNorm<Eigen::Infinity>() <= 1e-17 * std::max(1.0, sum.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }
  return sum;
}

void require_time(double t) {
  if (!(t >= 0.0)) throw InvariantViolation("time must be nonnegative, got " + std::to_string(t));
}

long dtmc_steps(double t) {
  require_time(t);
  if (t != std::nearbyint(t)) {
    throw NonIntegerTime("dtmc time grid is the nonnegative integers, got " + std::to_string(t));
  }
  return static_cast<long>(t);
}

}  // namespace

Matrix matrix_exponential(const Matrix& a) {
  const double nrm = a.lpNorm<Eigen::Infinity>();
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  Matrix x = exp_taylor(a * std::ldexp(1.0, -squarings));
  for (int i = 0; i < squarings; ++i) x = x * x;
  return x;
}

Matrix matrix_power(const Matrix& a, long k) {
  if (k < 0) throw InvariantViolation("matrix power wants k >= 0");
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Matrix generator_matrix(const MarkovModel& model) {
  if (model.is_ctmc()) return model.transition;
  return model.transition - Matrix::Identity(model.size(), model.size());
}

Matrix transition_matrix(const MarkovModel& model, double t) {
  if (model.is_ctmc()) {
    require_time(t);
    return matrix_exponential(t * model.transition);
  }
  return matrix_power(model.transition, dtmc_steps(t));
}

StateFunction semigroup_apply(const MarkovModel& model, double t, const StateFunction& u) {
  return transition_matrix(model, t) * u;
}

namespace {

// U_alpha = scale * system^{-1}. For ctmc this is (alpha I - Q)^{-1}; for
// dtmc the geometric sum over kernel powers is written in the overflow-free
// form e^{-alpha} (I - e^{-alpha} P)^{-1}.
struct ResolventSystem {
  Matrix system;
  double scale;
};

ResolventSystem resolvent_system(const MarkovModel& model, double alpha) {
  if (!(alpha > 0.0)) {
    throw InvariantViolation("resolvent wants alpha > 0, got " + std::to_string(alpha));
  }
  const auto n = model.size();
  if (model.is_ctmc()) {
    return {alpha * Matrix::Identity(n, n) - model.transition, 1.0};
  }
  const double discount = std::exp(-alpha);
  return {Matrix::Identity(n, n) - discount * model.transition, discount};
}

void require_well_conditioned(const Eigen::PartialPivLU<Matrix>& lu) {
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw SingularSystem("resolvent system condition estimate exceeds 1e14 (rcond " +
                         std::to_string(rcond) + "); input is corrupted");
  }
}

}  // namespace

Matrix resolvent_matrix(const MarkovModel& model, double alpha) {
  const ResolventSystem rs = resolvent_system(model, alpha);
  Eigen::PartialPivLU<Matrix> lu(rs.system);
  require_well_conditioned(lu);
  return rs.scale * lu.inverse();
}

StateFunction resolvent_apply(const MarkovModel& model, double alpha, const StateFunction& u) {
  const ResolventSystem rs = resolvent_system(model, alpha);
  Eigen::PartialPivLU<Matrix> lu(rs.system);
  require_well_conditioned(lu);
  StateFunction x = lu.solve(u);
  // one refinement pass keeps the residual at the 1e-10 ||u|| contract with
  // plenty of margin
  StateFunction r = u - rs.system * x;
  x += lu.solve(r);
  r = u - rs.system * x;
  const double target = 1e-10 * u.lpNorm<Eigen::Infinity>();
  if (r.lpNorm<Eigen::Infinity>() > std::max(target, 1e-300)) {
    throw SingularSystem("resolvent residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) +
                         " above contract");
  }
  return rs.scale * x;
}

StateFunction generator_apply(const MarkovModel& model, const StateFunction& u) {
  if (model.is_ctmc()) return model.transition * u;
  return model.transition * u - u;
}

}  // namespace mpk
