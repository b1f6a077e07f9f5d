#pragma once

#include "mpk/types.hpp"

namespace mpk {

/// Dense matrix exponential by scaling-and-squaring of the truncated Taylor
/// series. The series is summed to machine precision after scaling the norm
/// below 1/2, so entries of exp(tQ) for sub-Markovian Q are accurate to well
/// under 1e-12 absolute.
Matrix matrix_exponential(const Matrix& a);

/// Integer matrix power by binary exponentiation; k >= 0.
Matrix matrix_power(const Matrix& a, long k);

/// The generator as a matrix: Q in ctmc mode, P - I in dtmc mode.
Matrix generator_matrix(const MarkovModel& model);

/// P_t as a dense matrix. For dtmc models t must be a nonnegative integer
/// (kernel power); otherwise NonIntegerTime is thrown.
Matrix transition_matrix(const MarkovModel& model, double t);

/// P_t u. Same time conventions as transition_matrix.
StateFunction semigroup_apply(const MarkovModel& model, double t, const StateFunction& u);

/// U_alpha as a dense matrix: (alpha I - Q)^{-1} for ctmc, and the geometric
/// sum over kernel powers (e^alpha I - P)^{-1} for dtmc. Throws SingularSystem
/// when the condition estimate exceeds 1e14, which cannot happen for a valid
/// sub-Markovian model with alpha > 0.
Matrix resolvent_matrix(const MarkovModel& model, double alpha);

/// U_alpha u via a dense linear solve with one step of iterative refinement;
/// the residual is held below 1e-10 * ||u||_inf.
StateFunction resolvent_apply(const MarkovModel& model, double alpha, const StateFunction& u);

/// L u, i.e. Q u (ctmc) or (P - I) u (dtmc).
StateFunction generator_apply(const MarkovModel& model, const StateFunction& u);

}  // namespace mpk
