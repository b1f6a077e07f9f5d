#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpk {

/// A real-valued function on the state space, one entry per state.
/// Every function is implicitly 0 at the cemetery state, which is never
/// materialized; killing shows up as row-sum deficit of the transition data.
using StateFunction = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Mode { Ctmc, Dtmc };

std::string to_string(Mode mode);

struct StateSpace {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  /// Index of a label, -1 if unknown.
  int index_of(const std::string& label) const;
  const std::string& label_of(int index) const { return labels.at(static_cast<size_t>(index)); }
};

/// Finite Markov model: sub-Markovian generator (ctmc) or sub-stochastic
/// one-step kernel (dtmc), plus a nonnegative reference measure m.
struct MarkovModel {
  StateSpace space;
  Mode mode = Mode::Ctmc;
  Matrix transition;        // generator Q (ctmc) or kernel P (dtmc)
  Eigen::VectorXd measure;  // reference measure m, one weight per state
  std::map<std::string, StateFunction> functions;

  int size() const { return space.size(); }
  bool is_ctmc() const { return mode == Mode::Ctmc; }

  /// Worst row-sum defect from the conservative case (row sums 0 for ctmc,
  /// 1 for dtmc). Always >= 0 for a valid model up to roundoff.
  double conservativity_defect() const;
  bool is_conservative(double tol = 1e-12) const;

  /// Indices of states with positive mass.
  std::vector<int> support() const;
  double total_mass() const { return measure.sum(); }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MPK_DEFINE_ERROR(NAME)     \
  class NAME final : public Error { \
   public:                          \
    using Error::Error;             \
  }

MPK_DEFINE_ERROR(SchemaError);
MPK_DEFINE_ERROR(InvariantViolation);
MPK_DEFINE_ERROR(NonIntegerTime);
MPK_DEFINE_ERROR(SingularSystem);
MPK_DEFINE_ERROR(NegativeFunction);
MPK_DEFINE_ERROR(HorizonTooShort);
MPK_DEFINE_ERROR(FamilyNotStable);
MPK_DEFINE_ERROR(SupportGap);
MPK_DEFINE_ERROR(NotSubInvariant);
MPK_DEFINE_ERROR(InputNotInvariant);
MPK_DEFINE_ERROR(MassLeak);
MPK_DEFINE_ERROR(NoConvergence);
MPK_DEFINE_ERROR(InconsistentVerdict);
MPK_DEFINE_ERROR(PrecisionBudget);

#undef MPK_DEFINE_ERROR

}  // namespace mpk
