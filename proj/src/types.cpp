#include "mpk/types.hpp"

#include <algorithm>
#include <cmath>

namespace mpk {

std::string to_string(Mode mode) { return mode == Mode::Ctmc ? "ctmc" : "dtmc"; }

int StateSpace::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

double MarkovModel::conservativity_defect() const {
  const double target = is_ctmc() ? 0.0 : 1.0;
  double worst = 0.0;
  for (int i = 0; i < size(); ++i) {
    worst = std::max(worst, std::abs(transition.row(i).sum() - target));
  }
  return worst;
}

bool MarkovModel::is_conservative(double tol) const { return conservativity_defect() <= tol; }

std::vector<int> MarkovModel::support() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (measure(i) > 0.0) out.push_back(i);
  }
  return out;
}

}  // namespace mpk
