#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mpk/duality.hpp"
#include "mpk/invariant_measure.hpp"
#include "mpk/semigroup.hpp"
#include "test_models.hpp"

#include <random>

using namespace mpk;
using namespace mpk::testing;

namespace {

double density_distance(const StateFunction& a, const StateFunction& b,
                        const Eigen::VectorXd& m) {
  return (a - b).cwiseAbs().dot(m);
}

MarkovModel dtmc_lazy_walk() {
  MarkovModel model;
  model.space.labels = {"0", "1"};
  model.mode = Mode::Dtmc;
  model.transition.resize(2, 2);
  model.transition << 0.5, 0.5, 1.0, 0.0;
  model.measure = Eigen::Vector2d(0.5, 0.5);
  validate_model(model);
  return model;
}

}  // namespace

TEST_CASE("markovian checks") {
  CHECK(check_markovian(two_state_symmetric()).pass);
  CHECK_FALSE(check_markovian(one_state_killed()).pass);
  CHECK(check_markovian(dtmc_lazy_walk()).pass);
  CHECK(check_markovian(dtmc_two_cycle()).pass);
}

TEST_CASE("auxiliary measures") {
  CHECK(check_auxiliary(two_state_symmetric()).pass);

  // absorbing chain: mass on the absorbing state only is auxiliary
  CHECK(check_auxiliary(absorbing_chain(Eigen::Vector2d(0.0, 1.0))).pass);

  // mass on the draining state reaches the null state
  const Verdict v = check_auxiliary(absorbing_chain(Eigen::Vector2d(1.0, 0.0)));
  CHECK_FALSE(v.pass);
  CHECK(v.witness.state == "0");
  CHECK(v.details["reaches_null_state"] == "1");
}

TEST_CASE("adjoint fixes the stationary density") {
  const MarkovModel model = three_state_symmetric();
  const StateFunction ones = StateFunction::Ones(3);
  for (double t : {0.0, 0.5, 4.0}) {
    CHECK((adjoint_apply(model, t, ones) - ones).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("adjoint spreads a concentrated density and conserves mass") {
  const MarkovModel model = three_state_symmetric();
  const StateFunction rho0 = Eigen::Vector3d(3.0, 0.0, 0.0);
  // uniform measure + symmetric generator: the adjoint equals the primal
  for (double t : {0.1, 1.0, 10.0}) {
    const StateFunction mine = adjoint_apply(model, t, rho0);
    const StateFunction oracle = expm_uniformization(model.transition, t) * rho0;
    CHECK((mine - oracle).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(mine.minCoeff() >= 0.0);
    CHECK(mine.dot(model.measure) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK((adjoint_apply(model, 10.0, rho0) - StateFunction::Ones(3)).lpNorm<Eigen::Infinity>() <
        1e-4);
}

TEST_CASE("adjoint preserves positivity and mass on random conservative models") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 12; ++trial) {
    const MarkovModel model = random_subinvariant(rng, 7, /*conservative=*/true);
    StateFunction rho = random_nonnegative(rng, 7, 1.0);
    rho /= rho.dot(model.measure);
    for (double t : {0.25, 2.0, 16.0}) {
      const StateFunction moved = adjoint_apply(model, t, rho);
      CHECK(moved.minCoeff() > -1e-13);
      CHECK(std::abs(moved.dot(model.measure) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("adjoint preconditions") {
  CHECK_THROWS_AS(adjoint_apply(one_state_killed(), 1.0, StateFunction::Ones(1)),
                  InvariantViolation);
  CHECK_THROWS_AS(
      adjoint_apply(absorbing_chain(Eigen::Vector2d(1.0, 0.0)), 1.0, StateFunction::Ones(2)),
      InvariantViolation);
}

TEST_CASE("time averages stay densities") {
  const MarkovModel model = three_state_symmetric();
  const StateFunction rho0 = Eigen::Vector3d(3.0, 0.0, 0.0);
  const StateFunction avg = time_average(model, rho0, 1.0);
  CHECK(avg.minCoeff() >= 0.0);
  CHECK(avg.dot(model.measure) == doctest::Approx(1.0).epsilon(1e-13));
  // averaging over [0, 1] damps the transient by (1 - e^-1) per unit spectral gap
  CHECK((avg - StateFunction::Ones(3)).lpNorm<Eigen::Infinity>() <
        (rho0 - StateFunction::Ones(3)).lpNorm<Eigen::Infinity>());
}

TEST_CASE("one dtmc pair-average kills the period-2 oscillation") {
  const MarkovModel model = dtmc_two_cycle();
  const StateFunction rho0 = Eigen::Vector2d(2.0, 0.0);
  const StateFunction avg = time_average(model, rho0, 2.0);
  CHECK((avg - StateFunction::Ones(2)).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("averaging search on the three-state chain hits the left-null oracle") {
  const MarkovModel model = three_state_symmetric();
  const StateFunction rho0 = Eigen::Vector3d(3.0, 0.0, 0.0);
  const DensityResult result = cesaro_invariant_density(model, rho0);
  CHECK(result.converged);
  CHECK(result.co_excessive_residual <= 1e-8);
  CHECK(result.invariance_residual <= 1e-6);

  const StateFunction oracle = left_null_oracle(model);
  CHECK(density_distance(result.rho, oracle, model.measure) <= 1e-6);

  // a checkpoint no later than cumulative time 50 is already inside 1e-6
  bool early = false;
  for (const auto& point : result.checkpoints) {
    if (point.horizon <= 50.0 && density_distance(point.rho, oracle, model.measure) <= 1e-6) {
      early = true;
    }
    CHECK(std::abs(point.rho.dot(model.measure) - 1.0) <= 1e-10);
    CHECK(point.rho.minCoeff() >= -1e-13);
  }
  CHECK(early);
  CHECK(result.mass_error <= 1e-10);
}

TEST_CASE("a fixed point is recognized at the first comparable checkpoint") {
  const MarkovModel model = three_state_symmetric();
  const DensityResult result = cesaro_invariant_density(model, StateFunction::Ones(3));
  CHECK(result.converged);
  CHECK(result.horizon <= 2.0);
  CHECK((result.rho - StateFunction::Ones(3)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("periodic dtmc orbit oscillates but its averages converge") {
  const MarkovModel model = dtmc_two_cycle();
  const StateFunction rho0 = Eigen::Vector2d(2.0, 0.0);
  // the raw adjoint orbit swaps forever
  CHECK((adjoint_apply(model, 1.0, rho0) - Eigen::Vector2d(0.0, 2.0)).lpNorm<Eigen::Infinity>() <
        1e-14);
  CHECK((adjoint_apply(model, 2.0, rho0) - rho0).lpNorm<Eigen::Infinity>() < 1e-14);

  const DensityResult result = cesaro_invariant_density(model, rho0);
  CHECK(result.converged);
  CHECK((result.rho - StateFunction::Ones(2)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("slow mixing exhausts a short schedule") {
  MarkovModel model = two_state_symmetric();
  model.transition *= 1e-4;
  AverageSchedule schedule;
  schedule.max_horizon = 64.0;
  CHECK_THROWS_AS(
      cesaro_invariant_density(model, Eigen::Vector2d(2.0, 0.0), schedule), NoConvergence);
}

TEST_CASE("initial densities must be nonnegative with positive mass") {
  const MarkovModel model = three_state_symmetric();
  CHECK_THROWS_AS(cesaro_invariant_density(model, Eigen::Vector3d(1.0, -1.0, 0.5)),
                  NegativeFunction);
  CHECK_THROWS_AS(cesaro_invariant_density(model, StateFunction::Zero(3)), InvariantViolation);
}

TEST_CASE("left-null route on canonical models") {
  const DensityResult uniform = stationary_density_eigen(three_state_symmetric());
  CHECK(uniform.converged);
  CHECK((uniform.rho - StateFunction::Ones(3)).lpNorm<Eigen::Infinity>() < 1e-12);

  const DensityResult absorbed = stationary_density_eigen(absorbing_chain(Eigen::Vector2d(1.0, 1.0)));
  CHECK(absorbed.converged);
  CHECK(absorbed.rho(0) == doctest::Approx(0.0));
  CHECK(absorbed.rho(1) == doctest::Approx(1.0));  // <rho, m> = 1 concentrated at state 1

  const DensityResult blocks = stationary_density_eigen(two_block());
  CHECK(blocks.converged);
  CHECK((blocks.rho - StateFunction::Ones(4)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("averaging route and eigen route agree on irreducible models") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 8; ++trial) {
    const MarkovModel model = random_subinvariant(rng, 6, /*conservative=*/true);
    StateFunction rho0 = random_nonnegative(rng, 6, 1.0);
    rho0 /= rho0.dot(model.measure);
    const DensityResult averaged = cesaro_invariant_density(model, rho0);
    const DensityResult direct = stationary_density_eigen(model);
    REQUIRE(averaged.converged);
    CHECK(density_distance(averaged.rho, direct.rho, model.measure) <= 1e-6);
  }
}

TEST_CASE("almost invariance certificate for an invariant measure is the measure itself") {
  const MarkovModel model = three_state_symmetric();
  const AlmostInvarianceCertificate cert = almost_invariance_report(model);
  CHECK(cert.satisfied);
  CHECK(cert.delta == 0.0);
  CHECK(cert.subset_policy == "exhaustive");
  CHECK(cert.subsets.size() == 8);
  for (size_t i = 0; i < cert.subsets.size(); ++i) {
    double mass = 0.0;
    for (int x : cert.subsets[i]) mass += model.measure(x);
    CHECK(cert.phi[i] == doctest::Approx(mass).epsilon(1e-12));
  }
}

TEST_CASE("absorbing chain sup is attained at the short-time end") {
  const MarkovModel model = absorbing_chain(Eigen::Vector2d(1.0, 1.0));
  const AlmostInvarianceCertificate cert = almost_invariance_report(model);
  CHECK(cert.satisfied);
  CHECK(cert.min_atom_mass == 1.0);
  for (size_t i = 0; i < cert.subsets.size(); ++i) {
    if (cert.subsets[i] == std::vector<int>{0}) {
      // sup_t m(P_t 1_{0}) = sup_t e^{-t} = 1, the t -> 0+ endpoint
      CHECK(cert.phi[i] == doctest::Approx(1.0));
    }
    if (cert.subsets[i] == std::vector<int>{1}) {
      CHECK(cert.phi[i] == doctest::Approx(2.0).epsilon(1e-10));
    }
    if (cert.subsets[i].empty()) CHECK(cert.phi[i] == 0.0);
  }
}

TEST_CASE("user-supplied pairs are checked in report mode") {
  const MarkovModel model = three_state_symmetric();
  const AlmostInvarianceCertificate cert = almost_invariance_report(model);

  auto canonical = [&](const std::vector<int>& subset) {
    for (size_t i = 0; i < cert.subsets.size(); ++i) {
      if (cert.subsets[i] == subset) return cert.phi[i];
    }
    return 0.0;
  };
  CHECK(check_almost_invariance(model, 0.0, canonical, cert.subsets).pass);

  auto zero = [](const std::vector<int>&) { return 0.0; };
  const Verdict failing = check_almost_invariance(model, 0.0, zero, cert.subsets);
  CHECK_FALSE(failing.pass);
  CHECK(failing.worst_violation == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS(check_almost_invariance(model, 1.5, zero, cert.subsets), InvariantViolation);
}

TEST_CASE("equivalence harness across the model corpus") {
  std::mt19937_64 rng(101);
  std::vector<MarkovModel> corpus;
  corpus.push_back(three_state_symmetric());
  corpus.push_back(two_state_symmetric());
  corpus.push_back(two_block());
  corpus.push_back(absorbing_chain(Eigen::Vector2d(0.0, 1.0)));
  corpus.push_back(dtmc_two_cycle());
  corpus.push_back(dtmc_lazy_walk());
  corpus.push_back(random_subinvariant(rng, 6, /*conservative=*/true));
  corpus.push_back(random_subinvariant(rng, 8, /*conservative=*/true, /*blocks=*/2));

  for (const auto& model : corpus) {
    const Verdict v = invariant_measure_harness(model);
    CHECK(v.pass);
    CHECK(v.details["certificate_satisfied"].get<bool>());
    CHECK(v.details["density_converged"].get<bool>());
  }
}

TEST_CASE("harness reports the per-block density cone") {
  const Verdict v = invariant_measure_harness(two_block());
  REQUIRE(v.details.contains("invariant_density_cone"));
  CHECK(v.details["invariant_density_cone"].size() == 2);
}

TEST_CASE("harness rejects non-Markovian preconditions as a failing verdict") {
  const Verdict v = invariant_measure_harness(one_state_killed());
  CHECK_FALSE(v.pass);
  CHECK_FALSE(v.details["markovian"].get<bool>());
}

TEST_CASE("large state spaces switch to the atoms-and-blocks subset policy") {
  std::mt19937_64 rng(103);
  const MarkovModel model = random_subinvariant(rng, 18, /*conservative=*/true, /*blocks=*/3);
  const AlmostInvarianceCertificate cert = almost_invariance_report(model);
  CHECK(cert.subset_policy == "atoms-and-blocks");
  CHECK(cert.satisfied);
  // empty set, singletons, block unions, everything
  CHECK(cert.subsets.size() >= 1 + 18 + 7 + 1);
  for (size_t i = 0; i < cert.subsets.size(); ++i) {
    if (cert.subsets[i].empty()) CHECK(cert.phi[i] == 0.0);
  }
}
