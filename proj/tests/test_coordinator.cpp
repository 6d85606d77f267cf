#include <doctest.h>

#include <cmath>

#include "mabo/coordinator.hpp"

using namespace mabo;
using namespace mabo::admm;

TEST_SUITE_BEGIN("coordinator");

namespace {

VectorXd scalar(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

Box unit_box(double lo, double hi) {
  Box b;
  b.lo = scalar(lo);
  b.hi = scalar(hi);
  return b;
}

AgentBoState quadratic_history(double target, const Box& box, int count, std::uint64_t seed) {
  AgentBoState state;
  state.box = box;
  for (const VectorXd& p : latin_hypercube(box.lo, box.hi, count, seed)) {
    state.evaluated_params.push_back(p);
    state.evaluations.push_back((p(0) - target) * (p(0) - target));
  }
  return state;
}

CoordState simple_coord(int agents, int dim, double rho) {
  CoordState c;
  c.consensus = VectorXd::Zero(dim);
  c.multipliers.assign(agents, VectorXd::Zero(dim));
  c.penalty = rho;
  return c;
}

}  // namespace

TEST_CASE("consensus update") {
  SUBCASE("zero multipliers and a common point are a fixed point") {
    const VectorXd c = scalar(0.7);
    const VectorXd out = update_consensus({c, c, c}, {scalar(0), scalar(0), scalar(0)}, 2.0);
    CHECK(out(0) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("arithmetic mean with zero multipliers") {
    const VectorXd out = update_consensus({scalar(0), scalar(2)}, {scalar(0), scalar(0)}, 1.0);
    CHECK(out(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("hand evaluation of the shifted mean") {
    const VectorXd out = update_consensus({scalar(1), scalar(2), scalar(3)},
                                          {scalar(3), scalar(0), scalar(-3)}, 3.0);
    CHECK(out(0) == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("linearity under joint scaling") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<VectorXd> z = {scalar(uniform_real(rng, -2, 2)),
                                 scalar(uniform_real(rng, -2, 2))};
      std::vector<VectorXd> l = {scalar(uniform_real(rng, -2, 2)),
                                 scalar(uniform_real(rng, -2, 2))};
      const double c = uniform_real(rng, 0.1, 3.0);
      const VectorXd base = update_consensus(z, l, 1.7);
      const VectorXd scaled =
          update_consensus({c * z[0], c * z[1]}, {c * l[0], c * l[1]}, 1.7);
      CHECK(scaled(0) == doctest::Approx(c * base(0)).epsilon(1e-12));
    }
  }
  SUBCASE("dimension mismatch is an input error") {
    VectorXd two(2);
    two << 0, 0;
    CHECK_THROWS_AS(update_consensus({scalar(1), two}, {scalar(0), scalar(0)}, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("multiplier update") {
  SUBCASE("zero residual leaves the multiplier unchanged") {
    const VectorXd out = update_multiplier(scalar(0.4), scalar(1.2), scalar(1.2), 2.0);
    CHECK(out(0) == doctest::Approx(0.4).epsilon(1e-15));
  }
  SUBCASE("direct formula") {
    const VectorXd out = update_multiplier(scalar(0.0), scalar(1.0), scalar(0.5), 2.0);
    CHECK(out(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("constant residual grows the multiplier linearly") {
    VectorXd lambda = scalar(0.0);
    const double rho = 1.5, residual = 0.2;
    for (int k = 1; k <= 10; ++k) {
      lambda = update_multiplier(lambda, scalar(residual), scalar(0.0), rho);
      CHECK(lambda(0) == doctest::Approx(k * rho * residual).epsilon(1e-12));
    }
  }
}

TEST_CASE("penalty term") {
  CoordState coord = simple_coord(2, 1, 2.0);
  SUBCASE("zero at the consensus point with zero multipliers") {
    coord.consensus = scalar(1.1);
    CHECK(penalty_term(scalar(1.1), coord, 0) == 0.0);
  }
  SUBCASE("hand evaluation") {
    coord.multipliers[0] = scalar(1.0);
    coord.consensus = scalar(0.0);
    CHECK(penalty_term(scalar(2.0), coord, 0) == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("vanishes as rho goes to zero with zero multipliers") {
    coord.penalty = 0.0;
    for (double z : {-3.0, 0.0, 5.0}) CHECK(penalty_term(scalar(z), coord, 0) == 0.0);
  }
}

TEST_CASE("local step") {
  const Box box = unit_box(-4.0, 4.0);
  AgentBoState state = quadratic_history(1.0, box, 12, 11);
  const gp::GpModel model = gp::fit(gp::Dataset{state.evaluated_params, state.evaluations},
                                    gp::KernelHyper{1.0, 1.5, 1e-6});

  SUBCASE("huge penalty pins the step to the consensus") {
    CoordState coord = simple_coord(1, 1, 1e6);
    coord.consensus = scalar(2.5);
    const VectorXd z = local_step(state, model, coord, 0, 5);
    CHECK(std::abs(z(0) - 2.5) < 1e-3);
  }
  SUBCASE("zero penalty and multipliers reduce to the plain ei minimizer") {
    CoordState coord = simple_coord(1, 1, 0.0);
    const VectorXd penalized = local_step(state, model, coord, 0, 5);
    const double best = state.best();
    auto plain = [&](const VectorXd& z) { return acq::ei(model, z, best); };
    const VectorXd unpenalized =
        multistart_minimize(plain, box, 16, derive_seed(5, "local-step", 0));
    CHECK(penalized(0) == unpenalized(0));
  }
  SUBCASE("matches an exhaustive grid oracle within 1e-3 in objective value") {
    CoordState coord = simple_coord(1, 1, 1.0);
    coord.consensus = scalar(0.5);
    coord.multipliers[0] = scalar(0.3);
    const VectorXd z = local_step(state, model, coord, 0, 7);
    // the penalized-improvement acquisition local_step minimizes
    double incumbent = std::numeric_limits<double>::infinity();
    for (int k = 0; k < state.count(); ++k) {
      incumbent = std::min(incumbent, state.evaluations[k] +
                                          penalty_term(state.evaluated_params[k], coord, 0));
    }
    auto objective = [&](double t) {
      const gp::Posterior p = gp::posterior(model, scalar(t));
      return acq::ei(p.mean + penalty_term(scalar(t), coord, 0), std::sqrt(p.variance), incumbent);
    };
    double grid_best = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 1000; ++g) {
      grid_best = std::min(grid_best, objective(-4.0 + 8.0 * g / 1000.0));
    }
    CHECK(objective(z(0)) <= grid_best + 1e-3);
    CHECK(box.contains(z));
  }
  SUBCASE("unfitted model is a state error") {
    CoordState coord = simple_coord(1, 1, 1.0);
    CHECK_THROWS_AS(local_step(state, gp::GpModel{}, coord, 0, 1), std::runtime_error);
  }
}

TEST_CASE("mabo round") {
  const Box box = unit_box(-5.0, 5.0);
  const std::vector<double> targets = {1.0, 3.0};
  auto evaluator = [&](const std::vector<VectorXd>& proposals) {
    std::vector<double> y;
    for (size_t i = 0; i < proposals.size(); ++i) {
      y.push_back((proposals[i](0) - targets[i]) * (proposals[i](0) - targets[i]));
    }
    return y;
  };
  auto history_for = [&](int agent, int count, std::uint64_t seed) {
    return quadratic_history(targets[agent], box, count, seed);
  };
  MaboOptions opts;

  SUBCASE("single agent round appends one evaluation") {
    std::vector<AgentBoState> states = {history_for(0, 5, 21)};
    CoordState coord = simple_coord(1, 1, 1.0);
    coord.consensus = box.center();
    auto single = [&](const std::vector<VectorXd>& p) {
      return std::vector<double>{(p[0](0) - 1.0) * (p[0](0) - 1.0)};
    };
    const RoundResult result = mabo_round(states, coord, single, opts, 31);
    CHECK(result.states[0].count() == 6);
    CHECK(result.diagnostics.y_new.size() == 1);
    CHECK(result.diagnostics.best_so_far[0] <= states[0].best());
  }

  SUBCASE("separable quadratics reach consensus near the analytic optimum") {
    std::vector<AgentBoState> states = {history_for(0, 5, 41), history_for(1, 5, 42)};
    CoordState coord = simple_coord(2, 1, 1.0);
    coord.consensus = box.center();
    double primal = 1e9;
    for (int round = 0; round < 60; ++round) {
      const RoundResult result = mabo_round(
          states, coord, evaluator, opts,
          derive_seed(100, "round", static_cast<std::uint64_t>(round)));
      states = result.states;
      coord = result.coord;
      primal = result.diagnostics.primal_residual;
    }
    CHECK(std::abs(coord.consensus(0) - 2.0) < 1e-1);
    CHECK(primal < 1e-2);
  }

  SUBCASE("identical seeds append identical points") {
    std::vector<AgentBoState> states = {history_for(0, 5, 51), history_for(1, 5, 52)};
    CoordState coord = simple_coord(2, 1, 1.0);
    const RoundResult a = mabo_round(states, coord, evaluator, opts, 777);
    const RoundResult b = mabo_round(states, coord, evaluator, opts, 777);
    for (int i = 0; i < 2; ++i) {
      CHECK(a.states[i].evaluated_params.back() == b.states[i].evaluated_params.back());
      CHECK(a.states[i].evaluations.back() == b.states[i].evaluations.back());
    }
  }

  SUBCASE("a failing evaluator leaves the inputs untouched") {
    std::vector<AgentBoState> states = {history_for(0, 5, 61)};
    const size_t before = states[0].evaluations.size();
    CoordState coord = simple_coord(1, 1, 1.0);
    auto failing = [](const std::vector<VectorXd>&) -> std::vector<double> {
      throw NumericalError("objective evaluation failed");
    };
    CHECK_THROWS_AS(mabo_round(states, coord, failing, MaboOptions{}, 1), NumericalError);
    CHECK(states[0].evaluations.size() == before);
    CHECK(coord.multipliers[0].isZero(0.0));
  }

  SUBCASE("dataset grows by one per agent per round") {
    std::vector<AgentBoState> states = {history_for(0, 5, 71), history_for(1, 5, 72)};
    CoordState coord = simple_coord(2, 1, 1.0);
    for (int round = 0; round < 4; ++round) {
      const RoundResult result = mabo_round(states, coord, evaluator, opts,
                                            900 + static_cast<std::uint64_t>(round));
      states = result.states;
      coord = result.coord;
    }
    CHECK(states[0].count() == 9);
    CHECK(states[1].count() == 9);
  }

  SUBCASE("best-so-far is the running minimum per agent") {
    std::vector<AgentBoState> states = {history_for(0, 5, 91), history_for(1, 5, 92)};
    CoordState coord = simple_coord(2, 1, 1.0);
    std::vector<double> prev_best = {states[0].best(), states[1].best()};
    for (int round = 0; round < 6; ++round) {
      const RoundResult result = mabo_round(states, coord, evaluator, opts,
                                            1300 + static_cast<std::uint64_t>(round));
      states = result.states;
      coord = result.coord;
      for (int i = 0; i < 2; ++i) {
        CHECK(result.diagnostics.best_so_far[i] <= prev_best[i] + 1e-15);
        prev_best[i] = result.diagnostics.best_so_far[i];
      }
    }
  }

  SUBCASE("zero penalty and multipliers equal plain per-agent BO selections") {
    std::vector<AgentBoState> states = {history_for(0, 5, 81), history_for(1, 5, 82)};
    CoordState coord = simple_coord(2, 1, 0.0);
    const RoundResult round = mabo_round(states, coord, evaluator, opts, 123);

    for (int i = 0; i < 2; ++i) {
      gp::Dataset data{states[i].evaluated_params, states[i].evaluations};
      const gp::KernelHyper hyper = gp::optimize_hyperparameters(
          data, opts.hyper_bounds, derive_seed(123, "hyper", static_cast<std::uint64_t>(i)));
      const gp::GpModel model = gp::fit(data, hyper);
      CoordState plain = simple_coord(2, 1, 0.0);
      const VectorXd expectation =
          local_step(states[i], model, plain, i,
                     derive_seed(123, "round-agent", static_cast<std::uint64_t>(i)));
      CHECK(round.states[i].evaluated_params.back() == expectation);
    }
  }
}

TEST_CASE("residual computation") {
  CoordState prev = simple_coord(2, 1, 2.0);
  CoordState next = prev;
  SUBCASE("all points at the consensus with no movement") {
    const auto [primal, dual] = residuals(prev, next, {scalar(0.0), scalar(0.0)});
    CHECK(primal == 0.0);
    CHECK(dual == 0.0);
  }
  SUBCASE("single offset point sets the primal residual") {
    const auto [primal, dual] = residuals(prev, next, {scalar(0.1), scalar(0.0)});
    CHECK(primal == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(dual == 0.0);
  }
  SUBCASE("consensus movement sets the dual residual") {
    next.consensus = scalar(0.05);
    const auto [primal, dual] = residuals(prev, next, {next.consensus});
    CHECK(dual == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_SUITE_END();
