#include <doctest.h>

#include <cmath>

#include "mabo/trajopt.hpp"

using namespace mabo;
using namespace mabo::ocp;

TEST_SUITE_BEGIN("trajopt");

namespace {

VectorXd scalar(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

// 1-D single integrator with unit tracking costs.
OcpSpec integrator_spec(int horizon, double x0, double state_w = 1.0, double control_w = 1.0) {
  OcpSpec spec;
  spec.horizon = horizon;
  spec.dynamics = std::make_shared<plants::AffineDynamics>(MatrixXd::Identity(1, 1),
                                                           MatrixXd::Identity(1, 1));
  spec.initial_state = scalar(x0);
  spec.state_weight = scalar(state_w);
  spec.state_ref = scalar(0.0);
  spec.control_weight = scalar(control_w);
  return spec;
}

IneqRow upper_bound_row(double hi, double weight) {
  IneqRow row;
  row.cx = scalar(1.0);
  row.cu = scalar(0.0);
  row.rhs = hi;
  row.slack_weight = weight;
  row.slack_weight_terminal = weight;
  row.applies_terminal = true;
  return row;
}

IneqRow control_row(double sign, double bound, double weight) {
  IneqRow row;
  row.cx = scalar(0.0);
  row.cu = scalar(sign);
  row.rhs = bound;
  row.slack_weight = weight;
  row.slack_weight_terminal = weight;
  row.applies_terminal = false;
  return row;
}

}  // namespace

TEST_CASE("origin start with origin reference stays at the origin") {
  const OcpSpec spec = integrator_spec(4, 0.0);
  const Trajectory traj = solve_ocp(spec);
  for (const VectorXd& x : traj.states) CHECK(std::abs(x(0)) < 1e-9);
  for (const VectorXd& u : traj.controls) CHECK(std::abs(u(0)) < 1e-9);
  CHECK(std::abs(traj.objective_value) < 1e-12);
  CHECK(traj.kkt_residual <= 1e-6);
}

TEST_CASE("two-step LQ matches a hand-assembled dense KKT oracle") {
  const OcpSpec spec = integrator_spec(2, 1.0);
  const Trajectory traj = solve_ocp(spec);

  // Oracle: variables z = (x0, x1, x2, u0, u1); cost sum x_l^2 + u_l^2 over
  // l = 0,1 plus terminal x2^2; equality rows x0 = 1 and the dynamics.
  MatrixXd H = MatrixXd::Zero(5, 5);
  H.diagonal() << 2.0, 2.0, 2.0, 2.0, 2.0;
  MatrixXd A = MatrixXd::Zero(3, 5);
  VectorXd b(3);
  A(0, 0) = 1.0;
  b(0) = 1.0;
  A(1, 1) = 1.0;
  A(1, 0) = -1.0;
  A(1, 3) = -1.0;
  b(1) = 0.0;
  A(2, 2) = 1.0;
  A(2, 1) = -1.0;
  A(2, 4) = -1.0;
  b(2) = 0.0;
  MatrixXd kkt = MatrixXd::Zero(8, 8);
  kkt.topLeftCorner(5, 5) = H;
  kkt.topRightCorner(5, 3) = A.transpose();
  kkt.bottomLeftCorner(3, 5) = A;
  VectorXd rhs(8);
  rhs.setZero();
  rhs.tail(3) = b;
  const VectorXd sol = kkt.fullPivLu().solve(rhs);

  CHECK(std::abs(traj.states[0](0) - sol(0)) < 1e-8);
  CHECK(std::abs(traj.states[1](0) - sol(1)) < 1e-8);
  CHECK(std::abs(traj.states[2](0) - sol(2)) < 1e-8);
  CHECK(std::abs(traj.controls[0](0) - sol(3)) < 1e-8);
  CHECK(std::abs(traj.controls[1](0) - sol(4)) < 1e-8);

  const double oracle_cost = sol.head(5).squaredNorm();
  CHECK(traj.objective_value == doctest::Approx(oracle_cost).epsilon(1e-8));
}

TEST_CASE("forced slack activation matches a control-grid oracle") {
  // From x0 = 1 the bound x <= 0.2 cannot be met within |u| <= 0.3; the
  // optimum violates it through the slack.
  OcpSpec spec = integrator_spec(2, 1.0, 1.0, 1.0);
  spec.rows.push_back(upper_bound_row(0.2, 5.0));
  spec.rows.push_back(control_row(1.0, 0.3, 1e9));
  spec.rows.push_back(control_row(-1.0, 0.3, 1e9));
  const Trajectory traj = solve_ocp(spec);
  CHECK(traj.kkt_residual <= 1e-6);

  // slacks positive exactly where the bound must be broken
  CHECK(traj.constraint_slacks[0](0) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(traj.constraint_slacks[1](0) > 0.0);

  // objective includes the slack penalties
  double manual = 0.0;
  for (int l = 0; l < 2; ++l) {
    manual += traj.states[l].squaredNorm() + traj.controls[l].squaredNorm() +
              5.0 * std::max(0.0, traj.states[l](0) - 0.2);
  }
  manual += traj.states[2].squaredNorm() + 5.0 * std::max(0.0, traj.states[2](0) - 0.2);
  CHECK(traj.objective_value == doctest::Approx(manual).epsilon(1e-8));

  // exhaustive control grid oracle
  double grid_best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 600; ++i) {
    for (int j = 0; j <= 600; ++j) {
      const double u0 = -0.3 + 0.001 * i;
      const double u1 = -0.3 + 0.001 * j;
      const double x1 = 1.0 + u0;
      const double x2 = x1 + u1;
      double cost = 1.0 + u0 * u0 + x1 * x1 + u1 * u1 + x2 * x2;
      cost += 5.0 * (std::max(0.0, 1.0 - 0.2) + std::max(0.0, x1 - 0.2) +
                     std::max(0.0, x2 - 0.2));
      grid_best = std::min(grid_best, cost);
    }
  }
  CHECK(traj.objective_value <= grid_best + 1e-6);
}

TEST_CASE("evaluate_cost") {
  SUBCASE("zero trajectory with zero costs") {
    OcpSpec spec = integrator_spec(3, 0.0, 0.0, 0.0);
    Trajectory traj;
    traj.states.assign(4, scalar(0.0));
    traj.controls.assign(3, scalar(0.0));
    CHECK(evaluate_cost(spec, traj) == 0.0);
  }
  SUBCASE("constant stage cost with unit discount sums to N times the cost") {
    OcpSpec spec = integrator_spec(5, 0.0, 0.0, 2.0);
    Trajectory traj;
    traj.states.assign(6, scalar(0.0));
    traj.controls.assign(5, scalar(0.5));  // stage cost 2 * 0.25 = 0.5
    CHECK(evaluate_cost(spec, traj) == doctest::Approx(5 * 0.5).epsilon(1e-15));
  }
  SUBCASE("discounted three-step instance matches manual accumulation") {
    OcpSpec spec = integrator_spec(3, 0.0, 1.0, 0.5);
    spec.discount = 0.9;
    spec.state_ref = scalar(0.2);
    Trajectory traj;
    traj.states = {scalar(1.0), scalar(0.6), scalar(0.3), scalar(0.1)};
    traj.controls = {scalar(-0.4), scalar(-0.3), scalar(-0.2)};
    double manual = 0.0;
    double gamma = 1.0;
    for (int l = 0; l < 3; ++l) {
      const double dx = traj.states[l](0) - 0.2;
      manual += gamma * (dx * dx + 0.5 * traj.controls[l](0) * traj.controls[l](0));
      gamma *= 0.9;
    }
    const double dxt = traj.states[3](0) - 0.2;
    manual += gamma * dxt * dxt;
    CHECK(evaluate_cost(spec, traj) == doctest::Approx(manual).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch is an input error") {
    OcpSpec spec = integrator_spec(3, 0.0);
    Trajectory traj;
    traj.states.assign(3, scalar(0.0));  // one state short
    traj.controls.assign(3, scalar(0.0));
    CHECK_THROWS_AS(evaluate_cost(spec, traj), std::invalid_argument);
  }
}

TEST_CASE("solved trajectories satisfy the stated recursions") {
  OcpSpec spec = integrator_spec(6, 2.0);
  spec.rows.push_back(upper_bound_row(1.5, 20.0));

  // coupling block in increment mode
  spec.coupling_dim = 1;
  spec.increment_mode = true;
  spec.initial_coupling = scalar(0.7);
  spec.delta_weight = 0.5;
  spec.coupling_weight = 3.0;
  spec.coupling_Sx = MatrixXd::Identity(1, 1);
  spec.coupling_Sw = MatrixXd::Identity(1, 1);
  spec.coupling_offset = scalar(0.1);

  const Trajectory traj = solve_ocp(spec);
  CHECK(traj.kkt_residual <= 1e-6);
  for (int l = 0; l < spec.horizon; ++l) {
    const VectorXd pred = spec.dynamics->step(traj.states[l], traj.controls[l]);
    CHECK((traj.states[l + 1] - pred).lpNorm<Eigen::Infinity>() <= 1e-8);
    const double wnext = traj.couplings[l](0) + traj.coupling_increments[l](0);
    CHECK(std::abs(traj.couplings[l + 1](0) - wnext) <= 1e-10);
  }
  CHECK(traj.couplings[0](0) == doctest::Approx(0.7).epsilon(1e-12));
  for (const VectorXd& s : traj.constraint_slacks) CHECK(s.minCoeff() >= 0.0);
}

TEST_CASE("first-order optimality probe on a convex instance") {
  OcpSpec spec = integrator_spec(5, 1.5);
  spec.rows.push_back(upper_bound_row(1.0, 10.0));
  const Trajectory traj = solve_ocp(spec);

  for (int l = 0; l < spec.horizon; ++l) {
    for (double delta : {-1e-3, 1e-3}) {
      std::vector<VectorXd> controls = traj.controls;
      controls[l](0) += delta;
      const Trajectory probe = resimulate(spec, traj, controls);
      CHECK(probe.objective_value >= traj.objective_value - 1e-6);
    }
  }
}

TEST_CASE("sqp path agrees with the direct QP path on linear dynamics") {
  OcpSpec spec = integrator_spec(5, 1.2);
  spec.rows.push_back(upper_bound_row(0.8, 7.0));
  const Trajectory direct = solve_ocp(spec);
  SolveOptions opts;
  opts.force_sqp_path = true;
  const Trajectory sqp = solve_ocp(spec, opts);
  CHECK(std::abs(direct.objective_value - sqp.objective_value) <= 1e-7);
}

TEST_CASE("nonlinear unicycle solve reaches kkt tolerance") {
  OcpSpec spec;
  spec.horizon = 8;
  spec.dynamics = std::make_shared<plants::WmrDynamics>(plants::WmrModel{1.0, 0.1});
  spec.initial_state = VectorXd::Zero(3);
  spec.state_ref = VectorXd::Zero(3);
  spec.state_ref << 0.4, 0.2, 0.0;
  spec.state_weight = VectorXd::Zero(3);
  spec.state_weight << 5.0, 5.0, 0.1;
  spec.control_weight = VectorXd::Constant(2, 0.1);
  IneqRow v_hi;
  v_hi.cx = VectorXd::Zero(3);
  v_hi.cu = VectorXd::Zero(2);
  v_hi.cu(0) = 1.0;
  v_hi.rhs = 1.0;
  v_hi.slack_weight = v_hi.slack_weight_terminal = 1e9;
  v_hi.applies_terminal = false;
  spec.rows.push_back(v_hi);

  const Trajectory traj = solve_ocp(spec);
  CHECK(traj.kkt_residual <= 1e-6);
  CHECK(traj.sqp_iterations >= 2);
  // moves toward the reference
  CHECK((traj.states.back().head(2) - spec.state_ref.head(2)).norm() <
        (spec.initial_state.head(2) - spec.state_ref.head(2)).norm());

  SUBCASE("iteration cap raises a convergence error carrying the residual") {
    SolveOptions strict;
    strict.max_sqp_iterations = 1;
    CHECK_THROWS_AS(solve_ocp(spec, strict), ConvergenceError);
  }
}

TEST_CASE("contradictory hard constraints signal infeasibility") {
  OcpSpec spec = integrator_spec(2, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  IneqRow lo;  // x >= 1 hard, no slack
  lo.cx = scalar(-1.0);
  lo.cu = scalar(0.0);
  lo.rhs = -1.0;
  lo.slack_weight = inf;
  lo.slack_weight_terminal = inf;
  IneqRow hi;  // x <= 0 hard, no slack
  hi.cx = scalar(1.0);
  hi.cu = scalar(0.0);
  hi.rhs = 0.0;
  hi.slack_weight = inf;
  hi.slack_weight_terminal = inf;
  spec.rows.push_back(lo);
  spec.rows.push_back(hi);
  CHECK_THROWS_AS(solve_ocp(spec), ConvergenceError);
}

TEST_CASE("warm-start shift remaps the trajectory and active set") {
  OcpSpec spec = integrator_spec(4, 2.0);
  spec.rows.push_back(upper_bound_row(1.0, 10.0));
  const Trajectory traj = solve_ocp(spec);
  const Trajectory shifted = shift_warm_start(spec, traj);
  REQUIRE(shifted.states.size() == traj.states.size());
  for (int l = 0; l < spec.horizon; ++l) CHECK(shifted.states[l] == traj.states[l + 1]);
  CHECK(shifted.states.back() == traj.states.back());

  // shifted warm start still solves (and faster or equal)
  SolveOptions opts;
  opts.warm_start = &shifted;
  OcpSpec next = spec;
  next.initial_state = traj.states[1];
  const Trajectory resolved = solve_ocp(next, opts);
  CHECK(resolved.kkt_residual <= 1e-6);
}

TEST_SUITE_END();
