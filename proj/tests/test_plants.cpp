#include <doctest.h>

#include <cmath>

#include "mabo/plants.hpp"
#include "mabo/scenario.hpp"

using namespace mabo;
using namespace mabo::plants;

TEST_SUITE_BEGIN("plants");

namespace {

LinearAgentModel example1_agent1(bool with_disturbance) {
  LinearAgentModel m;
  m.A << 0.9, 0.35, 0.0, 1.1;
  m.B << 0.0813, 0.2;
  if (with_disturbance) m.disturbance_channel = DisturbanceInterval{-0.1, 0.0};
  return m;
}

}  // namespace

TEST_CASE("linear step reproduces the first agent's A row") {
  std::mt19937_64 rng(1);
  const LinearAgentModel m = example1_agent1(false);
  VectorXd x(2), u(1);
  x << 1.0, 0.0;
  u << 0.0;
  const VectorXd next = step_linear(m, x, u, rng);
  CHECK(next(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(next(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("linear step maps the origin to the origin without disturbance") {
  std::mt19937_64 rng(1);
  const LinearAgentModel m = example1_agent1(false);
  const VectorXd next = step_linear(m, VectorXd::Zero(2), VectorXd::Zero(1), rng);
  CHECK(next.norm() == 0.0);
}

TEST_CASE("disturbance draws match the stated uniform interval") {
  std::mt19937_64 rng(123);
  const LinearAgentModel m = example1_agent1(true);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const VectorXd next = step_linear(m, VectorXd::Zero(2), VectorXd::Zero(1), rng);
    const double e = next(0);
    CHECK(e >= -0.1);
    CHECK(e <= 0.0);
    sum += e;
  }
  const double mean = sum / n;
  const double se = (0.1 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean - (-0.05)) < 3.0 * se);
}

TEST_CASE("disturbance stream is seed-reproducible") {
  const LinearAgentModel m = example1_agent1(true);
  std::mt19937_64 rng_a(77), rng_b(77);
  for (int i = 0; i < 50; ++i) {
    const VectorXd a = step_linear(m, VectorXd::Zero(2), VectorXd::Zero(1), rng_a);
    const VectorXd b = step_linear(m, VectorXd::Zero(2), VectorXd::Zero(1), rng_b);
    CHECK(a(0) == b(0));
  }
}

TEST_CASE("wmr zero input is an equilibrium") {
  WmrModel m{1.0, 0.1};
  VectorXd x(3), u(2);
  x << 0.4, -0.2, 1.3;
  u << 0.0, 0.0;
  CHECK((step_wmr(m, x, u) - x).norm() == 0.0);
}

TEST_CASE("wmr straight-line motion is exact") {
  WmrModel m{1.0, 0.1};
  VectorXd x(3), u(2);
  x << 2.0, -1.0, 0.0;
  u << 1.0, 0.0;
  const VectorXd next = step_wmr(m, x, u);
  CHECK(next(0) == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(next(1) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(next(2) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("wmr matches the constant-twist arc") {
  WmrModel m{1.0, 0.1};
  VectorXd u(2);
  u << 1.0, 1.0;
  const VectorXd next = step_wmr(m, VectorXd::Zero(3), u);
  CHECK(std::abs(next(0) - std::sin(0.1)) < 1e-6);
  CHECK(std::abs(next(1) - (1.0 - std::cos(0.1))) < 1e-6);
  CHECK(std::abs(next(2) - 0.1) < 1e-12);
}

TEST_CASE("rk4 observed order on the constant-twist arc is at least 3.9") {
  VectorXd u(2);
  u << 1.0, 1.0;
  auto arc_error = [&](double dt) {
    WmrModel m{1.0, dt};
    const VectorXd next = step_wmr(m, VectorXd::Zero(3), u);
    Eigen::Vector3d exact(std::sin(dt), 1.0 - std::cos(dt), dt);
    return (next - exact).norm();
  };
  const double e1 = arc_error(0.2);
  const double e2 = arc_error(0.1);
  const double e3 = arc_error(0.05);
  CHECK(std::log2(e1 / e2) >= 3.9);
  CHECK(std::log2(e2 / e3) >= 3.9);
}

TEST_CASE("wmr jacobians agree with finite differences") {
  WmrDynamics dyn(WmrModel{1.5, 0.1});
  VectorXd x(3), u(2);
  x << 0.3, -0.7, 0.9;
  u << 0.8, -0.4;
  MatrixXd A, B;
  dyn.jacobians(x, u, A, B);
  const double h = 1e-6;
  for (int d = 0; d < 3; ++d) {
    VectorXd xp = x, xm = x;
    xp(d) += h;
    xm(d) -= h;
    const VectorXd col = (dyn.step(xp, u) - dyn.step(xm, u)) / (2.0 * h);
    CHECK((A.col(d) - col).lpNorm<Eigen::Infinity>() < 1e-8);
  }
  for (int d = 0; d < 2; ++d) {
    VectorXd up = u, um = u;
    up(d) += h;
    um(d) -= h;
    const VectorXd col = (dyn.step(x, up) - dyn.step(x, um)) / (2.0 * h);
    CHECK((B.col(d) - col).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("prediction model handles per-agent mismatch modes") {
  Scenario s;
  s.name = "toy";
  AgentSpec a;
  a.true_model = WmrModel{1.0, 0.1};
  a.prediction_model = WmrModel{0.2, 0.1};
  s.agents = {a, a};
  s.agents[1].prediction_model = WmrModel{1.5, 0.1};

  auto m0 = prediction_model(0, s);
  auto m1 = prediction_model(1, s);
  CHECK_FALSE(m0->is_linear());
  VectorXd x = VectorXd::Zero(3), u(2);
  u << 1.0, 0.0;
  // input_scale 0.2 moves a fifth as far as scale 1 in a straight line
  CHECK(m0->step(x, u)(0) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(m1->step(x, u)(0) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK_THROWS_AS(prediction_model(5, s), std::invalid_argument);
}

TEST_SUITE_END();
