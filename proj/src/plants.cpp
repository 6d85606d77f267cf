/*
 Copyright 2026 The mabo-dmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "mabo/plants.hpp"

#include <cmath>

#include "mabo/scenario.hpp"

namespace mabo::plants {

int model_state_dim(const ModelSpec& m) {
  return std::holds_alternative<LinearAgentModel>(m) ? 2 : 3;
}

int model_control_dim(const ModelSpec& m) {
  return std::holds_alternative<LinearAgentModel>(m) ? 1 : 2;
}

VectorXd step_linear(const LinearAgentModel& model, const VectorXd& x, const VectorXd& u,
                     std::mt19937_64& rng) {
  if (x.size() != 2 || u.size() != 1) throw std::invalid_argument("step_linear: dimension mismatch");
  Eigen::Vector2d next = model.A * x + model.B * u(0);
  if (model.disturbance_channel) {
    next(0) += uniform_real(rng, model.disturbance_channel->lo, model.disturbance_channel->hi);
  }
  return next;
}

namespace {

// Continuous unicycle vector field with scaled inputs.
Eigen::Vector3d wmr_field(const Eigen::Vector3d& x, const Eigen::Vector2d& u_eff) {
  return {u_eff(0) * std::cos(x(2)), u_eff(0) * std::sin(x(2)), u_eff(1)};
}

Eigen::Matrix3d wmr_field_jx(const Eigen::Vector3d& x, const Eigen::Vector2d& u_eff) {
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  j(0, 2) = -u_eff(0) * std::sin(x(2));
  j(1, 2) = u_eff(0) * std::cos(x(2));
  return j;
}

Eigen::Matrix<double, 3, 2> wmr_field_ju(const Eigen::Vector3d& x, double scale) {
  Eigen::Matrix<double, 3, 2> j = Eigen::Matrix<double, 3, 2>::Zero();
  j(0, 0) = scale * std::cos(x(2));
  j(1, 0) = scale * std::sin(x(2));
  j(2, 1) = scale;
  return j;
}

}  // namespace

VectorXd step_wmr(const WmrModel& model, const VectorXd& x, const VectorXd& u) {
  if (x.size() != 3 || u.size() != 2) throw std::invalid_argument("step_wmr: dimension mismatch");
  const Eigen::Vector3d x0 = x;
  const Eigen::Vector2d ue = model.input_scale * u;
  const double dt = model.step_size;
  const Eigen::Vector3d k1 = wmr_field(x0, ue);
  const Eigen::Vector3d k2 = wmr_field(x0 + 0.5 * dt * k1, ue);
  const Eigen::Vector3d k3 = wmr_field(x0 + 0.5 * dt * k2, ue);
  const Eigen::Vector3d k4 = wmr_field(x0 + dt * k3, ue);
  return x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

VectorXd LinearDynamics::step(const VectorXd& x, const VectorXd& u) const {
  return model_.A * x + model_.B * u(0);
}

void LinearDynamics::jacobians(const VectorXd&, const VectorXd&, MatrixXd& A, MatrixXd& B) const {
  A = model_.A;
  B = model_.B;
}

VectorXd WmrDynamics::step(const VectorXd& x, const VectorXd& u) const {
  return step_wmr(model_, x, u);
}

void WmrDynamics::jacobians(const VectorXd& x, const VectorXd& u, MatrixXd& A, MatrixXd& B) const {
  // Chain rule through the four RK4 stages.
  const double dt = model_.step_size;
  const double s = model_.input_scale;
  const Eigen::Vector3d x0 = x;
  const Eigen::Vector2d ue = s * u;

  const Eigen::Vector3d k1 = wmr_field(x0, ue);
  const Eigen::Vector3d x2 = x0 + 0.5 * dt * k1;
  const Eigen::Vector3d k2 = wmr_field(x2, ue);
  const Eigen::Vector3d x3 = x0 + 0.5 * dt * k2;
  const Eigen::Vector3d k3 = wmr_field(x3, ue);
  const Eigen::Vector3d x4 = x0 + dt * k3;

  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d dk1x = wmr_field_jx(x0, ue);
  const Eigen::Matrix3d dk2x = wmr_field_jx(x2, ue) * (I + 0.5 * dt * dk1x);
  const Eigen::Matrix3d dk3x = wmr_field_jx(x3, ue) * (I + 0.5 * dt * dk2x);
  const Eigen::Matrix3d dk4x = wmr_field_jx(x4, ue) * (I + dt * dk3x);

  const Eigen::Matrix<double, 3, 2> dk1u = wmr_field_ju(x0, s);
  const Eigen::Matrix<double, 3, 2> dk2u = wmr_field_jx(x2, ue) * (0.5 * dt * dk1u) + wmr_field_ju(x2, s);
  const Eigen::Matrix<double, 3, 2> dk3u = wmr_field_jx(x3, ue) * (0.5 * dt * dk2u) + wmr_field_ju(x3, s);
  const Eigen::Matrix<double, 3, 2> dk4u = wmr_field_jx(x4, ue) * (dt * dk3u) + wmr_field_ju(x4, s);

  A = I + (dt / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
  B = (dt / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
}

std::shared_ptr<const DynamicsModel> make_dynamics(const ModelSpec& spec) {
  if (const auto* lin = std::get_if<LinearAgentModel>(&spec)) {
    return std::make_shared<LinearDynamics>(*lin);
  }
  return std::make_shared<WmrDynamics>(std::get<WmrModel>(spec));
}

std::shared_ptr<const DynamicsModel> prediction_model(int agent, const Scenario& scenario) {
  if (agent < 0 || agent >= scenario.num_agents()) {
    throw std::invalid_argument("prediction_model: unknown agent " + std::to_string(agent));
  }
  return make_dynamics(scenario.agents[agent].prediction_model);
}

VectorXd true_step(int agent, const Scenario& scenario, const VectorXd& x, const VectorXd& u,
                   std::mt19937_64& rng) {
  if (agent < 0 || agent >= scenario.num_agents()) {
    throw std::invalid_argument("true_step: unknown agent " + std::to_string(agent));
  }
  const ModelSpec& m = scenario.agents[agent].true_model;
  if (const auto* lin = std::get_if<LinearAgentModel>(&m)) return step_linear(*lin, x, u, rng);
  return step_wmr(std::get<WmrModel>(m), x, u);
}

}  // namespace mabo::plants
