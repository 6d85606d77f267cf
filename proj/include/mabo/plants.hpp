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

#ifndef MABO_PLANTS_HPP
#define MABO_PLANTS_HPP

#include <memory>
#include <optional>
#include <variant>

#include "mabo/common.hpp"

namespace mabo {

struct Scenario;  // defined in scenario.hpp

namespace plants {

/// Additive uniform disturbance interval on the first state of the true plant.
struct DisturbanceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Discrete-time 2-state / 1-input linear agent, x+ = A x + B u (+ [e, 0]^T).
struct LinearAgentModel {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  std::optional<DisturbanceInterval> disturbance_channel;
};

/// Unicycle robot state (x, y, psi), inputs (v, omega). The model applies
/// input_scale to the commanded inputs; 1 for the true plant, the mismatch
/// values for the imperfect prediction models.
struct WmrModel {
  double input_scale = 1.0;
  double step_size = 0.1;
};

using ModelSpec = std::variant<LinearAgentModel, WmrModel>;

int model_state_dim(const ModelSpec& m);
int model_control_dim(const ModelSpec& m);

/// One plant step of the linear agent. Draws exactly one rng sample when the
/// disturbance channel is enabled, none otherwise.
VectorXd step_linear(const LinearAgentModel& model, const VectorXd& x, const VectorXd& u,
                     std::mt19937_64& rng);

/// One RK4 step of the unicycle dynamics with the model's input scaling.
VectorXd step_wmr(const WmrModel& model, const VectorXd& x, const VectorXd& u);

/// Prediction-side dynamics handle used by the trajectory optimizer.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual bool is_linear() const = 0;
  /// Noiseless transition map.
  virtual VectorXd step(const VectorXd& x, const VectorXd& u) const = 0;
  /// Jacobians of the transition map at (x, u).
  virtual void jacobians(const VectorXd& x, const VectorXd& u, MatrixXd& A, MatrixXd& B) const = 0;
};

class LinearDynamics final : public DynamicsModel {
 public:
  explicit LinearDynamics(const LinearAgentModel& model) : model_(model) {}
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  bool is_linear() const override { return true; }
  VectorXd step(const VectorXd& x, const VectorXd& u) const override;
  void jacobians(const VectorXd&, const VectorXd&, MatrixXd& A, MatrixXd& B) const override;

 private:
  LinearAgentModel model_;
};

/// General linear map x+ = A x + B u, any dimensions.
class AffineDynamics final : public DynamicsModel {
 public:
  AffineDynamics(MatrixXd A, MatrixXd B) : A_(std::move(A)), B_(std::move(B)) {}
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  bool is_linear() const override { return true; }
  VectorXd step(const VectorXd& x, const VectorXd& u) const override { return A_ * x + B_ * u; }
  void jacobians(const VectorXd&, const VectorXd&, MatrixXd& A, MatrixXd& B) const override {
    A = A_;
    B = B_;
  }

 private:
  MatrixXd A_;
  MatrixXd B_;
};

class WmrDynamics final : public DynamicsModel {
 public:
  explicit WmrDynamics(const WmrModel& model) : model_(model) {}
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }
  bool is_linear() const override { return false; }
  VectorXd step(const VectorXd& x, const VectorXd& u) const override;
  void jacobians(const VectorXd& x, const VectorXd& u, MatrixXd& A, MatrixXd& B) const override;

 private:
  WmrModel model_;
};

std::shared_ptr<const DynamicsModel> make_dynamics(const ModelSpec& spec);

/// The (possibly wrong) model agent `agent` uses inside its local MPC.
std::shared_ptr<const DynamicsModel> prediction_model(int agent, const Scenario& scenario);

/// True plant step for agent `agent`, including its disturbance channel.
VectorXd true_step(int agent, const Scenario& scenario, const VectorXd& x, const VectorXd& u,
                   std::mt19937_64& rng);

}  // namespace plants
}  // namespace mabo

#endif  // MABO_PLANTS_HPP
