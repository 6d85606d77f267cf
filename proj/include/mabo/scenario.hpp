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

#ifndef MABO_SCENARIO_HPP
#define MABO_SCENARIO_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mabo/common.hpp"
#include "mabo/plants.hpp"

namespace mabo {

/// Two-sided box row on a single state coordinate; use ±inf to drop a side.
struct StateBoxRow {
  int index = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double penalty = 100.0;  ///< soft-violation weight, used both as MPC slack weight and in J
};

struct AgentSpec {
  plants::ModelSpec true_model;
  plants::ModelSpec prediction_model;
  VectorXd initial_state;
  VectorXd state_reference;
  VectorXd stage_weights;        ///< diagonal state weights of the local quadratic cost
  double control_weight = 0.1;   ///< per-channel control weight
  std::vector<StateBoxRow> state_box;                     ///< soft constraint group
  std::optional<std::pair<double, double>> control_bounds;  ///< hard group, all channels
  Box param_box;                 ///< BO search box for this agent's theta

  int state_dim() const { return plants::model_state_dim(prediction_model); }
  int control_dim() const { return plants::model_control_dim(prediction_model); }
};

/// Signed coupling offset for an unordered agent pair (stored with i < j).
/// The coupling residual seen from agent a against neighbor b is
///   sel(x_a) - sel(x_b) - offset(a, b),  offset(b, a) = -offset(a, b).
struct CouplingOffset {
  int i = 0;
  int j = 1;
  VectorXd value;
};

struct CouplingSpec {
  std::vector<std::pair<int, int>> edges;  ///< unordered pairs, i < j
  std::vector<int> residual_indices;       ///< state coords entering the coupling cost
  std::vector<CouplingOffset> offsets;     ///< one per edge
  double weight = 10.0;

  bool empty() const { return edges.empty(); }
};

struct DualConfig {
  double beta = 0.05;
  double eps1 = 1e-4;
  double eps2 = 1e-4;
  int max_iter = 200;
};

enum class DmpcMode { kPlain, kModified, kParametric };

struct LearningConfig {
  int episodes = 50;
  int steps = 40;      ///< simulation steps n per episode
  int warmup = 5;      ///< space-filling evaluations per agent before round 1
  double rho = 1.0;    ///< ADMM penalty
  std::string acquisition = "ei";  ///< "ei" or "nonmyopic-ei"
  int rollout_horizon = 1;
  int rollout_samples = 256;
  bool common_random_numbers = true;
};

/// Analytic per-agent objectives J_i = ||zeta_i - target_i||^2, used by the
/// coordinator toys; no plant is simulated.
struct SyntheticObjective {
  std::vector<VectorXd> targets;
};

enum class ScenarioKind { kLinear3Agent, kWmrFormation, kCustom };

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::kCustom;
  DmpcMode mode = DmpcMode::kParametric;
  int horizon = 10;
  double discount = 1.0;
  double delta_weight = 1.0;       ///< M = delta_weight * I on coupling increments
  double hard_slack_weight = 1e9;  ///< slack weight realizing hard constraints
  std::uint64_t seed = 0;
  std::vector<AgentSpec> agents;
  CouplingSpec coupling;
  DualConfig dual;
  LearningConfig learning;
  std::optional<SyntheticObjective> synthetic;

  int num_agents() const { return static_cast<int>(agents.size()); }
  bool is_synthetic() const { return synthetic.has_value(); }

  /// Coupled neighbors of `i`, ascending. This fixed order defines the block
  /// layout of the coupling vector w and of the edge multipliers.
  std::vector<int> neighbors(int i) const;

  /// Signed offset for the residual sel(x_i) - sel(x_j); throws if not coupled.
  VectorXd offset_between(int i, int j) const;
};

/// Layout of one agent's learnable parameter vector theta:
///   [ reference bias (nx) | log-scale stage weights (nx) |
///     backoff per inequality group | coupling-cost bias ]
struct ThetaLayout {
  int nx = 0;
  int n_groups = 0;
  int n_coupling = 0;

  int dim() const { return 2 * nx + n_groups + n_coupling; }
  int bias_begin() const { return 0; }
  int logscale_begin() const { return nx; }
  int backoff_begin() const { return 2 * nx; }
  int coupling_begin() const { return 2 * nx + n_groups; }
};

ThetaLayout theta_layout(const Scenario& scenario, int agent);

/// Structural validation beyond what parsing enforces; throws SchemaError.
void validate(const Scenario& scenario);

}  // namespace mabo

#endif  // MABO_SCENARIO_HPP
