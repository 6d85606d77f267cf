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

#include "mabo/scenario.hpp"

#include <algorithm>

namespace mabo {

std::vector<int> Scenario::neighbors(int i) const {
  std::vector<int> out;
  for (const auto& [a, b] : coupling.edges) {
    if (a == i) out.push_back(b);
    if (b == i) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

VectorXd Scenario::offset_between(int i, int j) const {
  for (const auto& off : coupling.offsets) {
    if (off.i == i && off.j == j) return off.value;
    if (off.i == j && off.j == i) return -off.value;
  }
  throw std::invalid_argument("offset_between: agents " + std::to_string(i) + " and " +
                              std::to_string(j) + " are not coupled");
}

ThetaLayout theta_layout(const Scenario& scenario, int agent) {
  const AgentSpec& spec = scenario.agents.at(agent);
  ThetaLayout layout;
  layout.nx = spec.state_dim();
  layout.n_groups = (spec.state_box.empty() ? 0 : 1) + (spec.control_bounds ? 1 : 0);
  layout.n_coupling = static_cast<int>(scenario.coupling.residual_indices.size() *
                                       scenario.neighbors(agent).size());
  return layout;
}

void validate(const Scenario& scenario) {
  const int m = scenario.num_agents();
  if (m < 1) throw SchemaError("scenario '" + scenario.name + "': needs at least one agent");
  if (scenario.horizon < 1) throw SchemaError("scenario: horizon must be >= 1");
  if (!(scenario.discount > 0.0 && scenario.discount <= 1.0)) {
    throw SchemaError("scenario: discount must lie in (0, 1]");
  }
  if (scenario.learning.episodes < 1 || scenario.learning.warmup < 1) {
    throw SchemaError("scenario: learning.episodes and learning.warmup must be >= 1");
  }
  if (scenario.learning.rho <= 0.0) throw SchemaError("scenario: learning.rho must be > 0");
  if (scenario.dual.beta < 0.0 || scenario.dual.max_iter < 1) {
    throw SchemaError("scenario: dual config invalid");
  }

  for (const auto& [a, b] : scenario.coupling.edges) {
    if (a < 0 || a >= m || b < 0 || b >= m || a == b) {
      throw SchemaError("scenario: coupling edge references unknown agent");
    }
  }
  for (const auto& off : scenario.coupling.offsets) {
    if (off.i < 0 || off.i >= m || off.j < 0 || off.j >= m) {
      throw SchemaError("scenario: coupling offset references unknown agent");
    }
    if (static_cast<int>(off.value.size()) !=
        static_cast<int>(scenario.coupling.residual_indices.size())) {
      throw SchemaError("scenario: coupling offset dimension does not match residual_indices");
    }
  }
  if (!scenario.coupling.empty() &&
      scenario.coupling.offsets.size() != scenario.coupling.edges.size()) {
    throw SchemaError("scenario: one coupling offset required per edge");
  }

  if (scenario.is_synthetic()) {
    if (static_cast<int>(scenario.synthetic->targets.size()) != m) {
      throw SchemaError("scenario: synthetic targets must match agent count");
    }
    for (int i = 0; i < m; ++i) {
      const auto& box = scenario.agents[i].param_box;
      if (box.dim() < 1 || (box.hi - box.lo).minCoeff() < 0.0) {
        throw SchemaError("scenario: agent param_box degenerate");
      }
      if (scenario.synthetic->targets[i].size() != box.dim()) {
        throw SchemaError("scenario: synthetic target dimension does not match param_box");
      }
    }
    return;
  }

  for (int i = 0; i < m; ++i) {
    const AgentSpec& a = scenario.agents[i];
    const int nx = a.state_dim();
    if (plants::model_state_dim(a.true_model) != nx) {
      throw SchemaError("scenario: agent " + std::to_string(i) +
                        " true/prediction model state dimensions differ");
    }
    if (a.initial_state.size() != nx || a.state_reference.size() != nx ||
        a.stage_weights.size() != nx) {
      throw SchemaError("scenario: agent " + std::to_string(i) + " vector sizes inconsistent");
    }
    if (a.stage_weights.minCoeff() < 0.0 || a.control_weight < 0.0) {
      throw SchemaError("scenario: agent " + std::to_string(i) + " has negative cost weights");
    }
    for (const auto& row : a.state_box) {
      if (row.index < 0 || row.index >= nx) {
        throw SchemaError("scenario: agent " + std::to_string(i) + " state_box index out of range");
      }
      if (row.penalty <= 0.0) {
        throw SchemaError("scenario: agent " + std::to_string(i) + " state_box penalty must be > 0");
      }
    }
    if (a.control_bounds && a.control_bounds->first >= a.control_bounds->second) {
      throw SchemaError("scenario: agent " + std::to_string(i) + " control bounds degenerate");
    }
    for (int idx : scenario.coupling.residual_indices) {
      if (idx < 0 || idx >= nx) {
        throw SchemaError("scenario: coupling residual index out of range for agent " +
                          std::to_string(i));
      }
    }
    const ThetaLayout layout = theta_layout(scenario, i);
    if (a.param_box.dim() != layout.dim()) {
      throw SchemaError("scenario: agent " + std::to_string(i) + " param_box has dimension " +
                        std::to_string(a.param_box.dim()) + ", theta layout needs " +
                        std::to_string(layout.dim()));
    }
    if ((a.param_box.hi - a.param_box.lo).minCoeff() < 0.0) {
      throw SchemaError("scenario: agent " + std::to_string(i) + " param_box degenerate");
    }
  }
}

}  // namespace mabo
