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

#include "mabo/scenarios.hpp"

#include <map>

#include "mabo/scenario_json.hpp"

namespace mabo::scenarios {

namespace {

const char* k_example1_linear = R"json({
  "name": "example1-linear",
  "kind": "linear-3agent",
  "mode": "parametric",
  "seed": 1,
  "horizon": 10,
  "discount": 1.0,
  "delta_weight": 1.0,
  "hard_slack_weight": 1e9,
  "agents": [
    {
      "true_model": {
        "type": "linear",
        "A": [[0.9, 0.35], [0.0, 1.1]],
        "B": [0.0813, 0.2],
        "disturbance": {"low": -0.1, "high": 0.0}
      },
      "prediction_model": {
        "type": "linear",
        "A": [[1.0, 0.25], [0.0, 1.0]],
        "B": [0.0312, 0.25]
      },
      "initial_state": [0.3, 0.0],
      "state_reference": [0.0, 0.0],
      "stage_weights": [10.0, 0.1],
      "control_weight": 0.1,
      "state_box": [{"index": 0, "low": 0.0, "high": 0.5, "penalty": 100.0}],
      "control_bounds": {"low": -0.5, "high": 0.5},
      "param_box": {
        "low":  [-0.3, -0.3, -1.5, -1.5, 0.0, 0.0, -0.5, -0.5],
        "high": [ 0.3,  0.3,  1.5,  1.5, 0.15, 0.15, 0.5,  0.5]
      }
    },
    {
      "true_model": {
        "type": "linear",
        "A": [[0.91, 0.33], [0.0, 0.98]],
        "B": [0.0611, 0.23]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[1.0, 0.25], [0.0, 1.0]],
        "B": [0.0312, 0.25]
      },
      "initial_state": [1.2, 0.0],
      "state_reference": [1.5, 0.0],
      "stage_weights": [10.0, 0.1],
      "control_weight": 0.1,
      "state_box": [{"index": 0, "low": 0.0, "high": 2.0, "penalty": 100.0}],
      "control_bounds": {"low": -0.5, "high": 0.5},
      "param_box": {
        "low":  [-0.3, -0.3, -1.5, -1.5, 0.0, 0.0, -0.5, -0.5],
        "high": [ 0.3,  0.3,  1.5,  1.5, 0.15, 0.15, 0.5,  0.5]
      }
    },
    {
      "true_model": {
        "type": "linear",
        "A": [[0.88, 0.3], [0.0, 1.1]],
        "B": [0.0837, 0.21]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[1.0, 0.25], [0.0, 1.0]],
        "B": [0.0312, 0.25]
      },
      "initial_state": [-1.2, 0.0],
      "state_reference": [-1.5, 0.0],
      "stage_weights": [10.0, 0.1],
      "control_weight": 0.1,
      "state_box": [{"index": 0, "low": -2.0, "high": 0.0, "penalty": 100.0}],
      "control_bounds": {"low": -0.5, "high": 0.5},
      "param_box": {
        "low":  [-0.3, -0.3, -1.5, -1.5, 0.0, 0.0, -0.5, -0.5],
        "high": [ 0.3,  0.3,  1.5,  1.5, 0.15, 0.15, 0.5,  0.5]
      }
    }
  ],
  "coupling": {
    "edges": [[0, 1], [0, 2], [1, 2]],
    "residual_indices": [0],
    "offsets": [
      {"i": 0, "j": 1, "value": [-1.5]},
      {"i": 0, "j": 2, "value": [1.5]},
      {"i": 1, "j": 2, "value": [3.0]}
    ],
    "weight": 10.0
  },
  "dual": {"beta": 0.1, "eps1": 1e-3, "eps2": 1e-3, "max_iter": 30},
  "learning": {
    "episodes": 100,
    "steps": 40,
    "warmup": 5,
    "rho": 1.0,
    "acquisition": "ei",
    "rollout_horizon": 1,
    "rollout_samples": 256,
    "common_random_numbers": true
  }
}
)json";

const char* k_example2_wmr = R"json({
  "name": "example2-wmr",
  "kind": "wmr-formation",
  "mode": "parametric",
  "seed": 2,
  "horizon": 15,
  "discount": 1.0,
  "delta_weight": 1.0,
  "hard_slack_weight": 1e9,
  "agents": [
    {
      "true_model": {"type": "wmr", "input_scale": 1.0, "dt": 0.1},
      "prediction_model": {"type": "wmr", "input_scale": 1.0, "dt": 0.1},
      "initial_state": [-0.5, 2.0, 0.0],
      "state_reference": [0.0, 1.1547005383792515, 0.0],
      "stage_weights": [5.0, 5.0, 0.1],
      "control_weight": 0.1,
      "control_bounds": {"low": -1.0, "high": 1.0},
      "param_box": {
        "low":  [-0.5, -0.5, -0.5, -2.0, -2.0, -2.0, 0.0, -0.5, -0.5, -0.5, -0.5],
        "high": [ 0.5,  0.5,  0.5,  2.0,  2.0,  2.0, 0.2,  0.5,  0.5,  0.5,  0.5]
      }
    },
    {
      "true_model": {"type": "wmr", "input_scale": 1.0, "dt": 0.1},
      "prediction_model": {"type": "wmr", "input_scale": 0.2, "dt": 0.1},
      "initial_state": [-2.0, -1.5, 0.0],
      "state_reference": [-1.0, -0.57735026918962576, 0.0],
      "stage_weights": [5.0, 5.0, 0.1],
      "control_weight": 0.1,
      "control_bounds": {"low": -1.0, "high": 1.0},
      "param_box": {
        "low":  [-0.5, -0.5, -0.5, -2.0, -2.0, -2.0, 0.0, -0.5, -0.5, -0.5, -0.5],
        "high": [ 0.5,  0.5,  0.5,  2.0,  2.0,  2.0, 0.2,  0.5,  0.5,  0.5,  0.5]
      }
    },
    {
      "true_model": {"type": "wmr", "input_scale": 1.0, "dt": 0.1},
      "prediction_model": {"type": "wmr", "input_scale": 1.5, "dt": 0.1},
      "initial_state": [2.0, -1.0, 0.0],
      "state_reference": [1.0, -0.57735026918962576, 0.0],
      "stage_weights": [5.0, 5.0, 0.1],
      "control_weight": 0.1,
      "control_bounds": {"low": -1.0, "high": 1.0},
      "param_box": {
        "low":  [-0.5, -0.5, -0.5, -2.0, -2.0, -2.0, 0.0, -0.5, -0.5, -0.5, -0.5],
        "high": [ 0.5,  0.5,  0.5,  2.0,  2.0,  2.0, 0.2,  0.5,  0.5,  0.5,  0.5]
      }
    }
  ],
  "coupling": {
    "edges": [[0, 1], [0, 2], [1, 2]],
    "residual_indices": [0, 1],
    "offsets": [
      {"i": 0, "j": 1, "value": [1.0, 1.7320508075688772]},
      {"i": 0, "j": 2, "value": [-1.0, 1.7320508075688772]},
      {"i": 1, "j": 2, "value": [-2.0, 0.0]}
    ],
    "weight": 10.0
  },
  "dual": {"beta": 0.1, "eps1": 1e-3, "eps2": 1e-3, "max_iter": 10},
  "learning": {
    "episodes": 120,
    "steps": 60,
    "warmup": 5,
    "rho": 1.0,
    "acquisition": "ei",
    "rollout_horizon": 1,
    "rollout_samples": 256,
    "common_random_numbers": true
  }
}
)json";

const char* k_toy_lq_2agent = R"json({
  "name": "toy-lq-2agent",
  "kind": "custom",
  "mode": "plain",
  "seed": 3,
  "horizon": 5,
  "discount": 1.0,
  "agents": [
    {
      "true_model": {
        "type": "linear",
        "A": [[0.8, 0.1], [0.0, 0.9]],
        "B": [0.1, 0.2]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[0.8, 0.1], [0.0, 0.9]],
        "B": [0.1, 0.2]
      },
      "initial_state": [1.0, 0.2],
      "state_reference": [0.5, 0.0],
      "stage_weights": [1.0, 0.5],
      "control_weight": 0.1,
      "param_box": {
        "low":  [-0.1, -0.1, -0.1, -0.1, -0.1],
        "high": [ 0.1,  0.1,  0.1,  0.1,  0.1]
      }
    },
    {
      "true_model": {
        "type": "linear",
        "A": [[0.85, 0.05], [0.0, 0.8]],
        "B": [0.15, 0.1]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[0.85, 0.05], [0.0, 0.8]],
        "B": [0.15, 0.1]
      },
      "initial_state": [-1.0, -0.1],
      "state_reference": [-0.5, 0.0],
      "stage_weights": [1.0, 0.5],
      "control_weight": 0.1,
      "param_box": {
        "low":  [-0.1, -0.1, -0.1, -0.1, -0.1],
        "high": [ 0.1,  0.1,  0.1,  0.1,  0.1]
      }
    }
  ],
  "coupling": {
    "edges": [[0, 1]],
    "residual_indices": [0],
    "offsets": [{"i": 0, "j": 1, "value": [1.0]}],
    "weight": 10.0
  },
  "dual": {"beta": 0.05, "eps1": 1e-5, "eps2": 1e-5, "max_iter": 500},
  "learning": {"episodes": 5, "steps": 10, "warmup": 3}
}
)json";

const char* k_toy_separable_quadratic = R"json({
  "name": "toy-separable-quadratic",
  "kind": "custom",
  "mode": "parametric",
  "seed": 4,
  "horizon": 1,
  "synthetic": {"targets": [[1.0], [3.0]]},
  "agents": [
    {"param_box": {"low": [-5.0], "high": [5.0]}},
    {"param_box": {"low": [-5.0], "high": [5.0]}}
  ],
  "learning": {"episodes": 80, "steps": 1, "warmup": 5, "rho": 1.0}
}
)json";

const char* k_toy_decoupled = R"json({
  "name": "toy-decoupled",
  "kind": "custom",
  "mode": "plain",
  "seed": 5,
  "horizon": 5,
  "agents": [
    {
      "true_model": {
        "type": "linear",
        "A": [[0.7, 0.2], [0.0, 0.85]],
        "B": [0.2, 0.1]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[0.7, 0.2], [0.0, 0.85]],
        "B": [0.2, 0.1]
      },
      "initial_state": [0.8, -0.3],
      "state_reference": [0.0, 0.0],
      "stage_weights": [1.0, 1.0],
      "control_weight": 0.2,
      "param_box": {
        "low":  [-0.1, -0.1, -0.1, -0.1],
        "high": [ 0.1,  0.1,  0.1,  0.1]
      }
    },
    {
      "true_model": {
        "type": "linear",
        "A": [[0.9, 0.1], [0.0, 0.75]],
        "B": [0.05, 0.25]
      },
      "prediction_model": {
        "type": "linear",
        "A": [[0.9, 0.1], [0.0, 0.75]],
        "B": [0.05, 0.25]
      },
      "initial_state": [-0.6, 0.4],
      "state_reference": [0.0, 0.0],
      "stage_weights": [1.0, 1.0],
      "control_weight": 0.2,
      "param_box": {
        "low":  [-0.1, -0.1, -0.1, -0.1],
        "high": [ 0.1,  0.1,  0.1,  0.1]
      }
    }
  ],
  "learning": {"episodes": 5, "steps": 10, "warmup": 3}
}
)json";

const std::map<std::string, const char*>& registry() {
  static const std::map<std::string, const char*> table = {
      {"example1-linear", k_example1_linear},
      {"example2-wmr", k_example2_wmr},
      {"toy-lq-2agent", k_toy_lq_2agent},
      {"toy-separable-quadratic", k_toy_separable_quadratic},
      {"toy-decoupled", k_toy_decoupled},
  };
  return table;
}

}  // namespace

std::vector<std::string> list_scenarios() {
  std::vector<std::string> ids;
  for (const auto& [name, doc] : registry()) ids.push_back(name);
  return ids;
}

const std::string& scenario_document(const std::string& identifier) {
  static std::map<std::string, std::string> cache;
  const auto it = registry().find(identifier);
  if (it == registry().end()) {
    throw std::invalid_argument("unknown bundled scenario: " + identifier);
  }
  return cache.emplace(identifier, it->second).first->second;
}

Scenario load_scenario(const std::string& identifier) {
  return config::parse_scenario(scenario_document(identifier));
}

}  // namespace mabo::scenarios
