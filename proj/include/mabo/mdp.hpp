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

#ifndef MABO_MDP_HPP
#define MABO_MDP_HPP

#include <vector>

#include "mabo/common.hpp"

namespace mabo::mdp {

/// Finite multi-agent MDP. Actions are joint action indices; per-agent stage
/// costs share the joint action. transition[s] is |A| x |S| (rows sum to 1).
struct FiniteMdp {
  int num_states = 0;
  int num_actions = 0;  ///< joint actions, uniform across states
  int num_agents = 1;
  std::vector<MatrixXd> transition;   ///< per state: num_actions x num_states
  std::vector<MatrixXd> stage_costs;  ///< per agent: num_states x num_actions
  double discount = 0.9;

  void check() const;  ///< row-stochasticity and size checks
};

/// Deterministic joint policy: one joint action index per state.
struct PolicyTable {
  std::vector<int> action;  ///< length num_states
};

/// Modified terminal/stage cost tables built from a (possibly wrong)
/// surrogate transition model.
struct ModifiedCosts {
  VectorXd terminal;    ///< per state
  MatrixXd stage;       ///< num_states x num_actions
  bool any_infinite = false;  ///< flag retained for API completeness; never set on finite MDPs
};

/// Value of `policy` for agent `agent`: fixed point of V = L + gamma P V,
/// iterated to 1e-12 infinity-norm residual.
VectorXd policy_value(const FiniteMdp& mdp, const PolicyTable& policy, int agent);

/// max_s | V^pi(s) - sum_i V_i^pi(s) | where the global cost is sum_i L_i.
double decomposition_check(const FiniteMdp& mdp, const PolicyTable& policy);

/// Modified terminal/stage costs from the true values and a surrogate model:
///   terminal(s) = V(s),  stage(s, a) = V(s) - gamma * E_surrogate[ V(s') ].
ModifiedCosts modified_costs(const VectorXd& true_values, const FiniteMdp& surrogate);

/// N-step value of the modified costs under the surrogate chain, computed by
/// exact forward enumeration; equals the true V(start) for any horizon and
/// any surrogate. Throws NumericalError when |S|^N exceeds 1e6 paths.
double nstep_value(const ModifiedCosts& costs, const FiniteMdp& surrogate,
                   const PolicyTable& policy, int start, int horizon);

/// Per-state gap between agent `agent`'s policy value under `policy` and the
/// one-step Bellman improvement over that agent's own action, holding the
/// other agents' policy fixed. Zero gap at every state means the local policy
/// is unimprovable against the others. `action_counts` gives the per-agent
/// action counts of the factored joint encoding (big-endian mixed radix).
double local_bellman_gap(const FiniteMdp& mdp, const PolicyTable& policy, int agent,
                         const std::vector<int>& action_counts);

}  // namespace mabo::mdp

#endif  // MABO_MDP_HPP
