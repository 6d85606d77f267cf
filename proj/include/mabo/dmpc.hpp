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

#ifndef MABO_DMPC_HPP
#define MABO_DMPC_HPP

#include <vector>

#include "mabo/scenario.hpp"
#include "mabo/trajopt.hpp"

namespace mabo::dmpc {

/// Which neighbor-state coordinates form W_ij under each mode: the full
/// neighbor state in the modified/parametric schemes, the coupling-cost
/// selection in the plain dual-decomposition scheme (where free coupling
/// copies must carry cost curvature to stay bounded).
std::vector<int> coupling_selection(const Scenario& scenario, DmpcMode mode);

/// Size of agent `i`'s stacked coupling vector w_i under `mode`.
int coupling_dim(const Scenario& scenario, int agent, DmpcMode mode);

/// Dual-decomposition bookkeeping. Multipliers are stored stacked per agent,
/// stage-wise (mu[i][l] holds the blocks (mu_ij^l)_j in ascending neighbor
/// order), which realizes exactly one trajectory per directed edge (j, i).
struct DualState {
  std::vector<std::vector<VectorXd>> mu;  ///< [agent][stage 0..N]
  int iteration = 0;

  struct Snapshot {
    std::vector<VectorXd> mu_flat;    ///< per agent: multipliers stacked over stages
    std::vector<VectorXd> wbar_flat;  ///< per agent: w-bar trajectory stacked
  };
  std::vector<Snapshot> history;  ///< most recent last, depth at most 2
};

DualState init_dual(const Scenario& scenario, DmpcMode mode);

/// Assembles agent `agent`'s local problem: tracking and coupling costs,
/// dual terms, and in the modified/parametric modes the pinned initial
/// coupling w_i^k = W_ij(s_j^k) with increment dynamics. `theta` is consumed
/// in parametric mode only (pass an empty vector otherwise).
ocp::OcpSpec build_local_problem(int agent, const Scenario& scenario, const VectorXd& state,
                                 const std::vector<VectorXd>& all_states, const DualState& dual,
                                 const VectorXd& theta, DmpcMode mode);

struct IterationResult {
  std::vector<ocp::Trajectory> trajectories;
  DualState dual;
};

/// One synchronous sweep: every agent solves its local problem under the
/// current multipliers, then mu_i += beta (w-bar_i - w-hat_i) with w-hat
/// collected from the neighbors' solved state trajectories.
IterationResult dual_iteration(const Scenario& scenario, const std::vector<VectorXd>& states,
                               const DualState& dual, const std::vector<VectorXd>& thetas,
                               DmpcMode mode,
                               const std::vector<ocp::Trajectory>* warm = nullptr);

enum class StopReason { kContinue, kConverged, kBudgetExhausted };

/// Stopping rule of the multiplier exchange: converged once, for every agent,
/// consecutive multiplier snapshots differ by less than eps1 (primary) or
/// consecutive w-bar snapshots differ by less than eps2 (advisory).
StopReason check_stop(const DualState& dual, double eps1, double eps2, int max_iter);

struct DmpcResult {
  std::vector<VectorXd> actions;  ///< first control per agent
  DualState dual;                 ///< multipliers at stop (mu-hat-star)
  std::vector<ocp::Trajectory> trajectories;
  int iterations = 0;
  StopReason stop = StopReason::kContinue;
  double mu_residual = 0.0;  ///< max over agents of the last multiplier change
  double w_residual = 0.0;
};

/// Full receding-horizon solve at one physical time step: multipliers start
/// at zero, dual iterations run until the stopping rule fires.
DmpcResult solve_dmpc(const Scenario& scenario, const std::vector<VectorXd>& states,
                      const std::vector<VectorXd>& thetas, DmpcMode mode,
                      const std::vector<ocp::Trajectory>* warm = nullptr);

struct CentralizedResult {
  ocp::Trajectory joint;  ///< trajectory over the stacked multi-agent state
  std::vector<VectorXd> first_actions;
  double objective = 0.0;
};

/// Joint solve of the coupled problem with the coupling equalities imposed
/// exactly (coupling copies eliminated by substitution). The oracle used to
/// measure dual-decomposition accuracy.
CentralizedResult solve_centralized(const Scenario& scenario,
                                    const std::vector<VectorXd>& states);

/// Isolated single-agent problem (couplings ignored); decoupling oracle.
ocp::OcpSpec build_isolated_problem(int agent, const Scenario& scenario, const VectorXd& state);

}  // namespace mabo::dmpc

#endif  // MABO_DMPC_HPP
