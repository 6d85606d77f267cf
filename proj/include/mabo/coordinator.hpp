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

#ifndef MABO_COORDINATOR_HPP
#define MABO_COORDINATOR_HPP

#include <functional>
#include <optional>
#include <vector>

#include "mabo/acquisition.hpp"
#include "mabo/common.hpp"
#include "mabo/gp.hpp"

namespace mabo::admm {

/// ADMM coordination variables shared across agents.
struct CoordState {
  VectorXd consensus;                  ///< zeta-bar
  std::vector<VectorXd> multipliers;   ///< lambda_i, one per agent
  double penalty = 1.0;                ///< rho

  void check() const;
};

/// One agent's Bayesian-optimization bookkeeping.
struct AgentBoState {
  std::vector<VectorXd> evaluated_params;  ///< P_i
  std::vector<double> evaluations;         ///< Y_i
  Box box;                                 ///< search space P_i
  std::optional<gp::KernelHyper> hyper;    ///< last fitted hyperparameters
  std::optional<VectorXd> last_proposal;   ///< zeta_i from the previous round

  int count() const { return static_cast<int>(evaluations.size()); }
  double best() const;
  /// The agent's current ADMM iterate zeta_i^k: the previous round's proposal,
  /// bootstrapped with the incumbent-best evaluation before any round ran.
  VectorXd current() const;
};

/// zeta-bar^{k+1} = (1/m) sum_i [ zeta_i + lambda_i / rho ].
VectorXd update_consensus(const std::vector<VectorXd>& states,
                          const std::vector<VectorXd>& multipliers, double rho);

/// lambda^{k+1} = lambda + rho (zeta_i - zeta-bar).
VectorXd update_multiplier(const VectorXd& lambda, const VectorXd& zeta_i,
                           const VectorXd& consensus, double rho);

/// Xi_i = lambda_i^T zeta_i + (rho/2) ||zeta_i - zeta-bar||^2.
double penalty_term(const VectorXd& zeta_i, const CoordState& coord, int agent);

struct AcquisitionOptions {
  bool nonmyopic = false;
  int rollout_horizon = 1;
  int rollout_samples = 256;
  int grid_points = 32;    ///< Latin-hypercube candidate grid per rollout
  int multistarts = 16;    ///< acquisition minimization restarts
};

/// Minimizes the penalized local acquisition over the agent's box by seeded
/// multi-start coordinate descent; deterministic given the seed.
VectorXd local_step(const AgentBoState& agent_state, const gp::GpModel& model,
                    const CoordState& coord, int agent, std::uint64_t seed,
                    const AcquisitionOptions& opts = {});

/// Joint objective evaluation: proposed parameters for every agent in, one
/// observed cost per agent out. A throw aborts the round atomically.
using ObjectiveEvaluator =
    std::function<std::vector<double>(const std::vector<VectorXd>&)>;

struct MaboOptions {
  AcquisitionOptions acquisition;
  gp::HyperBounds hyper_bounds;
  bool refresh_hyper = true;  ///< re-optimize hyperparameters each round
};

struct RoundDiagnostics {
  std::vector<double> y_new;
  std::vector<double> best_so_far;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct RoundResult {
  std::vector<AgentBoState> states;
  CoordState coord;
  RoundDiagnostics diagnostics;
};

/// One coordinated round: per-agent GP fit, consensus update, penalized
/// acquisition minimization, joint objective evaluation, multiplier update,
/// data append. Inputs are left untouched; on evaluator failure the exception
/// propagates and no state is produced.
RoundResult mabo_round(const std::vector<AgentBoState>& states, const CoordState& coord,
                       const ObjectiveEvaluator& evaluate, const MaboOptions& opts,
                       std::uint64_t seed);

/// primal = max_i ||zeta_i - zeta-bar||, dual = rho ||zeta-bar_new - zeta-bar_prev||.
std::pair<double, double> residuals(const CoordState& prev, const CoordState& next,
                                    const std::vector<VectorXd>& agent_points);

}  // namespace mabo::admm

#endif  // MABO_COORDINATOR_HPP
