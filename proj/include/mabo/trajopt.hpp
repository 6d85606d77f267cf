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

#ifndef MABO_TRAJOPT_HPP
#define MABO_TRAJOPT_HPP

#include <memory>
#include <vector>

#include "mabo/common.hpp"
#include "mabo/plants.hpp"

namespace mabo::ocp {

/// Affine inequality row applied at every stage:
///   cx^T x_l + cu^T u_l - rhs <= sigma   with sigma >= 0 penalized linearly.
/// Rows with applies_terminal also constrain x_N (cu ignored there).
struct IneqRow {
  VectorXd cx;
  VectorXd cu;
  double rhs = 0.0;
  double slack_weight = 100.0;           ///< p entry
  double slack_weight_terminal = 100.0;  ///< p_f entry
  bool applies_terminal = true;
  int group = 0;  ///< inequality group id (backoffs, performance penalties)
};

/// One agent's finite-horizon optimal control problem in solver-ready form.
/// All quadratic costs are diagonal-weight forms without the 1/2 factor:
///   sum_d  w_d (v_d - r_d)^2.
/// The stage cost at l carries discount^l, the terminal cost discount^N.
struct OcpSpec {
  int horizon = 1;
  double discount = 1.0;
  std::shared_ptr<const plants::DynamicsModel> dynamics;
  VectorXd initial_state;

  VectorXd state_weight;
  VectorXd state_ref;
  VectorXd control_weight;

  /// Coupling quadratic  coupling_weight * || Sx x - Sw w - offset ||^2,
  /// applied at every stage including the terminal one. Sw has coupling_dim
  /// columns (zero columns when there are no coupling variables).
  double coupling_weight = 0.0;
  MatrixXd coupling_Sx;
  MatrixXd coupling_Sw;
  VectorXd coupling_offset;

  /// Coupling-variable block. coupling_dim = 0 disables it. In increment
  /// mode w_0 is pinned to initial_coupling and w_{l+1} = w_l + delta_l with
  /// the increments penalized by delta_weight * ||delta||^2.
  int coupling_dim = 0;
  bool increment_mode = false;
  VectorXd initial_coupling;
  double delta_weight = 1.0;

  /// Linear dual terms per stage l = 0..N (empty means zero):
  ///   + dual_x[l]^T x_l + dual_w[l]^T w_l.
  std::vector<VectorXd> dual_x;
  std::vector<VectorXd> dual_w;

  std::vector<IneqRow> rows;

  int state_dim() const { return dynamics ? dynamics->state_dim() : 0; }
  int control_dim() const { return dynamics ? dynamics->control_dim() : 0; }
  void check() const;
};

struct Trajectory {
  std::vector<VectorXd> states;               ///< N+1
  std::vector<VectorXd> controls;             ///< N
  std::vector<VectorXd> couplings;            ///< N+1, empty without coupling vars
  std::vector<VectorXd> coupling_increments;  ///< N, empty outside increment mode
  std::vector<VectorXd> constraint_slacks;    ///< N+1 (terminal entry sized to terminal rows)
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int sqp_iterations = 0;
  std::vector<int> active_set;  ///< active inequality rows, reusable as a warm start
};

struct SolveOptions {
  double kkt_tol = 1e-6;
  int max_sqp_iterations = 50;
  double merit_violation_weight = 1e3;
  bool force_sqp_path = false;  ///< run the SQP loop even for linear dynamics
  const Trajectory* warm_start = nullptr;
};

/// Simultaneous transcription solve: primal-dual active-set QP (Tikhonov
/// 1e-9 on the Hessian) for linear dynamics, Gauss-Newton SQP with a merit
/// line search around it for nonlinear dynamics.
Trajectory solve_ocp(const OcpSpec& spec, const SolveOptions& opts = {});

/// The discounted objective of `traj` under `spec` (stage, coupling, dual,
/// slack-penalty and increment terms included).
double evaluate_cost(const OcpSpec& spec, const Trajectory& traj);

/// Rolls `controls` through the spec dynamics from the pinned initial state,
/// carrying the coupling block of `base` and recomputing minimal feasible
/// slacks. Used by optimality probes and oracle comparisons.
Trajectory resimulate(const OcpSpec& spec, const Trajectory& base,
                      const std::vector<VectorXd>& controls);

/// Receding-horizon shift of a solved trajectory: stage l takes stage l+1's
/// values, the last stage is duplicated, and the active set is remapped so
/// the shifted result warm-starts the next physical time step.
Trajectory shift_warm_start(const OcpSpec& spec, const Trajectory& traj);

}  // namespace mabo::ocp

#endif  // MABO_TRAJOPT_HPP
