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

#include "mabo/dmpc.hpp"

#include <algorithm>
#include <cmath>

namespace mabo::dmpc {

namespace {

int selection_position(const std::vector<int>& selection, int coord) {
  const auto it = std::find(selection.begin(), selection.end(), coord);
  if (it == selection.end()) {
    throw std::logic_error("coupling selection does not contain a residual coordinate");
  }
  return static_cast<int>(it - selection.begin());
}

VectorXd stack_stages(const std::vector<VectorXd>& per_stage) {
  int total = 0;
  for (const VectorXd& v : per_stage) total += static_cast<int>(v.size());
  VectorXd flat(total);
  int at = 0;
  for (const VectorXd& v : per_stage) {
    flat.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  }
  return flat;
}

/// Inequality rows for one agent, in group order (state box, then control
/// bounds). `backoff` tightens each group's rows; empty disables.
std::vector<ocp::IneqRow> agent_rows(const AgentSpec& spec, double hard_weight,
                                     const VectorXd& backoff) {
  std::vector<ocp::IneqRow> rows;
  const int nx = spec.state_dim();
  const int nu = spec.control_dim();
  int group = 0;
  if (!spec.state_box.empty()) {
    const double b = backoff.size() > group ? backoff(group) : 0.0;
    for (const StateBoxRow& box : spec.state_box) {
      if (std::isfinite(box.lo)) {
        ocp::IneqRow row;
        row.cx = VectorXd::Zero(nx);
        row.cu = VectorXd::Zero(nu);
        row.cx(box.index) = -1.0;
        row.rhs = -box.lo - b;
        row.slack_weight = box.penalty;
        row.slack_weight_terminal = box.penalty;
        row.applies_terminal = true;
        row.group = group;
        rows.push_back(row);
      }
      if (std::isfinite(box.hi)) {
        ocp::IneqRow row;
        row.cx = VectorXd::Zero(nx);
        row.cu = VectorXd::Zero(nu);
        row.cx(box.index) = 1.0;
        row.rhs = box.hi - b;
        row.slack_weight = box.penalty;
        row.slack_weight_terminal = box.penalty;
        row.applies_terminal = true;
        row.group = group;
        rows.push_back(row);
      }
    }
    ++group;
  }
  if (spec.control_bounds) {
    const double b = backoff.size() > group ? backoff(group) : 0.0;
    for (int c = 0; c < nu; ++c) {
      for (int sign : {-1, 1}) {
        ocp::IneqRow row;
        row.cx = VectorXd::Zero(nx);
        row.cu = VectorXd::Zero(nu);
        row.cu(c) = static_cast<double>(sign);
        row.rhs = (sign > 0 ? spec.control_bounds->second : -spec.control_bounds->first) - b;
        row.slack_weight = hard_weight;
        row.slack_weight_terminal = hard_weight;
        row.applies_terminal = false;
        row.group = group;
        rows.push_back(row);
      }
    }
    ++group;
  }
  return rows;
}

}  // namespace

std::vector<int> coupling_selection(const Scenario& scenario, DmpcMode mode) {
  if (mode == DmpcMode::kPlain) return scenario.coupling.residual_indices;
  std::vector<int> full(scenario.agents.front().state_dim());
  for (size_t d = 0; d < full.size(); ++d) full[d] = static_cast<int>(d);
  return full;
}

int coupling_dim(const Scenario& scenario, int agent, DmpcMode mode) {
  return static_cast<int>(coupling_selection(scenario, mode).size() *
                          scenario.neighbors(agent).size());
}

DualState init_dual(const Scenario& scenario, DmpcMode mode) {
  DualState dual;
  const int m = scenario.num_agents();
  dual.mu.resize(m);
  for (int i = 0; i < m; ++i) {
    const int dim = coupling_dim(scenario, i, mode);
    dual.mu[i].assign(scenario.horizon + 1, VectorXd::Zero(dim));
  }
  return dual;
}

ocp::OcpSpec build_local_problem(int agent, const Scenario& scenario, const VectorXd& state,
                                 const std::vector<VectorXd>& all_states, const DualState& dual,
                                 const VectorXd& theta, DmpcMode mode) {
  const AgentSpec& spec = scenario.agents.at(agent);
  const int nx = spec.state_dim();
  const int N = scenario.horizon;
  const bool parametric = (mode == DmpcMode::kParametric);
  const ThetaLayout layout = theta_layout(scenario, agent);
  if (parametric && theta.size() != layout.dim()) {
    throw std::invalid_argument("build_local_problem: theta dimension mismatch");
  }

  ocp::OcpSpec ocp;
  ocp.horizon = N;
  ocp.discount = parametric ? scenario.discount : 1.0;
  ocp.dynamics = plants::prediction_model(agent, scenario);
  ocp.initial_state = state;

  ocp.state_weight = spec.stage_weights;
  ocp.state_ref = spec.state_reference;
  ocp.control_weight = VectorXd::Constant(spec.control_dim(), spec.control_weight);
  VectorXd backoff;
  if (parametric) {
    for (int d = 0; d < nx; ++d) {
      ocp.state_weight(d) *= std::exp(theta(layout.logscale_begin() + d));
      ocp.state_ref(d) += theta(layout.bias_begin() + d);
    }
    backoff = theta.segment(layout.backoff_begin(), layout.n_groups);
  }
  ocp.rows = agent_rows(spec, scenario.hard_slack_weight, backoff);

  const std::vector<int> neighbors = scenario.neighbors(agent);
  if (!neighbors.empty()) {
    const std::vector<int> selection = coupling_selection(scenario, mode);
    const int sel = static_cast<int>(selection.size());
    const int nres = static_cast<int>(scenario.coupling.residual_indices.size());
    const int nw = sel * static_cast<int>(neighbors.size());
    ocp.coupling_dim = nw;
    ocp.coupling_weight = scenario.coupling.weight;
    ocp.coupling_Sx = MatrixXd::Zero(nres * neighbors.size(), nx);
    ocp.coupling_Sw = MatrixXd::Zero(nres * neighbors.size(), nw);
    ocp.coupling_offset = VectorXd::Zero(nres * neighbors.size());
    for (size_t b = 0; b < neighbors.size(); ++b) {
      const VectorXd offset = scenario.offset_between(agent, neighbors[b]);
      for (int r = 0; r < nres; ++r) {
        const int coord = scenario.coupling.residual_indices[r];
        const int row = static_cast<int>(b) * nres + r;
        ocp.coupling_Sx(row, coord) = 1.0;
        ocp.coupling_Sw(row, static_cast<int>(b) * sel + selection_position(selection, coord)) =
            1.0;
        ocp.coupling_offset(row) = offset(r);
        if (parametric) {
          ocp.coupling_offset(row) += theta(layout.coupling_begin() + static_cast<int>(b) * nres + r);
        }
      }
    }

    if (mode != DmpcMode::kPlain) {
      ocp.increment_mode = true;
      ocp.delta_weight = scenario.delta_weight;
      ocp.initial_coupling = VectorXd::Zero(nw);
      for (size_t b = 0; b < neighbors.size(); ++b) {
        const int j = neighbors[b];
        if (j >= static_cast<int>(all_states.size()) || all_states[j].size() != nx) {
          throw std::invalid_argument("build_local_problem: missing neighbor state for pinning");
        }
        for (int d = 0; d < sel; ++d) {
          ocp.initial_coupling(static_cast<int>(b) * sel + d) = all_states[j](selection[d]);
        }
      }
    }

    // Dual terms: + mu_i^T w_i per stage, and - sum_j mu_ji^T W_ji(x_i)
    // scattered onto the coordinates of x_i that agent j copies.
    ocp.dual_x.assign(N + 1, VectorXd::Zero(nx));
    ocp.dual_w.assign(N + 1, VectorXd::Zero(nw));
    for (int l = 0; l <= N; ++l) {
      ocp.dual_w[l] = dual.mu.at(agent).at(l);
      for (int j : neighbors) {
        const std::vector<int> j_neighbors = scenario.neighbors(j);
        const auto pos = std::find(j_neighbors.begin(), j_neighbors.end(), agent);
        if (pos == j_neighbors.end()) continue;
        const int block = static_cast<int>(pos - j_neighbors.begin());
        const VectorXd& mu_j = dual.mu.at(j).at(l);
        for (int d = 0; d < sel; ++d) {
          ocp.dual_x[l](selection[d]) -= mu_j(block * sel + d);
        }
      }
    }
  }
  return ocp;
}

ocp::OcpSpec build_isolated_problem(int agent, const Scenario& scenario, const VectorXd& state) {
  Scenario stripped = scenario;
  stripped.coupling = CouplingSpec{};
  const DualState empty = init_dual(stripped, DmpcMode::kPlain);
  return build_local_problem(agent, stripped, state, {}, empty, VectorXd(), DmpcMode::kPlain);
}

IterationResult dual_iteration(const Scenario& scenario, const std::vector<VectorXd>& states,
                               const DualState& dual, const std::vector<VectorXd>& thetas,
                               DmpcMode mode, const std::vector<ocp::Trajectory>* warm) {
  const int m = scenario.num_agents();
  const std::vector<int> selection = coupling_selection(scenario, mode);
  const int sel = static_cast<int>(selection.size());

  IterationResult result;
  result.trajectories.resize(m);
  for (int i = 0; i < m; ++i) {
    const VectorXd theta = (mode == DmpcMode::kParametric) ? thetas.at(i) : VectorXd();
    const ocp::OcpSpec problem =
        build_local_problem(i, scenario, states[i], states, dual, theta, mode);
    ocp::SolveOptions opts;
    if (warm && i < static_cast<int>(warm->size())) opts.warm_start = &(*warm)[i];
    try {
      result.trajectories[i] = ocp::solve_ocp(problem, opts);
    } catch (const std::exception& e) {
      throw ConvergenceError("dual_iteration: local solve failed for agent " + std::to_string(i) +
                             ": " + e.what());
    }
  }

  result.dual = dual;
  result.dual.iteration = dual.iteration + 1;
  DualState::Snapshot snap;
  snap.mu_flat.resize(m);
  snap.wbar_flat.resize(m);
  for (int i = 0; i < m; ++i) {
    const std::vector<int> neighbors = scenario.neighbors(i);
    for (int l = 0; l <= scenario.horizon; ++l) {
      VectorXd what = VectorXd::Zero(result.dual.mu[i][l].size());
      for (size_t b = 0; b < neighbors.size(); ++b) {
        const VectorXd& xj = result.trajectories[neighbors[b]].states[l];
        for (int d = 0; d < sel; ++d) {
          what(static_cast<int>(b) * sel + d) = xj(selection[d]);
        }
      }
      const VectorXd& wbar = result.trajectories[i].couplings.empty()
                                 ? what  // decoupled agents carry no copies
                                 : result.trajectories[i].couplings[l];
      result.dual.mu[i][l] += scenario.dual.beta * (wbar - what);
    }
    snap.mu_flat[i] = stack_stages(result.dual.mu[i]);
    snap.wbar_flat[i] = result.trajectories[i].couplings.empty()
                            ? VectorXd()
                            : stack_stages(result.trajectories[i].couplings);
  }
  result.dual.history = dual.history;
  result.dual.history.push_back(std::move(snap));
  if (result.dual.history.size() > 2) result.dual.history.erase(result.dual.history.begin());
  return result;
}

StopReason check_stop(const DualState& dual, double eps1, double eps2, int max_iter) {
  if (dual.history.size() >= 2) {
    const DualState::Snapshot& prev = dual.history[dual.history.size() - 2];
    const DualState::Snapshot& last = dual.history.back();
    bool mu_ok = true;
    bool w_ok = true;
    for (size_t i = 0; i < last.mu_flat.size(); ++i) {
      if (!((last.mu_flat[i] - prev.mu_flat[i]).norm() < eps1)) mu_ok = false;
      if (last.wbar_flat[i].size() != prev.wbar_flat[i].size() ||
          !((last.wbar_flat[i] - prev.wbar_flat[i]).norm() < eps2)) {
        w_ok = false;
      }
    }
    if (mu_ok || w_ok) return StopReason::kConverged;
  }
  if (dual.iteration >= max_iter) return StopReason::kBudgetExhausted;
  return StopReason::kContinue;
}

DmpcResult solve_dmpc(const Scenario& scenario, const std::vector<VectorXd>& states,
                      const std::vector<VectorXd>& thetas, DmpcMode mode,
                      const std::vector<ocp::Trajectory>* warm) {
  DmpcResult result;
  DualState dual = init_dual(scenario, mode);
  std::vector<ocp::Trajectory> trajectories;
  const std::vector<ocp::Trajectory>* warm_now = warm;

  while (true) {
    IterationResult iter = dual_iteration(scenario, states, dual, thetas, mode, warm_now);
    dual = std::move(iter.dual);
    trajectories = std::move(iter.trajectories);
    warm_now = &trajectories;
    const StopReason reason =
        check_stop(dual, scenario.dual.eps1, scenario.dual.eps2, scenario.dual.max_iter);
    if (reason != StopReason::kContinue) {
      result.stop = reason;
      break;
    }
  }

  result.dual = dual;
  result.iterations = dual.iteration;
  result.trajectories = std::move(trajectories);
  for (int i = 0; i < scenario.num_agents(); ++i) {
    result.actions.push_back(result.trajectories[i].controls.front());
  }
  if (result.dual.history.size() >= 2) {
    const auto& prev = result.dual.history[result.dual.history.size() - 2];
    const auto& last = result.dual.history.back();
    for (size_t i = 0; i < last.mu_flat.size(); ++i) {
      result.mu_residual = std::max(result.mu_residual,
                                    (last.mu_flat[i] - prev.mu_flat[i]).norm());
      if (last.wbar_flat[i].size() == prev.wbar_flat[i].size()) {
        result.w_residual = std::max(result.w_residual,
                                     (last.wbar_flat[i] - prev.wbar_flat[i]).norm());
      }
    }
  }
  return result;
}

namespace {

/// Block-diagonal dynamics over the stacked multi-agent state.
class JointDynamics final : public plants::DynamicsModel {
 public:
  explicit JointDynamics(std::vector<std::shared_ptr<const plants::DynamicsModel>> parts)
      : parts_(std::move(parts)) {
    for (const auto& p : parts_) {
      nx_ += p->state_dim();
      nu_ += p->control_dim();
      linear_ = linear_ && p->is_linear();
    }
  }
  int state_dim() const override { return nx_; }
  int control_dim() const override { return nu_; }
  bool is_linear() const override { return linear_; }
  VectorXd step(const VectorXd& x, const VectorXd& u) const override {
    VectorXd next(nx_);
    int ox = 0, ou = 0;
    for (const auto& p : parts_) {
      next.segment(ox, p->state_dim()) =
          p->step(x.segment(ox, p->state_dim()), u.segment(ou, p->control_dim()));
      ox += p->state_dim();
      ou += p->control_dim();
    }
    return next;
  }
  void jacobians(const VectorXd& x, const VectorXd& u, MatrixXd& A, MatrixXd& B) const override {
    A = MatrixXd::Zero(nx_, nx_);
    B = MatrixXd::Zero(nx_, nu_);
    int ox = 0, ou = 0;
    MatrixXd Ai, Bi;
    for (const auto& p : parts_) {
      p->jacobians(x.segment(ox, p->state_dim()), u.segment(ou, p->control_dim()), Ai, Bi);
      A.block(ox, ox, p->state_dim(), p->state_dim()) = Ai;
      B.block(ox, ou, p->state_dim(), p->control_dim()) = Bi;
      ox += p->state_dim();
      ou += p->control_dim();
    }
  }

 private:
  std::vector<std::shared_ptr<const plants::DynamicsModel>> parts_;
  int nx_ = 0;
  int nu_ = 0;
  bool linear_ = true;
};

}  // namespace

CentralizedResult solve_centralized(const Scenario& scenario,
                                    const std::vector<VectorXd>& states) {
  const int m = scenario.num_agents();
  std::vector<std::shared_ptr<const plants::DynamicsModel>> parts;
  std::vector<int> x_off(m, 0), u_off(m, 0);
  int nx = 0, nu = 0;
  for (int i = 0; i < m; ++i) {
    parts.push_back(plants::prediction_model(i, scenario));
    x_off[i] = nx;
    u_off[i] = nu;
    nx += parts.back()->state_dim();
    nu += parts.back()->control_dim();
  }

  ocp::OcpSpec joint;
  joint.horizon = scenario.horizon;
  joint.discount = 1.0;
  joint.dynamics = std::make_shared<JointDynamics>(parts);
  joint.initial_state = VectorXd::Zero(nx);
  joint.state_weight = VectorXd::Zero(nx);
  joint.state_ref = VectorXd::Zero(nx);
  joint.control_weight = VectorXd::Zero(nu);
  for (int i = 0; i < m; ++i) {
    const AgentSpec& a = scenario.agents[i];
    joint.initial_state.segment(x_off[i], a.state_dim()) = states.at(i);
    joint.state_weight.segment(x_off[i], a.state_dim()) = a.stage_weights;
    joint.state_ref.segment(x_off[i], a.state_dim()) = a.state_reference;
    joint.control_weight.segment(u_off[i], a.control_dim())
        .setConstant(a.control_weight);
  }

  // Coupling equalities eliminated by substitution: the residual reads both
  // agents' states directly.
  const int nres = static_cast<int>(scenario.coupling.residual_indices.size());
  int n_coupling_rows = 0;
  for (int i = 0; i < m; ++i) {
    n_coupling_rows += nres * static_cast<int>(scenario.neighbors(i).size());
  }
  if (n_coupling_rows > 0) {
    joint.coupling_weight = scenario.coupling.weight;
    joint.coupling_Sx = MatrixXd::Zero(n_coupling_rows, nx);
    joint.coupling_Sw = MatrixXd::Zero(n_coupling_rows, 0);
    joint.coupling_offset = VectorXd::Zero(n_coupling_rows);
    int row = 0;
    for (int i = 0; i < m; ++i) {
      for (int j : scenario.neighbors(i)) {
        const VectorXd offset = scenario.offset_between(i, j);
        for (int r = 0; r < nres; ++r) {
          const int coord = scenario.coupling.residual_indices[r];
          joint.coupling_Sx(row, x_off[i] + coord) = 1.0;
          joint.coupling_Sx(row, x_off[j] + coord) = -1.0;
          joint.coupling_offset(row) = offset(r);
          ++row;
        }
      }
    }
  }

  for (int i = 0; i < m; ++i) {
    const AgentSpec& a = scenario.agents[i];
    for (ocp::IneqRow r : agent_rows(a, scenario.hard_slack_weight, VectorXd())) {
      ocp::IneqRow lifted;
      lifted.cx = VectorXd::Zero(nx);
      lifted.cu = VectorXd::Zero(nu);
      lifted.cx.segment(x_off[i], a.state_dim()) = r.cx;
      lifted.cu.segment(u_off[i], a.control_dim()) = r.cu;
      lifted.rhs = r.rhs;
      lifted.slack_weight = r.slack_weight;
      lifted.slack_weight_terminal = r.slack_weight_terminal;
      lifted.applies_terminal = r.applies_terminal;
      lifted.group = r.group;
      joint.rows.push_back(lifted);
    }
  }

  CentralizedResult result;
  result.joint = ocp::solve_ocp(joint);
  result.objective = result.joint.objective_value;
  for (int i = 0; i < m; ++i) {
    result.first_actions.push_back(
        result.joint.controls.front().segment(u_off[i], scenario.agents[i].control_dim()));
  }
  return result;
}

}  // namespace mabo::dmpc
