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

#include "mabo/coordinator.hpp"

#include <cmath>

namespace mabo::admm {

void CoordState::check() const {
  // penalty == 0 is admitted only for the documented plain-BO reduction.
  if (penalty < 0.0) throw std::invalid_argument("CoordState: penalty must be >= 0");
  for (const VectorXd& l : multipliers) {
    if (l.size() != consensus.size()) {
      throw std::invalid_argument("CoordState: multiplier/consensus dimension mismatch");
    }
  }
}

double AgentBoState::best() const {
  if (evaluations.empty()) throw std::runtime_error("AgentBoState: no evaluations");
  double b = evaluations.front();
  for (double y : evaluations) b = std::min(b, y);
  return b;
}

VectorXd AgentBoState::current() const {
  if (last_proposal) return *last_proposal;
  if (evaluated_params.empty()) throw std::runtime_error("AgentBoState: no evaluated params");
  int arg = 0;
  for (int k = 1; k < count(); ++k) {
    if (evaluations[k] < evaluations[arg]) arg = k;
  }
  return evaluated_params[arg];
}

VectorXd update_consensus(const std::vector<VectorXd>& states,
                          const std::vector<VectorXd>& multipliers, double rho) {
  if (states.empty() || states.size() != multipliers.size()) {
    throw std::invalid_argument("update_consensus: states/multipliers must match and be non-empty");
  }
  VectorXd sum = VectorXd::Zero(states.front().size());
  for (size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != sum.size() || multipliers[i].size() != sum.size()) {
      throw std::invalid_argument("update_consensus: dimension mismatch");
    }
    if (rho > 0.0) {
      sum += states[i] + multipliers[i] / rho;
    } else if (multipliers[i].isZero(0.0)) {
      sum += states[i];  // rho -> 0 limit of the plain-BO reduction
    } else {
      throw std::invalid_argument("update_consensus: rho = 0 requires zero multipliers");
    }
  }
  return sum / static_cast<double>(states.size());
}

VectorXd update_multiplier(const VectorXd& lambda, const VectorXd& zeta_i,
                           const VectorXd& consensus, double rho) {
  if (lambda.size() != zeta_i.size() || lambda.size() != consensus.size()) {
    throw std::invalid_argument("update_multiplier: dimension mismatch");
  }
  return lambda + rho * (zeta_i - consensus);
}

double penalty_term(const VectorXd& zeta_i, const CoordState& coord, int agent) {
  const VectorXd& lambda = coord.multipliers.at(agent);
  return lambda.dot(zeta_i) + 0.5 * coord.penalty * (zeta_i - coord.consensus).squaredNorm();
}

VectorXd local_step(const AgentBoState& agent_state, const gp::GpModel& model,
                    const CoordState& coord, int agent, std::uint64_t seed,
                    const AcquisitionOptions& opts) {
  if (!model.fitted()) throw std::runtime_error("local_step: model not fitted");

  std::function<double(const VectorXd&)> objective;
  std::vector<VectorXd> grid;
  if (opts.nonmyopic && opts.rollout_horizon > 1) {
    // Lookahead acquisition plus the penalty added outside; the fantasy
    // machinery models the raw objective only.
    grid = latin_hypercube(agent_state.box.lo, agent_state.box.hi, opts.grid_points,
                           derive_seed(seed, "rollout-grid"));
    acq::RolloutConfig cfg{opts.rollout_horizon, opts.rollout_samples,
                           derive_seed(seed, "rollout")};
    objective = [&, cfg](const VectorXd& z) {
      return acq::nonmyopic_ei(model, z, cfg, grid) + penalty_term(z, coord, agent);
    };
  } else {
    // Expected improvement of the penalized local objective J_i + Xi_i: the
    // penalty is a known additive shift of the posterior mean, and the
    // incumbent is the best *penalized* evaluation under the current
    // coordination variables. Keeps the acquisition and the penalty in the
    // same units across rounds; reduces to plain ei when rho and lambda are
    // zero.
    double incumbent = std::numeric_limits<double>::infinity();
    for (int k = 0; k < agent_state.count(); ++k) {
      incumbent = std::min(incumbent,
                           agent_state.evaluations[k] +
                               penalty_term(agent_state.evaluated_params[k], coord, agent));
    }
    objective = [&, incumbent](const VectorXd& z) {
      const gp::Posterior p = gp::posterior(model, z);
      return acq::ei(p.mean + penalty_term(z, coord, agent), std::sqrt(p.variance), incumbent);
    };
  }
  return multistart_minimize(objective, agent_state.box, opts.multistarts,
                             derive_seed(seed, "local-step", static_cast<std::uint64_t>(agent)));
}

RoundResult mabo_round(const std::vector<AgentBoState>& states, const CoordState& coord,
                       const ObjectiveEvaluator& evaluate, const MaboOptions& opts,
                       std::uint64_t seed) {
  if (states.empty()) throw std::invalid_argument("mabo_round: no agents");
  coord.check();
  const int m = static_cast<int>(states.size());
  for (const AgentBoState& s : states) {
    if (s.count() < 1) throw std::invalid_argument("mabo_round: every agent needs >= 1 evaluation");
  }

  // 1. Fit Gaussian process models to (P_i, Y_i).
  std::vector<gp::GpModel> models(m);
  std::vector<gp::KernelHyper> hypers(m);
  for (int i = 0; i < m; ++i) {
    gp::Dataset data{states[i].evaluated_params, states[i].evaluations};
    gp::KernelHyper hyper;
    if (opts.refresh_hyper && data.size() >= 2) {
      const gp::KernelHyper* prev = states[i].hyper ? &*states[i].hyper : nullptr;
      hyper = gp::optimize_hyperparameters(
          data, opts.hyper_bounds, derive_seed(seed, "hyper", static_cast<std::uint64_t>(i)), prev);
    } else if (states[i].hyper) {
      hyper = *states[i].hyper;
    }
    models[i] = gp::fit(data, hyper);
    hypers[i] = hyper;
  }

  // 3. Consensus update from the agents' current iterates.
  std::vector<VectorXd> current;
  current.reserve(m);
  for (const AgentBoState& s : states) current.push_back(s.current());
  CoordState next_coord = coord;
  next_coord.consensus = update_consensus(current, coord.multipliers, coord.penalty);

  // 4. Penalized local acquisition minimization.
  std::vector<VectorXd> proposals(m);
  for (int i = 0; i < m; ++i) {
    proposals[i] = local_step(states[i], models[i], next_coord, i,
                              derive_seed(seed, "round-agent", static_cast<std::uint64_t>(i)),
                              opts.acquisition);
  }

  // 5. Joint objective evaluation; a throw leaves all inputs untouched.
  const std::vector<double> y_new = evaluate(proposals);
  if (static_cast<int>(y_new.size()) != m) {
    throw std::invalid_argument("mabo_round: evaluator returned wrong number of values");
  }
  for (double y : y_new) {
    if (!std::isfinite(y)) throw NumericalError("mabo_round: non-finite objective value");
  }

  // 6-7. Multiplier updates and data append.
  RoundResult result;
  result.states = states;
  result.coord = next_coord;
  for (int i = 0; i < m; ++i) {
    result.coord.multipliers[i] =
        update_multiplier(coord.multipliers[i], proposals[i], next_coord.consensus, coord.penalty);
    result.states[i].evaluated_params.push_back(proposals[i]);
    result.states[i].evaluations.push_back(y_new[i]);
    result.states[i].hyper = hypers[i];
    result.states[i].last_proposal = proposals[i];
  }

  result.diagnostics.y_new = y_new;
  for (int i = 0; i < m; ++i) result.diagnostics.best_so_far.push_back(result.states[i].best());
  const auto [primal, dual] = residuals(coord, result.coord, proposals);
  result.diagnostics.primal_residual = primal;
  result.diagnostics.dual_residual = dual;
  return result;
}

std::pair<double, double> residuals(const CoordState& prev, const CoordState& next,
                                    const std::vector<VectorXd>& agent_points) {
  double primal = 0.0;
  for (const VectorXd& z : agent_points) {
    primal = std::max(primal, (z - next.consensus).norm());
  }
  const double dual = next.penalty * (next.consensus - prev.consensus).norm();
  return {primal, dual};
}

}  // namespace mabo::admm
