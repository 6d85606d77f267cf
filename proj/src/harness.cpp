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

#include "mabo/harness.hpp"

#include <cmath>

namespace mabo::sim {

double baseline_stage_cost(const Scenario& scenario, int agent,
                           const std::vector<VectorXd>& all_states, const VectorXd& control) {
  const AgentSpec& spec = scenario.agents.at(agent);
  const VectorXd& s = all_states.at(agent);
  const VectorXd dx = s - spec.state_reference;
  double cost = dx.dot(spec.stage_weights.asDiagonal() * dx);
  cost += spec.control_weight * control.squaredNorm();

  const int nres = static_cast<int>(scenario.coupling.residual_indices.size());
  for (int j : scenario.neighbors(agent)) {
    const VectorXd offset = scenario.offset_between(agent, j);
    for (int r = 0; r < nres; ++r) {
      const int coord = scenario.coupling.residual_indices[r];
      const double resid = s(coord) - all_states.at(j)(coord) - offset(r);
      cost += scenario.coupling.weight * resid * resid;
    }
  }

  for (const StateBoxRow& box : spec.state_box) {
    if (std::isfinite(box.lo)) cost += box.penalty * std::max(0.0, box.lo - s(box.index));
    if (std::isfinite(box.hi)) cost += box.penalty * std::max(0.0, s(box.index) - box.hi);
  }
  return cost;
}

std::vector<double> performance_index(const Scenario& scenario,
                                      const std::vector<std::vector<VectorXd>>& states,
                                      const std::vector<std::vector<VectorXd>>& controls) {
  if (states.size() < 2 || states.size() != controls.size()) {
    throw std::invalid_argument("performance_index: incomplete trace");
  }
  const int n = static_cast<int>(states.size()) - 1;
  const int m = scenario.num_agents();
  std::vector<double> perf(m, 0.0);
  for (size_t row = 0; row < states.size(); ++row) {
    if (static_cast<int>(states[row].size()) != m || static_cast<int>(controls[row].size()) != m) {
      throw std::invalid_argument("performance_index: incomplete trace row");
    }
    for (int i = 0; i < m; ++i) {
      perf[i] += baseline_stage_cost(scenario, i, states[row], controls[row][i]);
    }
  }
  for (double& p : perf) p /= static_cast<double>(n);
  return perf;
}

std::uint64_t episode_seed(const Scenario& scenario, int index) {
  const std::uint64_t stream =
      scenario.learning.common_random_numbers ? 0 : static_cast<std::uint64_t>(index);
  return derive_seed(scenario.seed, "episode", stream);
}

std::vector<VectorXd> identity_params(const Scenario& scenario) {
  std::vector<VectorXd> thetas;
  for (int i = 0; i < scenario.num_agents(); ++i) {
    if (scenario.is_synthetic()) {
      thetas.push_back(scenario.agents[i].param_box.center());
    } else {
      thetas.push_back(VectorXd::Zero(theta_layout(scenario, i).dim()));
    }
  }
  return thetas;
}

EpisodeRecord run_episode(const Scenario& scenario, const std::vector<VectorXd>& thetas,
                          std::uint64_t seed, int episode_index) {
  validate(scenario);
  const int m = scenario.num_agents();
  if (static_cast<int>(thetas.size()) != m) {
    throw std::invalid_argument("run_episode: one parameter vector per agent required");
  }

  EpisodeRecord record;
  record.episode = episode_index;
  record.params = thetas;
  record.seed = seed;

  if (scenario.is_synthetic()) {
    for (int i = 0; i < m; ++i) {
      record.performance.push_back((thetas[i] - scenario.synthetic->targets[i]).squaredNorm());
    }
    return record;
  }

  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < m; ++i) {
    rngs.emplace_back(derive_seed(seed, "disturbance", static_cast<std::uint64_t>(i)));
  }

  std::vector<VectorXd> states;
  for (int i = 0; i < m; ++i) states.push_back(scenario.agents[i].initial_state);

  const int n = scenario.learning.steps;
  std::vector<ocp::Trajectory> warm;
  for (int step = 0; step <= n; ++step) {
    dmpc::DmpcResult sol;
    try {
      sol = dmpc::solve_dmpc(scenario, states, thetas, scenario.mode,
                             warm.empty() ? nullptr : &warm);
    } catch (const std::exception& e) {
      throw EpisodeError(step, e.what());
    }
    record.states.push_back(states);
    record.controls.push_back(sol.actions);
    StepStats stats;
    stats.dual_iterations = sol.iterations;
    stats.stop = sol.stop;
    stats.mu_residual = sol.mu_residual;
    stats.w_residual = sol.w_residual;
    record.step_stats.push_back(stats);

    if (step < n) {
      for (int i = 0; i < m; ++i) {
        states[i] = plants::true_step(i, scenario, states[i], sol.actions[i], rngs[i]);
      }
      warm.clear();
      for (int i = 0; i < m; ++i) {
        const VectorXd theta =
            (scenario.mode == DmpcMode::kParametric) ? thetas[i] : VectorXd();
        const ocp::OcpSpec spec = dmpc::build_local_problem(i, scenario, states[i], states,
                                                            sol.dual, theta, scenario.mode);
        warm.push_back(ocp::shift_warm_start(spec, sol.trajectories[i]));
      }
    }
  }
  record.performance = performance_index(scenario, record.states, record.controls);
  for (double p : record.performance) {
    if (!std::isfinite(p)) throw EpisodeError(n, "non-finite performance index");
  }
  return record;
}

EpisodeRecord evaluate_baseline(const Scenario& scenario) {
  return run_episode(scenario, identity_params(scenario), episode_seed(scenario, 0), 0);
}

LearningHistory learn(const Scenario& scenario, int episodes, std::uint64_t root_seed) {
  validate(scenario);
  if (episodes < 1) throw std::invalid_argument("learn: episodes must be >= 1");
  const int m = scenario.num_agents();
  const int warmup = scenario.learning.warmup;

  LearningHistory history;
  history.best_so_far.assign(m, {});

  auto push_episode = [&](EpisodeRecord rec) {
    for (int i = 0; i < m; ++i) {
      const double prev = history.best_so_far[i].empty()
                              ? std::numeric_limits<double>::infinity()
                              : history.best_so_far[i].back();
      history.best_so_far[i].push_back(std::min(prev, rec.performance[i]));
    }
    history.episodes.push_back(std::move(rec));
  };

  // Space-filling warm-up design, one joint episode per design point.
  std::vector<std::vector<VectorXd>> designs(m);
  for (int i = 0; i < m; ++i) {
    const Box& box = scenario.agents[i].param_box;
    designs[i] = latin_hypercube(box.lo, box.hi, warmup,
                                 derive_seed(root_seed, "warmup", static_cast<std::uint64_t>(i)));
  }

  std::vector<admm::AgentBoState> bo_states(m);
  for (int i = 0; i < m; ++i) bo_states[i].box = scenario.agents[i].param_box;

  int episode_index = 0;
  try {
    for (int e = 0; e < warmup; ++e) {
      std::vector<VectorXd> thetas;
      for (int i = 0; i < m; ++i) thetas.push_back(designs[i][e]);
      EpisodeRecord rec =
          run_episode(scenario, thetas, episode_seed(scenario, episode_index), episode_index);
      for (int i = 0; i < m; ++i) {
        bo_states[i].evaluated_params.push_back(thetas[i]);
        bo_states[i].evaluations.push_back(rec.performance[i]);
      }
      push_episode(std::move(rec));
      ++episode_index;
    }

    admm::CoordState coord;
    coord.penalty = scenario.learning.rho;
    VectorXd center = VectorXd::Zero(bo_states.front().box.dim());
    for (int i = 0; i < m; ++i) center += bo_states[i].box.center();
    coord.consensus = center / static_cast<double>(m);
    coord.multipliers.assign(m, VectorXd::Zero(coord.consensus.size()));

    admm::MaboOptions opts;
    opts.acquisition.nonmyopic = (scenario.learning.acquisition == "nonmyopic-ei");
    opts.acquisition.rollout_horizon = scenario.learning.rollout_horizon;
    opts.acquisition.rollout_samples = scenario.learning.rollout_samples;

    for (int round = 0; round < episodes; ++round) {
      EpisodeRecord pending;
      auto evaluator = [&](const std::vector<VectorXd>& proposals) {
        pending = run_episode(scenario, proposals, episode_seed(scenario, episode_index),
                              episode_index);
        return pending.performance;
      };
      admm::RoundResult result =
          admm::mabo_round(bo_states, coord, evaluator, opts,
                           derive_seed(root_seed, "round", static_cast<std::uint64_t>(round)));
      bo_states = std::move(result.states);
      coord = std::move(result.coord);
      history.rounds.push_back(result.diagnostics);
      push_episode(std::move(pending));
      ++episode_index;
    }
    history.final_consensus = coord.consensus;
  } catch (const std::exception& e) {
    history.error = e.what();
  }

  for (int i = 0; i < m; ++i) {
    history.final_params.push_back(bo_states[i].evaluated_params.empty()
                                       ? VectorXd()
                                       : bo_states[i].evaluated_params.back());
  }

  // Recommendation: the evaluated parameter set with the best global cost.
  double best_total = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < history.episodes.size(); ++e) {
    double total = 0.0;
    for (double p : history.episodes[e].performance) total += p;
    if (total < best_total) {
      best_total = total;
      history.best_episode = static_cast<int>(e);
    }
  }
  if (!history.episodes.empty()) {
    history.recommended_params = history.episodes[history.best_episode].params;
  }
  return history;
}

}  // namespace mabo::sim
