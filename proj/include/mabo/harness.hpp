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

#ifndef MABO_HARNESS_HPP
#define MABO_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "mabo/coordinator.hpp"
#include "mabo/dmpc.hpp"
#include "mabo/scenario.hpp"

namespace mabo::sim {

/// Episode failure, carrying the simulation step that broke.
struct EpisodeError : std::runtime_error {
  EpisodeError(int step_index, const std::string& what)
      : std::runtime_error("episode step " + std::to_string(step_index) + ": " + what),
        step(step_index) {}
  int step;
};

struct StepStats {
  int dual_iterations = 0;
  dmpc::StopReason stop = dmpc::StopReason::kConverged;
  double mu_residual = 0.0;
  double w_residual = 0.0;
};

/// One closed-loop episode: n applied steps recorded as n+1 rows; the final
/// row's control realizes the k = n term of the performance index and is
/// never applied to the plants.
struct EpisodeRecord {
  int episode = 0;
  std::vector<double> performance;               ///< J_i^N per agent
  std::vector<std::vector<VectorXd>> states;     ///< [row][agent]
  std::vector<std::vector<VectorXd>> controls;   ///< [row][agent]
  std::vector<StepStats> step_stats;             ///< one per row
  std::vector<VectorXd> params;                  ///< zeta used
  std::uint64_t seed = 0;
};

struct LearningHistory {
  std::vector<EpisodeRecord> episodes;             ///< warm-up then rounds
  std::vector<std::vector<double>> best_so_far;    ///< [agent][episode]
  std::vector<admm::RoundDiagnostics> rounds;      ///< one per coordinated round
  VectorXd final_consensus;
  std::vector<VectorXd> final_params;              ///< last proposed zeta_i
  std::vector<VectorXd> recommended_params;        ///< zeta of the best global episode
  int best_episode = 0;
  std::optional<std::string> error;                ///< set when learning aborted early
};

/// The scenario's baseline (unparameterized) stage cost L_i evaluated on true
/// plant states: coupling term, local tracking cost, and the soft-constraint
/// penalty. Never theta-shifted.
double baseline_stage_cost(const Scenario& scenario, int agent,
                           const std::vector<VectorXd>& all_states, const VectorXd& control);

/// J_i^N = (1/n) sum_{k=0..n} L_i(s^k, a^k) over a complete trace of n+1 rows.
std::vector<double> performance_index(const Scenario& scenario,
                                      const std::vector<std::vector<VectorXd>>& states,
                                      const std::vector<std::vector<VectorXd>>& controls);

/// Seed stream for episode `index` honoring the common-random-numbers switch.
std::uint64_t episode_seed(const Scenario& scenario, int index);

/// Simulates one episode under the given per-agent parameters. Synthetic
/// scenarios skip the plants and evaluate the analytic objectives.
EpisodeRecord run_episode(const Scenario& scenario, const std::vector<VectorXd>& thetas,
                          std::uint64_t seed, int episode_index = 0);

/// run_episode at the identity parameterization (all-zero theta).
EpisodeRecord evaluate_baseline(const Scenario& scenario);

/// Identity (all-zero) parameters for every agent.
std::vector<VectorXd> identity_params(const Scenario& scenario);

/// Coordinated learning loop: warm-up design, then `episodes` MABO rounds,
/// each evaluating the proposed parameters in one closed-loop episode. A
/// failing episode stops the loop and leaves the partial history (with the
/// error recorded) intact.
LearningHistory learn(const Scenario& scenario, int episodes, std::uint64_t root_seed);

}  // namespace mabo::sim

#endif  // MABO_HARNESS_HPP
