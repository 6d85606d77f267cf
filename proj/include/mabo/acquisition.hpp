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

#ifndef MABO_ACQUISITION_HPP
#define MABO_ACQUISITION_HPP

#include <vector>

#include "mabo/common.hpp"
#include "mabo/gp.hpp"

namespace mabo::acq {

/// Expected-improvement acquisition, minimization convention:
///   ei = -((best - mean) Phi(Z) + std phi(Z)),  Z = (best - mean) / std.
/// Non-positive everywhere; for std below the 1e-12 floor the analytic
/// degenerate branch -max(best - mean, 0) is used.
double ei(double mean, double std, double best);

/// Convenience overload evaluating the posterior first.
double ei(const gp::GpModel& model, const VectorXd& query, double best);

/// Gradient of ei at `query`:  Phi(Z) * dmean - phi(Z) * dstd.
/// Below the std floor, the subgradient of the degenerate branch is returned
/// (0, dmean or dmean/2 depending on the sign of best - mean).
VectorXd ei_gradient(const gp::GpModel& model, const VectorXd& query, double best);

struct RolloutConfig {
  int horizon = 1;
  int samples = 1;
  std::uint64_t seed = 0;

  void check() const {
    if (horizon < 1 || samples < 1) throw std::invalid_argument("RolloutConfig: invalid values");
  }
};

/// H-step lookahead acquisition. H = 1 reduces exactly to ei(query).
/// For H > 1, each Monte Carlo rollout draws a fantasy observation at the
/// pending query from the posterior, refits, greedily picks the next grid
/// point by one-step ei, and accumulates the realized improvements
/// (y*_prev - y_next)^+ of the H-1 follow-up queries:
///   result = ei(query) - (1/M) sum_rollouts sum_steps (improvement)^+.
double nonmyopic_ei(const gp::GpModel& model, const VectorXd& query, const RolloutConfig& cfg,
                    const std::vector<VectorXd>& candidate_grid);

/// Same computation exposing the Monte Carlo standard error of the future
/// improvement term (zero when H = 1).
struct NonmyopicStats {
  double value = 0.0;
  double future_mean = 0.0;
  double future_se = 0.0;
};
NonmyopicStats nonmyopic_ei_stats(const gp::GpModel& model, const VectorXd& query,
                                  const RolloutConfig& cfg,
                                  const std::vector<VectorXd>& candidate_grid);

/// One adjacent-pair monotonicity violation of beta over the (alpha1, alpha2)
/// grid (axis 0 = alpha1 direction, axis 1 = alpha2 direction).
struct MonotonicityViolation {
  int i1 = 0;  ///< alpha1 grid index of the pair's lower corner
  int i2 = 0;  ///< alpha2 grid index
  int axis = 0;
  double delta = 0.0;  ///< the offending finite difference
};

/// Evaluates beta(a1, a2) = a2 Phi(a2/a1) + a1 phi(a2/a1) on the grid and
/// reports every adjacent pair whose finite difference is not positive.
/// `beta_override` substitutes the probed function (used to sanity-check the
/// probe itself); default probes the canonical beta.
std::vector<MonotonicityViolation> monotonicity_probe(
    const std::vector<double>& alpha1_grid, const std::vector<double>& alpha2_grid,
    const std::function<double(double, double)>* beta_override = nullptr);

}  // namespace mabo::acq

#endif  // MABO_ACQUISITION_HPP
