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

#include "mabo/mdp.hpp"

#include <cmath>

namespace mabo::mdp {

void FiniteMdp::check() const {
  if (num_states < 1 || num_actions < 1 || num_agents < 1) {
    throw std::invalid_argument("FiniteMdp: empty state/action/agent sets");
  }
  if (static_cast<int>(transition.size()) != num_states ||
      static_cast<int>(stage_costs.size()) != num_agents) {
    throw std::invalid_argument("FiniteMdp: table sizes inconsistent");
  }
  for (const MatrixXd& t : transition) {
    if (t.rows() != num_actions || t.cols() != num_states) {
      throw std::invalid_argument("FiniteMdp: transition table shape mismatch");
    }
    for (int a = 0; a < num_actions; ++a) {
      if (std::abs(t.row(a).sum() - 1.0) > 1e-12 || t.row(a).minCoeff() < 0.0) {
        throw std::invalid_argument("FiniteMdp: transition row is not a distribution");
      }
    }
  }
  for (const MatrixXd& c : stage_costs) {
    if (c.rows() != num_states || c.cols() != num_actions || !c.allFinite()) {
      throw std::invalid_argument("FiniteMdp: cost table shape mismatch or non-finite");
    }
  }
}

namespace {

// Stage cost and transition row under a fixed policy.
void policy_tables(const FiniteMdp& mdp, const PolicyTable& policy, int agent, VectorXd& cost,
                   MatrixXd& chain) {
  const int n = mdp.num_states;
  cost.resize(n);
  chain.resize(n, n);
  for (int s = 0; s < n; ++s) {
    const int a = policy.action.at(s);
    cost(s) = mdp.stage_costs.at(agent)(s, a);
    chain.row(s) = mdp.transition[s].row(a);
  }
}

VectorXd value_iterate(const VectorXd& cost, const MatrixXd& chain, double gamma) {
  VectorXd v = VectorXd::Zero(cost.size());
  for (int iter = 0; iter < 200000; ++iter) {
    VectorXd next = cost + gamma * (chain * v);
    const double resid = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (resid < 1e-12) return v;
  }
  throw NumericalError("policy_value: fixed-point iteration did not reach 1e-12");
}

}  // namespace

VectorXd policy_value(const FiniteMdp& mdp, const PolicyTable& policy, int agent) {
  VectorXd cost;
  MatrixXd chain;
  policy_tables(mdp, policy, agent, cost, chain);
  return value_iterate(cost, chain, mdp.discount);
}

double decomposition_check(const FiniteMdp& mdp, const PolicyTable& policy) {
  FiniteMdp global = mdp;
  MatrixXd total = MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  for (const MatrixXd& c : mdp.stage_costs) total += c;
  global.stage_costs = {total};
  global.num_agents = 1;

  VectorXd v_global = policy_value(global, policy, 0);
  VectorXd v_sum = VectorXd::Zero(mdp.num_states);
  for (int i = 0; i < mdp.num_agents; ++i) v_sum += policy_value(mdp, policy, i);
  return (v_global - v_sum).lpNorm<Eigen::Infinity>();
}

ModifiedCosts modified_costs(const VectorXd& true_values, const FiniteMdp& surrogate) {
  ModifiedCosts out;
  out.terminal = true_values;
  out.stage.resize(surrogate.num_states, surrogate.num_actions);
  for (int s = 0; s < surrogate.num_states; ++s) {
    for (int a = 0; a < surrogate.num_actions; ++a) {
      const double expected_next = surrogate.transition[s].row(a).dot(true_values);
      if (!std::isfinite(expected_next)) {
        out.any_infinite = true;
        out.stage(s, a) = std::numeric_limits<double>::infinity();
      } else {
        out.stage(s, a) = true_values(s) - surrogate.discount * expected_next;
      }
    }
  }
  return out;
}

double nstep_value(const ModifiedCosts& costs, const FiniteMdp& surrogate,
                   const PolicyTable& policy, int start, int horizon) {
  if (horizon < 1) throw std::invalid_argument("nstep_value: horizon must be >= 1");
  if (start < 0 || start >= surrogate.num_states) {
    throw std::invalid_argument("nstep_value: start state out of range");
  }
  if (horizon * std::log(static_cast<double>(surrogate.num_states)) > std::log(1e6)) {
    throw NumericalError("nstep_value: more than 1e6 enumerated paths");
  }

  // Exact expectation by propagating the state distribution along the
  // surrogate chain under the fixed policy.
  VectorXd dist = VectorXd::Zero(surrogate.num_states);
  dist(start) = 1.0;
  double value = 0.0;
  double gamma_pow = 1.0;
  for (int step = 0; step < horizon; ++step) {
    VectorXd next = VectorXd::Zero(surrogate.num_states);
    for (int s = 0; s < surrogate.num_states; ++s) {
      if (dist(s) == 0.0) continue;
      const int a = policy.action.at(s);
      value += gamma_pow * dist(s) * costs.stage(s, a);
      next += dist(s) * surrogate.transition[s].row(a).transpose();
    }
    dist = next;
    gamma_pow *= surrogate.discount;
  }
  value += gamma_pow * dist.dot(costs.terminal);
  return value;
}

double local_bellman_gap(const FiniteMdp& mdp, const PolicyTable& policy, int agent,
                         const std::vector<int>& action_counts) {
  const int m = static_cast<int>(action_counts.size());
  if (agent < 0 || agent >= m) throw std::invalid_argument("local_bellman_gap: bad agent index");
  int radix_below = 1;
  for (int i = agent + 1; i < m; ++i) radix_below *= action_counts[i];

  const VectorXd v = policy_value(mdp, policy, agent);
  double max_gap = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) {
    const int joint = policy.action.at(s);
    const int own = (joint / radix_below) % action_counts[agent];
    const int base = joint - own * radix_below;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < action_counts[agent]; ++a) {
      const int candidate = base + a * radix_below;
      const double q = mdp.stage_costs.at(agent)(s, candidate) +
                       mdp.discount * mdp.transition[s].row(candidate).dot(v);
      best = std::min(best, q);
    }
    max_gap = std::max(max_gap, v(s) - best);
  }
  return max_gap;
}

}  // namespace mabo::mdp
