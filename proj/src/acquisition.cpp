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

#include "mabo/acquisition.hpp"

#include <cmath>

namespace mabo::acq {

namespace {
constexpr double kStdFloor = 1e-12;
}

double ei(double mean, double std, double best) {
  if (std < 0.0) throw std::invalid_argument("ei: negative std");
  if (std < kStdFloor) return -std::max(best - mean, 0.0);
  // (best - mean) Phi(Z) + std phi(Z) = std h(Z), h the scaled-improvement
  // kernel, which stays accurate deep into the no-improvement tail.
  return -std * scaled_improvement((best - mean) / std);
}

double ei(const gp::GpModel& model, const VectorXd& query, double best) {
  const gp::Posterior p = gp::posterior(model, query);
  return ei(p.mean, std::sqrt(p.variance), best);
}

VectorXd ei_gradient(const gp::GpModel& model, const VectorXd& query, double best) {
  const gp::PosteriorGradient g = gp::posterior_gradient(model, query);
  if (g.std < kStdFloor) {
    // Subgradient of -max(best - mean, 0).
    if (g.mean < best) return g.dmean;
    if (g.mean > best) return VectorXd::Zero(query.size()).eval();
    return (0.5 * g.dmean).eval();
  }
  const double z = (best - g.mean) / g.std;
  return normal_cdf(z) * g.dmean - normal_pdf(z) * g.dstd;
}

NonmyopicStats nonmyopic_ei_stats(const gp::GpModel& model, const VectorXd& query,
                                  const RolloutConfig& cfg,
                                  const std::vector<VectorXd>& candidate_grid) {
  cfg.check();
  if (!model.fitted()) throw std::runtime_error("nonmyopic_ei: model not fitted");

  double best = model.data.observations.front();
  for (double y : model.data.observations) best = std::min(best, y);

  NonmyopicStats out;
  out.value = ei(model, query, best);
  if (cfg.horizon == 1) return out;
  if (candidate_grid.empty()) {
    throw std::invalid_argument("nonmyopic_ei: empty candidate grid with horizon > 1");
  }

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < cfg.samples; ++s) {
    NormalSampler normal(derive_seed(cfg.seed, "nonmyopic-rollout", static_cast<std::uint64_t>(s)));
    gp::GpModel fantasy = model;
    double incumbent = best;
    double total = 0.0;

    auto observe = [&](const VectorXd& point) {
      const gp::Posterior p = gp::posterior(fantasy, point);
      const double draw = p.mean + std::sqrt(p.variance) * normal();
      gp::Dataset augmented = fantasy.data;
      augmented.inputs.push_back(point);
      augmented.observations.push_back(draw);
      fantasy = gp::fit(augmented, fantasy.hyper);
      return draw;
    };

    // The pending query's own improvement is already accounted for by the
    // analytic ei term; only the H-1 follow-up stages enter the MC sum.
    incumbent = std::min(incumbent, observe(query));
    for (int step = 1; step < cfg.horizon; ++step) {
      // Greedy base policy: next query is the best one-step ei grid point.
      double best_acq = std::numeric_limits<double>::infinity();
      const VectorXd* best_point = &candidate_grid.front();
      for (const VectorXd& c : candidate_grid) {
        const double a = ei(fantasy, c, incumbent);
        if (a < best_acq) {
          best_acq = a;
          best_point = &c;
        }
      }
      const double draw = observe(*best_point);
      total += std::max(incumbent - draw, 0.0);
      incumbent = std::min(incumbent, draw);
    }
    sum += total;
    sum_sq += total * total;
  }

  const double m = static_cast<double>(cfg.samples);
  out.future_mean = sum / m;
  const double var = std::max(0.0, sum_sq / m - out.future_mean * out.future_mean);
  out.future_se = cfg.samples > 1 ? std::sqrt(var / m) : 0.0;
  out.value -= out.future_mean;
  return out;
}

double nonmyopic_ei(const gp::GpModel& model, const VectorXd& query, const RolloutConfig& cfg,
                    const std::vector<VectorXd>& candidate_grid) {
  return nonmyopic_ei_stats(model, query, cfg, candidate_grid).value;
}

std::vector<MonotonicityViolation> monotonicity_probe(
    const std::vector<double>& alpha1_grid, const std::vector<double>& alpha2_grid,
    const std::function<double(double, double)>* beta_override) {
  for (double a1 : alpha1_grid) {
    if (!(a1 > 0.0)) throw std::invalid_argument("monotonicity_probe: alpha1 must be > 0");
  }

  // beta(a1, a2) = a1 h(a2/a1) = a2 + a1 h(-a2/a1). The second identity lets
  // the a2-dominated linear part cancel analytically in differences, so the
  // probe resolves the tiny tail components instead of their absorption.
  auto diff_alpha1 = [&](double a1_lo, double a1_hi, double a2) {
    if (beta_override) {
      return (*beta_override)(a1_hi, a2) - (*beta_override)(a1_lo, a2);
    }
    if (a2 > 0.0) {
      return a1_hi * scaled_improvement(-a2 / a1_hi) - a1_lo * scaled_improvement(-a2 / a1_lo);
    }
    return a1_hi * scaled_improvement(a2 / a1_hi) - a1_lo * scaled_improvement(a2 / a1_lo);
  };
  auto diff_alpha2 = [&](double a1, double a2_lo, double a2_hi) {
    if (beta_override) {
      return (*beta_override)(a1, a2_hi) - (*beta_override)(a1, a2_lo);
    }
    if (a2_lo >= 0.0) {
      return (a2_hi - a2_lo) +
             a1 * (scaled_improvement(-a2_hi / a1) - scaled_improvement(-a2_lo / a1));
    }
    return a1 * (scaled_improvement(a2_hi / a1) - scaled_improvement(a2_lo / a1));
  };

  std::vector<MonotonicityViolation> violations;
  const int n1 = static_cast<int>(alpha1_grid.size());
  const int n2 = static_cast<int>(alpha2_grid.size());
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      if (i + 1 < n1) {
        const double d = diff_alpha1(alpha1_grid[i], alpha1_grid[i + 1], alpha2_grid[j]);
        if (!(d > 0.0)) violations.push_back({i, j, 0, d});
      }
      if (j + 1 < n2) {
        const double d = diff_alpha2(alpha1_grid[i], alpha2_grid[j], alpha2_grid[j + 1]);
        if (!(d > 0.0)) violations.push_back({i, j, 1, d});
      }
    }
  }
  return violations;
}

}  // namespace mabo::acq
