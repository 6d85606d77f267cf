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

#include "mabo/gp.hpp"

#include <cmath>

namespace mabo::gp {

void Dataset::check() const {
  if (inputs.size() != observations.size()) {
    throw std::invalid_argument("Dataset: inputs/observations length mismatch");
  }
  for (const VectorXd& x : inputs) {
    if (x.size() != inputs.front().size()) {
      throw std::invalid_argument("Dataset: inconsistent input dimensions");
    }
  }
  for (double y : observations) {
    if (!std::isfinite(y)) throw std::invalid_argument("Dataset: non-finite observation");
  }
}

double se_kernel(const VectorXd& a, const VectorXd& b, const KernelHyper& hyper) {
  if (a.size() != b.size()) throw std::invalid_argument("se_kernel: dimension mismatch");
  const double sq = (a - b).squaredNorm();
  return hyper.signal_variance * std::exp(-sq / (2.0 * hyper.length_scale * hyper.length_scale));
}

namespace {

MatrixXd kernel_matrix(const Dataset& data, const KernelHyper& hyper) {
  const int n = data.size();
  MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = hyper.signal_variance;
    for (int j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = se_kernel(data.inputs[i], data.inputs[j], hyper);
    }
  }
  return k;
}

VectorXd standardized_y(const Dataset& data, double& mean, double& scale) {
  const int n = data.size();
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = data.observations[i];
  mean = y.mean();
  // Population standard deviation; floored so constant data stays usable.
  scale = std::sqrt((y.array() - mean).square().sum() / n);
  if (scale < 1e-12) scale = 1.0;
  return (y.array() - mean) / scale;
}

VectorXd kernel_vector(const GpModel& model, const VectorXd& query) {
  const int n = model.data.size();
  VectorXd k(n);
  for (int i = 0; i < n; ++i) k(i) = se_kernel(query, model.data.inputs[i], model.hyper);
  return k;
}

}  // namespace

GpModel fit(const Dataset& data, const KernelHyper& hyper) {
  data.check();
  hyper.check();
  if (data.size() == 0) throw std::invalid_argument("fit: empty dataset");

  GpModel model;
  model.data = data;
  model.hyper = hyper;
  const VectorXd y = standardized_y(data, model.y_mean, model.y_scale);
  const MatrixXd k = kernel_matrix(data, hyper);
  const int n = data.size();

  double jitter = 0.0;
  while (true) {
    MatrixXd sys = k + (hyper.noise_variance + jitter) * MatrixXd::Identity(n, n);
    Eigen::LLT<MatrixXd> llt(sys);
    if (llt.info() == Eigen::Success) {
      model.factor = llt.matrixL();
      model.weights = llt.solve(y);
      model.jitter = jitter;
      return model;
    }
    if (jitter >= 1e-4) break;
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
  }
  char msg[96];
  std::snprintf(msg, sizeof(msg), "gp::fit: factorization failed up to jitter %g", jitter);
  throw NumericalError(msg);
}

Posterior posterior(const GpModel& model, const VectorXd& query) {
  if (!model.fitted()) throw std::runtime_error("posterior: model not fitted");
  if (query.size() != model.data.input_dim()) {
    throw std::invalid_argument("posterior: query dimension mismatch");
  }
  const VectorXd k = kernel_vector(model, query);
  const double mean_std = k.dot(model.weights);
  const VectorXd v = model.factor.triangularView<Eigen::Lower>().solve(k);
  const double var_std = std::max(0.0, model.hyper.signal_variance - v.squaredNorm());
  Posterior p;
  p.mean = model.y_mean + model.y_scale * mean_std;
  p.variance = var_std * model.y_scale * model.y_scale;
  return p;
}

PosteriorGradient posterior_gradient(const GpModel& model, const VectorXd& query) {
  if (!model.fitted()) throw std::runtime_error("posterior_gradient: model not fitted");
  if (query.size() != model.data.input_dim()) {
    throw std::invalid_argument("posterior_gradient: query dimension mismatch");
  }
  const int n = model.data.size();
  const int d = model.data.input_dim();
  const VectorXd k = kernel_vector(model, query);
  // dk_i/dq = -k_i (q - x_i) / l^2, assembled as a d x n Jacobian.
  MatrixXd jac(d, n);
  const double inv_l2 = 1.0 / (model.hyper.length_scale * model.hyper.length_scale);
  for (int i = 0; i < n; ++i) {
    jac.col(i) = -k(i) * inv_l2 * (query - model.data.inputs[i]);
  }

  PosteriorGradient out;
  const double mean_std = k.dot(model.weights);
  out.mean = model.y_mean + model.y_scale * mean_std;
  out.dmean = model.y_scale * (jac * model.weights);

  const VectorXd v = model.factor.triangularView<Eigen::Lower>().solve(k);
  const double var_std = std::max(0.0, model.hyper.signal_variance - v.squaredNorm());
  const double std_std = std::sqrt(var_std);
  out.std = model.y_scale * std_std;
  if (std_std < 1e-12) {
    out.dstd = VectorXd::Zero(d);
  } else {
    // alpha = (K + sigma_n^2 I)^{-1} k via the two triangular solves.
    const VectorXd alpha =
        model.factor.transpose().triangularView<Eigen::Upper>().solve(v);
    const VectorXd dvar = -2.0 * (jac * alpha);  // d sigma^2 / dq (standardized)
    out.dstd = model.y_scale * dvar / (2.0 * std_std);
  }
  return out;
}

double log_marginal_likelihood(const Dataset& data, const KernelHyper& hyper) {
  const GpModel model = fit(data, hyper);
  const int n = data.size();
  double y_mean, y_scale;
  const VectorXd y = standardized_y(data, y_mean, y_scale);
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += std::log(model.factor(i, i));
  return -0.5 * y.dot(model.weights) - log_det - 0.5 * n * std::log(2.0 * M_PI);
}

KernelHyper optimize_hyperparameters(const Dataset& data, const HyperBounds& bounds,
                                     std::uint64_t seed, const KernelHyper* previous) {
  data.check();
  if (data.size() < 2) {
    throw std::invalid_argument("optimize_hyperparameters: need at least 2 points");
  }

  Box box;
  box.lo = VectorXd(3);
  box.hi = VectorXd(3);
  box.lo << std::log(bounds.signal_lo), std::log(bounds.length_lo), std::log(bounds.noise_lo);
  box.hi << std::log(bounds.signal_hi), std::log(bounds.length_hi), std::log(bounds.noise_hi);

  auto to_hyper = [](const VectorXd& v) {
    KernelHyper h;
    h.signal_variance = std::exp(v(0));
    h.length_scale = std::exp(v(1));
    h.noise_variance = std::exp(v(2));
    return h;
  };

  auto objective = [&](const VectorXd& v) {
    try {
      return -log_marginal_likelihood(data, to_hyper(v));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<VectorXd> extra;
  if (previous) {
    VectorXd v(3);
    v << std::log(previous->signal_variance), std::log(previous->length_scale),
        std::log(std::max(previous->noise_variance, bounds.noise_lo));
    extra.push_back(v);
  }

  // Log-space tolerance 0.05 resolves hyperparameters to ~5%, which is ample
  // for acquisition purposes and keeps the per-episode refresh cheap. The
  // marginal likelihood is smooth, so the plain golden line search suffices.
  const VectorXd best =
      multistart_minimize(objective, box, 5, seed, extra, 0.05, LineSearch::kGolden);
  if (!std::isfinite(objective(best))) {
    throw NumericalError("optimize_hyperparameters: all candidates failed factorization");
  }
  return to_hyper(best);
}

}  // namespace mabo::gp
