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

#ifndef MABO_GP_HPP
#define MABO_GP_HPP

#include <vector>

#include "mabo/common.hpp"

namespace mabo::gp {

/// Squared-exponential kernel hyperparameters. The noise and signal variances
/// are expressed in standardized observation units (fit() standardizes y).
struct KernelHyper {
  double signal_variance = 1.0;
  double length_scale = 1.0;
  double noise_variance = 1e-6;

  void check() const {
    if (!(signal_variance > 0.0) || !(length_scale > 0.0) || noise_variance < 0.0) {
      throw std::invalid_argument("KernelHyper: invalid values");
    }
  }
};

struct Dataset {
  std::vector<VectorXd> inputs;
  std::vector<double> observations;

  int size() const { return static_cast<int>(inputs.size()); }
  int input_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().size()); }
  void check() const;
};

/// Immutable fitted model. Posterior queries are const and safe to share
/// across threads; refitting builds a new model.
struct GpModel {
  Dataset data;
  KernelHyper hyper;
  double y_mean = 0.0;   ///< standardization shift
  double y_scale = 1.0;  ///< standardization scale (population std, floored at tiny)
  double jitter = 0.0;   ///< diagonal jitter that made the factorization succeed
  MatrixXd factor;       ///< lower-triangular L with L L^T = K + (noise+jitter) I
  VectorXd weights;      ///< (K + (noise+jitter) I)^{-1} y_standardized

  bool fitted() const { return data.size() > 0; }
};

/// sigma_J^2 * exp(-||a-b||^2 / (2 l^2)).
double se_kernel(const VectorXd& a, const VectorXd& b, const KernelHyper& hyper);

/// Exact GP fit: standardizes observations, assembles the kernel matrix and
/// runs a Cholesky factorization with a jitter ladder (1e-10, x10 per retry,
/// up to 1e-4). Throws NumericalError (carrying the attempted jitter) if the
/// ladder is exhausted.
GpModel fit(const Dataset& data, const KernelHyper& hyper);

/// Posterior mean/variance at `query`, de-standardized; variance clamped >= 0.
struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};
Posterior posterior(const GpModel& model, const VectorXd& query);

/// Posterior gradients: d mean / d query and d std / d query (de-standardized).
/// At interpolation points where the posterior std vanishes the std gradient
/// is returned as zero.
struct PosteriorGradient {
  double mean = 0.0;
  double std = 0.0;
  VectorXd dmean;
  VectorXd dstd;
};
PosteriorGradient posterior_gradient(const GpModel& model, const VectorXd& query);

/// Bounds for hyperparameter search, in standardized observation units.
struct HyperBounds {
  double signal_lo = 1e-3, signal_hi = 1e2;
  double length_lo = 1e-2, length_hi = 1e2;
  double noise_lo = 1e-8, noise_hi = 1e-1;
};

/// Log marginal likelihood of the standardized data under `hyper`.
double log_marginal_likelihood(const Dataset& data, const KernelHyper& hyper);

/// Multi-start maximization of the log marginal likelihood over the bounds
/// (log-space coordinate descent, seeded, deterministic). `previous` is added
/// as one start when provided. Candidates whose factorization fails are
/// skipped; if all fail a NumericalError is thrown.
KernelHyper optimize_hyperparameters(const Dataset& data, const HyperBounds& bounds,
                                     std::uint64_t seed,
                                     const KernelHyper* previous = nullptr);

}  // namespace mabo::gp

#endif  // MABO_GP_HPP
