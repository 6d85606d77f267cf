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

#ifndef MABO_COMMON_HPP
#define MABO_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mabo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Numerical failure (factorization breakdown, divergence) as opposed to bad input.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iteration limit reached before the requested tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario document violates the schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stable 64-bit stream-seed derivation from (root, purpose, index).
/// FNV-1a over the purpose string mixed with splitmix64, so every consumer
/// of randomness gets an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0);

/// Uniform double in [lo, hi) built from the top 53 bits of the generator.
/// Used instead of std::uniform_real_distribution to keep streams
/// bit-stable across standard library implementations.
double uniform_real(std::mt19937_64& rng, double lo, double hi);

/// Standard normal draw (Box-Muller on uniform_real; two draws per call pair).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}
  double operator()();

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Standard normal pdf.
double normal_pdf(double z);
/// Standard normal cdf via erfc.
double normal_cdf(double z);

/// h(z) = z Phi(z) + phi(z), the scaled expected-improvement kernel.
/// Non-negative for all z; evaluated by an asymptotic expansion in the deep
/// left tail where the direct form loses all digits to cancellation.
double scaled_improvement(double z);

/// Midpoint Latin hypercube sample of `count` points inside [lo, hi]^d.
/// Stratum assignment is a seeded permutation per dimension, no intra-stratum
/// jitter, so the design is reproducible and evenly spread.
std::vector<VectorXd> latin_hypercube(const VectorXd& lo, const VectorXd& hi, int count,
                                      std::uint64_t seed);

/// Box for bounded searches.
struct Box {
  VectorXd lo;
  VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  VectorXd center() const { return 0.5 * (lo + hi); }
  VectorXd clamp(const VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const VectorXd& x, double tol = 1e-12) const {
    return ((x - lo).minCoeff() >= -tol) && ((hi - x).minCoeff() >= -tol);
  }
};

/// Per-coordinate line-search strategy of the coordinate-descent minimizer.
/// kScanThenGolden brackets the best cell of a uniform scan before polishing,
/// which survives multimodal profiles (acquisition landscapes); kGolden is
/// the cheap choice for smooth objectives.
enum class LineSearch { kGolden, kScanThenGolden };

/// Derivative-free bounded minimizer: coordinate descent where each sweep
/// runs a line search per coordinate. Deterministic. Stops when a full sweep
/// moves the iterate by less than `tol` in every coordinate.
VectorXd coordinate_descent(const std::function<double(const VectorXd&)>& f, const Box& box,
                            const VectorXd& start, double tol = 1e-6, int max_sweeps = 40,
                            LineSearch line = LineSearch::kScanThenGolden);

/// Multi-start wrapper: `n_starts` Latin-hypercube starts (plus any explicit
/// extra seeds), each refined by coordinate_descent; returns the best point.
VectorXd multistart_minimize(const std::function<double(const VectorXd&)>& f, const Box& box,
                             int n_starts, std::uint64_t seed,
                             const std::vector<VectorXd>& extra_starts = {}, double tol = 1e-6,
                             LineSearch line = LineSearch::kScanThenGolden);

}  // namespace mabo

#endif  // MABO_COMMON_HPP
