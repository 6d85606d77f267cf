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

#include "mabo/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mabo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(root ^ h) ^ index);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

double NormalSampler::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform_real(rng_, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform_real(rng_, 0.0, 1.0);
  const double u2 = uniform_real(rng_, 0.0, 1.0);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double scaled_improvement(double z) {
  if (z <= -30.0) {
    // h(z) = phi(z)/z^2 (1 - 3/z^2 + 15/z^4 - 105/z^6 + 945/z^8 + ...)
    const double inv2 = 1.0 / (z * z);
    const double series = 1.0 + inv2 * (-3.0 + inv2 * (15.0 + inv2 * (-105.0 + inv2 * 945.0)));
    return normal_pdf(z) * inv2 * series;
  }
  return std::max(0.0, z * normal_cdf(z) + normal_pdf(z));
}

std::vector<VectorXd> latin_hypercube(const VectorXd& lo, const VectorXd& hi, int count,
                                      std::uint64_t seed) {
  if (count <= 0) return {};
  const int dim = static_cast<int>(lo.size());
  std::vector<VectorXd> points(count, VectorXd::Zero(dim));
  for (int d = 0; d < dim; ++d) {
    std::vector<int> strata(count);
    std::iota(strata.begin(), strata.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, "lhs-dim", static_cast<std::uint64_t>(d)));
    for (int i = count - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(strata[i], strata[j]);
    }
    for (int i = 0; i < count; ++i) {
      const double unit = (strata[i] + 0.5) / count;
      points[i](d) = lo(d) + (hi(d) - lo(d)) * unit;
    }
  }
  return points;
}

namespace {

// Golden-section search on [a, b]; f unimodal assumed, still safe otherwise
// (converges to a local minimizer within the bracket).
std::pair<double, double> golden_section(const std::function<double(double)>& f, double a,
                                         double b, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Line minimization robust to multimodal profiles: a uniform bracketing scan
// picks the best cell, golden section polishes inside it.
std::pair<double, double> line_minimize(const std::function<double(double)>& f, double a,
                                        double b, double tol) {
  constexpr int kCells = 32;
  const double h = (b - a) / kCells;
  double best_t = a;
  double best_f = f(a);
  for (int k = 1; k <= kCells; ++k) {
    const double t = (k == kCells) ? b : a + k * h;
    const double ft = f(t);
    if (ft < best_f) {
      best_f = ft;
      best_t = t;
    }
  }
  const double lo = std::max(a, best_t - h);
  const double hi = std::min(b, best_t + h);
  const auto [t, ft] = golden_section(f, lo, hi, tol);
  return ft < best_f ? std::make_pair(t, ft) : std::make_pair(best_t, best_f);
}

}  // namespace

VectorXd coordinate_descent(const std::function<double(const VectorXd&)>& f, const Box& box,
                            const VectorXd& start, double tol, int max_sweeps, LineSearch line) {
  VectorXd x = box.clamp(start);
  double fx = f(x);
  const int dim = box.dim();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int d = 0; d < dim; ++d) {
      if (box.hi(d) - box.lo(d) <= 0.0) continue;
      VectorXd probe = x;
      auto profile = [&](double t) {
        probe(d) = t;
        return f(probe);
      };
      const auto [best_t, best_f] =
          line == LineSearch::kScanThenGolden
              ? line_minimize(profile, box.lo(d), box.hi(d), tol * 0.5)
              : golden_section(profile, box.lo(d), box.hi(d), tol * 0.5);
      if (best_f < fx) {
        max_move = std::max(max_move, std::abs(best_t - x(d)));
        x(d) = best_t;
        fx = best_f;
      }
    }
    if (max_move < tol) break;
  }
  return x;
}

VectorXd multistart_minimize(const std::function<double(const VectorXd&)>& f, const Box& box,
                             int n_starts, std::uint64_t seed,
                             const std::vector<VectorXd>& extra_starts, double tol,
                             LineSearch line) {
  std::vector<VectorXd> starts = latin_hypercube(box.lo, box.hi, n_starts, seed);
  for (const auto& s : extra_starts) starts.push_back(box.clamp(s));
  if (starts.empty()) starts.push_back(box.center());

  VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const VectorXd x = coordinate_descent(f, box, s, tol, 40, line);
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace mabo
