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

#include "mabo/trajopt.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

namespace mabo::ocp {

namespace {

constexpr double kTikhonov = 1e-9;

bool soft(const IneqRow& row) { return std::isfinite(row.slack_weight); }

/// Variable packing for the simultaneous transcription:
///   [ x_0..x_N | u_0..u_{N-1} | w_0..w_N | delta_0..delta_{N-1} | slacks ]
struct Layout {
  int N = 0, nx = 0, nu = 0, nw = 0;
  bool has_delta = false;
  int n_rows = 0;       // stage inequality rows
  int n_soft = 0;       // stage rows carrying a slack variable
  std::vector<int> soft_index;      // per row: slack slot or -1
  std::vector<int> terminal_rows;   // row ids applied at the terminal stage
  std::vector<int> terminal_soft;   // per terminal row: slack slot or -1
  int n_term_soft = 0;
  int off_x = 0, off_u = 0, off_w = 0, off_d = 0, off_s = 0, off_st = 0;
  int nvar = 0;

  explicit Layout(const OcpSpec& spec) {
    N = spec.horizon;
    nx = spec.state_dim();
    nu = spec.control_dim();
    nw = spec.coupling_dim;
    has_delta = spec.increment_mode && nw > 0;
    n_rows = static_cast<int>(spec.rows.size());
    soft_index.assign(n_rows, -1);
    for (int r = 0; r < n_rows; ++r) {
      if (soft(spec.rows[r])) soft_index[r] = n_soft++;
      if (spec.rows[r].applies_terminal) {
        terminal_soft.push_back(soft(spec.rows[r]) ? n_term_soft++ : -1);
        terminal_rows.push_back(r);
      }
    }
    off_x = 0;
    off_u = off_x + (N + 1) * nx;
    off_w = off_u + N * nu;
    off_d = off_w + (N + 1) * nw;
    off_s = off_d + (has_delta ? N * nw : 0);
    off_st = off_s + N * n_soft;
    nvar = off_st + n_term_soft;
  }

  int x(int l, int d = 0) const { return off_x + l * nx + d; }
  int u(int l, int d = 0) const { return off_u + l * nu + d; }
  int w(int l, int d = 0) const { return off_w + l * nw + d; }
  int dl(int l, int d = 0) const { return off_d + l * nw + d; }
  int s(int l, int soft_slot) const { return off_s + l * n_soft + soft_slot; }
  int st(int soft_slot) const { return off_st + soft_slot; }
};

using Triplets = std::vector<Eigen::Triplet<double>>;
using SparseMat = Eigen::SparseMatrix<double>;
using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct QpData {
  SparseMat hess;  // nvar x nvar, symmetric
  VectorXd grad;
  RowMat a_eq;
  VectorXd b_eq;
  RowMat a_in;
  VectorXd b_in;
  VectorXd mult_scale;  // natural multiplier magnitude per inequality row
};

// Quadratic cost and linear terms; identical at every SQP iteration.
void assemble_cost(const OcpSpec& spec, const Layout& lay, Triplets& h, VectorXd& g) {
  g.setZero(lay.nvar);
  const int nr = static_cast<int>(spec.coupling_offset.size());
  const bool has_coupling = spec.coupling_weight > 0.0 && nr > 0;

  auto add_coupling = [&](int l, double gamma) {
    // weight * || Sx x - Sw w - off ||^2 over the stacked (x_l, w_l) coords.
    const double c2 = 2.0 * gamma * spec.coupling_weight;
    for (int r = 0; r < nr; ++r) {
      std::vector<std::pair<int, double>> coeffs;
      for (int d = 0; d < lay.nx; ++d) {
        if (spec.coupling_Sx(r, d) != 0.0) coeffs.emplace_back(lay.x(l, d), spec.coupling_Sx(r, d));
      }
      for (int d = 0; d < lay.nw; ++d) {
        if (spec.coupling_Sw(r, d) != 0.0) coeffs.emplace_back(lay.w(l, d), -spec.coupling_Sw(r, d));
      }
      for (const auto& [ia, va] : coeffs) {
        g(ia) += -c2 * va * spec.coupling_offset(r);
        for (const auto& [ib, vb] : coeffs) h.emplace_back(ia, ib, c2 * va * vb);
      }
    }
  };

  double gamma = 1.0;
  for (int l = 0; l <= spec.horizon; ++l) {
    const bool terminal = (l == spec.horizon);
    for (int d = 0; d < lay.nx; ++d) {
      h.emplace_back(lay.x(l, d), lay.x(l, d), 2.0 * gamma * spec.state_weight(d));
      g(lay.x(l, d)) += -2.0 * gamma * spec.state_weight(d) * spec.state_ref(d);
    }
    if (!spec.dual_x.empty()) g.segment(lay.x(l), lay.nx) += gamma * spec.dual_x[l];
    if (lay.nw > 0 && !spec.dual_w.empty()) g.segment(lay.w(l), lay.nw) += gamma * spec.dual_w[l];
    if (has_coupling) add_coupling(l, gamma);

    if (!terminal) {
      for (int d = 0; d < lay.nu; ++d) {
        h.emplace_back(lay.u(l, d), lay.u(l, d), 2.0 * gamma * spec.control_weight(d));
      }
      if (lay.has_delta) {
        for (int d = 0; d < lay.nw; ++d) {
          h.emplace_back(lay.dl(l, d), lay.dl(l, d), 2.0 * gamma * spec.delta_weight);
        }
      }
      for (int r = 0; r < lay.n_rows; ++r) {
        if (lay.soft_index[r] >= 0) {
          g(lay.s(l, lay.soft_index[r])) += gamma * spec.rows[r].slack_weight;
        }
      }
    } else {
      for (size_t t = 0; t < lay.terminal_rows.size(); ++t) {
        if (lay.terminal_soft[t] >= 0) {
          g(lay.st(lay.terminal_soft[t])) +=
              gamma * spec.rows[lay.terminal_rows[t]].slack_weight_terminal;
        }
      }
    }
    gamma *= spec.discount;
  }

  for (int i = 0; i < lay.nvar; ++i) h.emplace_back(i, i, kTikhonov);
}

// Inequality rows; constant across SQP iterations.
void assemble_inequalities(const OcpSpec& spec, const Layout& lay, QpData& qp) {
  Triplets t;
  std::vector<double> rhs;
  std::vector<double> scale;
  int row_id = 0;
  auto push_stage_row = [&](int l, int r) {
    const IneqRow& row = spec.rows[r];
    const double weight = soft(row) ? std::max(1.0, row.slack_weight) : 1.0;
    for (int d = 0; d < lay.nx; ++d) {
      if (row.cx(d) != 0.0) t.emplace_back(row_id, lay.x(l, d), row.cx(d));
    }
    for (int d = 0; d < lay.nu; ++d) {
      if (row.cu(d) != 0.0) t.emplace_back(row_id, lay.u(l, d), row.cu(d));
    }
    if (lay.soft_index[r] >= 0) t.emplace_back(row_id, lay.s(l, lay.soft_index[r]), -1.0);
    rhs.push_back(row.rhs);
    scale.push_back(weight);
    ++row_id;
    if (lay.soft_index[r] >= 0) {
      t.emplace_back(row_id, lay.s(l, lay.soft_index[r]), -1.0);
      rhs.push_back(0.0);
      scale.push_back(weight);
      ++row_id;
    }
  };
  for (int l = 0; l < spec.horizon; ++l) {
    for (int r = 0; r < lay.n_rows; ++r) push_stage_row(l, r);
  }
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    const IneqRow& row = spec.rows[lay.terminal_rows[k]];
    const double weight = soft(row) ? std::max(1.0, row.slack_weight_terminal) : 1.0;
    for (int d = 0; d < lay.nx; ++d) {
      if (row.cx(d) != 0.0) t.emplace_back(row_id, lay.x(spec.horizon, d), row.cx(d));
    }
    if (lay.terminal_soft[k] >= 0) t.emplace_back(row_id, lay.st(lay.terminal_soft[k]), -1.0);
    rhs.push_back(row.rhs);
    scale.push_back(weight);
    ++row_id;
    if (lay.terminal_soft[k] >= 0) {
      t.emplace_back(row_id, lay.st(lay.terminal_soft[k]), -1.0);
      rhs.push_back(0.0);
      scale.push_back(weight);
      ++row_id;
    }
  }
  qp.a_in.resize(row_id, lay.nvar);
  qp.a_in.setFromTriplets(t.begin(), t.end());
  qp.b_in = Eigen::Map<VectorXd>(rhs.data(), row_id);
  qp.mult_scale = Eigen::Map<VectorXd>(scale.data(), row_id);
}

// Point satisfying the equality rows linearized at `lin` and every slack-
// carrying inequality row: `lin`'s controls rolled through the linearized
// dynamics, couplings propagated exactly, slacks lifted to cover violations.
VectorXd feasible_start(const OcpSpec& spec, const Layout& lay, const Trajectory& lin) {
  VectorXd z = VectorXd::Zero(lay.nvar);
  for (int l = 0; l < spec.horizon; ++l) z.segment(lay.u(l), lay.nu) = lin.controls[l];

  VectorXd xl = spec.initial_state;
  z.segment(lay.x(0), lay.nx) = xl;
  MatrixXd A, B;
  for (int l = 0; l < spec.horizon; ++l) {
    spec.dynamics->jacobians(lin.states[l], lin.controls[l], A, B);
    const VectorXd c = spec.dynamics->step(lin.states[l], lin.controls[l]) - A * lin.states[l] -
                       B * lin.controls[l];
    xl = A * xl + B * lin.controls[l] + c;
    z.segment(lay.x(l + 1), lay.nx) = xl;
  }

  if (lay.nw > 0) {
    if (spec.increment_mode) {
      VectorXd w = spec.initial_coupling;
      z.segment(lay.w(0), lay.nw) = w;
      for (int l = 0; l < spec.horizon; ++l) {
        const VectorXd delta = lin.coupling_increments.empty()
                                   ? VectorXd::Zero(lay.nw).eval()
                                   : lin.coupling_increments[l];
        z.segment(lay.dl(l), lay.nw) = delta;
        w += delta;
        z.segment(lay.w(l + 1), lay.nw) = w;
      }
    } else {
      for (int l = 0; l <= spec.horizon; ++l) {
        z.segment(lay.w(l), lay.nw) =
            lin.couplings.empty() ? VectorXd::Zero(lay.nw).eval() : lin.couplings[l];
      }
    }
  }

  for (int l = 0; l < spec.horizon; ++l) {
    for (int r = 0; r < lay.n_rows; ++r) {
      if (lay.soft_index[r] < 0) continue;
      const IneqRow& row = spec.rows[r];
      const double v = row.cx.dot(z.segment(lay.x(l), lay.nx)) +
                       row.cu.dot(z.segment(lay.u(l), lay.nu)) - row.rhs;
      z(lay.s(l, lay.soft_index[r])) = std::max(0.0, v);
    }
  }
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    if (lay.terminal_soft[k] < 0) continue;
    const IneqRow& row = spec.rows[lay.terminal_rows[k]];
    const double v = row.cx.dot(z.segment(lay.x(spec.horizon), lay.nx)) - row.rhs;
    z(lay.st(lay.terminal_soft[k])) = std::max(0.0, v);
  }
  return z;
}

// Equality rows linearized at `lin` (states/controls used as the expansion
// point for the dynamics rows).
void assemble_equalities(const OcpSpec& spec, const Layout& lay, const Trajectory& lin,
                         QpData& qp) {
  Triplets t;
  std::vector<double> rhs;
  int row = 0;
  MatrixXd A, B;
  for (int l = 0; l < spec.horizon; ++l) {
    spec.dynamics->jacobians(lin.states[l], lin.controls[l], A, B);
    const VectorXd c = spec.dynamics->step(lin.states[l], lin.controls[l]) - A * lin.states[l] -
                       B * lin.controls[l];
    for (int d = 0; d < lay.nx; ++d) {
      t.emplace_back(row, lay.x(l + 1, d), 1.0);
      for (int e = 0; e < lay.nx; ++e) {
        if (A(d, e) != 0.0) t.emplace_back(row, lay.x(l, e), -A(d, e));
      }
      for (int e = 0; e < lay.nu; ++e) {
        if (B(d, e) != 0.0) t.emplace_back(row, lay.u(l, e), -B(d, e));
      }
      rhs.push_back(c(d));
      ++row;
    }
  }
  for (int d = 0; d < lay.nx; ++d) {
    t.emplace_back(row, lay.x(0, d), 1.0);
    rhs.push_back(spec.initial_state(d));
    ++row;
  }
  if (lay.nw > 0 && spec.increment_mode) {
    for (int d = 0; d < lay.nw; ++d) {
      t.emplace_back(row, lay.w(0, d), 1.0);
      rhs.push_back(spec.initial_coupling(d));
      ++row;
    }
    for (int l = 0; l < spec.horizon; ++l) {
      for (int d = 0; d < lay.nw; ++d) {
        t.emplace_back(row, lay.w(l + 1, d), 1.0);
        t.emplace_back(row, lay.w(l, d), -1.0);
        t.emplace_back(row, lay.dl(l, d), -1.0);
        rhs.push_back(0.0);
        ++row;
      }
    }
  }
  qp.a_eq.resize(row, lay.nvar);
  qp.a_eq.setFromTriplets(t.begin(), t.end());
  qp.b_eq = Eigen::Map<VectorXd>(rhs.data(), row);
}

VectorXd pack(const OcpSpec& spec, const Layout& lay, const Trajectory& traj) {
  VectorXd z = VectorXd::Zero(lay.nvar);
  for (int l = 0; l <= spec.horizon; ++l) z.segment(lay.x(l), lay.nx) = traj.states[l];
  for (int l = 0; l < spec.horizon; ++l) z.segment(lay.u(l), lay.nu) = traj.controls[l];
  if (lay.nw > 0) {
    for (int l = 0; l <= spec.horizon; ++l) z.segment(lay.w(l), lay.nw) = traj.couplings[l];
  }
  if (lay.has_delta) {
    for (int l = 0; l < spec.horizon; ++l) z.segment(lay.dl(l), lay.nw) = traj.coupling_increments[l];
  }
  for (int l = 0; l < spec.horizon; ++l) {
    for (int r = 0; r < lay.n_rows; ++r) {
      if (lay.soft_index[r] >= 0) z(lay.s(l, lay.soft_index[r])) = traj.constraint_slacks[l](r);
    }
  }
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    if (lay.terminal_soft[k] >= 0) {
      z(lay.st(lay.terminal_soft[k])) = traj.constraint_slacks[spec.horizon](k);
    }
  }
  return z;
}

Trajectory unpack(const OcpSpec& spec, const Layout& lay, const VectorXd& z) {
  Trajectory traj;
  for (int l = 0; l <= spec.horizon; ++l) traj.states.push_back(z.segment(lay.x(l), lay.nx));
  for (int l = 0; l < spec.horizon; ++l) traj.controls.push_back(z.segment(lay.u(l), lay.nu));
  if (lay.nw > 0) {
    for (int l = 0; l <= spec.horizon; ++l) traj.couplings.push_back(z.segment(lay.w(l), lay.nw));
    if (lay.has_delta) {
      for (int l = 0; l < spec.horizon; ++l) {
        traj.coupling_increments.push_back(z.segment(lay.dl(l), lay.nw));
      }
    }
  }
  for (int l = 0; l < spec.horizon; ++l) {
    VectorXd s = VectorXd::Zero(lay.n_rows);
    for (int r = 0; r < lay.n_rows; ++r) {
      if (lay.soft_index[r] >= 0) s(r) = std::max(0.0, z(lay.s(l, lay.soft_index[r])));
    }
    traj.constraint_slacks.push_back(s);
  }
  VectorXd st = VectorXd::Zero(lay.terminal_rows.size());
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    if (lay.terminal_soft[k] >= 0) st(k) = std::max(0.0, z(lay.st(lay.terminal_soft[k])));
  }
  traj.constraint_slacks.push_back(st);
  return traj;
}

// Initial iterate: zero controls rolled through the dynamics, couplings held
// at their pinned value (or zero in plain mode), minimal feasible slacks.
Trajectory cold_start(const OcpSpec& spec, const Layout& lay) {
  Trajectory traj;
  traj.states.push_back(spec.initial_state);
  for (int l = 0; l < spec.horizon; ++l) {
    traj.controls.push_back(VectorXd::Zero(lay.nu));
    traj.states.push_back(spec.dynamics->step(traj.states.back(), traj.controls.back()));
  }
  if (lay.nw > 0) {
    const VectorXd w0 =
        spec.increment_mode ? spec.initial_coupling : VectorXd::Zero(lay.nw).eval();
    for (int l = 0; l <= spec.horizon; ++l) traj.couplings.push_back(w0);
    if (lay.has_delta) {
      for (int l = 0; l < spec.horizon; ++l) {
        traj.coupling_increments.push_back(VectorXd::Zero(lay.nw));
      }
    }
  }
  for (int l = 0; l < spec.horizon; ++l) {
    VectorXd s = VectorXd::Zero(lay.n_rows);
    for (int r = 0; r < lay.n_rows; ++r) {
      const IneqRow& row = spec.rows[r];
      const double v = row.cx.dot(traj.states[l]) + row.cu.dot(traj.controls[l]) - row.rhs;
      if (lay.soft_index[r] >= 0) s(r) = std::max(0.0, v);
    }
    traj.constraint_slacks.push_back(s);
  }
  VectorXd st = VectorXd::Zero(lay.terminal_rows.size());
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    const IneqRow& row = spec.rows[lay.terminal_rows[k]];
    if (lay.terminal_soft[k] >= 0) {
      st(k) = std::max(0.0, row.cx.dot(traj.states[spec.horizon]) - row.rhs);
    }
  }
  traj.constraint_slacks.push_back(st);
  return traj;
}

struct QpSolution {
  VectorXd z;
  VectorXd eq_mult;
  VectorXd in_mult;  // full-length, zero for inactive rows
  std::vector<int> active;
};

/// Primal active-set method: the iterate stays feasible, equality-constrained
/// subproblems (sparse LU on the KKT system) produce full steps, blocking
/// rows join the working set at their contact point, and rows with negative
/// multipliers leave it. Working-set independence is preserved because a
/// dependent row is orthogonal to every null-space step and so never blocks.
/// `mult_scale` carries each row's natural multiplier magnitude so the drop
/// tolerance is scale-aware (slack-penalty rows reach the penalty weight).
QpSolution solve_qp(const QpData& qp, const VectorXd& start, const VectorXd& mult_scale,
                    std::vector<int> active) {
  const int nvar = static_cast<int>(qp.grad.size());
  const int neq = static_cast<int>(qp.b_eq.size());
  const int nin = static_cast<int>(qp.b_in.size());

  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  std::erase_if(active, [&](int r) { return r < 0 || r >= nin; });
  // Start from working-set rows that are actually active at the start point.
  VectorXd x = start;
  {
    const VectorXd resid = qp.a_in * x - qp.b_in;
    std::erase_if(active, [&](int r) { return resid(r) < -1e-10; });
  }

  const int max_iter = 3 * nin + 60;
  for (int iter = 0; iter < max_iter; ++iter) {
    const int nact = static_cast<int>(active.size());
    const int dim = nvar + neq + nact;
    Triplets t;
    for (int k = 0; k < qp.hess.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(qp.hess, k); it; ++it) {
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    for (int r = 0; r < neq; ++r) {
      for (RowMat::InnerIterator it(qp.a_eq, r); it; ++it) {
        t.emplace_back(nvar + r, static_cast<int>(it.col()), it.value());
        t.emplace_back(static_cast<int>(it.col()), nvar + r, it.value());
      }
    }
    for (int a = 0; a < nact; ++a) {
      for (RowMat::InnerIterator it(qp.a_in, active[a]); it; ++it) {
        t.emplace_back(nvar + neq + a, static_cast<int>(it.col()), it.value());
        t.emplace_back(static_cast<int>(it.col()), nvar + neq + a, it.value());
      }
    }
    SparseMat kkt(dim, dim);
    kkt.setFromTriplets(t.begin(), t.end());

    VectorXd rhs(dim);
    rhs.head(nvar) = -qp.grad;
    rhs.segment(nvar, neq) = qp.b_eq;
    for (int a = 0; a < nact; ++a) rhs(nvar + neq + a) = qp.b_in(active[a]);

    Eigen::SparseLU<SparseMat> lu(kkt);
    if (lu.info() != Eigen::Success) {
      throw ConvergenceError("solve_qp: singular working-set system (infeasible constraints?)");
    }
    const VectorXd sol = lu.solve(rhs);
    const VectorXd target = sol.head(nvar);

    if (neq > 0 && (qp.a_eq * target - qp.b_eq).lpNorm<Eigen::Infinity>() > 1e-6) {
      throw std::invalid_argument("solve_qp: infeasible equality structure");
    }

    const VectorXd step = target - x;
    const double step_norm = step.lpNorm<Eigen::Infinity>();

    if (step_norm <= 1e-11 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      // At the working-set optimum: drop the most negative multiplier.
      int drop = -1;
      double worst_ratio = -1e-9;
      for (int a = 0; a < nact; ++a) {
        const double ratio = sol(nvar + neq + a) / mult_scale(active[a]);
        if (ratio < worst_ratio) {
          worst_ratio = ratio;
          drop = a;
        }
      }
      if (drop < 0) {
        QpSolution out;
        out.z = target;
        out.eq_mult = sol.segment(nvar, neq);
        out.in_mult = VectorXd::Zero(nin);
        for (int a = 0; a < nact; ++a) out.in_mult(active[a]) = sol(nvar + neq + a);
        out.active = active;
        return out;
      }
      active.erase(active.begin() + drop);
      continue;
    }

    // Step toward the subproblem optimum until a blocking row bites.
    const VectorXd direction_effect = qp.a_in * step;
    const VectorXd slack = qp.b_in - qp.a_in * x;
    double alpha = 1.0;
    int blocking = -1;
    std::vector<bool> in_active(nin, false);
    for (int r : active) in_active[r] = true;
    for (int r = 0; r < nin; ++r) {
      if (in_active[r] || direction_effect(r) <= 1e-12) continue;
      const double ratio = slack(r) / direction_effect(r);
      if (ratio < alpha) {
        alpha = std::max(0.0, ratio);
        blocking = r;
      }
    }
    x += alpha * step;
    if (blocking >= 0) active.push_back(blocking);
  }
  throw ConvergenceError("solve_qp: active-set iteration limit reached");
}

double dynamics_violation(const OcpSpec& spec, const Trajectory& traj) {
  double total = 0.0;
  for (int l = 0; l < spec.horizon; ++l) {
    total += (traj.states[l + 1] - spec.dynamics->step(traj.states[l], traj.controls[l]))
                 .lpNorm<1>();
  }
  return total;
}

// Infinity-norm KKT residual of the nonlinear program at `z` with the last
// QP multipliers: stationarity, equality feasibility, complementarity.
double kkt_residual(const OcpSpec& spec, const Layout& lay, const QpData& qp,
                    const Trajectory& traj, const VectorXd& z, const QpSolution& sol) {
  QpData fresh;  // equality Jacobian re-linearized at the solution
  assemble_equalities(spec, lay, traj, fresh);
  VectorXd stationarity = qp.hess * z + qp.grad;
  stationarity += fresh.a_eq.transpose() * sol.eq_mult;
  stationarity += qp.a_in.transpose() * sol.in_mult;
  double resid = stationarity.lpNorm<Eigen::Infinity>();

  resid = std::max(resid, dynamics_violation(spec, traj));
  VectorXd lin_eq = fresh.a_eq * z - fresh.b_eq;
  resid = std::max(resid, lin_eq.lpNorm<Eigen::Infinity>());

  const VectorXd slack = qp.a_in * z - qp.b_in;
  for (int r = 0; r < slack.size(); ++r) {
    resid = std::max(resid, std::abs(sol.in_mult(r) * slack(r)));
    resid = std::max(resid, slack(r));  // primal inequality feasibility
  }
  return resid;
}

}  // namespace

void OcpSpec::check() const {
  if (!dynamics) throw std::invalid_argument("OcpSpec: missing dynamics model");
  if (horizon < 1) throw std::invalid_argument("OcpSpec: horizon must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw std::invalid_argument("OcpSpec: discount must lie in (0, 1]");
  }
  const int nx = state_dim();
  const int nu = control_dim();
  if (initial_state.size() != nx || state_weight.size() != nx || state_ref.size() != nx ||
      control_weight.size() != nu) {
    throw std::invalid_argument("OcpSpec: cost/state vector sizes inconsistent");
  }
  if (coupling_weight > 0.0) {
    if (coupling_Sx.cols() != nx || coupling_Sx.rows() != coupling_offset.size() ||
        coupling_Sw.rows() != coupling_Sx.rows() || coupling_Sw.cols() != coupling_dim) {
      throw std::invalid_argument("OcpSpec: coupling selector sizes inconsistent");
    }
  }
  if (increment_mode) {
    if (coupling_dim <= 0 || initial_coupling.size() != coupling_dim) {
      throw std::invalid_argument("OcpSpec: increment mode needs a pinned initial coupling");
    }
    if (!(delta_weight > 0.0)) {
      throw std::invalid_argument("OcpSpec: delta_weight must be > 0");
    }
  }
  if (!dual_x.empty() && static_cast<int>(dual_x.size()) != horizon + 1) {
    throw std::invalid_argument("OcpSpec: dual_x must have horizon + 1 entries");
  }
  if (!dual_w.empty() && static_cast<int>(dual_w.size()) != horizon + 1) {
    throw std::invalid_argument("OcpSpec: dual_w must have horizon + 1 entries");
  }
  for (const IneqRow& row : rows) {
    if (row.cx.size() != nx || row.cu.size() != nu) {
      throw std::invalid_argument("OcpSpec: inequality row sizes inconsistent");
    }
    if (soft(row) && (row.slack_weight <= 0.0 || row.slack_weight_terminal <= 0.0)) {
      throw std::invalid_argument("OcpSpec: slack penalties must be positive");
    }
  }
}

Trajectory solve_ocp(const OcpSpec& spec, const SolveOptions& opts) {
  spec.check();
  const Layout lay(spec);

  Trajectory current = opts.warm_start ? *opts.warm_start : cold_start(spec, lay);
  std::vector<int> active =
      opts.warm_start ? opts.warm_start->active_set : std::vector<int>{};

  QpData qp;
  Triplets hess_triplets;
  assemble_cost(spec, lay, hess_triplets, qp.grad);
  qp.hess.resize(lay.nvar, lay.nvar);
  qp.hess.setFromTriplets(hess_triplets.begin(), hess_triplets.end());
  assemble_inequalities(spec, lay, qp);

  const bool one_shot = spec.dynamics->is_linear() && !opts.force_sqp_path;
  QpSolution sol;
  VectorXd z;
  int iterations = 0;
  double step_norm = 0.0;

  for (int it = 0; it < opts.max_sqp_iterations; ++it) {
    iterations = it + 1;
    assemble_equalities(spec, lay, current, qp);
    sol = solve_qp(qp, feasible_start(spec, lay, current), qp.mult_scale, active);
    active = sol.active;

    if (one_shot) {
      z = sol.z;
      current = unpack(spec, lay, z);
      break;
    }

    const VectorXd z_cur = pack(spec, lay, current);
    const VectorXd direction = sol.z - z_cur;
    step_norm = direction.lpNorm<Eigen::Infinity>();
    if (step_norm < 1e-9) {
      z = sol.z;
      current = unpack(spec, lay, z);
      break;
    }

    auto merit = [&](const VectorXd& v) {
      const Trajectory t = unpack(spec, lay, v);
      return evaluate_cost(spec, t) + opts.merit_violation_weight * dynamics_violation(spec, t);
    };
    const double base = merit(z_cur);
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 12; ++half) {
      const VectorXd candidate = z_cur + step * direction;
      if (merit(candidate) < base - 1e-12) {
        current = unpack(spec, lay, candidate);
        z = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No merit progress: the iterate is as good as the model allows.
      z = z_cur;
      break;
    }
  }

  if (z.size() == 0) z = pack(spec, lay, current);
  current.kkt_residual = kkt_residual(spec, lay, qp, current, z, sol);
  current.sqp_iterations = iterations;
  current.active_set = active;
  if (current.kkt_residual > opts.kkt_tol) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "solve_ocp: iteration limit with KKT residual %.3e (tol %.1e)",
                  current.kkt_residual, opts.kkt_tol);
    throw ConvergenceError(msg);
  }
  current.objective_value = evaluate_cost(spec, current);
  return current;
}

double evaluate_cost(const OcpSpec& spec, const Trajectory& traj) {
  const int N = spec.horizon;
  const int nx = spec.state_dim();
  const int nu = spec.control_dim();
  if (static_cast<int>(traj.states.size()) != N + 1 ||
      static_cast<int>(traj.controls.size()) != N) {
    throw std::invalid_argument("evaluate_cost: trajectory length mismatch");
  }
  for (const VectorXd& x : traj.states) {
    if (x.size() != nx) throw std::invalid_argument("evaluate_cost: state dimension mismatch");
  }
  for (const VectorXd& u : traj.controls) {
    if (u.size() != nu) throw std::invalid_argument("evaluate_cost: control dimension mismatch");
  }
  const bool has_w = spec.coupling_dim > 0;
  if (has_w && static_cast<int>(traj.couplings.size()) != N + 1) {
    throw std::invalid_argument("evaluate_cost: coupling trajectory missing");
  }
  const bool has_coupling_cost = spec.coupling_weight > 0.0 && spec.coupling_offset.size() > 0;

  auto stage_quad = [&](int l) {
    const VectorXd dx = traj.states[l] - spec.state_ref;
    double c = dx.dot(spec.state_weight.asDiagonal() * dx);
    if (has_coupling_cost) {
      VectorXd resid = spec.coupling_Sx * traj.states[l] - spec.coupling_offset;
      if (has_w) resid -= spec.coupling_Sw * traj.couplings[l];
      c += spec.coupling_weight * resid.squaredNorm();
    }
    if (!spec.dual_x.empty()) c += spec.dual_x[l].dot(traj.states[l]);
    if (has_w && !spec.dual_w.empty()) c += spec.dual_w[l].dot(traj.couplings[l]);
    return c;
  };

  double total = 0.0;
  double gamma = 1.0;
  for (int l = 0; l < N; ++l) {
    double c = stage_quad(l);
    c += traj.controls[l].dot(spec.control_weight.asDiagonal() * traj.controls[l]);
    if (!traj.coupling_increments.empty()) {
      c += spec.delta_weight * traj.coupling_increments[l].squaredNorm();
    }
    if (!traj.constraint_slacks.empty()) {
      for (size_t r = 0; r < spec.rows.size(); ++r) {
        if (soft(spec.rows[r])) c += spec.rows[r].slack_weight * traj.constraint_slacks[l](r);
      }
    }
    total += gamma * c;
    gamma *= spec.discount;
  }
  double terminal = stage_quad(N);
  if (!traj.constraint_slacks.empty()) {
    int k = 0;
    for (size_t r = 0; r < spec.rows.size(); ++r) {
      if (!spec.rows[r].applies_terminal) continue;
      if (soft(spec.rows[r])) {
        terminal += spec.rows[r].slack_weight_terminal * traj.constraint_slacks[N](k);
      }
      ++k;
    }
  }
  return total + gamma * terminal;
}

Trajectory shift_warm_start(const OcpSpec& spec, const Trajectory& traj) {
  const Layout lay(spec);
  const int N = spec.horizon;
  Trajectory shifted = traj;
  for (int l = 0; l < N; ++l) shifted.states[l] = traj.states[l + 1];
  for (int l = 0; l + 1 < N; ++l) shifted.controls[l] = traj.controls[l + 1];
  if (!traj.couplings.empty()) {
    for (int l = 0; l < N; ++l) shifted.couplings[l] = traj.couplings[l + 1];
  }
  if (!traj.coupling_increments.empty()) {
    for (int l = 0; l + 1 < N; ++l) shifted.coupling_increments[l] = traj.coupling_increments[l + 1];
  }
  for (int l = 0; l + 1 < N; ++l) shifted.constraint_slacks[l] = traj.constraint_slacks[l + 1];

  // Stage inequality blocks move down one stage; stage-0 actives drop out,
  // the terminal block stays in place.
  int stage_block = 0;
  for (int r = 0; r < lay.n_rows; ++r) stage_block += 1 + (lay.soft_index[r] >= 0 ? 1 : 0);
  shifted.active_set.clear();
  for (int a : traj.active_set) {
    if (a >= stage_block && a < N * stage_block) {
      shifted.active_set.push_back(a - stage_block);
    } else if (a >= N * stage_block) {
      shifted.active_set.push_back(a);
    }
  }
  return shifted;
}

Trajectory resimulate(const OcpSpec& spec, const Trajectory& base,
                      const std::vector<VectorXd>& controls) {
  if (static_cast<int>(controls.size()) != spec.horizon) {
    throw std::invalid_argument("resimulate: control count mismatch");
  }
  Trajectory traj = base;
  traj.controls = controls;
  traj.states.assign(1, spec.initial_state);
  for (int l = 0; l < spec.horizon; ++l) {
    traj.states.push_back(spec.dynamics->step(traj.states.back(), controls[l]));
  }
  const Layout lay(spec);
  for (int l = 0; l < spec.horizon; ++l) {
    for (int r = 0; r < lay.n_rows; ++r) {
      if (lay.soft_index[r] < 0) continue;
      const IneqRow& row = spec.rows[r];
      traj.constraint_slacks[l](r) =
          std::max(0.0, row.cx.dot(traj.states[l]) + row.cu.dot(traj.controls[l]) - row.rhs);
    }
  }
  for (size_t k = 0; k < lay.terminal_rows.size(); ++k) {
    if (lay.terminal_soft[k] < 0) continue;
    const IneqRow& row = spec.rows[lay.terminal_rows[k]];
    traj.constraint_slacks[spec.horizon](k) =
        std::max(0.0, row.cx.dot(traj.states[spec.horizon]) - row.rhs);
  }
  traj.objective_value = evaluate_cost(spec, traj);
  return traj;
}

}  // namespace mabo::ocp
