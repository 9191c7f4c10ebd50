#ifndef RDLMPC_ADMM_HPP_
#define RDLMPC_ADMM_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "rdlmpc/local_problems.hpp"
#include "rdlmpc/response.hpp"

namespace rdlmpc {

//! Varying-penalty ADMM parameters. Defaults follow the chain benchmark:
//! tau = 1.5, mu1 = mu2 = 10, rho_max = 5.
struct AdmmParams {
  double rho0 = 1.0;
  double tau = 1.5;
  double mu1 = 10.0;
  double mu2 = 10.0;
  double rho_max = 5.0;
  double eps_p = 1e-3;
  double eps_d = 1e-3;
  int max_iters = 5000;
  int freeze_after = 200;  // hold rho constant from this iteration on
  bool scale_eps_by_sqrt_count = true;
  bool per_subsystem_rho = false;  // adapt rho from local residuals instead
  bool use_fast_row_path = true;
  double row_regularization = 1e-9;
  bool record_trace = false;

  void validate() const {
    require(tau > 0 && mu1 > 0 && mu2 > 0, "tau, mu1, mu2 must be positive");
    require(eps_p > 0 && eps_d > 0, "tolerances must be positive");
    require(rho0 > 0 && rho_max > 0, "penalties must be positive");
    require(max_iters >= 1, "max_iters must be >= 1");
  }
};

//! One penalty adaptation step: grow when the primal residual dominates,
//! shrink when the dual residual dominates, freeze at min(rho, rho_max) once
//! the iteration budget for adaptation is spent.
inline double penalty_update(double rho, double r_norm, double s_norm,
                             const AdmmParams& params, int iter) {
  require(r_norm >= 0 && s_norm >= 0, "residual norms must be nonnegative");
  if (iter >= params.freeze_after) return std::min(rho, params.rho_max);
  if (r_norm > params.mu1 * s_norm) return rho * params.tau;
  if (s_norm > params.mu2 * r_norm) return rho / params.tau;
  return rho;
}

struct IterationRecord {
  int iteration = 0;
  double rho = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

//! BFS spanning tree over the communication graph, rooted at subsystem 0.
//! Global scalars are aggregated bottom-up along this tree; both the
//! centralized engine and the message-passing simulator use the same
//! accumulation order, which keeps their floating-point results identical.
struct ReductionTree {
  std::vector<int> parent;                 // -1 for the root
  std::vector<std::vector<int>> children;  // ascending ids
  std::vector<int> bottom_up;              // leaves first

  explicit ReductionTree(const InterconnectionGraph& graph) {
    const int n = graph.size();
    parent.assign(n, -1);
    children.resize(n);
    std::vector<int> order{0};
    std::vector<bool> seen(n, false);
    seen[0] = true;
    for (size_t k = 0; k < order.size(); ++k) {
      const int v = order[k];
      // undirected view of the interconnection
      for (int w = 0; w < n; ++w) {
        if (seen[w]) continue;
        const int dvw = graph.distance(v, w), dwv = graph.distance(w, v);
        if (dvw == 1 || dwv == 1) {
          seen[w] = true;
          parent[w] = v;
          children[v].push_back(w);
          order.push_back(w);
        }
      }
    }
    require(static_cast<int>(order.size()) == n,
            "communication graph must be connected");
    bottom_up.assign(order.rbegin(), order.rend());
  }

  //! Sum of per-node values accumulated bottom-up (children in ascending
  //! order, then the node's own value).
  double sum(const std::vector<double>& values) const {
    std::vector<double> acc(values.size(), 0.0);
    for (int v : bottom_up) {
      double s = 0.0;
      for (int c : children[v]) s += acc[c];
      acc[v] = s + values[v];
    }
    return acc[0];
  }
};

struct AdmmReport {
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  std::vector<IterationRecord> trace;
};

namespace detail {

//! Closed-form minimizer of w (phi.x)^2 + (rho/2)||phi - t||^2.
inline void prox_phi_row(const Vector& x, double weight, double rho,
                         const Vector& target, Eigen::Ref<Vector> out) {
  if (weight == 0.0) {
    out = target;
    return;
  }
  const double denom = rho + 2.0 * weight * x.squaredNorm();
  out = target - x * (2.0 * weight * x.dot(target) / denom);
}

//! Exact solve of the box-structured constraint-row subproblem
//!   min (rho/2)||omega - a||^2 + (rho/2)||y - b||^2
//!   s.t. omega.x0 + sum_c (gp_c [y_c]+ + gm_c [y_c]-) <= h
//! by a piecewise-linear search over the scalar multiplier. y is the
//! difference of the paired +/- certificate entries.
struct BoxRowResult {
  Vector omega, y;
};

inline BoxRowResult solve_box_cons_row(const Vector& x0, const Vector& a,
                                       const Vector& b, const Vector& gp,
                                       const Vector& gm, double h,
                                       double rho) {
  const auto eval = [&](double lam, Vector& omega, Vector& y) {
    omega = a - (lam / rho) * x0;
    for (Index c = 0; c < b.size(); ++c) {
      const double up = b[c] - lam * gp[c] / rho;
      const double dn = b[c] + lam * gm[c] / rho;
      y[c] = up > 0.0 ? up : (dn < 0.0 ? dn : 0.0);
    }
    double val = omega.dot(x0) - h;
    for (Index c = 0; c < y.size(); ++c)
      val += gp[c] * std::max(y[c], 0.0) + gm[c] * std::max(-y[c], 0.0);
    return val;
  };

  BoxRowResult res;
  res.omega = Vector(a.size());
  res.y = Vector(b.size());
  if (eval(0.0, res.omega, res.y) <= 0.0) return res;

  std::vector<double> brk{0.0};
  for (Index c = 0; c < b.size(); ++c) {
    if (b[c] > 0.0 && gp[c] > 0.0) brk.push_back(rho * b[c] / gp[c]);
    if (b[c] < 0.0 && gm[c] > 0.0) brk.push_back(-rho * b[c] / gm[c]);
  }
  std::sort(brk.begin(), brk.end());

  Vector om_tmp(a.size()), y_tmp(b.size());
  // Find the segment where the (piecewise linear, nonincreasing) constraint
  // value changes sign, then solve linearly inside it.
  double lo = 0.0, f_lo = eval(0.0, om_tmp, y_tmp);
  double hi = -1.0, f_hi = 0.0;
  for (size_t k = 1; k < brk.size(); ++k) {
    const double f = eval(brk[k], om_tmp, y_tmp);
    if (f <= 0.0) {
      hi = brk[k];
      f_hi = f;
      break;
    }
    lo = brk[k];
    f_lo = f;
  }
  double lam;
  if (hi < 0.0) {
    // Beyond the last breakpoint every y is inactive; the slope is from
    // omega only. h >= 0 guarantees a root unless x0 vanishes locally.
    const double slope = -x0.squaredNorm() / rho;
    lam = slope < 0.0 ? lo - f_lo / slope : lo;
  } else if (f_hi == f_lo) {
    lam = hi;
  } else {
    lam = lo + (hi - lo) * (f_lo / (f_lo - f_hi));
  }
  eval(lam, res.omega, res.y);
  return res;
}

}  // namespace detail

//! General constraint-row subproblem through the dense QP backend.
inline void solve_general_cons_row(const ConsRowSpec& cs, const Vector& x,
                                   const Vector& a, const Vector& b,
                                   double rho, const AdmmParams& params,
                                   RowState& st) {
  const Index no = cs.omega_size;
  const Index nx = cs.xi_size;
  Matrix g_sub = Matrix::Zero(nx, cs.xig_size);
  for (Index k = 0; k < nx; ++k)
    for (auto [pos, v] : cs.g_terms[k]) g_sub(k, pos) = v;

  DenseQp qp;
  qp.Q = Matrix::Zero(no + nx, no + nx);
  qp.Q.topLeftCorner(no, no) = rho * Matrix::Identity(no, no);
  qp.Q.bottomRightCorner(nx, nx) = rho * g_sub * g_sub.transpose();
  qp.c = Vector(no + nx);
  qp.c.head(no) = -rho * a;
  qp.c.tail(nx) = -rho * g_sub * b;
  qp.A_in = Matrix::Zero(1 + nx, no + nx);
  qp.b_in = Vector(1 + nx);
  qp.A_in.row(0).head(no) = x.transpose();
  qp.A_in.row(0).tail(nx) = cs.g_rhs.transpose();
  qp.b_in[0] = cs.rhs;
  qp.A_in.bottomRightCorner(nx, nx) = -Matrix::Identity(nx, nx);
  qp.b_in.tail(nx).setZero();
  qp.A_eq = Matrix(0, no + nx);
  qp.b_eq = Vector(0);

  QpOptions opts;
  opts.regularization = params.row_regularization;
  auto res = solve_qp(qp, opts);
  if (res.status != QpStatus::Optimal)
    throw InfeasibleError("row subproblem failed on constraint row " +
                          std::to_string(cs.h_row));
  st.omega.segment(cs.omega_offset, no) = res.z.head(no);
  st.xi.segment(cs.xi_offset, nx) = res.z.tail(nx).cwiseMax(0.0);
  st.xig.segment(cs.xig_offset, cs.xig_size) =
      g_sub.transpose() * st.xi.segment(cs.xi_offset, nx);
}

//! Coupled nominal constraint group (general polytope rows): quadratic
//! program over every response row the group touches.
inline void solve_nominal_group_qp(const RowProblem& rp, const ConsRowSpec& cs,
                                   const RowTargets& tgt,
                                   const std::vector<Vector>& x_cache,
                                   double rho, const AdmmParams& params,
                                   RowState& st) {
  // Gather the involved rows (deduplicated, ascending).
  std::vector<Index> rows;
  for (auto [pr, v] : cs.nominal_terms) {
    (void)v;
    rows.push_back(pr);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  Index nv = 0;
  std::vector<Index> offs;
  for (Index pr : rows) {
    offs.push_back(nv);
    nv += rp.phi_rows[pr].size;
  }
  DenseQp qp;
  qp.Q = Matrix::Zero(nv, nv);
  qp.c = Vector::Zero(nv);
  for (size_t k = 0; k < rows.size(); ++k) {
    const auto& spec = rp.phi_rows[rows[k]];
    const Vector& x = x_cache[spec.input_kind ? 1 : 0];
    const Vector target = tgt.psi1.segment(spec.offset, spec.size) -
                          st.lam1.segment(spec.offset, spec.size);
    auto blockq = qp.Q.block(offs[k], offs[k], spec.size, spec.size);
    blockq = rho * Matrix::Identity(spec.size, spec.size) +
             2.0 * spec.weight * x * x.transpose();
    qp.c.segment(offs[k], spec.size) = -rho * target;
  }
  qp.A_in = Matrix::Zero(1, nv);
  for (auto [pr, v] : cs.nominal_terms) {
    const auto it = std::lower_bound(rows.begin(), rows.end(), pr);
    const Index k = static_cast<Index>(it - rows.begin());
    const auto& spec = rp.phi_rows[pr];
    qp.A_in.row(0).segment(offs[k], spec.size) +=
        v * x_cache[spec.input_kind ? 1 : 0].transpose();
  }
  qp.b_in = Vector::Constant(1, cs.rhs);
  qp.A_eq = Matrix(0, nv);
  qp.b_eq = Vector(0);

  // Only re-solve when the unconstrained iterate violates the row.
  Vector current(nv);
  for (size_t k = 0; k < rows.size(); ++k)
    current.segment(offs[k], rp.phi_rows[rows[k]].size) =
        st.phi.segment(rp.phi_rows[rows[k]].offset, rp.phi_rows[rows[k]].size);
  if ((qp.A_in * current - qp.b_in).maxCoeff() <= 0.0) return;

  QpOptions opts;
  opts.regularization = params.row_regularization;
  auto res = solve_qp(qp, opts);
  if (res.status != QpStatus::Optimal)
    throw InfeasibleError("nominal row group failed on constraint row " +
                          std::to_string(cs.h_row));
  for (size_t k = 0; k < rows.size(); ++k)
    st.phi.segment(rp.phi_rows[rows[k]].offset, rp.phi_rows[rows[k]].size) =
        res.z.segment(offs[k], rp.phi_rows[rows[k]].size);
}

//! Row subproblem solve for one subsystem: the stage cost plus the scaled
//! consensus penalty, subject to the robust affine constraint and the
//! nonnegativity of the certificate rows (robust mode), or to the trajectory
//! constraints evaluated on the first block column (nominal mode).
inline void update_rows(const RowProblem& rp, const RowTargets& tgt,
                        const Vector& x0_local, double rho,
                        const AdmmParams& params, bool robust, RowState& st) {
  // Response rows: unconstrained proximal step in closed form.
  std::vector<Vector> x_cache(2);
  x_cache[0] = Vector(rp.state_pos.size());
  for (size_t k = 0; k < rp.state_pos.size(); ++k)
    x_cache[0][k] = x0_local[rp.state_pos[k]];
  x_cache[1] = Vector(rp.input_pos.size());
  for (size_t k = 0; k < rp.input_pos.size(); ++k)
    x_cache[1][k] = x0_local[rp.input_pos[k]];

  for (const auto& spec : rp.phi_rows) {
    const Vector& x = x_cache[spec.input_kind ? 1 : 0];
    const Vector target = tgt.psi1.segment(spec.offset, spec.size) -
                          st.lam1.segment(spec.offset, spec.size);
    detail::prox_phi_row(x, spec.weight, rho, target,
                         st.phi.segment(spec.offset, spec.size));
  }

  if (!robust) {
    // Trajectory constraints act on the first block column directly. Box
    // rows clip the row product; general rows re-solve coupled groups.
    for (const auto& cs : rp.cons_rows) {
      if (cs.nominal_terms.size() == 1 &&
          std::abs(cs.nominal_terms[0].second) == 1.0) {
        const auto [pr, coef] = cs.nominal_terms[0];
        const auto& spec = rp.phi_rows[pr];
        const Vector& x = x_cache[spec.input_kind ? 1 : 0];
        auto seg = st.phi.segment(spec.offset, spec.size);
        const double s = coef * x.dot(seg);
        if (s <= cs.rhs) continue;
        // Pin the product to the bound: projection onto a hyperplane.
        const double sbar = coef > 0 ? cs.rhs : -cs.rhs;
        const double xsq = x.squaredNorm();
        if (xsq == 0.0) continue;
        const Vector target = tgt.psi1.segment(spec.offset, spec.size) -
                              st.lam1.segment(spec.offset, spec.size);
        // minimize w sbar^2 + (rho/2)||phi - t||^2 s.t. phi.x = sbar
        seg = target + ((sbar - x.dot(target)) / xsq) * x;
      } else if (!cs.nominal_terms.empty()) {
        solve_nominal_group_qp(rp, cs, tgt, x_cache, rho, params, st);
      }
    }
    return;
  }

  // Constraint rows: omega and xi decouple from the response rows and from
  // each other row-by-row.
  for (const auto& cs : rp.cons_rows) {
    const Vector& x = x_cache[cs.input_kind ? 1 : 0];
    const Vector a = tgt.h_psi1.segment(cs.omega_offset, cs.omega_size) -
                     st.lam2.segment(cs.omega_offset, cs.omega_size);
    const Vector b = tgt.h_psi2.segment(cs.xig_offset, cs.xig_size) -
                     st.lam3.segment(cs.xig_offset, cs.xig_size);

    if (cs.box_structure && params.use_fast_row_path) {
      Vector gp(cs.xig_size), gm(cs.xig_size);
      for (Index c = 0; c < cs.xig_size; ++c) {
        gp[c] = cs.g_rhs[cs.pm_rows[c].first];
        gm[c] = cs.g_rhs[cs.pm_rows[c].second];
      }
      auto res = detail::solve_box_cons_row(x, a, b, gp, gm, cs.rhs, rho);
      st.omega.segment(cs.omega_offset, cs.omega_size) = res.omega;
      for (Index c = 0; c < cs.xig_size; ++c) {
        st.xi[cs.xi_offset + cs.pm_rows[c].first] = std::max(res.y[c], 0.0);
        st.xi[cs.xi_offset + cs.pm_rows[c].second] = std::max(-res.y[c], 0.0);
        st.xig[cs.xig_offset + c] = res.y[c];
      }
    } else {
      solve_general_cons_row(cs, x, a, b, rho, params, st);
    }
  }
}

//! Column subproblem: closed form via the cached KKT pseudo-inverse.
inline void update_columns(const ColProblem& cp, const ColTargets& tgt,
                           ColState& st) {
  for (size_t b = 0; b < cp.blocks.size(); ++b) {
    const auto& blk = cp.blocks[b];
    const Index nv = static_cast<Index>(blk.var_rows.size());
    const Index nh = static_cast<Index>(blk.h_rows.size());
    Matrix v;
    if (blk.with_identity_part && nh > 0) {
      v.resize(nv + nh, blk.n_cols);
      v.topRows(nv) = tgt.top[b];
      v.bottomRows(nh) = tgt.bottom[b];
    } else if (blk.with_identity_part) {
      v = tgt.top[b];
    } else {
      v = tgt.bottom[b];
    }
    st.psi[b] = blk.cache.solve(v, blk.q_rhs);
  }
}

//! Multiplier step: Lambda accumulates the consensus residual, row-wise.
inline void update_multipliers(RowState& st, const RowTargets& tgt) {
  st.lam1 += st.phi - tgt.psi1;
  if (st.lam2.size() > 0) st.lam2 += st.omega - tgt.h_psi1;
  if (st.lam3.size() > 0) st.lam3 += st.xig - tgt.h_psi2;
}

//! Squared local primal residual ||Phi-tilde - H-tilde Psi-tilde||_F^2 over
//! this subsystem's rows.
inline double local_primal_sq(const RowState& st, const RowTargets& tgt) {
  double s = (st.phi - tgt.psi1).squaredNorm();
  if (st.omega.size() > 0) s += (st.omega - tgt.h_psi1).squaredNorm();
  if (st.xig.size() > 0) s += (st.xig - tgt.h_psi2).squaredNorm();
  return s;
}

//! Squared local dual movement ||targets_now - targets_prev||_F^2.
inline double local_dual_sq(const RowTargets& now, const RowTargets& prev) {
  return (now.psi1 - prev.psi1).squaredNorm() +
         (now.h_psi1 - prev.h_psi1).squaredNorm() +
         (now.h_psi2 - prev.h_psi2).squaredNorm();
}

//! Local stage cost of the first block column.
inline double local_objective(const RowProblem& rp, const RowState& st,
                              const Vector& x0_local) {
  double obj = 0.0;
  for (const auto& spec : rp.phi_rows) {
    if (spec.weight == 0.0) continue;
    const auto& pos = rp.support_pos(spec.input_kind);
    double s = 0.0;
    for (Index k = 0; k < spec.size; ++k)
      s += st.phi[spec.offset + k] * x0_local[pos[k]];
    obj += spec.weight * s * s;
  }
  return obj;
}

}  // namespace rdlmpc

#endif  // RDLMPC_ADMM_HPP_
