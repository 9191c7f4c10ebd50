#ifndef RDLMPC_ENGINE_HPP_
#define RDLMPC_ENGINE_HPP_

#include <chrono>
#include <vector>

#include "rdlmpc/admm.hpp"

namespace rdlmpc {

struct AdmmSolveResult {
  AdmmReport report;
  Vector u0;
  double objective = 0.0;
  std::vector<double> node_solve_seconds;  // per subsystem, this solve
};

//! Centralized execution of the per-subsystem ADMM iteration: every row and
//! column subproblem is solved in subsystem order within one process, and
//! consensus fragments move through the same exchange plans the
//! message-passing simulator uses. Global reductions sum in ascending
//! subsystem order, which pins the floating-point result bit-for-bit.
class MonolithicAdmmSolver {
 public:
  MonolithicAdmmSolver(const LocalProblems& problems, AdmmParams params)
      : problems_(&problems), params_(params), tree_(problems.model().graph()) {
    params_.validate();
    const int ns = problems.model().n_subsystems();
    row_states_.resize(ns);
    col_states_.resize(ns);
    row_targets_.resize(ns);
    prev_targets_.resize(ns);
    col_targets_.resize(ns);
    reset_states();
  }

  void reset_states() {
    const int ns = problems_->model().n_subsystems();
    for (int i = 0; i < ns; ++i) {
      row_states_[i].reset(problems_->row_problem(i));
      col_states_[i].reset(problems_->col_problem(i));
      row_targets_[i].reset(problems_->row_problem(i));
      prev_targets_[i].reset(problems_->row_problem(i));
      col_targets_[i].reset(problems_->col_problem(i));
    }
    rho_.assign(ns, params_.rho0);
  }

  AdmmSolveResult solve(const Vector& x0, bool warm_start = false) {
    const int ns = problems_->model().n_subsystems();
    if (!warm_start) reset_states();
    if (warm_start)
      for (int i = 0; i < ns; ++i) rho_[i] = params_.rho0;

    std::vector<Vector> x0_local(ns);
    for (int i = 0; i < ns; ++i) {
      const auto& coords = problems_->x0_coords(i);
      x0_local[i] = Vector(coords.size());
      for (size_t k = 0; k < coords.size(); ++k)
        x0_local[i][k] = x0[coords[k]];
    }

    AdmmSolveResult out;
    out.node_solve_seconds.assign(ns, 0.0);
    AdmmReport& rep = out.report;

    std::vector<double> scale_p(ns), scale_d(ns);
    for (int i = 0; i < ns; ++i) {
      const double c = params_.scale_eps_by_sqrt_count
                           ? std::sqrt(static_cast<double>(std::max<Index>(
                                 1, problems_->row_problem(i).variable_count())))
                           : 1.0;
      scale_p[i] = params_.eps_p * c;
      scale_d[i] = params_.eps_d * c;
    }

    std::vector<double> buf;
    int iter = 0;
    for (; iter < params_.max_iters; ++iter) {
      // Step 3: local row solves.
      for (int i = 0; i < ns; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        update_rows(problems_->row_problem(i), row_targets_[i], x0_local[i],
                    rho_[i], params_, problems_->robust(), row_states_[i]);
        out.node_solve_seconds[i] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
      }

      // Step 4: share row blocks, assemble column views.
      for (int i = 0; i < ns; ++i) {
        const Vector scratch = make_scratch(i);
        for (const auto& plan : problems_->row_to_col_plans(i)) {
          pack_row_fragments(plan, scratch, buf);
          scatter_row_fragments(plan, buf, col_targets_[plan.to]);
        }
      }

      // Step 5: closed-form column solves.
      for (int j = 0; j < ns; ++j) {
        const auto t0 = std::chrono::steady_clock::now();
        update_columns(problems_->col_problem(j), col_targets_[j],
                       col_states_[j]);
        out.node_solve_seconds[j] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
      }

      // Step 6: share column blocks, assemble row views.
      for (int i = 0; i < ns; ++i) prev_targets_[i] = row_targets_[i];
      for (int j = 0; j < ns; ++j)
        for (const auto& plan : problems_->col_to_row_plans(j)) {
          pack_col_fragments(plan, col_states_[j], buf);
          scatter_col_fragments(plan, buf, row_targets_[plan.to]);
        }

      // Step 7: multiplier update.
      for (int i = 0; i < ns; ++i)
        update_multipliers(row_states_[i], row_targets_[i]);

      // Step 8: convergence test and penalty adaptation. Global norms are
      // accumulated along the reduction tree, in the same order the
      // simulator uses.
      bool all_within = true;
      std::vector<double> rp_sq(ns), rd_sq(ns);
      for (int i = 0; i < ns; ++i) {
        rp_sq[i] = local_primal_sq(row_states_[i], row_targets_[i]);
        rd_sq[i] = local_dual_sq(row_targets_[i], prev_targets_[i]);
        if (std::sqrt(rp_sq[i]) > scale_p[i] ||
            std::sqrt(rd_sq[i]) > scale_d[i])
          all_within = false;
      }
      const double r_norm = std::sqrt(tree_.sum(rp_sq));
      const double s_norm = rho_[0] * std::sqrt(tree_.sum(rd_sq));
      if (params_.record_trace)
        rep.trace.push_back({iter, rho_[0], r_norm, s_norm});
      rep.primal_residual = r_norm;
      rep.dual_residual = s_norm;
      if (all_within) {
        rep.converged = true;
        ++iter;
        break;
      }
      if (params_.per_subsystem_rho) {
        for (int i = 0; i < ns; ++i)
          rho_[i] = penalty_update(rho_[i], std::sqrt(rp_sq[i]),
                                   rho_[i] * std::sqrt(rd_sq[i]), params_,
                                   iter);
      } else {
        const double next = penalty_update(rho_[0], r_norm, s_norm, params_, iter);
        rho_.assign(ns, next);
      }
    }
    rep.iterations = iter;

    std::vector<double> objs(ns);
    for (int i = 0; i < ns; ++i)
      objs[i] = local_objective(problems_->row_problem(i), row_states_[i],
                                x0_local[i]);
    rep.objective = tree_.sum(objs);
    out.objective = rep.objective;
    out.u0 = assemble_u0(x0_local);
    return out;
  }

  //! First control action, per Algorithm step 8, from the row iterates.
  Vector assemble_u0(const std::vector<Vector>& x0_local) const {
    const SystemModel& model = problems_->model();
    const auto& lay = problems_->mask().layout();
    Vector u0 = Vector::Zero(model.total_input_dim());
    for (int i = 0; i < model.n_subsystems(); ++i) {
      const RowProblem& rp = problems_->row_problem(i);
      for (Index pr : rp.u0_rows) {
        const auto& spec = rp.phi_rows[pr];
        const auto& pos = rp.support_pos(spec.input_kind);
        double s = 0.0;
        for (Index k = 0; k < spec.size; ++k)
          s += row_states_[i].phi[spec.offset + k] * x0_local[i][pos[k]];
        u0[lay.coord_of_row(spec.joint_row)] = s;
      }
    }
    return u0;
  }

  //! Dense response assembled from the column iterates (the achievable copy).
  SystemResponse assemble_response() const {
    const auto& lay = problems_->mask().layout();
    SystemResponse resp(lay);
    const int ns = problems_->model().n_subsystems();
    for (int j = 0; j < ns; ++j) {
      const ColProblem& cp = problems_->col_problem(j);
      for (size_t b = 0; b < cp.blocks.size(); ++b) {
        const auto& blk = cp.blocks[b];
        for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
          for (Index c = 0; c < blk.n_cols; ++c) {
            const Index col = lay.w_col(
                blk.t_block, problems_->model().state_offset(j) + c);
            const Index r = blk.var_rows[vr];
            if (lay.is_u_row(r))
              resp.phi_u(r - lay.x_rows(), col) =
                  col_states_[j].psi[b](static_cast<Index>(vr), c);
            else
              resp.phi_x(r, col) = col_states_[j].psi[b](static_cast<Index>(vr), c);
          }
      }
    }
    return resp;
  }

  //! Dense certificate assembled from the row iterates.
  Matrix assemble_xi() const {
    const auto& cons = constraints();
    Matrix xi = Matrix::Zero(cons.n_h_rows(), cons.n_g_rows());
    const int ns = problems_->model().n_subsystems();
    for (int i = 0; i < ns; ++i) {
      const RowProblem& rp = problems_->row_problem(i);
      for (const auto& cs : rp.cons_rows)
        for (Index k = 0; k < cs.xi_size; ++k)
          xi(cs.h_row, cs.g_rows[k]) = row_states_[i].xi[cs.xi_offset + k];
    }
    return xi;
  }

  //! Dense first block column assembled from the row iterates.
  Matrix assemble_first_column() const {
    const auto& lay = problems_->mask().layout();
    Matrix first = Matrix::Zero(lay.joint_rows(), lay.n);
    const int ns = problems_->model().n_subsystems();
    for (int i = 0; i < ns; ++i) {
      const RowProblem& rp = problems_->row_problem(i);
      for (const auto& spec : rp.phi_rows) {
        const auto& pos = rp.support_pos(spec.input_kind);
        for (Index k = 0; k < spec.size; ++k)
          first(spec.joint_row, rp.x0_coords[pos[k]]) =
              row_states_[i].phi[spec.offset + k];
      }
    }
    return first;
  }

  const LocalProblems& problems() const { return *problems_; }
  const RowState& row_state(int i) const { return row_states_[i]; }
  const ColState& col_state(int i) const { return col_states_[i]; }
  double rho(int i = 0) const { return rho_[i]; }

 private:
  const RobustConstraintData& constraints() const {
    return problems_->constraints();
  }

  Vector make_scratch(int i) const {
    const RowProblem& rp = problems_->row_problem(i);
    const RowState& st = row_states_[i];
    Vector scratch(rp.scratch_len());
    scratch.head(rp.phi_len) = st.phi + st.lam1;
    if (rp.omega_len > 0)
      scratch.segment(rp.phi_len, rp.omega_len) = st.omega + st.lam2;
    if (rp.xig_len > 0)
      scratch.tail(rp.xig_len) = st.xig + st.lam3;
    return scratch;
  }

  const LocalProblems* problems_;
  AdmmParams params_;
  std::vector<RowState> row_states_;
  std::vector<ColState> col_states_;
  std::vector<RowTargets> row_targets_, prev_targets_;
  std::vector<ColTargets> col_targets_;
  std::vector<double> rho_;
  ReductionTree tree_;
};

}  // namespace rdlmpc

#endif  // RDLMPC_ENGINE_HPP_
