#include "rdlmpc/local_problems.hpp"

#include <catch_amalgamated.hpp>
#include <random>

#include "rdlmpc/admm.hpp"
#include "rdlmpc/engine.hpp"
#include "rdlmpc/oracle.hpp"
#include "support/test_oracles.hpp"

using namespace rdlmpc;

namespace {

struct Stack {
  SystemModel model;
  LocalityMask mask;
  IndexPartition partition;
  RobustConstraintData constraints;
  CostWeights cost;
  LocalProblems problems;

  Stack(SystemModel m, int d, Index T, double xb, double sigma,
        bool robust = true)
      : model(std::move(m)),
        mask(model, d, T),
        partition(partition_indices(model, mask)),
        constraints(make_constraints(model, T, xb, sigma)),
        cost(CostWeights::identity(model)),
        problems(model, mask, partition, constraints, cost, robust) {}

  static RobustConstraintData make_constraints(const SystemModel& model,
                                               Index T, double xb,
                                               double sigma) {
    auto data = build_box_constraints(
        model, T, Vector::Constant(model.total_state_dim(), -xb),
        Vector::Constant(model.total_state_dim(), xb));
    data.g_rows = build_disturbance_polytope(
        model, Vector::Constant(model.n_subsystems(), sigma), T);
    return data;
  }
};

//! Random-but-consistent row state/targets for one subsystem.
void randomize(std::mt19937_64& rng, const RowProblem& rp, RowState& st,
               RowTargets& tgt) {
  std::normal_distribution<double> dist;
  auto fill = [&](Vector& v) {
    for (Index k = 0; k < v.size(); ++k) v[k] = dist(rng);
  };
  st.reset(rp);
  tgt.psi1 = Vector(rp.phi_len);
  tgt.h_psi1 = Vector(rp.omega_len);
  tgt.h_psi2 = Vector(rp.xig_len);
  fill(tgt.psi1);
  fill(tgt.h_psi1);
  fill(tgt.h_psi2);
  fill(st.lam1);
  fill(st.lam2);
  fill(st.lam3);
}

}  // namespace

TEST_CASE("column solve is optimal among feasible responses", "[local]") {
  // Build random targets, solve columns, then verify with the central
  // machinery: the column result must satisfy achievability on its block and
  // have no better feasible competitor (checked by a QP on dense matrices).
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  const Index T = 2;
  const int d = 1;
  Stack s(model, d, T, 2.0, 1.0);
  const auto& lay = s.mask.layout();
  std::mt19937_64 rng(21);

  // Random full targets for [Phi; Omega; XiG] in dense form.
  Matrix phi_target = testing::randn(rng, lay.joint_rows(), lay.n);
  Matrix omega_target = testing::randn(rng, s.constraints.n_h_rows(), lay.n);
  Matrix xig_target =
      testing::randn(rng, s.constraints.n_h_rows(), lay.disturbance_coords());

  // Assemble column targets through the plans by faking row states.
  MonolithicAdmmSolver solver(s.problems, AdmmParams{});
  // Instead of reaching into the solver, build targets directly.
  const int ns = model.n_subsystems();
  std::vector<ColTargets> tgts(ns);
  for (int j = 0; j < ns; ++j) {
    tgts[j].reset(s.problems.col_problem(j));
    const auto& cp = s.problems.col_problem(j);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
        for (Index c = 0; c < blk.n_cols; ++c)
          if (blk.t_block == 0)
            tgts[j].top[b](static_cast<Index>(vr), c) =
                phi_target(blk.var_rows[vr], model.state_offset(j) + c);
      for (size_t hl = 0; hl < blk.h_rows.size(); ++hl)
        for (Index c = 0; c < blk.n_cols; ++c) {
          if (blk.t_block == 0)
            tgts[j].bottom[b](static_cast<Index>(hl), c) =
                omega_target(blk.h_rows[hl], model.state_offset(j) + c);
          else
            tgts[j].bottom[b](static_cast<Index>(hl), c) = xig_target(
                blk.h_rows[hl], lay.w_col(blk.t_block, model.state_offset(j) + c) -
                                    lay.n);
        }
    }
  }

  // Solve all columns, assemble dense Psi.
  Matrix psi_x = Matrix::Zero(lay.x_rows(), lay.w_cols());
  Matrix psi_u = Matrix::Zero(lay.u_rows(), lay.w_cols());
  for (int j = 0; j < ns; ++j) {
    ColState st;
    st.reset(s.problems.col_problem(j));
    update_columns(s.problems.col_problem(j), tgts[j], st);
    const auto& cp = s.problems.col_problem(j);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
        for (Index c = 0; c < blk.n_cols; ++c) {
          const Index col = lay.w_col(blk.t_block, model.state_offset(j) + c);
          const Index r = blk.var_rows[vr];
          (lay.is_u_row(r) ? psi_u(r - lay.x_rows(), col) : psi_x(r, col)) =
              st.psi[b](static_cast<Index>(vr), c);
        }
    }
  }

  // Achievability must hold exactly.
  SystemResponse resp(lay);
  resp.phi_x = psi_x;
  resp.phi_u = psi_u;
  CHECK(resp.achievability_residual(model) < 1e-8);
  CHECK(mask_compliant(psi_x, psi_u, s.mask, 1e-12));

  // Objective optimality: compare against a dense QP over all masked
  // variables of one column block.
  const Matrix h_dense = s.constraints.dense_h(model, lay);
  for (int j = 0; j < ns; ++j) {
    const auto& cp = s.problems.col_problem(j);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      const Index nv = static_cast<Index>(blk.var_rows.size());
      const Index col0 = lay.w_col(blk.t_block, model.state_offset(j));
      for (Index c = 0; c < blk.n_cols; ++c) {
        // gather this column of psi
        Vector psi_col(nv);
        for (Index vr = 0; vr < nv; ++vr) {
          const Index r = blk.var_rows[vr];
          psi_col[vr] = lay.is_u_row(r) ? psi_u(r - lay.x_rows(), col0 + c)
                                        : psi_x(r, col0 + c);
        }
        // objective pieces
        Matrix m_mat;
        Vector v;
        const Index nh = static_cast<Index>(blk.h_rows.size());
        if (blk.with_identity_part) {
          m_mat = Matrix::Zero(nv + nh, nv);
          m_mat.topRows(nv) = Matrix::Identity(nv, nv);
          if (nh > 0) m_mat.bottomRows(nh) = blk.h_sub;
          v = Vector(nv + nh);
          v.head(nv) = tgts[j].top[b].col(c);
          if (nh > 0) v.tail(nh) = tgts[j].bottom[b].col(c);
        } else {
          m_mat = blk.h_sub;
          v = tgts[j].bottom[b].col(c);
        }
        // equality constraints: all achievability rows touching the vars
        // (dense route, independent of the cached construction)
        const SparseMatrix zab = build_zab(model, lay.T);
        Matrix zab_d = Matrix(zab);
        std::vector<Index> eq_rows;
        for (Index er = 0; er < lay.x_rows(); ++er) {
          bool touched = er == col0 + c;
          for (Index vr = 0; vr < nv && !touched; ++vr)
            if (zab_d(er, blk.var_rows[vr]) != 0.0) touched = true;
          if (touched) eq_rows.push_back(er);
        }
        Matrix p_mat(eq_rows.size(), nv);
        Vector q(eq_rows.size());
        for (size_t e = 0; e < eq_rows.size(); ++e) {
          for (Index vr = 0; vr < nv; ++vr)
            p_mat(static_cast<Index>(e), vr) =
                zab_d(eq_rows[e], blk.var_rows[vr]);
          q[static_cast<Index>(e)] = eq_rows[e] == col0 + c ? 1.0 : 0.0;
        }
        DenseQp ref_qp;
        ref_qp.Q = 2.0 * m_mat.transpose() * m_mat;
        ref_qp.c = -2.0 * m_mat.transpose() * v;
        ref_qp.A_in = Matrix(0, nv);
        ref_qp.b_in = Vector(0);
        ref_qp.A_eq = p_mat;
        ref_qp.b_eq = q;
        auto ref = solve_qp(ref_qp);
        REQUIRE(ref.status == QpStatus::Optimal);
        const double obj_ref = (m_mat * ref.z - v).squaredNorm();
        const double obj_psi = (m_mat * psi_col - v).squaredNorm();
        CHECK((p_mat * psi_col - q).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(obj_psi - obj_ref) < 1e-8 * (1.0 + obj_ref));
        CHECK((psi_col - ref.z).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("zero dynamics pin the state response to the identity", "[local]") {
  SystemModel model({1, 1}, {1, 1},
                    {{0, 0, Matrix::Zero(1, 1)}},
                    {{1, 1, Matrix::Zero(1, 1)}});
  Stack s(model, 1, 2, 1.0, 0.5);
  std::mt19937_64 rng(4);
  const auto& lay = s.mask.layout();
  for (int j = 0; j < 2; ++j) {
    const auto& cp = s.problems.col_problem(j);
    ColTargets tgt;
    tgt.reset(cp);
    for (auto& m : tgt.top) m = testing::randn(rng, m.rows(), m.cols());
    for (auto& m : tgt.bottom) m = testing::randn(rng, m.rows(), m.cols());
    ColState st;
    st.reset(cp);
    update_columns(cp, tgt, st);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      for (size_t vr = 0; vr < blk.var_rows.size(); ++vr) {
        const Index r = blk.var_rows[vr];
        if (lay.is_u_row(r)) continue;
        const Index col = lay.w_col(blk.t_block, model.state_offset(j));
        const double expect = r == col ? 1.0 : 0.0;
        CHECK(std::abs(st.psi[b](static_cast<Index>(vr), 0) - expect) < 1e-9);
      }
    }
  }
}

TEST_CASE("achievable targets are reproduced exactly", "[local]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  const Index T = 2;
  Stack s(model, 1, T, 5.0, 0.5);
  const auto& lay = s.mask.layout();

  // A feasible localized response from the oracle.
  Vector x0(3);
  x0 << 0.2, -0.1, 0.3;
  auto prob = assemble_robust_problem(model, s.mask, s.constraints, x0);
  auto sol = solve_central(prob, s.cost);
  REQUIRE(sol.status == SolveStatus::Optimal);

  const Matrix h_dense = s.constraints.dense_h(model, lay);
  const Matrix joint = sol.response.joint();
  const Matrix h_joint = h_dense * joint;

  for (int j = 0; j < 3; ++j) {
    const auto& cp = s.problems.col_problem(j);
    ColTargets tgt;
    tgt.reset(cp);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
        for (Index c = 0; c < blk.n_cols; ++c)
          if (blk.t_block == 0)
            tgt.top[b](static_cast<Index>(vr), c) =
                joint(blk.var_rows[vr], model.state_offset(j) + c);
      for (size_t hl = 0; hl < blk.h_rows.size(); ++hl)
        for (Index c = 0; c < blk.n_cols; ++c)
          tgt.bottom[b](static_cast<Index>(hl), c) = h_joint(
              blk.h_rows[hl], lay.w_col(blk.t_block, model.state_offset(j) + c));
    }
    ColState st;
    st.reset(cp);
    update_columns(cp, tgt, st);
    for (size_t b = 0; b < cp.blocks.size(); ++b) {
      const auto& blk = cp.blocks[b];
      for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
        for (Index c = 0; c < blk.n_cols; ++c)
          CHECK(std::abs(
                    st.psi[b](static_cast<Index>(vr), c) -
                    joint(blk.var_rows[vr],
                          lay.w_col(blk.t_block, model.state_offset(j) + c))) <
                1e-7);
    }
  }
}

TEST_CASE("row fast path agrees with the QP backend", "[local]") {
  Stack s(make_chain_system(3, 0.8, 2.0, {1, 0, 1}), 1, 2, 1.5, 1.0);
  std::mt19937_64 rng(33);
  AdmmParams fast, slow;
  fast.use_fast_row_path = true;
  slow.use_fast_row_path = false;

  for (int trial = 0; trial < 10; ++trial) {
    for (int i = 0; i < 3; ++i) {
      const RowProblem& rp = s.problems.row_problem(i);
      RowState st_fast, st_slow;
      RowTargets tgt;
      randomize(rng, rp, st_fast, tgt);
      st_slow = st_fast;
      Vector x0_local = testing::randn(rng, rp.x0_coords.size(), 1);
      const double rho = 0.5 + trial * 0.37;
      update_rows(rp, tgt, x0_local, rho, fast, true, st_fast);
      update_rows(rp, tgt, x0_local, rho, slow, true, st_slow);
      CHECK((st_fast.phi - st_slow.phi).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((st_fast.omega - st_slow.omega).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((st_fast.xig - st_slow.xig).cwiseAbs().maxCoeff() < 1e-6);
      // constraint feasibility of both
      for (const auto& cs : rp.cons_rows) {
        const Vector& xv = x0_local;
        double lhs = 0.0;
        const auto& pos = rp.support_pos(cs.input_kind);
        for (Index k = 0; k < cs.omega_size; ++k)
          lhs += st_fast.omega[cs.omega_offset + k] * xv[pos[k]];
        for (Index k = 0; k < cs.xi_size; ++k)
          lhs += st_fast.xi[cs.xi_offset + k] * cs.g_rhs[k];
        CHECK(lhs <= cs.rhs + 1e-7);
        CHECK(st_fast.xi.segment(cs.xi_offset, cs.xi_size).minCoeff() >= 0.0);
      }
    }
  }
}

TEST_CASE("row update with zero cost is the constraint-set projection",
          "[local]") {
  SystemModel model = make_chain_system(2, 0.8, 2.0, {1, 1});
  Stack s(model, 1, 2, 1.0, 0.8);
  std::mt19937_64 rng(8);
  const RowProblem& rp = s.problems.row_problem(0);

  // Zero weights: copy the problem and zero the cost via a zero x0? The
  // weights sit in phi specs; instead exploit rho-invariance: with f = 0 the
  // minimizer is independent of rho. Emulate f = 0 by zeroing x0 (the cost
  // enters only through phi . x0) — constraint rows keep their own x0 term.
  RowState st1, st2;
  RowTargets tgt;
  randomize(rng, rp, st1, tgt);
  st2 = st1;
  Vector x0_local = Vector::Zero(rp.x0_coords.size());
  AdmmParams params;
  update_rows(rp, tgt, x0_local, 1.0, params, true, st1);
  update_rows(rp, tgt, x0_local, 1e6, params, true, st2);
  CHECK((st1.phi - st2.phi).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((st1.omega - st2.omega).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((st1.xig - st2.xig).cwiseAbs().maxCoeff() < 1e-9);
}
