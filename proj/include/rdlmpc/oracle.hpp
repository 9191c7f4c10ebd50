#ifndef RDLMPC_ORACLE_HPP_
#define RDLMPC_ORACLE_HPP_

#include <map>
#include <vector>

#include "rdlmpc/constraints.hpp"
#include "rdlmpc/cost.hpp"
#include "rdlmpc/qp.hpp"
#include "rdlmpc/response.hpp"

namespace rdlmpc {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NotConverged };

struct CentralSolution {
  SolveStatus status = SolveStatus::NotConverged;
  SystemResponse response;
  Matrix xi;  // dense certificate, rows of H by rows of G
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
};

//! Violation measures of the dual-reformulated robust constraints for a
//! candidate (response, certificate) pair.
struct RobustResiduals {
  double achievability = 0.0;
  double affine = 0.0;    // max(0, H Phi{1} x0 + Xi g - h)
  double coupling = 0.0;  // || H Phi{2:} - Xi G ||_inf
  double xi_negativity = 0.0;

  double worst() const {
    return std::max({achievability, affine, coupling, xi_negativity});
  }
};

inline RobustResiduals robust_residuals(const SystemResponse& resp,
                                        const Matrix& xi,
                                        const RobustProblem& prob) {
  const auto& lay = resp.layout;
  const SystemModel& model = *prob.model;
  RobustResiduals out;
  out.achievability = resp.achievability_residual(model);

  const Matrix h = prob.constraints->dense_h(model, lay);
  const Matrix g = prob.constraints->dense_g(model, lay);
  const Vector h_rhs = prob.constraints->h_vector();
  const Vector g_rhs = prob.constraints->g_vector();
  const Matrix joint = resp.joint();
  if (h.rows() > 0) {
    const Vector affine =
        h * joint.leftCols(lay.n) * prob.x0 + xi * g_rhs - h_rhs;
    out.affine = std::max(0.0, affine.maxCoeff());
    if (g.rows() > 0) {
      const Matrix coupling =
          h * joint.rightCols(lay.disturbance_coords()) - xi * g;
      out.coupling = coupling.cwiseAbs().maxCoeff();
    }
    if (xi.size() > 0) out.xi_negativity = std::max(0.0, -xi.minCoeff());
  }
  return out;
}

//! Centralized ground-truth solve of the robust problem: one monolithic QP
//! over all mask-supported entries of the response and the certificate. No
//! distribution; intended for desk-scale validation only.
inline CentralSolution solve_central(const RobustProblem& prob,
                                     const CostWeights& cost,
                                     double regularization = 1e-9) {
  const SystemModel& model = *prob.model;
  const LocalityMask& mask = *prob.mask;
  const auto& lay = mask.layout();
  const auto& cons = *prob.constraints;
  CentralSolution out;

  if (!prob.x0_in_initial_set) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  // Variable enumeration: mask-supported response entries first, then the
  // certificate pattern.
  std::vector<std::map<Index, Index>> phi_var(lay.joint_rows());
  Index nv = 0;
  for (Index r = 0; r < lay.joint_rows(); ++r)
    for (Index c : mask.row_support(r)) phi_var[r][c] = nv++;
  const Index n_phi_vars = nv;
  std::vector<std::map<Index, Index>> xi_var(cons.n_h_rows());
  for (Index r = 0; r < cons.n_h_rows(); ++r)
    for (Index q : prob.xi_pattern[r]) xi_var[r][q] = nv++;
  require(nv <= 6000, "central oracle instance too large");

  // H-row coefficient access in joint-row space.
  auto h_row_terms = [&](Index r) {
    std::vector<std::pair<Index, double>> terms;
    const auto& row = cons.h_rows[r];
    for (auto [c, v] : row.coeffs) {
      const Index jr =
          row.kind == ConstraintKind::State
              ? lay.x_row(row.time, model.state_offset(row.subsystem) + c)
              : lay.u_row(row.time, model.input_offset(row.subsystem) + c);
      terms.emplace_back(jr, v);
    }
    return terms;
  };
  auto g_row_cols = [&](Index q) {
    std::vector<std::pair<Index, double>> cols;
    const auto& row = cons.g_rows[q];
    for (auto [c, v] : row.coeffs)
      cols.emplace_back(lay.w_col(row.time, model.state_offset(row.subsystem) + c),
                        v);
    return cols;
  };

  // Objective: sum_r w_r (phi_r . x0)^2 over first-column entries.
  Matrix q_mat = Matrix::Zero(nv, nv);
  for (Index r = 0; r < lay.joint_rows(); ++r) {
    const double w = row_weight(cost, lay, r);
    if (w == 0.0) continue;
    std::vector<std::pair<Index, double>> first_col;  // (var, x0 coefficient)
    for (const auto& [c, var] : phi_var[r]) {
      if (c >= lay.n) break;
      first_col.emplace_back(var, prob.x0[c]);
    }
    for (auto [vi, xi_] : first_col)
      for (auto [vj, xj_] : first_col) q_mat(vi, vj) += 2.0 * w * xi_ * xj_;
  }

  // Equality block 1: achievability restricted to structurally relevant
  // entries of Z_AB Phi = I.
  const SparseMatrix zab = build_zab(model, lay.T);
  std::vector<Eigen::Triplet<double>> eq_trip;
  std::vector<double> eq_rhs;
  std::vector<std::vector<std::pair<Index, double>>> zab_rows(lay.x_rows());
  for (Index k = 0; k < zab.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(zab, k); it; ++it)
      zab_rows[it.row()].emplace_back(it.col(), it.value());
  for (Index er = 0; er < lay.x_rows(); ++er) {
    for (Index c = 0; c < lay.w_cols(); ++c) {
      std::vector<std::pair<Index, double>> terms;
      for (auto [jr, coef] : zab_rows[er]) {
        auto it = phi_var[jr].find(c);
        if (it != phi_var[jr].end()) terms.emplace_back(it->second, coef);
      }
      const double rhs = er == c ? 1.0 : 0.0;
      if (terms.empty() && rhs == 0.0) continue;
      if (terms.empty()) {
        out.status = SolveStatus::Infeasible;  // not localizable
        return out;
      }
      const Index row_id = static_cast<Index>(eq_rhs.size());
      for (auto [var, coef] : terms) eq_trip.emplace_back(row_id, var, coef);
      eq_rhs.push_back(rhs);
    }
  }

  // Equality block 2: H Phi{2:} = Xi G on the joint structural pattern.
  for (Index r = 0; r < cons.n_h_rows(); ++r) {
    const auto terms = h_row_terms(r);
    std::map<Index, std::vector<std::pair<Index, double>>> per_col;
    for (auto [jr, v] : terms)
      for (const auto& [c, var] : phi_var[jr])
        if (c >= lay.n) per_col[c].emplace_back(var, v);
    for (const auto& [q, var] : xi_var[r])
      for (auto [c, gv] : g_row_cols(q)) per_col[c].emplace_back(var, -gv);
    for (const auto& [c, tl] : per_col) {
      const Index row_id = static_cast<Index>(eq_rhs.size());
      for (auto [var, coef] : tl) eq_trip.emplace_back(row_id, var, coef);
      eq_rhs.push_back(0.0);
    }
  }

  // Inequalities: robust affine rows, then certificate nonnegativity.
  std::vector<Eigen::Triplet<double>> in_trip;
  std::vector<double> in_rhs;
  const Vector g_rhs_vec = cons.g_vector();
  for (Index r = 0; r < cons.n_h_rows(); ++r) {
    const Index row_id = static_cast<Index>(in_rhs.size());
    for (auto [jr, v] : h_row_terms(r))
      for (const auto& [c, var] : phi_var[jr]) {
        if (c >= lay.n) break;
        in_trip.emplace_back(row_id, var, v * prob.x0[c]);
      }
    for (const auto& [q, var] : xi_var[r])
      in_trip.emplace_back(row_id, var, g_rhs_vec[q]);
    in_rhs.push_back(cons.h_rows[r].rhs);
  }
  for (Index r = 0; r < cons.n_h_rows(); ++r)
    for (const auto& [q, var] : xi_var[r]) {
      (void)q;
      const Index row_id = static_cast<Index>(in_rhs.size());
      in_trip.emplace_back(row_id, var, -1.0);
      in_rhs.push_back(0.0);
    }

  DenseQp qp;
  qp.Q = q_mat;
  qp.c = Vector::Zero(nv);
  qp.A_eq = Matrix::Zero(static_cast<Index>(eq_rhs.size()), nv);
  for (const auto& t : eq_trip) qp.A_eq(t.row(), t.col()) += t.value();
  qp.b_eq = Eigen::Map<const Vector>(eq_rhs.data(), eq_rhs.size());
  qp.A_in = Matrix::Zero(static_cast<Index>(in_rhs.size()), nv);
  for (const auto& t : in_trip) qp.A_in(t.row(), t.col()) += t.value();
  qp.b_in = Eigen::Map<const Vector>(in_rhs.data(), in_rhs.size());

  QpOptions opts;
  opts.regularization = regularization;
  auto res = solve_qp(qp, opts);
  switch (res.status) {
    case QpStatus::Optimal:
      out.status = SolveStatus::Optimal;
      break;
    case QpStatus::Infeasible:
      out.status = SolveStatus::Infeasible;
      return out;
    case QpStatus::Unbounded:
      out.status = SolveStatus::Unbounded;
      return out;
    default:
      out.status = SolveStatus::NotConverged;
      return out;
  }

  out.response = SystemResponse(lay);
  for (Index r = 0; r < lay.joint_rows(); ++r)
    for (const auto& [c, var] : phi_var[r]) {
      if (lay.is_u_row(r))
        out.response.phi_u(r - lay.x_rows(), c) = res.z[var];
      else
        out.response.phi_x(r, c) = res.z[var];
    }
  out.xi = Matrix::Zero(cons.n_h_rows(), cons.n_g_rows());
  for (Index r = 0; r < cons.n_h_rows(); ++r)
    for (const auto& [q, var] : xi_var[r]) out.xi(r, q) = res.z[var];

  double obj = 0.0;
  const Vector x_nominal =
      out.response.phi_x.leftCols(lay.n) * prob.x0;
  const Vector u_nominal =
      out.response.phi_u.leftCols(lay.n) * prob.x0;
  for (Index r = 0; r < lay.x_rows(); ++r)
    obj += row_weight(cost, lay, r) * x_nominal[r] * x_nominal[r];
  for (Index r = 0; r < lay.u_rows(); ++r)
    obj += row_weight(cost, lay, lay.x_rows() + r) * u_nominal[r] * u_nominal[r];
  out.objective = obj;
  out.kkt_residual = res.kkt_residual;
  (void)n_phi_vars;
  return out;
}

}  // namespace rdlmpc

#endif  // RDLMPC_ORACLE_HPP_
