#ifndef RDLMPC_CONSTRAINTS_HPP_
#define RDLMPC_CONSTRAINTS_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "rdlmpc/structure.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

enum class ConstraintKind { State, Input };

//! Single half-space row touching one subsystem's coordinates at one time
//! step. Coefficients are stored sparse over the subsystem's local state (or
//! input) coordinates.
struct ConstraintRow {
  ConstraintKind kind = ConstraintKind::State;
  int subsystem = 0;
  Index time = 0;  // state rows: 1..T, input rows: 0..T-1
  std::vector<std::pair<Index, double>> coeffs;  // (local coord, coefficient)
  double rhs = 0.0;
};

//! Half-space row of the disturbance polytope, touching one subsystem's
//! state coordinates at one disturbance block t in 1..T.
struct DisturbanceRow {
  int subsystem = 0;
  Index time = 1;
  std::vector<std::pair<Index, double>> coeffs;
  double rhs = 0.0;
};

//! Polytopic trajectory constraints H y <= h (block-diagonal per subsystem
//! and time) together with the disturbance polytope W = {delta : G delta <= g}
//! over the stacked disturbance blocks w_1..w_T.
struct RobustConstraintData {
  std::vector<ConstraintRow> h_rows;
  std::vector<DisturbanceRow> g_rows;
  // Per-coordinate state box evaluated at time 0; used only to report an
  // initial condition outside its constraint set.
  std::optional<std::pair<Vector, Vector>> initial_state_box;

  Index n_h_rows() const { return static_cast<Index>(h_rows.size()); }
  Index n_g_rows() const { return static_cast<Index>(g_rows.size()); }

  Vector h_vector() const {
    Vector h(n_h_rows());
    for (Index r = 0; r < h.size(); ++r) h[r] = h_rows[r].rhs;
    return h;
  }
  Vector g_vector() const {
    Vector g(n_g_rows());
    for (Index r = 0; r < g.size(); ++r) g[r] = g_rows[r].rhs;
    return g;
  }

  //! Dense H over the stacked trajectory [x_0..x_T; u_0..u_T].
  Matrix dense_h(const SystemModel& model, const HorizonLayout& lay) const {
    Matrix h = Matrix::Zero(n_h_rows(), lay.joint_rows());
    for (Index r = 0; r < n_h_rows(); ++r) {
      const auto& row = h_rows[r];
      for (auto [c, v] : row.coeffs) {
        const Index col =
            row.kind == ConstraintKind::State
                ? lay.x_row(row.time, model.state_offset(row.subsystem) + c)
                : lay.u_row(row.time, model.input_offset(row.subsystem) + c);
        h(r, col) = v;
      }
    }
    return h;
  }

  //! Dense G over the stacked disturbance blocks [w_1; ...; w_T].
  Matrix dense_g(const SystemModel& model, const HorizonLayout& lay) const {
    Matrix g = Matrix::Zero(n_g_rows(), lay.disturbance_coords());
    for (Index r = 0; r < n_g_rows(); ++r) {
      const auto& row = g_rows[r];
      for (auto [c, v] : row.coeffs)
        g(r, (row.time - 1) * lay.n + model.state_offset(row.subsystem) + c) =
            v;
    }
    return g;
  }
};

//! Box constraints [x_min, x_max] on every state coordinate for t = 1..T and
//! optionally [u_min, u_max] on every input coordinate for t = 0..T-1.
//! Bounds must contain the origin. Rows come out as +/- unit rows, grouped
//! per time step and subsystem.
inline RobustConstraintData build_box_constraints(
    const SystemModel& model, Index T, const Vector& x_min, const Vector& x_max,
    const std::optional<std::pair<Vector, Vector>>& u_bounds = std::nullopt) {
  const Index n = model.total_state_dim();
  require(x_min.size() == n && x_max.size() == n,
          "state bound dimension mismatch");
  for (Index c = 0; c < n; ++c)
    require(x_min[c] <= 0.0 && x_max[c] >= 0.0,
            "state bounds must contain the origin");
  if (u_bounds) {
    require(u_bounds->first.size() == model.total_input_dim() &&
                u_bounds->second.size() == model.total_input_dim(),
            "input bound dimension mismatch");
    for (Index c = 0; c < model.total_input_dim(); ++c)
      require(u_bounds->first[c] <= 0.0 && u_bounds->second[c] >= 0.0,
              "input bounds must contain the origin");
  }

  RobustConstraintData data;
  for (Index t = 1; t <= T; ++t)
    for (int i = 0; i < model.n_subsystems(); ++i)
      for (Index c = 0; c < model.state_dim(i); ++c) {
        const Index gc = model.state_offset(i) + c;
        data.h_rows.push_back(
            {ConstraintKind::State, i, t, {{c, 1.0}}, x_max[gc]});
        data.h_rows.push_back(
            {ConstraintKind::State, i, t, {{c, -1.0}}, -x_min[gc]});
      }
  if (u_bounds)
    for (Index t = 0; t < T; ++t)
      for (int i = 0; i < model.n_subsystems(); ++i)
        for (Index c = 0; c < model.input_dim(i); ++c) {
          const Index gc = model.input_offset(i) + c;
          data.h_rows.push_back(
              {ConstraintKind::Input, i, t, {{c, 1.0}}, u_bounds->second[gc]});
          data.h_rows.push_back(
              {ConstraintKind::Input, i, t, {{c, -1.0}}, -u_bounds->first[gc]});
        }
  data.initial_state_box = {{x_min, x_max}};
  return data;
}

//! Disturbance box |[w]_i| <= sigma_i per subsystem for every block t = 1..T.
inline std::vector<DisturbanceRow> build_disturbance_polytope(
    const SystemModel& model, const Vector& sigma, Index T) {
  require(sigma.size() == model.n_subsystems(),
          "sigma must have one entry per subsystem");
  for (Index i = 0; i < sigma.size(); ++i)
    require(sigma[i] >= 0.0, "noise bound must be nonnegative");
  std::vector<DisturbanceRow> rows;
  for (Index t = 1; t <= T; ++t)
    for (int i = 0; i < model.n_subsystems(); ++i)
      for (Index c = 0; c < model.state_dim(i); ++c) {
        rows.push_back({i, t, {{c, 1.0}}, sigma[i]});
        rows.push_back({i, t, {{c, -1.0}}, sigma[i]});
      }
  return rows;
}

//! Locality pattern of the dual certificate: the row of Xi belonging to a
//! trajectory constraint on subsystem i may touch the disturbance rows of
//! subsystem j only when i is reachable from j within the row kind's radius,
//! and only disturbance blocks no later than the constrained time step.
inline bool xi_supported(const LocalityMask& mask, const ConstraintRow& hr,
                         const DisturbanceRow& gr) {
  if (gr.time > hr.time) return false;
  return hr.kind == ConstraintKind::State
             ? mask.reach_state(gr.subsystem, hr.subsystem)
             : mask.reach_input(gr.subsystem, hr.subsystem);
}

//! Fully assembled data of the dual-reformulated robust problem for a given
//! initial state: achievability, locality patterns for the response and the
//! certificate, the affine robust constraint on the first block column and
//! the equality coupling on the disturbance columns.
struct RobustProblem {
  const SystemModel* model = nullptr;
  const LocalityMask* mask = nullptr;
  const RobustConstraintData* constraints = nullptr;
  Vector x0;
  std::vector<std::vector<Index>> xi_pattern;  // per H row: sorted G rows
  bool x0_in_initial_set = true;

  Index xi_support_size() const {
    Index s = 0;
    for (const auto& r : xi_pattern) s += static_cast<Index>(r.size());
    return s;
  }
};

inline RobustProblem assemble_robust_problem(
    const SystemModel& model, const LocalityMask& mask,
    const RobustConstraintData& constraints, const Vector& x0) {
  const auto& lay = mask.layout();
  require(x0.size() == lay.n, "initial state dimension mismatch");

  for (const auto& row : constraints.h_rows) {
    require(row.subsystem >= 0 && row.subsystem < model.n_subsystems(),
            "constraint row touches an unknown subsystem");
    const Index dim = row.kind == ConstraintKind::State
                          ? model.state_dim(row.subsystem)
                          : model.input_dim(row.subsystem);
    for (auto [c, v] : row.coeffs) {
      (void)v;
      require(c >= 0 && c < dim, "constraint row coefficient out of range");
    }
    if (row.kind == ConstraintKind::State)
      require(row.time >= 1 && row.time <= lay.T,
              "state constraints run over t = 1..T");
    else
      require(row.time >= 0 && row.time <= lay.T - 1,
              "input constraints run over t = 0..T-1");
    require(row.rhs >= 0.0,
            "constraint set must contain the origin (rhs >= 0)");
  }
  for (const auto& row : constraints.g_rows) {
    require(row.subsystem >= 0 && row.subsystem < model.n_subsystems(),
            "disturbance row touches an unknown subsystem");
    require(row.time >= 1 && row.time <= lay.T,
            "disturbance blocks run over t = 1..T");
    require(row.rhs >= 0.0,
            "disturbance set must contain the origin (rhs >= 0)");
    for (auto [c, v] : row.coeffs) {
      (void)v;
      require(c >= 0 && c < model.state_dim(row.subsystem),
              "disturbance row coefficient out of range");
    }
  }

  RobustProblem prob;
  prob.model = &model;
  prob.mask = &mask;
  prob.constraints = &constraints;
  prob.x0 = x0;
  prob.xi_pattern.resize(constraints.h_rows.size());
  for (Index r = 0; r < constraints.n_h_rows(); ++r)
    for (Index q = 0; q < constraints.n_g_rows(); ++q)
      if (xi_supported(mask, constraints.h_rows[r], constraints.g_rows[q]))
        prob.xi_pattern[r].push_back(q);

  if (constraints.initial_state_box) {
    const auto& [lo, hi] = *constraints.initial_state_box;
    for (Index c = 0; c < lay.n; ++c)
      if (x0[c] < lo[c] || x0[c] > hi[c]) prob.x0_in_initial_set = false;
  }
  return prob;
}

}  // namespace rdlmpc

#endif  // RDLMPC_CONSTRAINTS_HPP_
