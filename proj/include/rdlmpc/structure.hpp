#ifndef RDLMPC_STRUCTURE_HPP_
#define RDLMPC_STRUCTURE_HPP_

#include <algorithm>
#include <vector>

#include "rdlmpc/model.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Support pattern of the d-locality subspace over the joint response
//! (Phi_x; Phi_u).
//!
//! An entry of Phi_x mapping disturbance block j to state block i is inside
//! the pattern iff i lies in out_j(d) and the entry is causally admissible
//! (block column time <= block row time). Phi_u uses radius d+1: confining a
//! disturbance to a region of size d requires controllers one hop outside it
//! to act. The final input block row has empty support; it is not used by
//! any cost or constraint.
class LocalityMask {
 public:
  LocalityMask(const SystemModel& model, int d, Index T) : d_(d) {
    require(d >= 0, "locality radius must be nonnegative");
    require(T >= 1, "horizon must be >= 1");
    layout_.n = model.total_state_dim();
    layout_.p = model.total_input_dim();
    layout_.T = T;

    const int ns = model.n_subsystems();
    state_coord_subsys_.resize(layout_.n);
    for (int i = 0; i < ns; ++i)
      for (Index c = 0; c < model.state_dim(i); ++c)
        state_coord_subsys_[model.state_offset(i) + c] = i;
    input_coord_subsys_.resize(layout_.p);
    for (int i = 0; i < ns; ++i)
      for (Index c = 0; c < model.input_dim(i); ++c)
        input_coord_subsys_[model.input_offset(i) + c] = i;

    // reach_state_[j] marks subsystems in out_j(d), reach_input_[j] those in
    // out_j(d+1).
    reach_state_.assign(ns, std::vector<bool>(ns, false));
    reach_input_.assign(ns, std::vector<bool>(ns, false));
    for (int j = 0; j < ns; ++j) {
      for (int i : model.graph().out_set(j, d)) reach_state_[j][i] = true;
      for (int i : model.graph().out_set(j, d + 1)) reach_input_[j][i] = true;
    }

    row_support_.resize(layout_.joint_rows());
    col_support_.resize(layout_.w_cols());
    for (Index r = 0; r < layout_.joint_rows(); ++r) {
      const bool is_u = layout_.is_u_row(r);
      if (is_u && layout_.time_of_row(r) == layout_.T) continue;
      const int row_sub = is_u ? input_coord_subsys_[layout_.coord_of_row(r)]
                               : state_coord_subsys_[layout_.coord_of_row(r)];
      const Index t_r = layout_.time_of_row(r);
      for (Index col = 0; col < layout_.w_cols(); ++col) {
        if (layout_.time_of_col(col) > t_r) break;
        const int col_sub = state_coord_subsys_[layout_.coord_of_col(col)];
        const bool ok = is_u ? reach_input_[col_sub][row_sub]
                             : reach_state_[col_sub][row_sub];
        if (ok) {
          row_support_[r].push_back(col);
          col_support_[col].push_back(r);
          ++support_size_;
        }
      }
    }
  }

  const HorizonLayout& layout() const { return layout_; }
  int d() const { return d_; }
  Index support_size() const { return support_size_; }

  bool supported(Index joint_row, Index col) const {
    const auto& s = row_support_[joint_row];
    return std::binary_search(s.begin(), s.end(), col);
  }

  //! Sorted disturbance columns supported in a joint row.
  const std::vector<Index>& row_support(Index joint_row) const {
    return row_support_[joint_row];
  }
  //! Sorted joint rows supported in a disturbance column.
  const std::vector<Index>& col_support(Index col) const {
    return col_support_[col];
  }

  int subsystem_of_row(Index joint_row) const {
    return layout_.is_u_row(joint_row)
               ? input_coord_subsys_[layout_.coord_of_row(joint_row)]
               : state_coord_subsys_[layout_.coord_of_row(joint_row)];
  }
  int subsystem_of_col(Index col) const {
    return state_coord_subsys_[layout_.coord_of_col(col)];
  }

  //! Subsystem-level reachability used for constraint-row patterns: state
  //! rows see radius d, input rows radius d+1.
  bool reach_state(int col_sub, int row_sub) const {
    return reach_state_[col_sub][row_sub];
  }
  bool reach_input(int col_sub, int row_sub) const {
    return reach_input_[col_sub][row_sub];
  }

 private:
  int d_ = 0;
  HorizonLayout layout_;
  Index support_size_ = 0;
  std::vector<int> state_coord_subsys_, input_coord_subsys_;
  std::vector<std::vector<bool>> reach_state_, reach_input_;
  std::vector<std::vector<Index>> row_support_, col_support_;
};

inline LocalityMask build_locality_mask(const SystemModel& model, int d,
                                        Index T) {
  return LocalityMask(model, d, T);
}

//! True when dense (Phi_x, Phi_u) vanish outside the mask support.
inline bool mask_compliant(const Matrix& phi_x, const Matrix& phi_u,
                           const LocalityMask& mask, double tol) {
  const auto& lay = mask.layout();
  for (Index r = 0; r < lay.x_rows(); ++r)
    for (Index c = 0; c < lay.w_cols(); ++c)
      if (std::abs(phi_x(r, c)) > tol && !mask.supported(r, c)) return false;
  for (Index r = 0; r < lay.u_rows(); ++r)
    for (Index c = 0; c < lay.w_cols(); ++c)
      if (std::abs(phi_u(r, c)) > tol && !mask.supported(lay.x_rows() + r, c))
        return false;
  return true;
}

//! Per-subsystem row/column ownership over the stacked response, plus the
//! mask-induced reduced index sets.
struct IndexPartition {
  std::vector<std::vector<Index>> row_sets;        // joint rows owned by i
  std::vector<std::vector<Index>> col_sets;        // disturbance cols owned by i
  std::vector<std::vector<Index>> col_block_rows;  // mask rows of i's columns
  std::vector<std::vector<Index>> row_block_cols;  // mask cols of i's rows
};

inline IndexPartition partition_indices(const SystemModel& model,
                                        const LocalityMask& mask) {
  const auto& lay = mask.layout();
  const int ns = model.n_subsystems();
  IndexPartition part;
  part.row_sets.resize(ns);
  part.col_sets.resize(ns);
  part.col_block_rows.resize(ns);
  part.row_block_cols.resize(ns);

  for (Index r = 0; r < lay.joint_rows(); ++r)
    part.row_sets[mask.subsystem_of_row(r)].push_back(r);
  for (Index c = 0; c < lay.w_cols(); ++c)
    part.col_sets[mask.subsystem_of_col(c)].push_back(c);

  for (int i = 0; i < ns; ++i) {
    std::vector<Index> rows, cols;
    for (Index c : part.col_sets[i]) {
      const auto& s = mask.col_support(c);
      rows.insert(rows.end(), s.begin(), s.end());
    }
    for (Index r : part.row_sets[i]) {
      const auto& s = mask.row_support(r);
      cols.insert(cols.end(), s.begin(), s.end());
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    part.col_block_rows[i] = std::move(rows);
    part.row_block_cols[i] = std::move(cols);
  }
  return part;
}

}  // namespace rdlmpc

#endif  // RDLMPC_STRUCTURE_HPP_
