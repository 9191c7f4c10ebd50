#ifndef RDLMPC_MODEL_HPP_
#define RDLMPC_MODEL_HPP_

#include <map>
#include <utility>
#include <vector>

#include "rdlmpc/graph.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Block entry of a subsystem-partitioned matrix.
struct Block {
  int row_subsystem = 0;
  int col_subsystem = 0;
  Matrix value;
};

//! LTI system x(t+1) = A x(t) + B u(t) + w(t), partitioned into N
//! subsystems. The interconnection graph has an edge j -> i whenever
//! [A]_{ij} != 0 or [B]_{ij} != 0, i.e. edges follow the direction of
//! influence so that out_j(d) collects everything a disturbance at j can
//! touch within d steps.
class SystemModel {
 public:
  SystemModel(std::vector<Index> state_dims, std::vector<Index> input_dims,
              const std::vector<Block>& a_blocks,
              const std::vector<Block>& b_blocks)
      : state_dims_(std::move(state_dims)), input_dims_(std::move(input_dims)) {
    const int n_sub = static_cast<int>(state_dims_.size());
    require(n_sub >= 1, "model needs at least one subsystem");
    require(input_dims_.size() == state_dims_.size(),
            "state_dims and input_dims must have equal length");
    state_offsets_.resize(n_sub + 1, 0);
    input_offsets_.resize(n_sub + 1, 0);
    for (int i = 0; i < n_sub; ++i) {
      require(state_dims_[i] >= 1, "subsystem state dimension must be >= 1");
      require(input_dims_[i] >= 0, "subsystem input dimension must be >= 0");
      state_offsets_[i + 1] = state_offsets_[i] + state_dims_[i];
      input_offsets_[i + 1] = input_offsets_[i] + input_dims_[i];
    }

    std::vector<std::pair<int, int>> edges;
    for (const auto& blk : a_blocks) {
      check_subsystem(blk.row_subsystem);
      check_subsystem(blk.col_subsystem);
      require(blk.value.rows() == state_dims_[blk.row_subsystem] &&
                  blk.value.cols() == state_dims_[blk.col_subsystem],
              "A block dimension mismatch");
      if (blk.value.isZero(0.0)) continue;
      a_blocks_[{blk.row_subsystem, blk.col_subsystem}] = blk.value;
      edges.emplace_back(blk.col_subsystem, blk.row_subsystem);
    }
    for (const auto& blk : b_blocks) {
      check_subsystem(blk.row_subsystem);
      check_subsystem(blk.col_subsystem);
      require(blk.value.rows() == state_dims_[blk.row_subsystem] &&
                  blk.value.cols() == input_dims_[blk.col_subsystem],
              "B block dimension mismatch");
      if (blk.value.isZero(0.0)) continue;
      b_blocks_[{blk.row_subsystem, blk.col_subsystem}] = blk.value;
      edges.emplace_back(blk.col_subsystem, blk.row_subsystem);
    }
    graph_ = InterconnectionGraph(n_sub, edges);
  }

  int n_subsystems() const { return static_cast<int>(state_dims_.size()); }
  Index total_state_dim() const { return state_offsets_.back(); }
  Index total_input_dim() const { return input_offsets_.back(); }
  Index state_dim(int i) const { return state_dims_[i]; }
  Index input_dim(int i) const { return input_dims_[i]; }
  Index state_offset(int i) const { return state_offsets_[i]; }
  Index input_offset(int i) const { return input_offsets_[i]; }

  const InterconnectionGraph& graph() const { return graph_; }

  //! Pointer to [A]_{ij}, or nullptr when the block is zero.
  const Matrix* a_block(int i, int j) const { return find(a_blocks_, i, j); }
  const Matrix* b_block(int i, int j) const { return find(b_blocks_, i, j); }

  Matrix dense_a() const {
    Matrix a = Matrix::Zero(total_state_dim(), total_state_dim());
    for (const auto& [key, val] : a_blocks_)
      a.block(state_offsets_[key.first], state_offsets_[key.second],
              val.rows(), val.cols()) = val;
    return a;
  }

  Matrix dense_b() const {
    Matrix b = Matrix::Zero(total_state_dim(), total_input_dim());
    for (const auto& [key, val] : b_blocks_)
      b.block(state_offsets_[key.first], input_offsets_[key.second],
              val.rows(), val.cols()) = val;
    return b;
  }

  //! One plant step.
  Vector step(const Vector& x, const Vector& u, const Vector& w) const {
    require(x.size() == total_state_dim() && u.size() == total_input_dim() &&
                w.size() == total_state_dim(),
            "plant step dimension mismatch");
    Vector next = w;
    for (const auto& [key, val] : a_blocks_)
      next.segment(state_offsets_[key.first], val.rows()).noalias() +=
          val * x.segment(state_offsets_[key.second], val.cols());
    for (const auto& [key, val] : b_blocks_)
      next.segment(state_offsets_[key.first], val.rows()).noalias() +=
          val * u.segment(input_offsets_[key.second], val.cols());
    return next;
  }

 private:
  void check_subsystem(int i) const {
    if (i < 0 || i >= n_subsystems())
      throw StructuralError("subsystem id out of range");
  }

  static const Matrix* find(const std::map<std::pair<int, int>, Matrix>& m,
                            int i, int j) {
    auto it = m.find({i, j});
    return it == m.end() ? nullptr : &it->second;
  }

  std::vector<Index> state_dims_, input_dims_;
  std::vector<Index> state_offsets_, input_offsets_;
  std::map<std::pair<int, int>, Matrix> a_blocks_, b_blocks_;
  InterconnectionGraph graph_;
};

//! Bidirectional chain of scalar subsystems:
//!   x_i(t+1) = alpha * (x_i(t) + kappa * (x_{i-1}(t) + x_{i+1}(t)))
//!              + beta_i * u_i(t) + w_i(t).
inline SystemModel make_chain_system(int n_subsystems, double alpha,
                                     double kappa,
                                     const std::vector<double>& beta) {
  require(static_cast<int>(beta.size()) == n_subsystems,
          "beta must have one entry per subsystem");
  std::vector<Index> sd(n_subsystems, 1), id(n_subsystems, 1);
  std::vector<Block> ab, bb;
  for (int i = 0; i < n_subsystems; ++i) {
    ab.push_back({i, i, Matrix::Constant(1, 1, alpha)});
    if (i > 0) ab.push_back({i, i - 1, Matrix::Constant(1, 1, alpha * kappa)});
    if (i + 1 < n_subsystems)
      ab.push_back({i, i + 1, Matrix::Constant(1, 1, alpha * kappa)});
    bb.push_back({i, i, Matrix::Constant(1, 1, beta[i])});
  }
  return SystemModel(std::move(sd), std::move(id), ab, bb);
}

//! Actuation pattern used by the chain benchmark: beta_i = 1 except on a
//! given set of unactuated nodes.
inline std::vector<double> chain_actuation(int n_subsystems,
                                           const std::vector<int>& unactuated) {
  std::vector<double> beta(n_subsystems, 1.0);
  for (int i : unactuated) {
    require(i >= 0 && i < n_subsystems, "unactuated node id out of range");
    beta[i] = 0.0;
  }
  return beta;
}

}  // namespace rdlmpc

#endif  // RDLMPC_MODEL_HPP_
