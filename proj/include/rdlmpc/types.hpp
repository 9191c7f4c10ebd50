#ifndef RDLMPC_TYPES_HPP_
#define RDLMPC_TYPES_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdlmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

//! Thrown when problem data is structurally inconsistent (dimension or
//! pattern errors detected before any solve is attempted).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! Thrown when a subproblem that must be solvable (by construction of the
//! surrounding algorithm) turns out not to be.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Row/column bookkeeping for stacked finite-horizon operators.
//!
//! States x_0..x_T and inputs u_0..u_T are stacked time-major; the joint
//! response has all state rows first, then all input rows. Disturbance
//! columns follow the convention w = [x_0; w_1; ...; w_T], where w_t is the
//! disturbance entering the state at step t.
struct HorizonLayout {
  Index n = 0;  // total state dimension
  Index p = 0;  // total input dimension
  Index T = 0;  // prediction horizon

  Index x_rows() const { return n * (T + 1); }
  Index u_rows() const { return p * (T + 1); }
  Index joint_rows() const { return x_rows() + u_rows(); }
  Index w_cols() const { return n * (T + 1); }
  Index disturbance_coords() const { return n * T; }  // w_1..w_T

  Index x_row(Index t, Index coord) const { return t * n + coord; }
  // Input rows are offset past the state block in the joint stacking.
  Index u_row(Index t, Index coord) const { return x_rows() + t * p + coord; }
  Index w_col(Index t, Index coord) const { return t * n + coord; }

  bool is_u_row(Index joint_row) const { return joint_row >= x_rows(); }
  Index time_of_row(Index joint_row) const {
    return is_u_row(joint_row) ? (joint_row - x_rows()) / p : joint_row / n;
  }
  Index coord_of_row(Index joint_row) const {
    return is_u_row(joint_row) ? (joint_row - x_rows()) % p : joint_row % n;
  }
  Index time_of_col(Index col) const { return col / n; }
  Index coord_of_col(Index col) const { return col % n; }
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw StructuralError(what);
}

}  // namespace rdlmpc

#endif  // RDLMPC_TYPES_HPP_
