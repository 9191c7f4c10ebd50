#ifndef RDLMPC_OPERATORS_HPP_
#define RDLMPC_OPERATORS_HPP_

#include <vector>

#include "rdlmpc/model.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Finite-horizon signal stacked time-major: blocks b_0..b_T of equal size.
struct HorizonSignal {
  Index T = 0;
  Index block_dim = 0;
  Vector data;

  HorizonSignal() = default;
  HorizonSignal(Index horizon, Index dim)
      : T(horizon), block_dim(dim), data(Vector::Zero(dim * (horizon + 1))) {}

  Eigen::VectorBlock<Vector> block(Index t) {
    return data.segment(t * block_dim, block_dim);
  }
  Eigen::VectorBlock<const Vector> block(Index t) const {
    return data.segment(t * block_dim, block_dim);
  }
};

//! Disturbance signal with the initial condition prepended:
//! w = [x_0; w_1; ...; w_T], where w_t enters the state at step t.
inline HorizonSignal stack_disturbance(const Vector& x0,
                                       const Matrix& w_steps) {
  const Index n = x0.size();
  const Index T = w_steps.cols();
  require(w_steps.rows() == n || T == 0, "disturbance dimension mismatch");
  HorizonSignal w(T, n);
  w.block(0) = x0;
  for (Index t = 0; t < T; ++t) w.block(t + 1) = w_steps.col(t);
  return w;
}

//! Block-downshift operator: identity blocks on the first block
//! sub-diagonal, zeros elsewhere. Shape n(T+1) x n(T+1).
inline SparseMatrix build_block_downshift(Index n, Index T) {
  require(n >= 1 && T >= 1, "downshift requires n >= 1 and T >= 1");
  SparseMatrix z(n * (T + 1), n * (T + 1));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * T);
  for (Index t = 0; t + 1 <= T; ++t)
    for (Index c = 0; c < n; ++c)
      trip.emplace_back((t + 1) * n + c, t * n + c, 1.0);
  z.setFromTriplets(trip.begin(), trip.end());
  return z;
}

//! Achievability constraint matrix Z_AB = [I - Z*blkdiag(A), -Z*blkdiag(B)],
//! of shape n(T+1) x (n+p)(T+1). A joint response Phi = [Phi_x; Phi_u] is
//! achievable by a causal controller iff Z_AB * Phi = I.
inline SparseMatrix build_zab(const SystemModel& model, Index T) {
  require(T >= 1, "horizon must be >= 1");
  const Index n = model.total_state_dim();
  const Index p = model.total_input_dim();
  SparseMatrix zab(n * (T + 1), (n + p) * (T + 1));
  std::vector<Eigen::Triplet<double>> trip;
  for (Index r = 0; r < n * (T + 1); ++r) trip.emplace_back(r, r, 1.0);
  const Matrix a = model.dense_a();
  const Matrix b = model.dense_b();
  for (Index t = 0; t + 1 <= T; ++t) {
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < n; ++c)
        if (a(r, c) != 0.0)
          trip.emplace_back((t + 1) * n + r, t * n + c, -a(r, c));
      for (Index c = 0; c < p; ++c)
        if (b(r, c) != 0.0)
          trip.emplace_back((t + 1) * n + r, n * (T + 1) + t * p + c,
                            -b(r, c));
    }
  }
  zab.setFromTriplets(trip.begin(), trip.end());
  return zab;
}

}  // namespace rdlmpc

#endif  // RDLMPC_OPERATORS_HPP_
