#ifndef RDLMPC_RESPONSE_HPP_
#define RDLMPC_RESPONSE_HPP_

#include <utility>

#include "rdlmpc/operators.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Closed-loop response pair (Phi_x, Phi_u) mapping the stacked disturbance
//! w = [x_0; w_1; ...; w_T] to the state and input trajectories. Both maps
//! are block lower triangular; a feasible response additionally satisfies
//! Z_AB * [Phi_x; Phi_u] = I.
struct SystemResponse {
  HorizonLayout layout;
  Matrix phi_x;  // n(T+1) x n(T+1)
  Matrix phi_u;  // p(T+1) x n(T+1)

  SystemResponse() = default;
  SystemResponse(const HorizonLayout& lay)
      : layout(lay),
        phi_x(Matrix::Zero(lay.x_rows(), lay.w_cols())),
        phi_u(Matrix::Zero(lay.u_rows(), lay.w_cols())) {}

  Matrix joint() const {
    Matrix j(layout.joint_rows(), layout.w_cols());
    j.topRows(layout.x_rows()) = phi_x;
    j.bottomRows(layout.u_rows()) = phi_u;
    return j;
  }

  double achievability_residual(const SystemModel& model) const {
    const SparseMatrix zab = build_zab(model, layout.T);
    Matrix res = zab * joint();
    res -= Matrix::Identity(layout.x_rows(), layout.w_cols());
    return res.cwiseAbs().maxCoeff();
  }

  bool is_feasible(const SystemModel& model, double tol = 1e-6) const {
    return achievability_residual(model) <= tol;
  }

  Vector state_trajectory(const HorizonSignal& w) const {
    return phi_x * w.data;
  }
  Vector input_trajectory(const HorizonSignal& w) const {
    return phi_u * w.data;
  }

  //! First applied action for a measured initial state: u_0 = Phi_u,0[0] x_0.
  Vector first_action(const Vector& x0) const {
    return phi_u.topLeftCorner(layout.p, layout.n) * x0;
  }
};

//! Causal realization of a system response via delayed disturbance
//! reconstruction:
//!   u = Phi_u w_hat,  x_hat = (I - Phi_x) w_hat,  w_hat = x - x_hat.
//!
//! The internal state is the reconstructed disturbance history; it is
//! single-owner and advances one measurement at a time.
class SlsController {
 public:
  explicit SlsController(SystemResponse response)
      : resp_(std::move(response)),
        w_hat_(Vector::Zero(resp_.layout.w_cols())),
        t_(0) {}

  Index steps_taken() const { return t_; }

  //! Consume the measurement x(t) and return u(t). Throws once the horizon
  //! is exhausted.
  Vector step(const Vector& x_measured) {
    const auto& lay = resp_.layout;
    if (t_ > lay.T) throw std::out_of_range("controller horizon exhausted");
    require(x_measured.size() == lay.n, "measurement dimension mismatch");

    // The prediction depends on strictly older disturbance estimates only;
    // the diagonal block of Phi_x is the identity for any feasible response,
    // so x_t = w_hat_t + sum_{s<t} Phi_x[t,s] w_hat_s inverts causally.
    Vector x_hat = Vector::Zero(lay.n);
    for (Index s = 0; s < t_; ++s)
      x_hat += resp_.phi_x.block(t_ * lay.n, s * lay.n, lay.n, lay.n) *
               w_hat_.segment(s * lay.n, lay.n);
    w_hat_.segment(t_ * lay.n, lay.n) = x_measured - x_hat;

    Vector u = Vector::Zero(lay.p);
    for (Index s = 0; s <= t_; ++s)
      u += resp_.phi_u.block(t_ * lay.p, s * lay.n, lay.p, lay.n) *
           w_hat_.segment(s * lay.n, lay.n);
    ++t_;
    return u;
  }

  const SystemResponse& response() const { return resp_; }

 private:
  SystemResponse resp_;
  Vector w_hat_;
  Index t_;
};

}  // namespace rdlmpc

#endif  // RDLMPC_RESPONSE_HPP_
