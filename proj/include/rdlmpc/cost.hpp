#ifndef RDLMPC_COST_HPP_
#define RDLMPC_COST_HPP_

#include "rdlmpc/model.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Separable quadratic stage cost with diagonal weights:
//!   sum_{t=0}^{T-1} (x_t'Q x_t + u_t'R u_t) + x_T'Q_f x_T.
struct CostWeights {
  Vector q_diag;   // per state coordinate
  Vector r_diag;   // per input coordinate
  Vector q_final;  // terminal state weight

  static CostWeights identity(const SystemModel& model) {
    CostWeights w;
    w.q_diag = Vector::Ones(model.total_state_dim());
    w.r_diag = Vector::Ones(model.total_input_dim());
    w.q_final = Vector::Ones(model.total_state_dim());
    return w;
  }
};

//! Weight of one row of the stacked trajectory (and of the first block
//! column of the response). The final input block carries no cost.
inline double row_weight(const CostWeights& w, const HorizonLayout& lay,
                         Index joint_row) {
  const Index t = lay.time_of_row(joint_row);
  const Index c = lay.coord_of_row(joint_row);
  if (lay.is_u_row(joint_row)) return t < lay.T ? w.r_diag[c] : 0.0;
  return t < lay.T ? w.q_diag[c] : w.q_final[c];
}

}  // namespace rdlmpc

#endif  // RDLMPC_COST_HPP_
