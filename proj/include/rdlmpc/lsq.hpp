#ifndef RDLMPC_LSQ_HPP_
#define RDLMPC_LSQ_HPP_

#include <Eigen/QR>

#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Equality-constrained least squares: minimize ||M z - v||_2 subject to
//! P z = q. P may have zero rows.
struct EqualityLsq {
  Matrix M;
  Vector v;
  Matrix P;
  Vector q;
};

struct LsqSolution {
  Vector z;
  Vector mu;  // multipliers of P z = q
};

namespace detail {

//! Pseudo-inverse through a rank-revealing complete orthogonal
//! decomposition. Rank threshold: rel_tol times the largest diagonal of the
//! triangular factor, which tracks the largest singular value.
inline Matrix pseudo_inverse(const Matrix& a, double rel_tol = 1e-10) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.rows(), a.cols());
  cod.setThreshold(rel_tol);
  cod.compute(a);
  return cod.pseudoInverse();
}

inline Matrix kkt_matrix(const Matrix& m, const Matrix& p) {
  const Index nv = m.cols();
  const Index me = p.rows();
  Matrix kkt = Matrix::Zero(nv + me, nv + me);
  kkt.topLeftCorner(nv, nv).noalias() = m.transpose() * m;
  if (me > 0) {
    kkt.topRightCorner(nv, me) = p.transpose();
    kkt.bottomLeftCorner(me, nv) = p;
  }
  return kkt;
}

}  // namespace detail

//! Minimum-norm solution of the KKT system
//!   [ M'M  P' ] [ z  ]   [ M'v ]
//!   [ P    0  ] [ mu ] = [ q   ].
//! Throws InfeasibleError when no z satisfies P z = q.
inline LsqSolution solve_equality_lsq(const EqualityLsq& prob) {
  const Index nv = prob.M.cols();
  const Index me = prob.P.rows();
  require(prob.M.rows() == prob.v.size(), "M and v dimension mismatch");
  require(me == 0 || prob.P.cols() == nv, "M and P column mismatch");
  require(prob.q.size() == me, "P and q dimension mismatch");

  const Matrix kkt = detail::kkt_matrix(prob.M, prob.P);
  Vector rhs(nv + me);
  rhs.head(nv).noalias() = prob.M.transpose() * prob.v;
  rhs.tail(me) = prob.q;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt.rows(), kkt.cols());
  cod.setThreshold(1e-10);
  cod.compute(kkt);
  const Vector sol = cod.solve(rhs);

  LsqSolution out{sol.head(nv), sol.tail(me)};
  if (me > 0) {
    const double feas = (prob.P * out.z - prob.q).cwiseAbs().maxCoeff();
    if (feas > 1e-7 * (1.0 + prob.q.cwiseAbs().maxCoeff()))
      throw InfeasibleError("inconsistent equality constraints in least squares");
  }
  return out;
}

//! Cached factorization of the Lemma-style KKT system for a fixed (M, P)
//! pair, applied repeatedly to fresh targets. Immutable after construction.
class EqualityLsqCache {
 public:
  EqualityLsqCache() = default;

  EqualityLsqCache(Matrix m, Matrix p)
      : m_(std::move(m)), p_(std::move(p)), nv_(m_.cols()), me_(p_.rows()) {
    kkt_pinv_ = detail::pseudo_inverse(detail::kkt_matrix(m_, p_));
  }

  Index n_vars() const { return nv_; }

  //! Solve for one or more right-hand-side columns; targets has one column
  //! per problem (M-row space), q_rhs likewise (P-row space).
  Matrix solve(const Matrix& targets, const Matrix& q_rhs) const {
    Matrix rhs(nv_ + me_, targets.cols());
    rhs.topRows(nv_).noalias() = m_.transpose() * targets;
    rhs.bottomRows(me_) = q_rhs;
    Matrix sol = kkt_pinv_ * rhs;
    if (me_ > 0) {
      const Matrix feas = p_ * sol.topRows(nv_) - q_rhs;
      const double err = feas.cwiseAbs().maxCoeff();
      if (err > 1e-7 * (1.0 + q_rhs.cwiseAbs().maxCoeff()))
        throw InfeasibleError(
            "inconsistent achievability constraints in column subproblem");
    }
    return sol.topRows(nv_);
  }

 private:
  Matrix m_, p_;
  Index nv_ = 0, me_ = 0;
  Matrix kkt_pinv_;
};

}  // namespace rdlmpc

#endif  // RDLMPC_LSQ_HPP_
