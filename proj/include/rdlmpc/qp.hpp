#ifndef RDLMPC_QP_HPP_
#define RDLMPC_QP_HPP_

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include "rdlmpc/lsq.hpp"
#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Dense convex quadratic program
//!   minimize   0.5 z'Qz + c'z
//!   subject to A_in z <= b_in,  A_eq z = b_eq.
//! Q must be symmetric positive semidefinite.
struct DenseQp {
  Matrix Q;
  Vector c;
  Matrix A_in;
  Vector b_in;
  Matrix A_eq;
  Vector b_eq;
};

enum class QpStatus { Optimal, Infeasible, Unbounded, MaxIterations };

struct QpResult {
  QpStatus status = QpStatus::MaxIterations;
  Vector z;
  Vector lambda_in;  // multipliers of A_in z <= b_in, nonnegative
  Vector nu_eq;      // multipliers of A_eq z = b_eq
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  double duality_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct QpOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;      // residual / complementarity target
  double regularization = 0.0;   // added to the diagonal of Q
  bool polish = true;
};

namespace detail {

//! Orthonormal kernel basis and a minimum-norm particular solution of
//! A z = b. Returns false when the system is inconsistent.
struct AffineSet {
  Vector particular;
  Matrix kernel;  // orthonormal columns; may have zero columns
  bool consistent = true;
};

inline AffineSet solve_affine_set(const Matrix& a, const Vector& b) {
  AffineSet out;
  const Index nv = a.cols();
  if (a.rows() == 0) {
    out.particular = Vector::Zero(nv);
    out.kernel = Matrix::Identity(nv, nv);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0;
  const double thresh = std::max(a.rows(), a.cols()) *
                        std::numeric_limits<double>::epsilon() *
                        std::max(smax, 1.0);
  Index rank = 0;
  while (rank < svd.singularValues().size() &&
         svd.singularValues()[rank] > thresh)
    ++rank;
  Vector ut_b = svd.matrixU().leftCols(rank).transpose() * b;
  out.particular = svd.matrixV().leftCols(rank) *
                   (ut_b.array() / svd.singularValues().head(rank).array())
                       .matrix();
  out.kernel = svd.matrixV().rightCols(nv - rank);
  const double feas = (a * out.particular - b).cwiseAbs().maxCoeff();
  out.consistent = feas <= 1e-8 * (1.0 + b.cwiseAbs().maxCoeff());
  return out;
}

inline double kkt_residual_of(const DenseQp& qp, const Vector& z,
                              const Vector& lambda, const Vector& nu) {
  Vector grad = qp.Q * z + qp.c;
  if (qp.A_in.rows() > 0) grad.noalias() += qp.A_in.transpose() * lambda;
  if (qp.A_eq.rows() > 0) grad.noalias() += qp.A_eq.transpose() * nu;
  double res = grad.cwiseAbs().maxCoeff();
  if (qp.A_eq.rows() > 0)
    res = std::max(res, (qp.A_eq * z - qp.b_eq).cwiseAbs().maxCoeff());
  if (qp.A_in.rows() > 0) {
    const Vector slack = qp.b_in - qp.A_in * z;
    res = std::max(res, std::max(0.0, -slack.minCoeff()));
    res = std::max(res, std::max(0.0, -lambda.minCoeff()));
    res = std::max(res, (lambda.array() * slack.array()).abs().maxCoeff());
  }
  return res;
}

}  // namespace detail

//! Dense QP solve: equality constraints are eliminated through an
//! orthonormal null-space basis, the reduced inequality-constrained problem
//! goes through a Mehrotra predictor-corrector interior point loop, and an
//! active-set polish step recovers high-accuracy multipliers.
inline QpResult solve_qp(const DenseQp& qp_in, const QpOptions& opts = {}) {
  DenseQp qp = qp_in;
  const Index nv = qp.Q.rows();
  require(qp.Q.cols() == nv && qp.c.size() == nv, "objective dims mismatch");
  require(qp.A_in.rows() == qp.b_in.size(), "inequality dims mismatch");
  require(qp.A_eq.rows() == qp.b_eq.size(), "equality dims mismatch");
  qp.Q = 0.5 * (qp.Q + qp.Q.transpose());
  if (opts.regularization > 0.0)
    qp.Q.diagonal().array() += opts.regularization;

  QpResult result;
  auto finish = [&](QpStatus status, const Vector& z, const Vector& lam,
                    const Vector& nu, int iters) {
    result.status = status;
    result.z = z;
    result.lambda_in = lam;
    result.nu_eq = nu;
    result.iterations = iters;
    if (z.size() == nv) {
      result.objective = 0.5 * z.dot(qp.Q * z) + qp.c.dot(z);
      result.kkt_residual = detail::kkt_residual_of(qp, z, lam, nu);
      if (qp.A_in.rows() > 0)
        result.duality_gap =
            std::abs(lam.dot(qp.b_in - qp.A_in * z));
      else
        result.duality_gap = 0.0;
    }
    return result;
  };

  // Eliminate equalities.
  detail::AffineSet aff = detail::solve_affine_set(qp.A_eq, qp.b_eq);
  if (!aff.consistent)
    return finish(QpStatus::Infeasible, Vector(), Vector::Zero(qp.A_in.rows()),
                  Vector::Zero(qp.A_eq.rows()), 0);
  const Matrix& nsp = aff.kernel;
  const Index k = nsp.cols();
  const Index m = qp.A_in.rows();

  auto recover_nu = [&](const Vector& z, const Vector& lam) -> Vector {
    if (qp.A_eq.rows() == 0) return Vector::Zero(0);
    Vector grad = qp.Q * z + qp.c;
    if (m > 0) grad.noalias() += qp.A_in.transpose() * lam;
    return detail::pseudo_inverse(Matrix(qp.A_eq.transpose())) * (-grad);
  };

  const Matrix qr_mat = nsp.transpose() * qp.Q * nsp;
  const Vector cr = nsp.transpose() * (qp.Q * aff.particular + qp.c);

  if (k == 0) {
    // Fully pinned by equalities.
    Vector z = aff.particular;
    Vector lam = Vector::Zero(m);
    if (m > 0 && ((qp.A_in * z - qp.b_in).array() >
                  1e-8 * (1.0 + qp.b_in.cwiseAbs().maxCoeff()))
                     .any())
      return finish(QpStatus::Infeasible, z, lam, Vector::Zero(qp.A_eq.rows()),
                    0);
    return finish(QpStatus::Optimal, z, lam, recover_nu(z, lam), 0);
  }

  if (m == 0) {
    // Equality-constrained QP; stationary point of the reduced problem.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(qr_mat.rows(),
                                                       qr_mat.cols());
    cod.setThreshold(1e-12);
    cod.compute(qr_mat);
    const Vector y = cod.solve(-cr);
    if ((qr_mat * y + cr).cwiseAbs().maxCoeff() >
        1e-8 * (1.0 + cr.cwiseAbs().maxCoeff()))
      return finish(QpStatus::Unbounded, Vector(), Vector(), Vector(), 0);
    const Vector z = aff.particular + nsp * y;
    return finish(QpStatus::Optimal, z, Vector::Zero(0),
                  recover_nu(z, Vector::Zero(0)), 0);
  }

  const Matrix ar = qp.A_in * nsp;
  const Vector br = qp.b_in - qp.A_in * aff.particular;

  // Interior point loop on: min 0.5 y'Qr y + cr'y  s.t.  Ar y + s = br,
  // s >= 0, with multipliers lam >= 0.
  Vector y = Vector::Zero(k);
  Vector s = (br.array() - (ar * y).array()).max(1.0).matrix();
  Vector lam = Vector::Ones(m);
  const double scale = 1.0 + std::max(cr.cwiseAbs().maxCoeff(),
                                      br.cwiseAbs().maxCoeff());
  int iter = 0;
  bool converged = false;
  Vector y_prev = y, s_prev = s, lam_prev = lam;
  for (; iter < opts.max_iterations; ++iter) {
    if (!y.allFinite() || !s.allFinite() || !lam.allFinite()) {
      y = y_prev;
      s = s_prev;
      lam = lam_prev;
      break;
    }
    y_prev = y;
    s_prev = s;
    lam_prev = lam;
    const Vector r_d = qr_mat * y + cr + ar.transpose() * lam;
    const Vector r_p = ar * y + s - br;
    const double mu = s.dot(lam) / static_cast<double>(m);
    if (mu <= 0.0 || !std::isfinite(mu)) break;
    if (r_d.cwiseAbs().maxCoeff() <= opts.tolerance * scale &&
        r_p.cwiseAbs().maxCoeff() <= opts.tolerance * scale &&
        mu <= opts.tolerance * scale) {
      converged = true;
      break;
    }

    const Vector d = (lam.array() / s.array()).matrix();
    Matrix ip_mat = qr_mat;
    ip_mat.noalias() += ar.transpose() * d.asDiagonal() * ar;
    double reg = 0.0;
    Eigen::LDLT<Matrix> ldlt;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Matrix try_mat = ip_mat;
      if (reg > 0.0) try_mat.diagonal().array() += reg;
      ldlt.compute(try_mat);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) break;
      reg = reg == 0.0 ? 1e-12 * (1.0 + ip_mat.diagonal().maxCoeff())
                       : reg * 100.0;
    }

    auto solve_step = [&](const Vector& r_c) {
      // r_c is the target of the complementarity equation:
      //   lam .* ds + s .* dlam = -r_c
      const Vector rhs =
          -r_d - ar.transpose() *
                     ((lam.array() * r_p.array() - r_c.array()) / s.array())
                         .matrix();
      Vector dy = ldlt.solve(rhs);
      Vector dlam = ((lam.array() * (r_p + ar * dy).array() - r_c.array()) /
                     s.array())
                        .matrix();
      Vector ds = -r_p - ar * dy;
      return std::make_tuple(dy, dlam, ds);
    };

    auto max_step = [](const Vector& val, const Vector& dir) {
      double a = 1.0;
      for (Index i = 0; i < val.size(); ++i)
        if (dir[i] < 0.0) a = std::min(a, -val[i] / dir[i]);
      return a;
    };

    // Affine (predictor) direction.
    auto [dy_aff, dlam_aff, ds_aff] =
        solve_step((s.array() * lam.array()).matrix());
    const double ap_aff = max_step(s, ds_aff);
    const double ad_aff = max_step(lam, dlam_aff);
    const double mu_aff = (s + ap_aff * ds_aff).dot(lam + ad_aff * dlam_aff) /
                          static_cast<double>(m);
    const double sigma = std::pow(std::min(1.0, mu_aff / mu), 3);

    // Corrector.
    const Vector r_c = (s.array() * lam.array() +
                        ds_aff.array() * dlam_aff.array() - sigma * mu)
                           .matrix();
    auto [dy, dlam, ds] = solve_step(r_c);
    const double ap = std::min(1.0, 0.995 * max_step(s, ds));
    const double ad = std::min(1.0, 0.995 * max_step(lam, dlam));
    y += ap * dy;
    s += ap * ds;
    lam += ad * dlam;
  }

  // Active-set polish: re-solve on the near-active constraints and accept
  // when the result is primal and dual feasible.
  Vector y_best = y, lam_best = lam;
  if (opts.polish) {
    std::vector<Index> active;
    for (Index i = 0; i < m; ++i)
      if (s[i] <= lam[i]) active.push_back(i);
    for (int round = 0; round < 12; ++round) {
      Matrix a_act(active.size(), k);
      Vector b_act(active.size());
      for (size_t i = 0; i < active.size(); ++i) {
        a_act.row(i) = ar.row(active[i]);
        b_act[i] = br[active[i]];
      }
      const Index na = static_cast<Index>(active.size());
      Matrix kkt = Matrix::Zero(k + na, k + na);
      kkt.topLeftCorner(k, k) = qr_mat;
      if (na > 0) {
        kkt.topRightCorner(k, na) = a_act.transpose();
        kkt.bottomLeftCorner(na, k) = a_act;
      }
      Vector rhs(k + na);
      rhs.head(k) = -cr;
      rhs.tail(na) = b_act;
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt.rows(),
                                                         kkt.cols());
      cod.setThreshold(1e-12);
      cod.compute(kkt);
      const Vector sol = cod.solve(rhs);
      const Vector yp = sol.head(k);
      const Vector lp = sol.tail(na);
      if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-7 * scale) break;

      // Drop the most negative multiplier and retry, if any.
      Index worst = -1;
      double worst_val = -1e-9 * scale;
      for (Index i = 0; i < na; ++i)
        if (lp[i] < worst_val) {
          worst_val = lp[i];
          worst = i;
        }
      if (worst >= 0) {
        active.erase(active.begin() + worst);
        continue;
      }
      const Vector slack = br - ar * yp;
      if (slack.size() > 0 && slack.minCoeff() < -1e-8 * scale) {
        // An inactive constraint became violated; add the worst offender.
        Index add = -1;
        double worst_slack = -1e-8 * scale;
        for (Index i = 0; i < m; ++i)
          if (std::find(active.begin(), active.end(), i) == active.end() &&
              slack[i] < worst_slack) {
            worst_slack = slack[i];
            add = i;
          }
        if (add < 0) break;
        active.push_back(add);
        std::sort(active.begin(), active.end());
        continue;
      }
      y_best = yp;
      lam_best = Vector::Zero(m);
      for (Index i = 0; i < na; ++i)
        lam_best[active[i]] = std::max(0.0, lp[i]);
      converged = true;
      break;
    }
  }

  const Vector z = aff.particular + nsp * y_best;
  const Vector nu = recover_nu(z, lam_best);
  if (converged) return finish(QpStatus::Optimal, z, lam_best, nu, iter);

  // Classify the failure: scaled Farkas-style certificate for primal
  // infeasibility, runaway iterates for unboundedness.
  const double lam_norm = lam.cwiseAbs().maxCoeff();
  if (lam_norm > 1.0) {
    const Vector lhat = lam / lam_norm;
    if ((ar.transpose() * lhat).cwiseAbs().maxCoeff() < 1e-6 &&
        br.dot(lhat) < -1e-8)
      return finish(QpStatus::Infeasible, z, lam_best, nu, iter);
  }
  if (y.cwiseAbs().maxCoeff() > 1e9 * scale)
    return finish(QpStatus::Unbounded, z, lam_best, nu, iter);
  return finish(QpStatus::MaxIterations, z, lam_best, nu, iter);
}

}  // namespace rdlmpc

#endif  // RDLMPC_QP_HPP_
