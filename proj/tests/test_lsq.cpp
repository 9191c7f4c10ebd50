#include "rdlmpc/lsq.hpp"

#include <catch_amalgamated.hpp>
#include <random>

using namespace rdlmpc;

TEST_CASE("unconstrained least squares", "[lsq]") {
  EqualityLsq prob{Matrix::Identity(2, 2), Vector(2), Matrix(0, 2), Vector(0)};
  prob.v << 1, 2;
  auto sol = solve_equality_lsq(prob);
  CHECK(sol.z.isApprox(prob.v, 1e-12));
}

TEST_CASE("constraints pin the solution", "[lsq]") {
  EqualityLsq prob;
  prob.M = Matrix::Random(3, 2);
  prob.v = Vector::Random(3);
  prob.P = Matrix::Identity(2, 2);
  prob.q = Vector(2);
  prob.q << 3, 4;
  auto sol = solve_equality_lsq(prob);
  CHECK(std::abs(sol.z[0] - 3) < 1e-10);
  CHECK(std::abs(sol.z[1] - 4) < 1e-10);
}

TEST_CASE("objective sees only the free coordinate", "[lsq]") {
  EqualityLsq prob;
  prob.M = Matrix::Zero(2, 2);
  prob.M(0, 0) = 1.0;
  prob.v = Vector(2);
  prob.v << 1, 7;
  prob.P = Matrix::Zero(1, 2);
  prob.P(0, 1) = 1.0;
  prob.q = Vector::Constant(1, 2.0);
  auto sol = solve_equality_lsq(prob);
  CHECK(std::abs(sol.z[0] - 1) < 1e-10);
  CHECK(std::abs(sol.z[1] - 2) < 1e-10);
}

TEST_CASE("stationarity and feasibility on random instances", "[lsq]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  auto randn = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Index nv = 2 + trial % 6;
    const Index mr = 1 + (trial * 7) % 8;
    const Index me = trial % nv;
    EqualityLsq prob;
    prob.M = randn(mr, nv);
    if (trial % 3 == 0 && mr > 1) prob.M.row(0) = prob.M.row(mr - 1);  // rank gaps
    prob.v = randn(mr, 1);
    prob.P = randn(me, nv);
    prob.q = me > 0 ? Vector(prob.P * randn(nv, 1)) : Vector(0);
    auto sol = solve_equality_lsq(prob);
    const Vector stat = prob.M.transpose() * (prob.M * sol.z - prob.v) +
                        (me > 0 ? Vector(prob.P.transpose() * sol.mu)
                                : Vector(Vector::Zero(nv)));
    CHECK(stat.cwiseAbs().maxCoeff() < 1e-8);
    if (me > 0)
      CHECK((prob.P * sol.z - prob.q).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("pseudo-inverse equals direct solve on invertible KKT", "[lsq]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist;
  const Index nv = 5, me = 2;
  Matrix m(nv + 1, nv), p(me, nv);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < nv; ++j) m(i, j) = dist(rng);
  for (Index i = 0; i < me; ++i)
    for (Index j = 0; j < nv; ++j) p(i, j) = dist(rng);
  Vector v = Vector::Random(nv + 1), q = Vector::Random(me);
  auto sol = solve_equality_lsq({m, v, p, q});

  Matrix kkt(nv + me, nv + me);
  kkt << m.transpose() * m, p.transpose(), p, Matrix::Zero(me, me);
  Vector rhs(nv + me);
  rhs << m.transpose() * v, q;
  Vector direct = kkt.fullPivLu().solve(rhs);
  CHECK((sol.z - direct.head(nv)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("inconsistent constraints raise an error", "[lsq]") {
  EqualityLsq prob;
  prob.M = Matrix::Identity(2, 2);
  prob.v = Vector::Zero(2);
  prob.P = Matrix(2, 2);
  prob.P << 1, 0, 1, 0;
  prob.q = Vector(2);
  prob.q << 1, 2;  // z0 = 1 and z0 = 2
  CHECK_THROWS_AS(solve_equality_lsq(prob), InfeasibleError);
}

TEST_CASE("cached KKT matches one-shot solves", "[lsq]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist;
  Matrix m(6, 4), p(2, 4);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 4; ++j) m(i, j) = dist(rng);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 4; ++j) p(i, j) = dist(rng);
  EqualityLsqCache cache(m, p);
  for (int k = 0; k < 5; ++k) {
    Vector v = Vector::Random(6);
    Vector q = p * Vector::Random(4);
    auto direct = solve_equality_lsq({m, v, p, q});
    Matrix z = cache.solve(v, q);
    CHECK((z.col(0) - direct.z).cwiseAbs().maxCoeff() < 1e-9);
  }
}
