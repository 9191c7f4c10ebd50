#include "rdlmpc/oracle.hpp"

#include <catch_amalgamated.hpp>

#include "support/test_oracles.hpp"

using namespace rdlmpc;

namespace {

RobustConstraintData boxes(const SystemModel& model, Index T, double xb,
                           double sigma) {
  auto data = build_box_constraints(
      model, T, Vector::Constant(model.total_state_dim(), -xb),
      Vector::Constant(model.total_state_dim(), xb));
  data.g_rows = build_disturbance_polytope(
      model, Vector::Constant(model.n_subsystems(), sigma), T);
  return data;
}

}  // namespace

TEST_CASE("zero-disturbance central solve matches Riccati DP", "[oracle]") {
  SystemModel model({1}, {1}, {{0, 0, Matrix::Constant(1, 1, 0.9)}},
                    {{0, 0, Matrix::Constant(1, 1, 0.5)}});
  const Index T = 2;
  auto data = boxes(model, T, 1e6, 0.0);
  LocalityMask mask(model, 0, T);
  Vector x0 = Vector::Constant(1, 0.7);
  auto prob = assemble_robust_problem(model, mask, data, x0);
  auto sol = solve_central(prob, CostWeights::identity(model));
  REQUIRE(sol.status == SolveStatus::Optimal);

  const double dp = testing::riccati_cost(
      model.dense_a(), model.dense_b(), Matrix::Identity(1, 1),
      Matrix::Identity(1, 1), Matrix::Identity(1, 1), x0, T);
  CHECK(std::abs(sol.objective - dp) < 1e-6 * (1.0 + dp));
}

TEST_CASE("achievability of central solutions", "[oracle]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  const Index T = 2;
  auto data = boxes(model, T, 5.0, 0.5);
  LocalityMask mask(model, 1, T);
  Vector x0(3);
  x0 << 0.4, -0.2, 0.1;
  auto prob = assemble_robust_problem(model, mask, data, x0);
  auto sol = solve_central(prob, CostWeights::identity(model));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.response.achievability_residual(model) < 1e-8);
  CHECK(mask_compliant(sol.response.phi_x, sol.response.phi_u, mask, 1e-12));
  auto res = robust_residuals(sol.response, sol.xi, prob);
  CHECK(res.worst() < 1e-6);
}

TEST_CASE("vertex enumeration certifies the dual reformulation", "[oracle]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  const Index T = 2;
  auto data = boxes(model, T, 2.0, 1.0);
  LocalityMask mask(model, 1, T);
  Vector x0(3);
  x0 << 0.5, -0.5, 0.25;
  auto prob = assemble_robust_problem(model, mask, data, x0);
  auto sol = solve_central(prob, CostWeights::identity(model));
  REQUIRE(sol.status == SolveStatus::Optimal);

  const auto& lay = mask.layout();
  const Matrix h = data.dense_h(model, lay);
  const Vector h_rhs = data.h_vector();
  const Matrix joint = sol.response.joint();
  const auto vertices =
      testing::box_vertices(Vector::Constant(lay.disturbance_coords(), 1.0));
  REQUIRE(vertices.size() == 64);
  for (const auto& delta : vertices) {
    Vector w(lay.w_cols());
    w << x0, delta;
    const Vector traj = joint * w;
    CHECK((h * traj - h_rhs).maxCoeff() < 1e-8);
  }
}

TEST_CASE("x0 outside the initial set reports infeasible", "[oracle]") {
  SystemModel model = make_chain_system(2, 0.8, 2.0, {1, 1});
  auto data = boxes(model, 2, 0.5, 0.1);
  LocalityMask mask(model, 1, 2);
  auto prob =
      assemble_robust_problem(model, mask, data, Vector::Constant(2, 2.0));
  CHECK(solve_central(prob, CostWeights::identity(model)).status ==
        SolveStatus::Infeasible);
}

TEST_CASE("disturbance exceeding the state box is infeasible", "[oracle]") {
  SystemModel model = make_chain_system(2, 0.8, 2.0, {1, 1});
  auto data = boxes(model, 2, 0.01, 0.05);
  LocalityMask mask(model, 1, 2);
  auto prob = assemble_robust_problem(model, mask, data, Vector::Zero(2));
  CHECK(solve_central(prob, CostWeights::identity(model)).status ==
        SolveStatus::Infeasible);
}

TEST_CASE("locality mask is active on a loosely coupled chain", "[oracle]") {
  SystemModel model = make_chain_system(5, 0.8, 2.0, {1, 1, 1, 1, 1});
  const Index T = 2;
  auto data = boxes(model, T, 3.0, 0.4);
  Vector x0(5);
  x0 << 0.8, -0.3, 0.5, 0.2, -0.6;
  LocalityMask tight(model, 1, T), loose(model, 4, T);
  auto p_tight = assemble_robust_problem(model, tight, data, x0);
  auto p_loose = assemble_robust_problem(model, loose, data, x0);
  auto s_tight = solve_central(p_tight, CostWeights::identity(model));
  auto s_loose = solve_central(p_loose, CostWeights::identity(model));
  REQUIRE(s_tight.status == SolveStatus::Optimal);
  REQUIRE(s_loose.status == SolveStatus::Optimal);
  // The loose solution must violate the tight mask somewhere, and the tight
  // objective cannot beat the loose one.
  CHECK(!mask_compliant(s_loose.response.phi_x, s_loose.response.phi_u, tight,
                        1e-9));
  CHECK(s_tight.objective >= s_loose.objective - 1e-6);
}
