#include "rdlmpc/response.hpp"

#include <catch_amalgamated.hpp>
#include <random>

#include "rdlmpc/oracle.hpp"
#include "support/test_oracles.hpp"

using namespace rdlmpc;

namespace {

//! Feasible localized response for a chain, produced by the central oracle.
SystemResponse feasible_response(const SystemModel& model, Index T, int d) {
  auto data = build_box_constraints(
      model, T, Vector::Constant(model.total_state_dim(), -50.0),
      Vector::Constant(model.total_state_dim(), 50.0));
  data.g_rows = build_disturbance_polytope(
      model, Vector::Constant(model.n_subsystems(), 0.5), T);
  LocalityMask mask(model, d, T);
  Vector x0 = Vector::LinSpaced(model.total_state_dim(), 0.3, 0.9);
  auto prob = assemble_robust_problem(model, mask, data, x0);
  auto sol = solve_central(prob, CostWeights::identity(model));
  REQUIRE(sol.status == SolveStatus::Optimal);
  return sol.response;
}

//! Roll out the plant under the realized controller and compare against the
//! closed-loop maps.
void check_realization(const SystemModel& model, const SystemResponse& resp,
                       const Matrix& w_steps) {
  const auto& lay = resp.layout;
  SlsController ctrl(resp);
  Vector x0 = Vector::Zero(lay.n);
  x0 = Vector::LinSpaced(lay.n, -0.4, 0.7);
  HorizonSignal w = stack_disturbance(x0, w_steps);
  Vector x = x0;
  Matrix xs(lay.n, lay.T + 1), us(lay.p, lay.T + 1);
  for (Index t = 0; t <= lay.T; ++t) {
    xs.col(t) = x;
    us.col(t) = ctrl.step(x);
    if (t < lay.T)
      x = model.step(x, us.col(t), w_steps.col(t));
  }
  const Vector x_map = resp.state_trajectory(w);
  const Vector u_map = resp.input_trajectory(w);
  for (Index t = 0; t <= lay.T; ++t) {
    CHECK((xs.col(t) - x_map.segment(t * lay.n, lay.n)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((us.col(t) - u_map.segment(t * lay.p, lay.p)).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

}  // namespace

TEST_CASE("zero disturbance reproduces the nominal plan", "[response]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  auto resp = feasible_response(model, 3, 1);
  const auto& lay = resp.layout;
  Vector x0(3);
  x0 << 0.3, -0.2, 0.4;
  SlsController ctrl(resp);
  Vector x = x0;
  for (Index t = 0; t <= lay.T; ++t) {
    Vector u = ctrl.step(x);
    const Vector u_plan =
        resp.phi_u.block(t * lay.p, 0, lay.p, lay.n) * x0;
    CHECK((u - u_plan).cwiseAbs().maxCoeff() < 1e-10);
    if (t < lay.T) x = model.step(x, u, Vector::Zero(lay.n));
  }
}

TEST_CASE("identity response with zero input gives zero action", "[response]") {
  HorizonLayout lay{2, 2, 2};
  SystemResponse resp(lay);
  resp.phi_x = Matrix::Identity(lay.x_rows(), lay.w_cols());
  SlsController ctrl(resp);
  std::mt19937_64 rng(1);
  for (Index t = 0; t <= lay.T; ++t) {
    Vector x = testing::randn(rng, lay.n, 1);
    CHECK(ctrl.step(x).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(ctrl.step(Vector::Zero(lay.n)), std::out_of_range);
}

TEST_CASE("closed loop realizes the response maps exactly", "[response]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 0, 1});
  auto resp = feasible_response(model, 3, 2);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix w = 0.5 * testing::randn(rng, 3, 3);
    check_realization(model, resp, w);
  }
}

TEST_CASE("feasibility check flags achievable responses", "[response]") {
  SystemModel model = make_chain_system(3, 0.8, 2.0, {1, 1, 1});
  auto resp = feasible_response(model, 2, 1);
  CHECK(resp.is_feasible(model, 1e-6));
  resp.phi_x(2, 0) += 0.1;
  CHECK(!resp.is_feasible(model, 1e-6));
}
