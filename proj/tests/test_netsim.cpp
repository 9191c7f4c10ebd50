#include "rdlmpc/netsim.hpp"

#include <catch_amalgamated.hpp>

#include "rdlmpc/oracle.hpp"

using namespace rdlmpc;

namespace {

struct Net {
  SystemModel model;
  LocalityMask mask;
  IndexPartition partition;
  RobustConstraintData constraints;
  CostWeights cost;
  LocalProblems problems;

  Net(SystemModel m, int d, Index T, double sigma)
      : model(std::move(m)),
        mask(model, d, T),
        partition(partition_indices(model, mask)),
        constraints(make_data(model, T, sigma)),
        cost(CostWeights::identity(model)),
        problems(model, mask, partition, constraints, cost, true) {}

  static RobustConstraintData make_data(const SystemModel& model, Index T,
                                        double sigma) {
    Vector lo(model.total_state_dim()), hi(model.total_state_dim());
    for (int i = 0; i < model.n_subsystems(); ++i) {
      const Matrix* b = model.b_block(i, i);
      const double bound = (b && !b->isZero(0.0)) ? 1.5 : 20.0;
      lo[model.state_offset(i)] = -bound;
      hi[model.state_offset(i)] = bound;
    }
    auto data = build_box_constraints(model, T, lo, hi);
    data.g_rows = build_disturbance_polytope(
        model, Vector::Constant(model.n_subsystems(), sigma), T);
    return data;
  }
};

std::vector<double> paper_beta(int n) {
  std::vector<double> beta(n, 1.0);
  for (int i = 1; i < n; i += 5) beta[i] = 0.0;  // sparse unactuated pattern
  return beta;
}

}  // namespace

TEST_CASE("single subsystem exchanges no messages", "[netsim]") {
  Net net(SystemModel({1}, {1}, {{0, 0, Matrix::Constant(1, 1, 0.9)}},
                      {{0, 0, Matrix::Constant(1, 1, 1.0)}}),
          0, 2, 0.4);
  AdmmParams p;
  p.max_iters = 500;
  DistributedAdmmSolver sim(net.problems, p);
  auto res = sim.solve(Vector::Constant(1, 0.3));
  CHECK(res.report.converged);
  CHECK(sim.stats().total_messages == 0);
}

TEST_CASE("distributed run matches the monolithic engine bitwise",
          "[netsim]") {
  Net net(make_chain_system(5, 0.8, 2.0, {1, 0, 1, 1, 1}), 1, 3, 1.0);
  Vector x0(5);
  x0 << 0.4, -0.2, 0.5, 0.1, -0.3;

  AdmmParams p;
  p.eps_p = 1e-4;
  p.eps_d = 1e-4;
  p.max_iters = 4000;
  MonolithicAdmmSolver mono(net.problems, p);
  DistributedAdmmSolver sim(net.problems, p);
  auto rm = mono.solve(x0);
  auto rs = sim.solve(x0);

  CHECK(rm.report.converged == rs.report.converged);
  CHECK(rm.report.iterations == rs.report.iterations);
  CHECK(rm.report.primal_residual == rs.report.primal_residual);
  CHECK(rm.report.dual_residual == rs.report.dual_residual);
  CHECK(rm.objective == rs.objective);
  CHECK((rm.u0 - rs.u0).cwiseAbs().maxCoeff() == 0.0);

  const auto resp_m = mono.assemble_response();
  const auto resp_s = sim.assemble_response();
  CHECK((resp_m.phi_x - resp_s.phi_x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((resp_m.phi_u - resp_s.phi_u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("locality audit on the benchmark chain", "[netsim]") {
  Net net(make_chain_system(10, 0.8, 2.0, paper_beta(10)), 3, 5, 1.0);
  Vector x0 = Vector::Zero(10);
  for (int i = 0; i < 10; ++i) x0[i] = 0.4 * ((i % 3) - 1);
  AdmmParams p;
  DistributedAdmmSolver sim(net.problems, p);
  auto res = sim.solve(x0);
  REQUIRE(res.report.converged);
  auto stats = sim.stats();
  CHECK(stats.max_state_hops <= 3);
  CHECK(stats.max_input_hops <= 4);
  CHECK(stats.max_measurement_hops <= 4);
  CHECK(stats.max_reduction_hops <= 1);
  CHECK(stats.total_messages > 0);
}

TEST_CASE("per-node traffic is independent of the network size", "[netsim]") {
  const int d = 2;
  AdmmParams p;
  p.max_iters = 31;  // fixed budget; compare per-iteration traffic
  long small_count = 0, large_count = 0;
  size_t small_bytes = 0, large_bytes = 0;
  for (int n : {10, 20}) {
    Net net(make_chain_system(n, 0.8, 2.0, std::vector<double>(n, 1.0)), d, 3,
            0.8);
    DistributedAdmmSolver sim(net.problems, p);
    sim.solve(Vector::Zero(n));
    auto stats = sim.stats();
    // node 5 is interior (further than d+1 from both ends) in both runs
    if (n == 10) {
      small_count = stats.messages_per_node[5];
      small_bytes = stats.bytes_per_node[5];
    } else {
      large_count = stats.messages_per_node[5];
      large_bytes = stats.bytes_per_node[5];
    }
  }
  CHECK(small_count == large_count);
  CHECK(small_bytes == large_bytes);
}

TEST_CASE("distributed fixed point stays oracle-consistent", "[netsim]") {
  Net net(make_chain_system(3, 0.8, 2.0, {1, 1, 1}), 1, 2, 0.6);
  Vector x0(3);
  x0 << 0.5, -0.4, 0.2;
  AdmmParams p;
  p.eps_p = 1e-6;
  p.eps_d = 1e-6;
  p.max_iters = 30000;
  DistributedAdmmSolver sim(net.problems, p);
  auto res = sim.solve(x0);
  REQUIRE(res.report.converged);
  auto prob = assemble_robust_problem(net.model, net.mask, net.constraints, x0);
  auto central = solve_central(prob, net.cost);
  REQUIRE(central.status == SolveStatus::Optimal);
  CHECK(std::abs(res.objective - central.objective) <=
        0.005 * (1.0 + std::abs(central.objective)));
}
