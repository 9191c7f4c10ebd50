#include "rdlmpc/operators.hpp"

#include <catch_amalgamated.hpp>

using namespace rdlmpc;

TEST_CASE("downshift for n = 1, T = 1", "[operators]") {
  Matrix z = Matrix(build_block_downshift(1, 1));
  Matrix expect(2, 2);
  expect << 0, 0, 1, 0;
  CHECK((z - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("downshift is nilpotent", "[operators]") {
  Matrix z = Matrix(build_block_downshift(3, 1));
  CHECK((z * z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("downshift block placement for n = 2, T = 2", "[operators]") {
  Matrix z = Matrix(build_block_downshift(2, 2));
  REQUIRE(z.rows() == 6);
  Matrix expect = Matrix::Zero(6, 6);
  expect.block(2, 0, 2, 2) = Matrix::Identity(2, 2);
  expect.block(4, 2, 2, 2) = Matrix::Identity(2, 2);
  CHECK((z - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zab for scalar system matches direct expansion", "[operators]") {
  const double a = 0.7, b = -1.3;
  SystemModel model({1}, {1}, {{0, 0, Matrix::Constant(1, 1, a)}},
                    {{0, 0, Matrix::Constant(1, 1, b)}});
  Matrix zab = Matrix(build_zab(model, 1));
  Matrix expect(2, 4);
  expect << 1, 0, 0, 0,
      -a, 1, -b, 0;
  CHECK((zab - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zab with zero dynamics forces identity state response",
          "[operators]") {
  SystemModel model({1, 1}, {1, 1},
                    {{0, 0, Matrix::Zero(1, 1)}},
                    {{1, 1, Matrix::Zero(1, 1)}});
  const Index T = 2;
  Matrix zab = Matrix(build_zab(model, T));
  const auto n_rows = model.total_state_dim() * (T + 1);
  // With A = B = 0, Z_AB = [I, 0]: the state part of any solution of
  // Z_AB Phi = I must be the identity.
  CHECK((zab.leftCols(n_rows) - Matrix::Identity(n_rows, n_rows))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(zab.rightCols(model.total_input_dim() * (T + 1)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("disturbance stacking convention", "[operators]") {
  Vector x0(2);
  x0 << 1, 2;
  Matrix w(2, 2);
  w << 3, 5, 4, 6;
  auto sig = stack_disturbance(x0, w);
  REQUIRE(sig.data.size() == 6);
  CHECK(sig.block(0)[0] == 1);
  CHECK(sig.block(1)[1] == 4);
  CHECK(sig.block(2)[0] == 5);
}

TEST_CASE("model step matches dense matrices", "[operators]") {
  SystemModel model = make_chain_system(4, 0.8, 2.0, {1, 0, 1, 1});
  Vector x = Vector::LinSpaced(4, 1, 4), u = Vector::Ones(4),
         w = Vector::Constant(4, 0.5);
  Vector direct = model.dense_a() * x + model.dense_b() * u + w;
  CHECK((model.step(x, u, w) - direct).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("block dimension mismatch throws", "[operators]") {
  CHECK_THROWS_AS(SystemModel({1, 2}, {1, 1},
                              {{0, 1, Matrix::Zero(1, 1)}}, {}),
                  StructuralError);
}
