#include "rdlmpc/structure.hpp"

#include <catch_amalgamated.hpp>

#include "rdlmpc/model.hpp"

using namespace rdlmpc;

namespace {
SystemModel chain(int n) {
  return make_chain_system(n, 0.8, 2.0, std::vector<double>(n, 1.0));
}
}  // namespace

TEST_CASE("fully connected graph yields full causal support", "[structure]") {
  // 3 subsystems, all-to-all coupling
  std::vector<Block> ab;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) ab.push_back({i, j, Matrix::Ones(1, 1)});
  SystemModel model({1, 1, 1}, {1, 1, 1}, ab,
                    {{0, 0, Matrix::Ones(1, 1)},
                     {1, 1, Matrix::Ones(1, 1)},
                     {2, 2, Matrix::Ones(1, 1)}});
  const Index T = 2;
  LocalityMask mask(model, 1, T);
  const auto& lay = mask.layout();
  for (Index r = 0; r < lay.joint_rows(); ++r) {
    const bool is_last_u = lay.is_u_row(r) && lay.time_of_row(r) == T;
    for (Index c = 0; c < lay.w_cols(); ++c) {
      const bool causal = lay.time_of_col(c) <= lay.time_of_row(r);
      CHECK(mask.supported(r, c) == (causal && !is_last_u));
    }
  }
}

TEST_CASE("chain mask columns reach d hops for states, d+1 for inputs",
          "[structure]") {
  SystemModel model = chain(10);
  LocalityMask mask(model, 3, 5);
  const auto& lay = mask.layout();
  // Column of subsystem 0 at time 0: state rows within 3 hops only.
  for (Index r = 0; r < lay.x_rows(); ++r) {
    const int sub = mask.subsystem_of_row(r);
    CHECK(mask.supported(r, 0) == (sub <= 3));
  }
  for (Index r = lay.x_rows(); r < lay.joint_rows(); ++r) {
    const int sub = mask.subsystem_of_row(r);
    const bool expect = sub <= 4 && lay.time_of_row(r) < lay.T;
    CHECK(mask.supported(r, 0) == expect);
  }
}

TEST_CASE("mask support is monotone in d", "[structure]") {
  SystemModel model = chain(6);
  LocalityMask small(model, 1, 3), big(model, 2, 3);
  const auto& lay = small.layout();
  for (Index r = 0; r < lay.joint_rows(); ++r)
    for (Index c : small.row_support(r)) CHECK(big.supported(r, c));
  CHECK(small.support_size() < big.support_size());
}

TEST_CASE("mask respects causality", "[structure]") {
  SystemModel model = chain(4);
  LocalityMask mask(model, 2, 3);
  const auto& lay = mask.layout();
  for (Index r = 0; r < lay.joint_rows(); ++r)
    for (Index c : mask.row_support(r))
      CHECK(lay.time_of_col(c) <= lay.time_of_row(r));
}

TEST_CASE("single subsystem partition covers everything", "[structure]") {
  SystemModel model({2}, {1}, {{0, 0, Matrix::Identity(2, 2)}},
                    {{0, 0, Matrix::Ones(2, 1)}});
  LocalityMask mask(model, 0, 2);
  auto part = partition_indices(model, mask);
  REQUIRE(part.row_sets.size() == 1);
  CHECK(part.row_sets[0].size() == static_cast<size_t>(mask.layout().joint_rows()));
  CHECK(part.col_sets[0].size() == static_cast<size_t>(mask.layout().w_cols()));
}

TEST_CASE("chain N=5 d=1: column block of middle subsystem", "[structure]") {
  SystemModel model = chain(5);
  LocalityMask mask(model, 1, 2);
  auto part = partition_indices(model, mask);
  // State rows present in subsystem 2's column block come from {1, 2, 3}.
  for (Index r : part.col_block_rows[2]) {
    if (mask.layout().is_u_row(r)) continue;
    const int sub = mask.subsystem_of_row(r);
    CHECK(sub >= 1);
    CHECK(sub <= 3);
  }
}

TEST_CASE("reduced sets cover exactly the mask support", "[structure]") {
  SystemModel model = chain(10);
  LocalityMask mask(model, 3, 3);
  auto part = partition_indices(model, mask);
  Index total = 0;
  for (int i = 0; i < model.n_subsystems(); ++i) {
    for (Index c : part.col_sets[i])
      total += static_cast<Index>(mask.col_support(c).size());
  }
  CHECK(total == mask.support_size());

  // Row sets partition all rows.
  std::vector<bool> seen(mask.layout().joint_rows(), false);
  for (const auto& rows : part.row_sets)
    for (Index r : rows) {
      CHECK(!seen[r]);
      seen[r] = true;
    }
  for (bool s : seen) CHECK(s);
}
