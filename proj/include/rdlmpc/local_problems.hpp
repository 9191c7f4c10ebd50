#ifndef RDLMPC_LOCAL_PROBLEMS_HPP_
#define RDLMPC_LOCAL_PROBLEMS_HPP_

#include <algorithm>
#include <map>
#include <vector>

#include "rdlmpc/constraints.hpp"
#include "rdlmpc/cost.hpp"
#include "rdlmpc/lsq.hpp"
#include "rdlmpc/qp.hpp"
#include "rdlmpc/structure.hpp"

namespace rdlmpc {

// Per-subsystem pieces of the splitting. Subsystem i owns
//  - the rows of the response belonging to its states and inputs (the first
//    block column entries, kept in `phi`), its constraint rows (`omega`,
//    `xi`, and the product `xig` = each xi row times its G slice), and the
//    scaled multipliers aligned with those layouts;
//  - the column blocks of the consensus copy Psi for its disturbance
//    coordinates, one block per time step.
// All flat vectors are packed in the canonical orders fixed below, which is
// what makes monolithic and message-passing execution bit-identical.

//! One row of the first block column owned by a subsystem.
struct PhiRowSpec {
  Index joint_row = 0;
  double weight = 0.0;        // stage cost weight of this row
  bool input_kind = false;    // selects the d+1 column support
  Index offset = 0;           // segment start in the flat phi vector
  Index size = 0;
};

//! One trajectory constraint row owned by a subsystem (robust mode).
struct ConsRowSpec {
  Index h_row = 0;  // global H row id
  bool input_kind = false;
  double rhs = 0.0;
  Index omega_offset = 0, omega_size = 0;  // into omega/lam2
  Index xi_offset = 0, xi_size = 0;        // into xi (pattern order)
  Index xig_offset = 0, xig_size = 0;      // into xig/lam3 (w-support order)
  std::vector<Index> g_rows;               // global G rows, ascending
  Vector g_rhs;                            // their right-hand sides
  std::vector<Index> w_support;            // global w columns, ascending
  // sparse G slice: per xi entry, its (position in w_support, coefficient)
  std::vector<std::vector<std::pair<Index, double>>> g_terms;
  // box fast path: per w-support position, the xi entries of the +1 / -1 row
  bool box_structure = false;
  std::vector<std::pair<Index, Index>> pm_rows;  // (plus entry, minus entry)
  // nominal mode: coefficients over the owner's phi rows, as
  // (phi row index in RowProblem::phi_rows, x0 coefficient scale) pairs
  std::vector<std::pair<Index, double>> nominal_terms;
};

//! Row-side data of one subsystem, fixed across iterations.
struct RowProblem {
  int subsystem = 0;
  std::vector<Index> x0_coords;      // gathered measurement coordinates
  std::vector<Index> state_pos;      // positions of the d-support in x0
  std::vector<Index> input_pos;      // positions of the d+1-support in x0
  std::vector<PhiRowSpec> phi_rows;
  std::vector<ConsRowSpec> cons_rows;
  Index phi_len = 0, omega_len = 0, xi_len = 0, xig_len = 0;
  std::vector<Index> u0_rows;  // phi_rows indices of the t = 0 input rows

  const std::vector<Index>& support_pos(bool input_kind) const {
    return input_kind ? input_pos : state_pos;
  }
  Index scratch_len() const { return phi_len + omega_len + xig_len; }
  //! Local iterate count used to scale the stopping tolerances.
  Index variable_count() const { return phi_len + omega_len + xig_len; }
};

//! Iterate storage for the row side.
struct RowState {
  Vector phi, omega, xi, xig;
  Vector lam1, lam2, lam3;

  void reset(const RowProblem& p) {
    phi = Vector::Zero(p.phi_len);
    omega = Vector::Zero(p.omega_len);
    xi = Vector::Zero(p.xi_len);
    xig = Vector::Zero(p.xig_len);
    lam1 = Vector::Zero(p.phi_len);
    lam2 = Vector::Zero(p.omega_len);
    lam3 = Vector::Zero(p.xig_len);
  }
};

//! Row view of the column-side consensus quantities (the shared pieces of
//! H-tilde Psi-tilde), aligned with the owner's row layouts.
struct RowTargets {
  Vector psi1, h_psi1, h_psi2;

  void reset(const RowProblem& p) {
    psi1 = Vector::Zero(p.phi_len);
    h_psi1 = Vector::Zero(p.omega_len);
    h_psi2 = Vector::Zero(p.xig_len);
  }
};

//! One column block (all columns of one subsystem at one time step).
struct ColBlockSpec {
  Index t_block = 0;
  Index n_cols = 0;
  std::vector<Index> var_rows;  // masked joint rows, ascending
  std::vector<Index> h_rows;    // global H rows with coupling here, ascending
  Matrix q_rhs;                 // achievability right-hand side
  EqualityLsqCache cache;
  Index n_eq = 0;
  bool with_identity_part = false;  // objective stacks [I; H] (t = 0 blocks)
  Matrix h_sub;                     // |h_rows| x |var_rows| coefficient slice
};

struct ColProblem {
  int subsystem = 0;
  std::vector<ColBlockSpec> blocks;  // t' = 0..T (robust) or just t' = 0
};

//! Iterate storage for the column side: one matrix per block,
//! var_rows x n_cols.
struct ColState {
  std::vector<Matrix> psi;

  void reset(const ColProblem& p) {
    psi.clear();
    for (const auto& b : p.blocks)
      psi.push_back(Matrix::Zero(static_cast<Index>(b.var_rows.size()),
                                 b.n_cols));
  }
};

//! Assembled objective targets for the column update of one subsystem.
struct ColTargets {
  // per block: identity-part target (var_rows x n_cols) and constraint-part
  // target (h_rows x n_cols)
  std::vector<Matrix> top, bottom;

  void reset(const ColProblem& p) {
    top.clear();
    bottom.clear();
    for (const auto& b : p.blocks) {
      top.push_back(Matrix::Zero(static_cast<Index>(b.var_rows.size()),
                                 b.n_cols));
      bottom.push_back(Matrix::Zero(static_cast<Index>(b.h_rows.size()),
                                    b.n_cols));
    }
  }
};

// ---------------------------------------------------------------------------
// Exchange plans. Values always travel packed in the order of the entries
// below; sender and receiver share the plan object.

//! Copy plan: row-owner flat storage -> column-owner objective target. The
//! sender-side scratch vector is the concatenation
//! [phi + lam1; omega + lam2; xig + lam3].
struct RowToColPlan {
  int from = 0, to = 0;
  struct Entry {
    Index src;     // offset into the sender-side scratch vector
    int block;     // receiver block index
    Index row, col;
    bool bottom;   // true: constraint-part target, false: identity part
  };
  std::vector<Entry> entries;
  bool has_state_payload = false, has_input_payload = false;
};

//! Product plan: column-owner psi -> row-owner targets. Each entry is a dot
//! product of psi values computed at the column owner.
struct ColToRowPlan {
  int from = 0, to = 0;
  struct Term {
    int block;
    Index lin;  // linear index into psi[block]
    double coef;
  };
  struct Entry {
    int dst_vec;  // 0: psi1, 1: h_psi1, 2: h_psi2
    Index dst;
    std::vector<Term> terms;
  };
  std::vector<Entry> entries;
  bool has_state_payload = false, has_input_payload = false;
};

inline void pack_row_fragments(const RowToColPlan& plan, const Vector& scratch,
                               std::vector<double>& payload) {
  payload.resize(plan.entries.size());
  for (size_t k = 0; k < plan.entries.size(); ++k)
    payload[k] = scratch[plan.entries[k].src];
}

inline void scatter_row_fragments(const RowToColPlan& plan,
                                  const std::vector<double>& payload,
                                  ColTargets& targets) {
  for (size_t k = 0; k < plan.entries.size(); ++k) {
    const auto& e = plan.entries[k];
    (e.bottom ? targets.bottom : targets.top)[e.block](e.row, e.col) =
        payload[k];
  }
}

inline void pack_col_fragments(const ColToRowPlan& plan, const ColState& state,
                               std::vector<double>& payload) {
  payload.resize(plan.entries.size());
  for (size_t k = 0; k < plan.entries.size(); ++k) {
    double acc = 0.0;
    for (const auto& t : plan.entries[k].terms)
      acc += t.coef * state.psi[t.block].data()[t.lin];
    payload[k] = acc;
  }
}

inline void scatter_col_fragments(const ColToRowPlan& plan,
                                  const std::vector<double>& payload,
                                  RowTargets& targets) {
  for (size_t k = 0; k < plan.entries.size(); ++k) {
    const auto& e = plan.entries[k];
    Vector& dst = e.dst_vec == 0   ? targets.psi1
                  : e.dst_vec == 1 ? targets.h_psi1
                                   : targets.h_psi2;
    dst[e.dst] = payload[k];
  }
}

// ---------------------------------------------------------------------------

//! All per-subsystem problems plus the exchange plans between them. Nominal
//! mode keeps only the first block column and applies trajectory constraints
//! directly in the row step.
class LocalProblems {
 public:
  LocalProblems(const SystemModel& model, const LocalityMask& mask,
                const IndexPartition& partition,
                const RobustConstraintData& constraints,
                const CostWeights& cost, bool robust)
      : model_(&model),
        mask_(&mask),
        constraints_(&constraints),
        robust_(robust) {
    const auto& lay = mask.layout();
    const int ns = model.n_subsystems();
    rows_.resize(ns);
    cols_.resize(ns);

    // Resolve a constraint row's touched joint rows.
    auto h_joint_terms = [&](const ConstraintRow& row) {
      std::vector<std::pair<Index, double>> terms;
      for (auto [c, v] : row.coeffs)
        terms.emplace_back(
            row.kind == ConstraintKind::State
                ? lay.x_row(row.time, model.state_offset(row.subsystem) + c)
                : lay.u_row(row.time, model.input_offset(row.subsystem) + c),
            v);
      return terms;
    };

    // --- row problems ---
    std::vector<std::vector<std::vector<Index>>> xi_pattern(ns);
    for (int i = 0; i < ns; ++i) {
      RowProblem& rp = rows_[i];
      rp.subsystem = i;
      for (int j : model.graph().in_set(i, mask.d() + 1))
        for (Index c = 0; c < model.state_dim(j); ++c)
          rp.x0_coords.push_back(model.state_offset(j) + c);
      std::sort(rp.x0_coords.begin(), rp.x0_coords.end());
      auto pos_of = [&](Index coord) {
        return static_cast<Index>(
            std::lower_bound(rp.x0_coords.begin(), rp.x0_coords.end(), coord) -
            rp.x0_coords.begin());
      };
      for (int j : model.graph().in_set(i, mask.d()))
        for (Index c = 0; c < model.state_dim(j); ++c)
          rp.state_pos.push_back(pos_of(model.state_offset(j) + c));
      std::sort(rp.state_pos.begin(), rp.state_pos.end());
      rp.input_pos.resize(rp.x0_coords.size());
      for (size_t k = 0; k < rp.x0_coords.size(); ++k)
        rp.input_pos[k] = static_cast<Index>(k);

      for (Index r : partition.row_sets[i]) {
        const auto& sup = mask.row_support(r);
        if (sup.empty()) continue;  // final input block
        PhiRowSpec spec;
        spec.joint_row = r;
        spec.weight = row_weight(cost, lay, r);
        spec.input_kind = lay.is_u_row(r);
        spec.offset = rp.phi_len;
        spec.size = static_cast<Index>(
            spec.input_kind ? rp.input_pos.size() : rp.state_pos.size());
        rp.phi_len += spec.size;
        if (spec.input_kind && lay.time_of_row(r) == 0)
          rp.u0_rows.push_back(static_cast<Index>(rp.phi_rows.size()));
        rp.phi_rows.push_back(spec);
      }

      // Constraint rows owned by this subsystem.
      for (Index hr = 0; hr < constraints.n_h_rows(); ++hr) {
        const auto& row = constraints.h_rows[hr];
        if (row.subsystem != i) continue;
        ConsRowSpec cs;
        cs.h_row = hr;
        cs.input_kind = row.kind == ConstraintKind::Input;
        cs.rhs = row.rhs;
        if (robust) {
          cs.omega_offset = rp.omega_len;
          cs.omega_size = static_cast<Index>(
              cs.input_kind ? rp.input_pos.size() : rp.state_pos.size());
          rp.omega_len += cs.omega_size;
          // Xi pattern and w-support.
          for (Index q = 0; q < constraints.n_g_rows(); ++q)
            if (xi_supported(mask, row, constraints.g_rows[q]))
              cs.g_rows.push_back(q);
          cs.g_rhs = Vector(cs.g_rows.size());
          std::map<Index, Index> wpos;
          for (size_t k = 0; k < cs.g_rows.size(); ++k) {
            const auto& gr = constraints.g_rows[cs.g_rows[k]];
            cs.g_rhs[k] = gr.rhs;
            for (auto [c, v] : gr.coeffs) {
              (void)v;
              wpos.emplace(lay.w_col(gr.time, model.state_offset(gr.subsystem) + c),
                           0);
            }
          }
          for (auto& [w, p] : wpos) {
            p = static_cast<Index>(cs.w_support.size());
            cs.w_support.push_back(w);
          }
          cs.g_terms.resize(cs.g_rows.size());
          for (size_t k = 0; k < cs.g_rows.size(); ++k) {
            const auto& gr = constraints.g_rows[cs.g_rows[k]];
            for (auto [c, v] : gr.coeffs)
              cs.g_terms[k].emplace_back(
                  wpos.at(lay.w_col(gr.time,
                                    model.state_offset(gr.subsystem) + c)),
                  v);
          }
          cs.xi_offset = rp.xi_len;
          cs.xi_size = static_cast<Index>(cs.g_rows.size());
          rp.xi_len += cs.xi_size;
          cs.xig_offset = rp.xig_len;
          cs.xig_size = static_cast<Index>(cs.w_support.size());
          rp.xig_len += cs.xig_size;

          // Detect the +/- unit-row pairing of box disturbance sets.
          std::vector<Index> plus(cs.w_support.size(), -1),
              minus(cs.w_support.size(), -1);
          bool box = true;
          for (size_t k = 0; k < cs.g_rows.size() && box; ++k) {
            if (cs.g_terms[k].size() != 1 || cs.g_rhs[k] < 0.0) {
              box = false;
              break;
            }
            auto [pos, v] = cs.g_terms[k][0];
            if (v == 1.0 && plus[pos] < 0)
              plus[pos] = static_cast<Index>(k);
            else if (v == -1.0 && minus[pos] < 0)
              minus[pos] = static_cast<Index>(k);
            else
              box = false;
          }
          for (size_t k = 0; k < cs.w_support.size() && box; ++k)
            if (plus[k] < 0 || minus[k] < 0) box = false;
          cs.box_structure = box;
          if (box)
            for (size_t k = 0; k < cs.w_support.size(); ++k)
              cs.pm_rows.emplace_back(plus[k], minus[k]);
        } else {
          // Nominal mode: the row touches this subsystem's phi rows.
          for (auto [jr, v] : h_joint_terms(row)) {
            for (size_t pr = 0; pr < rp.phi_rows.size(); ++pr)
              if (rp.phi_rows[pr].joint_row == jr)
                cs.nominal_terms.emplace_back(static_cast<Index>(pr), v);
          }
        }
        rp.cons_rows.push_back(std::move(cs));
      }
    }

    // --- column problems ---
    for (int i = 0; i < ns; ++i) {
      ColProblem& cp = cols_[i];
      cp.subsystem = i;
      const Index first_col_t = 0;
      const Index last_block = robust ? lay.T : first_col_t;
      for (Index tb = 0; tb <= last_block; ++tb) {
        ColBlockSpec blk;
        blk.t_block = tb;
        blk.n_cols = model.state_dim(i);
        const Index col0 = lay.w_col(tb, model.state_offset(i));
        blk.var_rows = mask.col_support(col0);
        if (blk.var_rows.empty()) continue;
        std::map<Index, Index> var_pos;
        for (size_t k = 0; k < blk.var_rows.size(); ++k)
          var_pos[blk.var_rows[k]] = static_cast<Index>(k);
        const Index nv = static_cast<Index>(blk.var_rows.size());

        // Achievability restriction: every equation of Z_AB Psi = I with a
        // coefficient on these variables, plus the diagonal identity rows.
        std::map<Index, std::map<Index, double>> eq;  // eq row -> var -> coef
        for (Index k = 0; k < nv; ++k) {
          const Index jr = blk.var_rows[k];
          const Index t = lay.time_of_row(jr);
          const Index coord = lay.coord_of_row(jr);
          if (!lay.is_u_row(jr)) {
            eq[lay.x_row(t, coord)][k] += 1.0;
            if (t + 1 <= lay.T) {
              const int sub = mask.subsystem_of_row(jr);
              for (int rsub = 0; rsub < ns; ++rsub) {
                const Matrix* a = model.a_block(rsub, sub);
                if (!a) continue;
                const Index local = coord - model.state_offset(sub);
                for (Index rr = 0; rr < a->rows(); ++rr)
                  if ((*a)(rr, local) != 0.0)
                    eq[lay.x_row(t + 1, model.state_offset(rsub) + rr)][k] -=
                        (*a)(rr, local);
              }
            }
          } else {
            const Index t_u = t;
            if (t_u + 1 <= lay.T) {
              const int sub = mask.subsystem_of_row(jr);
              for (int rsub = 0; rsub < ns; ++rsub) {
                const Matrix* b = model.b_block(rsub, sub);
                if (!b) continue;
                const Index local = coord - model.input_offset(sub);
                for (Index rr = 0; rr < b->rows(); ++rr)
                  if ((*b)(rr, local) != 0.0)
                    eq[lay.x_row(t_u + 1, model.state_offset(rsub) + rr)][k] -=
                        (*b)(rr, local);
              }
            }
          }
        }
        // Identity right-hand side rows for this block's columns.
        for (Index c = 0; c < blk.n_cols; ++c)
          eq[lay.x_row(tb, model.state_offset(i) + c)];

        blk.n_eq = static_cast<Index>(eq.size());
        Matrix p_mat = Matrix::Zero(blk.n_eq, nv);
        blk.q_rhs = Matrix::Zero(blk.n_eq, blk.n_cols);
        Index er_local = 0;
        for (const auto& [er, terms] : eq) {
          for (const auto& [var, coef] : terms) p_mat(er_local, var) = coef;
          for (Index c = 0; c < blk.n_cols; ++c)
            if (er == lay.x_row(tb, model.state_offset(i) + c))
              blk.q_rhs(er_local, c) = 1.0;
          ++er_local;
        }

        // Constraint rows coupled to this block.
        if (robust) {
          for (Index hr = 0; hr < constraints.n_h_rows(); ++hr) {
            const auto& row = constraints.h_rows[hr];
            if (row.time < tb) continue;
            const bool reach = row.kind == ConstraintKind::State
                                   ? mask.reach_state(i, row.subsystem)
                                   : mask.reach_input(i, row.subsystem);
            if (reach) blk.h_rows.push_back(hr);
          }
          blk.h_sub =
              Matrix::Zero(static_cast<Index>(blk.h_rows.size()), nv);
          for (size_t hl = 0; hl < blk.h_rows.size(); ++hl)
            for (auto [jr, v] : h_joint_terms(constraints.h_rows[blk.h_rows[hl]])) {
              auto it = var_pos.find(jr);
              require(it != var_pos.end(),
                      "constraint row touches a variable outside the mask");
              blk.h_sub(static_cast<Index>(hl), it->second) = v;
            }
        }

        blk.with_identity_part = !robust || tb == 0;
        Matrix m_mat;
        const Index nh = static_cast<Index>(blk.h_rows.size());
        if (blk.with_identity_part && robust) {
          m_mat = Matrix::Zero(nv + nh, nv);
          m_mat.topRows(nv) = Matrix::Identity(nv, nv);
          m_mat.bottomRows(nh) = blk.h_sub;
        } else if (blk.with_identity_part) {
          m_mat = Matrix::Identity(nv, nv);
        } else {
          m_mat = blk.h_sub;
        }
        blk.cache = EqualityLsqCache(m_mat, p_mat);
        cp.blocks.push_back(std::move(blk));
      }
    }

    build_plans(partition);
  }

  const SystemModel& model() const { return *model_; }
  const LocalityMask& mask() const { return *mask_; }
  const RobustConstraintData& constraints() const { return *constraints_; }
  bool robust() const { return robust_; }
  const RowProblem& row_problem(int i) const { return rows_[i]; }
  const ColProblem& col_problem(int i) const { return cols_[i]; }
  const std::vector<RowToColPlan>& row_to_col_plans(int from) const {
    return r2c_[from];
  }
  const std::vector<ColToRowPlan>& col_to_row_plans(int from) const {
    return c2r_[from];
  }

  //! Measurement coordinates subsystem i needs (the d+1 in-neighborhood).
  const std::vector<Index>& x0_coords(int i) const { return rows_[i].x0_coords; }

 private:
  void build_plans(const IndexPartition& partition) {
    const auto& lay = mask_->layout();
    const SystemModel& model = *model_;
    const int ns = model.n_subsystems();
    r2c_.resize(ns);
    c2r_.resize(ns);

    // Fast lookups: joint row -> (owner, phi row index); H row -> (owner,
    // cons row index).
    std::vector<std::pair<int, Index>> phi_of_row(lay.joint_rows(), {-1, 0});
    for (int i = 0; i < ns; ++i)
      for (size_t k = 0; k < rows_[i].phi_rows.size(); ++k)
        phi_of_row[rows_[i].phi_rows[k].joint_row] = {i, static_cast<Index>(k)};
    std::vector<std::pair<int, Index>> cons_of_hrow(
        constraints_->n_h_rows(), {-1, 0});
    for (int i = 0; i < ns; ++i)
      for (size_t k = 0; k < rows_[i].cons_rows.size(); ++k)
        cons_of_hrow[rows_[i].cons_rows[k].h_row] = {i, static_cast<Index>(k)};

    auto phi_src_offset = [&](int owner, Index phi_idx, Index coord) {
      const RowProblem& rp = rows_[owner];
      const PhiRowSpec& spec = rp.phi_rows[phi_idx];
      const auto& pos = rp.support_pos(spec.input_kind);
      // find the slot whose x0 coordinate equals coord
      for (size_t k = 0; k < pos.size(); ++k)
        if (rp.x0_coords[pos[k]] == coord)
          return spec.offset + static_cast<Index>(k);
      throw StructuralError("phi fragment outside the sender's support");
    };

    std::vector<std::vector<RowToColPlan>> r2c(ns);
    std::vector<std::vector<ColToRowPlan>> c2r(ns);
    std::map<std::pair<int, int>, Index> r2c_index, c2r_index;
    auto r2c_plan = [&](int from, int to) -> RowToColPlan& {
      auto key = std::make_pair(from, to);
      auto it = r2c_index.find(key);
      if (it == r2c_index.end()) {
        it = r2c_index.emplace(key, static_cast<Index>(r2c[from].size())).first;
        r2c[from].push_back({from, to, {}, false, false});
      }
      return r2c[from][it->second];
    };
    auto c2r_plan = [&](int from, int to) -> ColToRowPlan& {
      auto key = std::make_pair(from, to);
      auto it = c2r_index.find(key);
      if (it == c2r_index.end()) {
        it = c2r_index.emplace(key, static_cast<Index>(c2r[from].size())).first;
        c2r[from].push_back({from, to, {}, false, false});
      }
      return c2r[from][it->second];
    };

    for (int j = 0; j < ns; ++j) {
      const ColProblem& cp = cols_[j];
      for (size_t bi = 0; bi < cp.blocks.size(); ++bi) {
        const ColBlockSpec& blk = cp.blocks[bi];
        if (blk.t_block == 0) {
          // identity-part targets: phi + lam1 fragments from row owners
          for (size_t vr = 0; vr < blk.var_rows.size(); ++vr) {
            auto [owner, phi_idx] = phi_of_row[blk.var_rows[vr]];
            require(owner >= 0, "column variable without a row owner");
            const bool input_kind = rows_[owner].phi_rows[phi_idx].input_kind;
            for (Index c = 0; c < blk.n_cols; ++c) {
              RowToColPlan& plan = r2c_plan(owner, j);
              plan.entries.push_back(
                  {phi_src_offset(owner, phi_idx,
                                  model.state_offset(j) + c),
                   static_cast<int>(bi), static_cast<Index>(vr), c, false});
              (input_kind ? plan.has_input_payload : plan.has_state_payload) =
                  true;
            }
          }
        }
        // constraint-part targets
        for (size_t hl = 0; hl < blk.h_rows.size(); ++hl) {
          auto [owner, cons_idx] = cons_of_hrow[blk.h_rows[hl]];
          require(owner >= 0, "constraint row without an owner");
          const ConsRowSpec& cs = rows_[owner].cons_rows[cons_idx];
          for (Index c = 0; c < blk.n_cols; ++c) {
            RowToColPlan& plan = r2c_plan(owner, j);
            const RowProblem& orp = rows_[owner];
            Index src;
            if (blk.t_block == 0) {
              // omega + lam2 fragment at this column coordinate
              const auto& pos = orp.support_pos(cs.input_kind);
              Index slot = -1;
              for (size_t k = 0; k < pos.size(); ++k)
                if (orp.x0_coords[pos[k]] == model.state_offset(j) + c)
                  slot = static_cast<Index>(k);
              require(slot >= 0, "omega fragment outside support");
              src = orp.phi_len + cs.omega_offset + slot;
            } else {
              // xig + lam3 fragment at this disturbance column
              const Index w = lay.w_col(blk.t_block, model.state_offset(j) + c);
              auto it = std::lower_bound(cs.w_support.begin(),
                                         cs.w_support.end(), w);
              require(it != cs.w_support.end() && *it == w,
                      "xig fragment outside support");
              src = orp.phi_len + orp.omega_len + cs.xig_offset +
                    static_cast<Index>(it - cs.w_support.begin());
            }
            plan.entries.push_back(
                {src, static_cast<int>(bi), static_cast<Index>(hl), c, true});
            (cs.input_kind ? plan.has_input_payload : plan.has_state_payload) =
                true;
          }
        }
      }
    }

    // Column -> row plans.
    for (int j = 0; j < ns; ++j) {
      const ColProblem& cp = cols_[j];
      for (size_t bi = 0; bi < cp.blocks.size(); ++bi) {
        const ColBlockSpec& blk = cp.blocks[bi];
        std::map<Index, Index> var_pos;
        for (size_t k = 0; k < blk.var_rows.size(); ++k)
          var_pos[blk.var_rows[k]] = static_cast<Index>(k);
        const Index nv = static_cast<Index>(blk.var_rows.size());

        if (blk.t_block == 0) {
          // psi1 row fragments
          for (size_t vr = 0; vr < blk.var_rows.size(); ++vr) {
            auto [owner, phi_idx] = phi_of_row[blk.var_rows[vr]];
            const RowProblem& rp = rows_[owner];
            const PhiRowSpec& spec = rp.phi_rows[phi_idx];
            const auto& pos = rp.support_pos(spec.input_kind);
            for (Index c = 0; c < blk.n_cols; ++c) {
              Index slot = -1;
              for (size_t k = 0; k < pos.size(); ++k)
                if (rp.x0_coords[pos[k]] == model.state_offset(j) + c)
                  slot = static_cast<Index>(k);
              require(slot >= 0, "psi fragment outside support");
              ColToRowPlan& plan = c2r_plan(j, owner);
              plan.entries.push_back(
                  {0, spec.offset + slot,
                   {{static_cast<int>(bi),
                     static_cast<Index>(c * nv + static_cast<Index>(vr)),
                     1.0}}});
              (spec.input_kind ? plan.has_input_payload
                               : plan.has_state_payload) = true;
            }
          }
        }
        // H psi fragments
        for (size_t hl = 0; hl < blk.h_rows.size(); ++hl) {
          auto [owner, cons_idx] = cons_of_hrow[blk.h_rows[hl]];
          const ConsRowSpec& cs = rows_[owner].cons_rows[cons_idx];
          for (Index c = 0; c < blk.n_cols; ++c) {
            ColToRowPlan& plan = c2r_plan(j, owner);
            ColToRowPlan::Entry entry;
            if (blk.t_block == 0) {
              const auto& pos = rows_[owner].support_pos(cs.input_kind);
              Index slot = -1;
              for (size_t k = 0; k < pos.size(); ++k)
                if (rows_[owner].x0_coords[pos[k]] ==
                    model.state_offset(j) + c)
                  slot = static_cast<Index>(k);
              require(slot >= 0, "h.psi fragment outside support");
              entry.dst_vec = 1;
              entry.dst = cs.omega_offset + slot;
            } else {
              const Index w = lay.w_col(blk.t_block, model.state_offset(j) + c);
              auto it = std::lower_bound(cs.w_support.begin(),
                                         cs.w_support.end(), w);
              require(it != cs.w_support.end() && *it == w,
                      "h.psi2 fragment outside support");
              entry.dst_vec = 2;
              entry.dst = cs.xig_offset +
                          static_cast<Index>(it - cs.w_support.begin());
            }
            for (Index v = 0; v < nv; ++v)
              if (blk.h_sub(static_cast<Index>(hl), v) != 0.0)
                entry.terms.push_back({static_cast<int>(bi),
                                       static_cast<Index>(c * nv + v),
                                       blk.h_sub(static_cast<Index>(hl), v)});
            plan.entries.push_back(std::move(entry));
            (cs.input_kind ? plan.has_input_payload : plan.has_state_payload) =
                true;
          }
        }
      }
    }

    r2c_ = std::move(r2c);
    c2r_ = std::move(c2r);
    (void)partition;
  }

  const SystemModel* model_;
  const LocalityMask* mask_;
  const RobustConstraintData* constraints_;
  bool robust_;
  std::vector<RowProblem> rows_;
  std::vector<ColProblem> cols_;
  std::vector<std::vector<RowToColPlan>> r2c_;
  std::vector<std::vector<ColToRowPlan>> c2r_;
};

}  // namespace rdlmpc

#endif  // RDLMPC_LOCAL_PROBLEMS_HPP_
