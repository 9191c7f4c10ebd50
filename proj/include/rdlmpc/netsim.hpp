#ifndef RDLMPC_NETSIM_HPP_
#define RDLMPC_NETSIM_HPP_

#include <chrono>
#include <deque>
#include <vector>

#include "rdlmpc/admm.hpp"
#include "rdlmpc/engine.hpp"

namespace rdlmpc {

enum class PayloadClass { StateRows, InputRows, Measurement, Reduction };

inline const char* payload_class_name(PayloadClass c) {
  switch (c) {
    case PayloadClass::StateRows: return "state";
    case PayloadClass::InputRows: return "input";
    case PayloadClass::Measurement: return "measurement";
    default: return "reduction";
  }
}

struct Message {
  int sender = 0;
  int receiver = 0;
  int round = 0;
  PayloadClass cls = PayloadClass::StateRows;
  int hops = 0;
  std::vector<double> payload;

  size_t bytes() const { return payload.size() * sizeof(double); }
};

//! Per-run communication accounting. Every send is checked against the
//! d-local limits: state-row payloads may travel at most d hops, input-row
//! payloads and measurements at most d+1, reduction traffic moves along the
//! spanning tree one hop at a time.
class CommunicationAudit {
 public:
  CommunicationAudit() = default;
  CommunicationAudit(int n_nodes, int d) : d_(d) {
    sent_count_.assign(n_nodes, 0);
    sent_bytes_.assign(n_nodes, 0);
    max_hops_.assign(4, 0);
  }

  int hop_limit(PayloadClass cls) const {
    switch (cls) {
      case PayloadClass::StateRows: return d_;
      case PayloadClass::InputRows: return d_ + 1;
      case PayloadClass::Measurement: return d_ + 1;
      default: return 1;
    }
  }

  void record(const Message& msg) {
    if (msg.hops > hop_limit(msg.cls))
      throw StructuralError(std::string("locality audit violation: ") +
                            payload_class_name(msg.cls) + " payload over " +
                            std::to_string(msg.hops) + " hops");
    ++total_messages_;
    total_bytes_ += msg.bytes();
    ++sent_count_[msg.sender];
    sent_bytes_[msg.sender] += msg.bytes();
    auto& m = max_hops_[static_cast<int>(msg.cls)];
    m = std::max(m, msg.hops);
  }

  long total_messages() const { return total_messages_; }
  size_t total_bytes() const { return total_bytes_; }
  const std::vector<long>& sent_count() const { return sent_count_; }
  const std::vector<size_t>& sent_bytes() const { return sent_bytes_; }
  int max_hops(PayloadClass cls) const {
    return max_hops_[static_cast<int>(cls)];
  }

 private:
  int d_ = 0;
  long total_messages_ = 0;
  size_t total_bytes_ = 0;
  std::vector<long> sent_count_;
  std::vector<size_t> sent_bytes_;
  std::vector<int> max_hops_;
};

struct CommunicationStats {
  long total_messages = 0;
  size_t total_bytes = 0;
  int iterations = 0;
  int max_state_hops = 0;
  int max_input_hops = 0;
  int max_measurement_hops = 0;
  int max_reduction_hops = 0;
  std::vector<long> messages_per_node;
  std::vector<size_t> bytes_per_node;

  double messages_per_node_per_iteration(int node) const {
    return iterations == 0
               ? 0.0
               : static_cast<double>(messages_per_node[node]) / iterations;
  }
};

//! One sub-controller: its row/column subproblems, iterate state, and inbox.
//! A node touches only its own state and the payloads delivered to it.
struct SubsystemNode {
  int id = 0;
  const RowProblem* row_problem = nullptr;
  const ColProblem* col_problem = nullptr;
  RowState row_state;
  ColState col_state;
  RowTargets row_targets, prev_targets;
  ColTargets col_targets;
  Vector x0_local;
  double rho = 1.0;
  double solve_seconds = 0.0;
  // reduction scratch
  double acc_primal = 0.0, acc_dual = 0.0;
  int acc_violations = 0;
};

//! Bulk-synchronous execution of the per-subsystem algorithm: measure and
//! share the local state, iterate row solve / share / column solve / share /
//! multiplier update, then agree on convergence and the penalty through a
//! spanning-tree reduction. Channels are the only inter-node data path.
class DistributedAdmmSolver {
 public:
  DistributedAdmmSolver(const LocalProblems& problems, AdmmParams params)
      : problems_(&problems),
        params_(params),
        tree_(problems.model().graph()) {
    params_.validate();
    const int ns = problems.model().n_subsystems();
    nodes_.resize(ns);
    for (int i = 0; i < ns; ++i) {
      nodes_[i].id = i;
      nodes_[i].row_problem = &problems.row_problem(i);
      nodes_[i].col_problem = &problems.col_problem(i);
    }
    hops_.assign(ns, std::vector<int>(ns, -1));
    const auto& graph = problems.model().graph();
    for (int a = 0; a < ns; ++a)
      for (int b = 0; b < ns; ++b) {
        const int ab = graph.distance(a, b), ba = graph.distance(b, a);
        if (ab >= 0 && ba >= 0)
          hops_[a][b] = std::min(ab, ba);
        else
          hops_[a][b] = std::max(ab, ba);
      }
    // measurement delivery positions: receiver j needs sender i's state
    // coordinates at the positions of i's block inside j's gathered vector
    meas_plan_.resize(ns);
    for (int j = 0; j < ns; ++j) {
      const auto& coords = problems.x0_coords(j);
      for (int i = 0; i < ns; ++i) {
        std::vector<Index> pos;
        for (Index c = 0; c < problems.model().state_dim(i); ++c) {
          const Index coord = problems.model().state_offset(i) + c;
          const auto it =
              std::lower_bound(coords.begin(), coords.end(), coord);
          if (it != coords.end() && *it == coord)
            pos.push_back(static_cast<Index>(it - coords.begin()));
        }
        if (!pos.empty()) meas_plan_[j].push_back({i, pos});
      }
    }
    reset_states();
  }

  void reset_states() {
    for (auto& node : nodes_) {
      node.row_state.reset(*node.row_problem);
      node.col_state.reset(*node.col_problem);
      node.row_targets.reset(*node.row_problem);
      node.prev_targets.reset(*node.row_problem);
      node.col_targets.reset(*node.col_problem);
      node.rho = params_.rho0;
    }
  }

  AdmmSolveResult solve(const Vector& x0, bool warm_start = false) {
    const int ns = static_cast<int>(nodes_.size());
    if (!warm_start) reset_states();
    if (warm_start)
      for (auto& node : nodes_) node.rho = params_.rho0;
    audit_ = CommunicationAudit(ns, problems_->mask().d());
    round_ = 0;
    for (auto& node : nodes_) node.solve_seconds = 0.0;

    // Steps 1-2: measure the local state, share with the neighborhood.
    for (int i = 0; i < ns; ++i)
      nodes_[i].x0_local = Vector::Zero(problems_->x0_coords(i).size());
    for (int i = 0; i < ns; ++i) {
      Vector own(problems_->model().state_dim(i));
      for (Index c = 0; c < own.size(); ++c)
        own[c] = x0[problems_->model().state_offset(i) + c];
      // local copy
      deliver_measurement(i, i, own);
      for (int j = 0; j < ns; ++j) {
        if (j == i || !needs_measurement(j, i)) continue;
        Message msg{i, j, round_, PayloadClass::Measurement, hops_[i][j],
                    std::vector<double>(own.data(), own.data() + own.size())};
        audit_.record(msg);
        deliver_measurement(j, i, Eigen::Map<const Vector>(
                                      msg.payload.data(), msg.payload.size()));
      }
    }
    ++round_;

    std::vector<double> scale_p(ns), scale_d(ns);
    for (int i = 0; i < ns; ++i) {
      const double c =
          params_.scale_eps_by_sqrt_count
              ? std::sqrt(static_cast<double>(std::max<Index>(
                    1, nodes_[i].row_problem->variable_count())))
              : 1.0;
      scale_p[i] = params_.eps_p * c;
      scale_d[i] = params_.eps_d * c;
    }

    AdmmSolveResult out;
    AdmmReport& rep = out.report;
    std::vector<double> buf;
    int iter = 0;
    for (; iter < params_.max_iters; ++iter) {
      // Step 3: local row solves.
      for (auto& node : nodes_) {
        const auto t0 = std::chrono::steady_clock::now();
        update_rows(*node.row_problem, node.row_targets, node.x0_local,
                    node.rho, params_, problems_->robust(), node.row_state);
        node.solve_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
      }

      // Step 4: share row blocks with the outgoing neighborhood.
      for (int i = 0; i < ns; ++i) {
        const RowProblem& rp = *nodes_[i].row_problem;
        const RowState& st = nodes_[i].row_state;
        Vector scratch(rp.scratch_len());
        scratch.head(rp.phi_len) = st.phi + st.lam1;
        if (rp.omega_len > 0)
          scratch.segment(rp.phi_len, rp.omega_len) = st.omega + st.lam2;
        if (rp.xig_len > 0) scratch.tail(rp.xig_len) = st.xig + st.lam3;
        for (const auto& plan : problems_->row_to_col_plans(i)) {
          pack_row_fragments(plan, scratch, buf);
          if (plan.to != i) {
            Message msg{i, plan.to, round_, classify(plan.has_state_payload),
                        hops_[i][plan.to], buf};
            audit_.record(msg);
          }
          scatter_row_fragments(plan, buf, nodes_[plan.to].col_targets);
        }
      }
      ++round_;

      // Step 5: closed-form column solves.
      for (auto& node : nodes_) {
        const auto t0 = std::chrono::steady_clock::now();
        update_columns(*node.col_problem, node.col_targets, node.col_state);
        node.solve_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
      }

      // Step 6: share column blocks back to the row owners.
      for (auto& node : nodes_) node.prev_targets = node.row_targets;
      for (int j = 0; j < ns; ++j)
        for (const auto& plan : problems_->col_to_row_plans(j)) {
          pack_col_fragments(plan, nodes_[j].col_state, buf);
          if (plan.to != j) {
            Message msg{j, plan.to, round_, classify(plan.has_state_payload),
                        hops_[j][plan.to], buf};
            audit_.record(msg);
          }
          scatter_col_fragments(plan, buf, nodes_[plan.to].row_targets);
        }
      ++round_;

      // Step 7: multiplier update.
      for (auto& node : nodes_) update_multipliers(node.row_state, node.row_targets);

      // Step 8: spanning-tree reduction of residual norms and convergence
      // flags, then the penalty decision broadcast back down.
      for (auto& node : nodes_) {
        node.acc_primal = local_primal_sq(node.row_state, node.row_targets);
        node.acc_dual = local_dual_sq(node.row_targets, node.prev_targets);
        node.acc_violations =
            (std::sqrt(node.acc_primal) > scale_p[node.id] ||
             std::sqrt(node.acc_dual) > scale_d[node.id])
                ? 1
                : 0;
      }
      for (int v : tree_.bottom_up) {
        double sp = 0.0, sd = 0.0;
        int viol = 0;
        for (int c : tree_.children[v]) {
          sp += nodes_[c].acc_primal;
          sd += nodes_[c].acc_dual;
          viol += nodes_[c].acc_violations;
        }
        nodes_[v].acc_primal += sp;
        nodes_[v].acc_dual += sd;
        nodes_[v].acc_violations += viol;
        if (tree_.parent[v] >= 0) {
          Message msg{v, tree_.parent[v], round_, PayloadClass::Reduction, 1,
                      {nodes_[v].acc_primal, nodes_[v].acc_dual,
                       static_cast<double>(nodes_[v].acc_violations)}};
          audit_.record(msg);
        }
      }
      const double r_norm = std::sqrt(nodes_[0].acc_primal);
      const double s_norm = nodes_[0].rho * std::sqrt(nodes_[0].acc_dual);
      const bool converged = nodes_[0].acc_violations == 0;
      if (params_.record_trace)
        rep.trace.push_back({iter, nodes_[0].rho, r_norm, s_norm});
      rep.primal_residual = r_norm;
      rep.dual_residual = s_norm;

      // Broadcast the decision along tree edges, top-down.
      std::deque<int> order{0};
      double next_rho_global =
          params_.per_subsystem_rho
              ? 0.0
              : penalty_update(nodes_[0].rho, r_norm, s_norm, params_, iter);
      while (!order.empty()) {
        const int v = order.front();
        order.pop_front();
        for (int c : tree_.children[v]) {
          Message msg{v, c, round_, PayloadClass::Reduction, 1,
                      {converged ? 1.0 : 0.0, next_rho_global}};
          audit_.record(msg);
          order.push_back(c);
        }
      }
      ++round_;
      if (converged) {
        rep.converged = true;
        ++iter;
        break;
      }
      if (params_.per_subsystem_rho) {
        for (auto& node : nodes_) {
          const double lp =
              std::sqrt(local_primal_sq(node.row_state, node.row_targets));
          const double ld = node.rho * std::sqrt(local_dual_sq(
                                           node.row_targets, node.prev_targets));
          node.rho = penalty_update(node.rho, lp, ld, params_, iter);
        }
      } else {
        for (auto& node : nodes_) node.rho = next_rho_global;
      }
    }
    rep.iterations = iter;

    std::vector<double> objs(ns);
    for (int i = 0; i < ns; ++i)
      objs[i] = local_objective(*nodes_[i].row_problem, nodes_[i].row_state,
                                nodes_[i].x0_local);
    rep.objective = tree_.sum(objs);
    out.objective = rep.objective;

    // Step 8 action: [u_0]_i from the local row iterate.
    const auto& lay = problems_->mask().layout();
    out.u0 = Vector::Zero(problems_->model().total_input_dim());
    for (int i = 0; i < ns; ++i) {
      const RowProblem& rp = *nodes_[i].row_problem;
      for (Index pr : rp.u0_rows) {
        const auto& spec = rp.phi_rows[pr];
        const auto& pos = rp.support_pos(spec.input_kind);
        double s = 0.0;
        for (Index k = 0; k < spec.size; ++k)
          s += nodes_[i].row_state.phi[spec.offset + k] *
               nodes_[i].x0_local[pos[k]];
        out.u0[lay.coord_of_row(spec.joint_row)] = s;
      }
    }
    out.node_solve_seconds.resize(ns);
    for (int i = 0; i < ns; ++i)
      out.node_solve_seconds[i] = nodes_[i].solve_seconds;
    stats_iterations_ = iter;
    return out;
  }

  CommunicationStats stats() const {
    CommunicationStats s;
    s.total_messages = audit_.total_messages();
    s.total_bytes = audit_.total_bytes();
    s.iterations = stats_iterations_;
    s.max_state_hops = audit_.max_hops(PayloadClass::StateRows);
    s.max_input_hops = audit_.max_hops(PayloadClass::InputRows);
    s.max_measurement_hops = audit_.max_hops(PayloadClass::Measurement);
    s.max_reduction_hops = audit_.max_hops(PayloadClass::Reduction);
    s.messages_per_node = audit_.sent_count();
    s.bytes_per_node.assign(audit_.sent_bytes().begin(),
                            audit_.sent_bytes().end());
    return s;
  }

  const SubsystemNode& node(int i) const { return nodes_[i]; }
  const LocalProblems& problems() const { return *problems_; }

  //! Dense response assembled from the node column iterates.
  SystemResponse assemble_response() const {
    const auto& lay = problems_->mask().layout();
    SystemResponse resp(lay);
    for (const auto& node : nodes_) {
      const ColProblem& cp = *node.col_problem;
      for (size_t b = 0; b < cp.blocks.size(); ++b) {
        const auto& blk = cp.blocks[b];
        for (size_t vr = 0; vr < blk.var_rows.size(); ++vr)
          for (Index c = 0; c < blk.n_cols; ++c) {
            const Index col = lay.w_col(
                blk.t_block, problems_->model().state_offset(node.id) + c);
            const Index r = blk.var_rows[vr];
            if (lay.is_u_row(r))
              resp.phi_u(r - lay.x_rows(), col) =
                  node.col_state.psi[b](static_cast<Index>(vr), c);
            else
              resp.phi_x(r, col) =
                  node.col_state.psi[b](static_cast<Index>(vr), c);
          }
      }
    }
    return resp;
  }

 private:
  static PayloadClass classify(bool has_state_payload) {
    return has_state_payload ? PayloadClass::StateRows
                             : PayloadClass::InputRows;
  }

  bool needs_measurement(int receiver, int sender) const {
    for (const auto& [snd, pos] : meas_plan_[receiver])
      if (snd == sender) return true;
    return false;
  }

  void deliver_measurement(int receiver, int sender, const Vector& values) {
    for (const auto& [snd, pos] : meas_plan_[receiver])
      if (snd == sender)
        for (size_t k = 0; k < pos.size(); ++k)
          nodes_[receiver].x0_local[pos[k]] = values[static_cast<Index>(k)];
  }

  const LocalProblems* problems_;
  AdmmParams params_;
  ReductionTree tree_;
  std::vector<SubsystemNode> nodes_;
  std::vector<std::vector<int>> hops_;
  std::vector<std::vector<std::pair<int, std::vector<Index>>>> meas_plan_;
  CommunicationAudit audit_;
  int round_ = 0;
  int stats_iterations_ = 0;
};

}  // namespace rdlmpc

#endif  // RDLMPC_NETSIM_HPP_
