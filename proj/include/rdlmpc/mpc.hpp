#ifndef RDLMPC_MPC_HPP_
#define RDLMPC_MPC_HPP_

#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rdlmpc/netsim.hpp"
#include "rdlmpc/oracle.hpp"

namespace rdlmpc {

enum class ControlMode { Robust, Nominal };

inline const char* mode_name(ControlMode m) {
  return m == ControlMode::Robust ? "robust" : "nominal";
}

//! Deterministic uniform double in [0, 1), independent of the standard
//! library's distribution implementation.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : state_(seed + kMix) {}

  double next01() {
    // splitmix64
    std::uint64_t z = (state_ += kMix);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  double range(double lo, double hi) { return lo + (hi - lo) * next01(); }

 private:
  static constexpr std::uint64_t kMix = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

//! I.i.d. uniform disturbance, |[w(t)]_i| <= sigma_i, one column per step.
inline Matrix generate_disturbance(std::uint64_t seed, const Vector& sigma,
                                   Index t_sim) {
  UniformSource rng(seed);
  Matrix w(sigma.size(), t_sim);
  for (Index t = 0; t < t_sim; ++t)
    for (Index c = 0; c < sigma.size(); ++c)
      w(c, t) = rng.range(-sigma[c], sigma[c]);
  return w;
}

//! Initial state drawn uniformly from a scaled copy of the state box.
inline Vector generate_initial_state(std::uint64_t seed, const Vector& lo,
                                     const Vector& hi, double scale) {
  UniformSource rng(seed ^ 0x5DEECE66DULL);
  Vector x0(lo.size());
  for (Index c = 0; c < lo.size(); ++c)
    x0[c] = rng.range(scale * lo[c], scale * hi[c]);
  return x0;
}

enum class RunStatus { Completed, InfeasibleStep, NotConvergedStep };

struct StepStats {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double max_node_solve_seconds = 0.0;
  double mean_node_solve_seconds = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct Trajectory {
  RunStatus status = RunStatus::Completed;
  Index failed_step = -1;
  std::string failure_detail;
  Matrix states;        // n x (t_sim + 1)
  Matrix inputs;        // p x t_sim
  Matrix disturbances;  // n x t_sim
  std::vector<StepStats> steps;
  double cost = 0.0;
  long bound_violations = 0;  // realized state out of its box (1e-6 slack)
  double worst_violation = 0.0;

  Index steps_completed() const { return static_cast<Index>(steps.size()); }
};

//! Closed-loop quadratic cost with diagonal weights; the terminal state is
//! weighted like any other.
inline double evaluate_cost(const Trajectory& traj, const CostWeights& w) {
  double cost = 0.0;
  const Index t_done = traj.steps_completed();
  for (Index t = 0; t <= t_done; ++t)
    cost += traj.states.col(t).dot(
        w.q_diag.cwiseProduct(traj.states.col(t)));
  for (Index t = 0; t < t_done; ++t)
    cost += traj.inputs.col(t).dot(w.r_diag.cwiseProduct(traj.inputs.col(t)));
  return cost;
}

//! Everything needed to run one receding-horizon loop for one mode. Holds
//! the structural data and a solver; reusable across steps and runs.
class MpcController {
 public:
  MpcController(const SystemModel& model, int d, Index T,
                const RobustConstraintData& constraints,
                const CostWeights& cost, const AdmmParams& params,
                ControlMode mode, bool distributed)
      : model_(&model),
        constraints_(&constraints),
        cost_(cost),
        mask_(model, d, T),
        partition_(partition_indices(model, mask_)),
        problems_(model, mask_, partition_, constraints, cost,
                  mode == ControlMode::Robust),
        mode_(mode) {
    if (distributed)
      netsim_ = std::make_unique<DistributedAdmmSolver>(problems_, params);
    else
      mono_ = std::make_unique<MonolithicAdmmSolver>(problems_, params);
  }

  AdmmSolveResult solve_step(const Vector& x, bool warm) {
    return netsim_ ? netsim_->solve(x, warm) : mono_->solve(x, warm);
  }

  ControlMode mode() const { return mode_; }
  const LocalityMask& mask() const { return mask_; }
  const LocalProblems& problems() const { return problems_; }
  const DistributedAdmmSolver* network() const { return netsim_.get(); }
  const MonolithicAdmmSolver* monolith() const { return mono_.get(); }

 private:
  const SystemModel* model_;
  const RobustConstraintData* constraints_;
  CostWeights cost_;
  LocalityMask mask_;
  IndexPartition partition_;
  LocalProblems problems_;
  ControlMode mode_;
  std::unique_ptr<DistributedAdmmSolver> netsim_;
  std::unique_ptr<MonolithicAdmmSolver> mono_;
};

struct ClosedLoopOptions {
  bool warm_start = false;
  bool stop_on_failure = true;
};

//! Receding-horizon simulation: solve, apply the first action, advance the
//! plant, repeat. Failures terminate the run with a diagnostic.
inline Trajectory run_closed_loop(const SystemModel& model,
                                  MpcController& controller,
                                  const RobustConstraintData& constraints,
                                  const CostWeights& cost, const Vector& x0,
                                  const Matrix& disturbances,
                                  const ClosedLoopOptions& opts = {}) {
  const Index t_sim = disturbances.cols();
  const Index n = model.total_state_dim();
  const Index p = model.total_input_dim();
  Trajectory traj;
  traj.states = Matrix::Zero(n, t_sim + 1);
  traj.inputs = Matrix::Zero(p, t_sim);
  traj.disturbances = disturbances;
  traj.states.col(0) = x0;

  Vector x = x0;
  for (Index t = 0; t < t_sim; ++t) {
    StepStats stats;
    AdmmSolveResult res;
    try {
      res = controller.solve_step(x, opts.warm_start && t > 0);
    } catch (const InfeasibleError& err) {
      traj.status = RunStatus::InfeasibleStep;
      traj.failed_step = t;
      traj.failure_detail = err.what();
      break;
    }
    stats.iterations = res.report.iterations;
    stats.converged = res.report.converged;
    stats.objective = res.objective;
    stats.primal_residual = res.report.primal_residual;
    stats.dual_residual = res.report.dual_residual;
    if (!res.node_solve_seconds.empty()) {
      stats.max_node_solve_seconds = *std::max_element(
          res.node_solve_seconds.begin(), res.node_solve_seconds.end());
      stats.mean_node_solve_seconds =
          std::accumulate(res.node_solve_seconds.begin(),
                          res.node_solve_seconds.end(), 0.0) /
          static_cast<double>(res.node_solve_seconds.size());
    }
    if (!res.report.converged && opts.stop_on_failure) {
      traj.status = RunStatus::NotConvergedStep;
      traj.failed_step = t;
      traj.failure_detail = "admm did not converge within max_iters";
      traj.steps.push_back(stats);
      break;
    }
    traj.steps.push_back(stats);
    traj.inputs.col(t) = res.u0;
    x = model.step(x, res.u0, disturbances.col(t));
    traj.states.col(t + 1) = x;
  }

  traj.cost = evaluate_cost(traj, cost);

  // Realized-bound audit against the per-coordinate state box.
  if (constraints.initial_state_box) {
    const auto& [lo, hi] = *constraints.initial_state_box;
    for (Index t = 0; t <= traj.steps_completed(); ++t)
      for (Index c = 0; c < n; ++c) {
        const double v = std::max(traj.states(c, t) - hi[c],
                                  lo[c] - traj.states(c, t));
        if (v > 1e-6) {
          ++traj.bound_violations;
          traj.worst_violation = std::max(traj.worst_violation, v);
        }
      }
  }
  return traj;
}

//! One-shot nominal solve (first block column only), exposed for validation
//! against dynamic programming and for the zero-disturbance comparisons.
struct NominalSolution {
  AdmmSolveResult result;
  Matrix first_column;  // joint rows x n
};

inline NominalSolution nominal_solve(const SystemModel& model,
                                     const LocalityMask& mask,
                                     const RobustConstraintData& constraints,
                                     const CostWeights& cost, const Vector& x0,
                                     const AdmmParams& params) {
  IndexPartition partition = partition_indices(model, mask);
  LocalProblems problems(model, mask, partition, constraints, cost, false);
  MonolithicAdmmSolver solver(problems, params);
  NominalSolution out;
  out.result = solver.solve(x0);
  out.first_column = solver.assemble_first_column();
  return out;
}

}  // namespace rdlmpc

#endif  // RDLMPC_MPC_HPP_
