#ifndef RDLMPC_EXPERIMENT_HPP_
#define RDLMPC_EXPERIMENT_HPP_

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rdlmpc/mpc.hpp"

namespace rdlmpc {

//! Benchmark description: a chain of scalar subsystems with a fixed
//! actuation pattern, box state constraints (tight on actuated nodes, wide
//! on unactuated ones) and a uniform disturbance box.
struct ChainExperimentConfig {
  // [system]
  int n_subsystems = 10;
  double alpha = 0.8;
  double kappa = 2.0;
  std::vector<int> unactuated = {1, 3, 6, 8};  // zero-based node ids
  // [constraints]
  double x_bound_actuated = 1.5;
  double x_bound_unactuated = 20.0;
  double sigma = 1.0;
  // [cost]
  double q_weight = 1.0;
  double r_weight = 1.0;
  // [mpc]
  Index horizon = 5;
  int locality = 3;
  Index t_sim = 20;
  double x0_scale = 0.5;   // fraction of the sampling box
  double x0_cap = -1.0;    // cap per coordinate; defaults to the actuated bound
  bool warm_start = false;
  bool distributed = true;
  // [admm]
  AdmmParams admm;
  // [experiment]
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string modes = "both";  // robust | nominal | both
  std::vector<int> sweep_sizes;      // network-size sweep (runtime study)
  std::vector<int> sweep_localities; // locality sweep (runtime study)
  Index sweep_t_sim = 5;

  void validate() const {
    require(n_subsystems >= 1, "n_subsystems must be >= 1");
    require(horizon >= 1, "horizon must be >= 1");
    require(t_sim >= 1, "t_sim must be >= 1");
    require(locality >= 0, "locality must be >= 0");
    require(sigma >= 0.0, "sigma must be >= 0");
    require(x_bound_actuated > 0.0 && x_bound_unactuated > 0.0,
            "state bounds must be positive");
    require(modes == "both" || modes == "robust" || modes == "nominal",
            "mode must be robust, nominal or both");
    require(!seeds.empty(), "at least one seed required");
    admm.validate();
  }

  std::vector<double> beta(int n) const {
    std::vector<double> b(n, 1.0);
    for (int i : unactuated)
      if (i >= 0 && i < n) b[i] = 0.0;
    return b;
  }

  SystemModel build_model(int n) const {
    return make_chain_system(n, alpha, kappa, beta(n));
  }

  RobustConstraintData build_constraints(const SystemModel& model,
                                         Index T) const {
    const Index n = model.total_state_dim();
    Vector lo(n), hi(n);
    const auto b = beta(model.n_subsystems());
    for (int i = 0; i < model.n_subsystems(); ++i) {
      const double bound =
          b[i] != 0.0 ? x_bound_actuated : x_bound_unactuated;
      lo[model.state_offset(i)] = -bound;
      hi[model.state_offset(i)] = bound;
    }
    auto data = build_box_constraints(model, T, lo, hi);
    data.g_rows = build_disturbance_polytope(
        model, Vector::Constant(model.n_subsystems(), sigma), T);
    return data;
  }

  //! Sampling box for the initial state: the state box intersected with
  //! +/- x0_cap, scaled by x0_scale.
  std::pair<Vector, Vector> x0_box(const Vector& lo, const Vector& hi) const {
    const double cap = x0_cap > 0.0 ? x0_cap : x_bound_actuated;
    Vector slo = lo.cwiseMax(-cap) * x0_scale;
    Vector shi = hi.cwiseMin(cap) * x0_scale;
    return {slo, shi};
  }

  CostWeights build_cost(const SystemModel& model) const {
    CostWeights w = CostWeights::identity(model);
    w.q_diag *= q_weight;
    w.q_final *= q_weight;
    w.r_diag *= r_weight;
    return w;
  }
};

struct SeedRunRecord {
  std::uint64_t seed = 0;
  ControlMode mode = ControlMode::Robust;
  double cost = 0.0;
  long violations = 0;
  double worst_violation = 0.0;
  RunStatus status = RunStatus::Completed;
  Index failed_step = -1;
  double mean_iterations = 0.0;
  double mean_node_solve_seconds = 0.0;  // per MPC step
  double max_node_solve_seconds = 0.0;
  Trajectory trajectory;
};

struct ModeSummary {
  double mean_cost = 0.0;
  double std_cost = 0.0;
  long total_violations = 0;
  int runs = 0;
  int failed_runs = 0;
};

struct SweepRecord {
  int value = 0;  // network size or locality radius
  double mean_node_solve_seconds_per_iteration = 0.0;
  double max_node_solve_seconds_per_iteration = 0.0;
  double mean_iterations = 0.0;
};

struct RunReport {
  std::vector<SeedRunRecord> runs;
  std::map<std::string, ModeSummary> summary;  // keyed by mode name
  double cost_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRecord> size_sweep;
  std::vector<SweepRecord> locality_sweep;
  bool robust_violation = false;
  bool solver_failure = false;
};

inline ModeSummary summarize(const std::vector<SeedRunRecord>& runs,
                             ControlMode mode) {
  ModeSummary s;
  std::vector<double> costs;
  for (const auto& r : runs) {
    if (r.mode != mode) continue;
    ++s.runs;
    if (r.status != RunStatus::Completed) {
      ++s.failed_runs;
      continue;
    }
    costs.push_back(r.cost);
    s.total_violations += r.violations;
  }
  if (!costs.empty()) {
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= static_cast<double>(costs.size());
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    var = costs.size() > 1 ? var / static_cast<double>(costs.size() - 1) : 0.0;
    s.mean_cost = mean;
    s.std_cost = std::sqrt(var);
  }
  return s;
}

//! One runtime measurement: a short robust closed loop at the given network
//! size and locality radius; reports per-node solve seconds normalized per
//! ADMM iteration.
inline SweepRecord run_sweep_point(const ChainExperimentConfig& cfg, int n,
                                   int d) {
  SweepRecord rec;
  rec.value = 0;
  ChainExperimentConfig local = cfg;
  local.n_subsystems = n;
  local.locality = d;
  // Extend the unactuated pattern periodically for larger chains.
  local.unactuated.clear();
  for (int i = 0; i < n; ++i) {
    for (int u : cfg.unactuated)
      if (u >= 0 && i % cfg.n_subsystems == u) local.unactuated.push_back(i);
  }
  const SystemModel model = local.build_model(n);
  const RobustConstraintData constraints =
      local.build_constraints(model, local.horizon);
  const CostWeights cost = local.build_cost(model);
  const auto& [lo, hi] = *constraints.initial_state_box;

  MpcController controller(model, d, local.horizon, constraints, cost,
                           local.admm, ControlMode::Robust, local.distributed);
  const std::uint64_t seed = local.seeds.front();
  const auto [slo, shi] = local.x0_box(lo, hi);
  const Vector x0 = generate_initial_state(seed, slo, shi, 1.0);
  const Matrix w = generate_disturbance(
      seed, local.sigma * Vector::Ones(model.total_state_dim()),
      local.sweep_t_sim);
  Trajectory traj =
      run_closed_loop(model, controller, constraints, cost, x0, w, {});

  double node_seconds = 0.0, iters = 0.0;
  double max_per_iter = 0.0;
  for (const auto& s : traj.steps) {
    node_seconds += s.mean_node_solve_seconds;
    iters += s.iterations;
    if (s.iterations > 0)
      max_per_iter = std::max(max_per_iter,
                              s.max_node_solve_seconds / s.iterations);
  }
  if (iters > 0.0) rec.mean_node_solve_seconds_per_iteration =
      node_seconds / iters;
  rec.max_node_solve_seconds_per_iteration = max_per_iter;
  rec.mean_iterations =
      traj.steps.empty() ? 0.0 : iters / static_cast<double>(traj.steps.size());
  return rec;
}

//! Closed-loop runs for every configured (mode, seed) pair plus the runtime
//! sweeps. The same seed produces the same initial state and disturbance
//! realization in both modes, so costs pair up.
inline RunReport run_experiment(const ChainExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;

  const SystemModel model = cfg.build_model(cfg.n_subsystems);
  const RobustConstraintData constraints =
      cfg.build_constraints(model, cfg.horizon);
  const CostWeights cost = cfg.build_cost(model);
  const auto& [lo, hi] = *constraints.initial_state_box;

  std::vector<ControlMode> modes;
  if (cfg.modes == "both" || cfg.modes == "robust")
    modes.push_back(ControlMode::Robust);
  if (cfg.modes == "both" || cfg.modes == "nominal")
    modes.push_back(ControlMode::Nominal);

  for (ControlMode mode : modes) {
    MpcController controller(model, cfg.locality, cfg.horizon, constraints,
                             cost, cfg.admm, mode, cfg.distributed);
    const auto [slo, shi] = cfg.x0_box(lo, hi);
    for (std::uint64_t seed : cfg.seeds) {
      const Vector x0 = generate_initial_state(seed, slo, shi, 1.0);
      const Matrix w = generate_disturbance(
          seed, cfg.sigma * Vector::Ones(model.total_state_dim()), cfg.t_sim);
      ClosedLoopOptions opts;
      opts.warm_start = cfg.warm_start;
      Trajectory traj = run_closed_loop(model, controller, constraints, cost,
                                        x0, w, opts);
      SeedRunRecord rec;
      rec.seed = seed;
      rec.mode = mode;
      rec.cost = traj.cost;
      rec.violations = traj.bound_violations;
      rec.worst_violation = traj.worst_violation;
      rec.status = traj.status;
      rec.failed_step = traj.failed_step;
      double iters = 0.0, mean_t = 0.0, max_t = 0.0;
      for (const auto& s : traj.steps) {
        iters += s.iterations;
        mean_t += s.mean_node_solve_seconds;
        max_t = std::max(max_t, s.max_node_solve_seconds);
      }
      if (!traj.steps.empty()) {
        iters /= static_cast<double>(traj.steps.size());
        mean_t /= static_cast<double>(traj.steps.size());
      }
      rec.mean_iterations = iters;
      rec.mean_node_solve_seconds = mean_t;
      rec.max_node_solve_seconds = max_t;
      rec.trajectory = std::move(traj);
      if (rec.status != RunStatus::Completed) report.solver_failure = true;
      if (mode == ControlMode::Robust && rec.violations > 0)
        report.robust_violation = true;
      report.runs.push_back(std::move(rec));
    }
  }

  for (ControlMode mode : modes)
    report.summary[mode_name(mode)] = summarize(report.runs, mode);
  if (report.summary.count("robust") && report.summary.count("nominal")) {
    const auto& r = report.summary.at("robust");
    const auto& n = report.summary.at("nominal");
    if (n.mean_cost > 0.0) report.cost_ratio = r.mean_cost / n.mean_cost;
  }

  for (int n : cfg.sweep_sizes) {
    SweepRecord rec = run_sweep_point(cfg, n, cfg.locality);
    rec.value = n;
    report.size_sweep.push_back(rec);
  }
  for (int d : cfg.sweep_localities) {
    SweepRecord rec = run_sweep_point(cfg, cfg.n_subsystems, d);
    rec.value = d;
    report.locality_sweep.push_back(rec);
  }
  return report;
}

}  // namespace rdlmpc

#endif  // RDLMPC_EXPERIMENT_HPP_
