#ifndef RDLMPC_IO_HPP_
#define RDLMPC_IO_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rdlmpc/experiment.hpp"

namespace rdlmpc {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//! Trajectory CSV: one row per (time, subsystem); vector-valued subsystems
//! join coordinates with spaces. The disturbance and input columns are empty
//! on the final state row.
inline void write_trajectory_csv(const std::string& path,
                                 const SystemModel& model,
                                 const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,subsystem,x,u,w\n";
  const Index t_done = traj.steps_completed();
  for (Index t = 0; t <= t_done; ++t) {
    for (int i = 0; i < model.n_subsystems(); ++i) {
      out << t << ',' << i << ',';
      for (Index c = 0; c < model.state_dim(i); ++c)
        out << (c ? " " : "")
            << format_double(traj.states(model.state_offset(i) + c, t));
      out << ',';
      if (t < t_done)
        for (Index c = 0; c < model.input_dim(i); ++c)
          out << (c ? " " : "")
              << format_double(traj.inputs(model.input_offset(i) + c, t));
      out << ',';
      if (t < t_done)
        for (Index c = 0; c < model.state_dim(i); ++c)
          out << (c ? " " : "")
              << format_double(traj.disturbances(model.state_offset(i) + c, t));
      out << '\n';
    }
  }
}

//! Re-read a trajectory CSV and recompute the closed-loop cost; the summary
//! must round-trip through this.
inline double cost_from_trajectory_csv(const std::string& path,
                                       const SystemModel& model,
                                       const CostWeights& w) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  double cost = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t_s, sub_s, x_s, u_s, w_s;
    std::getline(ss, t_s, ',');
    std::getline(ss, sub_s, ',');
    std::getline(ss, x_s, ',');
    std::getline(ss, u_s, ',');
    std::getline(ss, w_s, ',');
    const int sub = std::stoi(sub_s);
    std::stringstream xs(x_s);
    double v;
    Index c = 0;
    while (xs >> v) {
      cost += w.q_diag[model.state_offset(sub) + c] * v * v;
      ++c;
    }
    std::stringstream us(u_s);
    c = 0;
    while (us >> v) {
      cost += w.r_diag[model.input_offset(sub) + c] * v * v;
      ++c;
    }
  }
  return cost;
}

inline void write_iteration_trace_csv(const std::string& path,
                                      const std::vector<SeedRunRecord>& runs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "mode,seed,step,iterations,converged,primal_residual,dual_residual,"
         "objective,mean_node_solve_seconds,max_node_solve_seconds\n";
  for (const auto& r : runs) {
    Index step = 0;
    for (const auto& s : r.trajectory.steps) {
      out << mode_name(r.mode) << ',' << r.seed << ',' << step << ','
          << s.iterations << ',' << (s.converged ? 1 : 0) << ','
          << format_double(s.primal_residual) << ','
          << format_double(s.dual_residual) << ','
          << format_double(s.objective) << ','
          << format_double(s.mean_node_solve_seconds) << ','
          << format_double(s.max_node_solve_seconds) << '\n';
      ++step;
    }
  }
}

inline nlohmann::json sweep_to_json(const std::vector<SweepRecord>& sweep) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sweep)
    arr.push_back({{"value", s.value},
                   {"mean_node_solve_seconds_per_iteration",
                    s.mean_node_solve_seconds_per_iteration},
                   {"max_node_solve_seconds_per_iteration",
                    s.max_node_solve_seconds_per_iteration},
                   {"mean_iterations", s.mean_iterations}});
  return arr;
}

inline nlohmann::json report_to_json(const ChainExperimentConfig& cfg,
                                     const RunReport& report) {
  nlohmann::json j;
  j["config"] = {{"n_subsystems", cfg.n_subsystems},
                 {"alpha", cfg.alpha},
                 {"kappa", cfg.kappa},
                 {"unactuated", cfg.unactuated},
                 {"x_bound_actuated", cfg.x_bound_actuated},
                 {"x_bound_unactuated", cfg.x_bound_unactuated},
                 {"sigma", cfg.sigma},
                 {"q_weight", cfg.q_weight},
                 {"r_weight", cfg.r_weight},
                 {"horizon", cfg.horizon},
                 {"locality", cfg.locality},
                 {"t_sim", cfg.t_sim},
                 {"x0_scale", cfg.x0_scale},
                 {"warm_start", cfg.warm_start},
                 {"distributed", cfg.distributed},
                 {"modes", cfg.modes},
                 {"seeds", cfg.seeds}};
  for (const auto& [name, s] : report.summary)
    j["summary"][name] = {{"mean_cost", s.mean_cost},
                          {"std_cost", s.std_cost},
                          {"violations", s.total_violations},
                          {"runs", s.runs},
                          {"failed_runs", s.failed_runs}};
  if (std::isfinite(report.cost_ratio))
    j["summary"]["cost_ratio_robust_over_nominal"] = report.cost_ratio;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs)
    j["runs"].push_back(
        {{"mode", mode_name(r.mode)},
         {"seed", r.seed},
         {"cost", r.cost},
         {"violations", r.violations},
         {"worst_violation", r.worst_violation},
         {"status",
          r.status == RunStatus::Completed
              ? "completed"
              : (r.status == RunStatus::InfeasibleStep ? "infeasible"
                                                       : "not_converged")},
         {"failed_step", r.failed_step},
         {"mean_iterations", r.mean_iterations},
         {"mean_node_solve_seconds", r.mean_node_solve_seconds},
         {"max_node_solve_seconds", r.max_node_solve_seconds}});
  if (!report.size_sweep.empty())
    j["runtime_vs_network_size"] = sweep_to_json(report.size_sweep);
  if (!report.locality_sweep.empty())
    j["runtime_vs_locality"] = sweep_to_json(report.locality_sweep);
  j["robust_violation"] = report.robust_violation;
  j["solver_failure"] = report.solver_failure;
  return j;
}

//! Write trajectory CSVs, the iteration trace and the JSON summary; returns
//! the summary path.
inline std::string write_report_files(const std::string& out_dir,
                                      const ChainExperimentConfig& cfg,
                                      const RunReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const SystemModel model = cfg.build_model(cfg.n_subsystems);
  nlohmann::json j = report_to_json(cfg, report);
  j["files"] = nlohmann::json::array();
  for (const auto& r : report.runs) {
    const std::string name = std::string("trajectory_") + mode_name(r.mode) +
                             "_seed" + std::to_string(r.seed) + ".csv";
    write_trajectory_csv((fs::path(out_dir) / name).string(), model,
                         r.trajectory);
    j["files"].push_back(name);
  }
  write_iteration_trace_csv((fs::path(out_dir) / "iteration_trace.csv").string(),
                            report.runs);
  j["files"].push_back("iteration_trace.csv");
  const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
  std::ofstream out(summary_path);
  out << j.dump(2) << '\n';
  return summary_path;
}

}  // namespace rdlmpc

#endif  // RDLMPC_IO_HPP_
