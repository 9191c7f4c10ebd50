#ifndef RDLMPC_CONFIG_HPP_
#define RDLMPC_CONFIG_HPP_

#include <fstream>
#include <sstream>
#include <string>

#include "rdlmpc/experiment.hpp"

namespace rdlmpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, const std::string& ctx) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(ctx + ": expected a number, got '" + v + "'");
  }
}

inline long parse_int(const std::string& v, const std::string& ctx) {
  try {
    size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(ctx + ": expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, const std::string& ctx) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(ctx + ": expected a boolean, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, const std::string& ctx,
                          F parse_one) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_one(item, ctx));
  }
  return out;
}

}  // namespace detail

//! Flat key = value configuration with [section] headers; # and ; start
//! comments. Unknown keys are rejected with their line number.
inline ChainExperimentConfig parse_config(std::istream& in,
                                          const std::string& name) {
  using namespace detail;
  ChainExperimentConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string ctx =
        name + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(ctx + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ctx + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = ctx + " [" + section + "] " + key;

    auto in_section = [&](const char* s) { return section == s; };
    if (in_section("system")) {
      if (key == "n_subsystems")
        cfg.n_subsystems = static_cast<int>(parse_int(value, where));
      else if (key == "alpha")
        cfg.alpha = parse_double(value, where);
      else if (key == "kappa")
        cfg.kappa = parse_double(value, where);
      else if (key == "unactuated")
        cfg.unactuated = parse_list<int>(
            value, where, [](const std::string& v, const std::string& c) {
              return static_cast<int>(detail::parse_int(v, c));
            });
      else
        throw ConfigError(where + ": unknown key");
    } else if (in_section("constraints")) {
      if (key == "x_bound_actuated")
        cfg.x_bound_actuated = parse_double(value, where);
      else if (key == "x_bound_unactuated")
        cfg.x_bound_unactuated = parse_double(value, where);
      else if (key == "sigma")
        cfg.sigma = parse_double(value, where);
      else
        throw ConfigError(where + ": unknown key");
    } else if (in_section("cost")) {
      if (key == "q_weight")
        cfg.q_weight = parse_double(value, where);
      else if (key == "r_weight")
        cfg.r_weight = parse_double(value, where);
      else
        throw ConfigError(where + ": unknown key");
    } else if (in_section("mpc")) {
      if (key == "horizon")
        cfg.horizon = parse_int(value, where);
      else if (key == "locality")
        cfg.locality = static_cast<int>(parse_int(value, where));
      else if (key == "t_sim")
        cfg.t_sim = parse_int(value, where);
      else if (key == "x0_scale")
        cfg.x0_scale = parse_double(value, where);
      else if (key == "x0_cap")
        cfg.x0_cap = parse_double(value, where);
      else if (key == "warm_start")
        cfg.warm_start = parse_bool(value, where);
      else if (key == "distributed")
        cfg.distributed = parse_bool(value, where);
      else
        throw ConfigError(where + ": unknown key");
    } else if (in_section("admm")) {
      if (key == "rho0")
        cfg.admm.rho0 = parse_double(value, where);
      else if (key == "tau")
        cfg.admm.tau = parse_double(value, where);
      else if (key == "mu1")
        cfg.admm.mu1 = parse_double(value, where);
      else if (key == "mu2")
        cfg.admm.mu2 = parse_double(value, where);
      else if (key == "rho_max")
        cfg.admm.rho_max = parse_double(value, where);
      else if (key == "eps_p")
        cfg.admm.eps_p = parse_double(value, where);
      else if (key == "eps_d")
        cfg.admm.eps_d = parse_double(value, where);
      else if (key == "max_iters")
        cfg.admm.max_iters = static_cast<int>(parse_int(value, where));
      else if (key == "freeze_after")
        cfg.admm.freeze_after = static_cast<int>(parse_int(value, where));
      else if (key == "per_subsystem_rho")
        cfg.admm.per_subsystem_rho = parse_bool(value, where);
      else if (key == "use_fast_row_path")
        cfg.admm.use_fast_row_path = parse_bool(value, where);
      else if (key == "record_trace")
        cfg.admm.record_trace = parse_bool(value, where);
      else
        throw ConfigError(where + ": unknown key");
    } else if (in_section("experiment")) {
      if (key == "seeds")
        cfg.seeds = parse_list<std::uint64_t>(
            value, where, [](const std::string& v, const std::string& c) {
              return static_cast<std::uint64_t>(detail::parse_int(v, c));
            });
      else if (key == "modes")
        cfg.modes = value;
      else if (key == "sweep_sizes")
        cfg.sweep_sizes = parse_list<int>(
            value, where, [](const std::string& v, const std::string& c) {
              return static_cast<int>(detail::parse_int(v, c));
            });
      else if (key == "sweep_localities")
        cfg.sweep_localities = parse_list<int>(
            value, where, [](const std::string& v, const std::string& c) {
              return static_cast<int>(detail::parse_int(v, c));
            });
      else if (key == "sweep_t_sim")
        cfg.sweep_t_sim = parse_int(value, where);
      else
        throw ConfigError(where + ": unknown key");
    } else {
      throw ConfigError(where + ": unknown section '" + section + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const StructuralError& err) {
    throw ConfigError(name + ": " + err.what());
  }
  return cfg;
}

inline ChainExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

}  // namespace rdlmpc

#endif  // RDLMPC_CONFIG_HPP_
