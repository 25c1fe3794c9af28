#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roacert/bounds.hpp"
#include "roacert/errors.hpp"
#include "roacert/json_io.hpp"
#include "roacert/lmi.hpp"
#include "roacert/plant.hpp"
#include "roacert/scenarios.hpp"
#include "roacert/sdp.hpp"
#include "roacert/simulate.hpp"

namespace roacert {

enum class PlantType { Lti, Uncertain, Pendulum, Vehicle };

struct PlantSpec {
  PlantType type = PlantType::Lti;
  LtiPlant lti;  // lti / uncertain
  PendulumParams pendulum;
  VehicleParams vehicle;
  bool linearized = false;

  /// Plant used for LMI assembly.
  LtiPlant model() const {
    switch (type) {
      case PlantType::Pendulum: return linearized ? pendulum_linearized(pendulum) : pendulum_plant(pendulum);
      case PlantType::Vehicle: return linearized ? vehicle_linearized(vehicle) : vehicle_plant(vehicle);
      default: return lti;
    }
  }
  bool nominal() const { return model().is_nominal(); }
  std::optional<double> u_max() const {
    if (type == PlantType::Pendulum) return pendulum.u_max;
    if (type == PlantType::Vehicle) return vehicle.u_max;
    return std::nullopt;
  }
};

enum class BlockType {
  ActivationOffByOne,
  Sector,
  OffByOne,
  NonlinearitySector,
  NonlinearityOffByOne,
  SaturationSector,
  NormBoundedLti
};

struct BlockSpec {
  BlockType type = BlockType::Sector;
  std::string type_name;
  std::vector<int> p, q;
  VectorXd alpha, beta;              // sector
  VectorXd slope_lo, slope_hi;       // off_by_one
  VectorXd p_radius;                 // optional range restriction
  std::string nonlinearity;          // nonlinearity_*
  double lo = 0.0, hi = 0.0;          // sector taken about 0
  bool restrict_range = true;
  std::optional<double> u_max;       // saturation_sector
  int output = 0;
  double b = 0.0;                    // norm_bounded_lti
  int basis_len = 1;
  double rho = 0.0;
};

enum class EquilibriumMode { Origin, Solve, Vector };

struct ScenarioConfig {
  std::string name;
  std::filesystem::path base_dir;
  PlantSpec plant;
  std::string nn_weights;
  EquilibriumMode eq_mode = EquilibriumMode::Origin;
  VectorXd eq_vector;
  std::optional<double> delta_v;
  std::vector<double> sweep;
  BoundOptions bound_opts;
  std::vector<BlockSpec> blocks;
  std::string backend;  // empty: ROACERT_SOLVER or the default
  SolverOptions solver;
  AssemblyOptions assembly;
  int sweep_threads = 1;
  bool validate = true;
  ValidationOptions validation;
  int lyapunov_samples = 10000;
  json echo;  // resolved config

  std::filesystem::path weights_path() const {
    std::filesystem::path p(nn_weights);
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T def, const std::string& where) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline std::vector<int> index_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of indices");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<int>() < 0) throw ConfigError(what + ": indices must be nonnegative integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline double positive(const json& j, const char* key, double def, const std::string& where) {
  const double v = get_or<double>(j, key, def, where);
  if (!(v > 0.0)) throw ConfigError(where + "." + key + " must be positive");
  return v;
}

inline PlantSpec parse_plant(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ConfigError("plant: expected an object with a string 'type'");
  PlantSpec ps;
  const std::string t = j.at("type").get<std::string>();
  if (t == "lti") {
    check_keys(j, {"type", "A", "B"}, "plant");
    if (!j.contains("A") || !j.contains("B")) throw ConfigError("plant: lti needs A and B");
    ps.type = PlantType::Lti;
    try {
      ps.lti = LtiPlant::nominal(matrix_from_json(j.at("A"), "plant.A"), matrix_from_json(j.at("B"), "plant.B"));
    } catch (const DimensionError& e) {
      throw ConfigError(std::string("plant: ") + e.what());
    }
  } else if (t == "uncertain") {
    check_keys(j, {"type", "A", "B1", "B2", "C", "D1", "D2"}, "plant");
    for (const char* k : {"A", "B1", "B2", "C", "D1", "D2"})
      if (!j.contains(k)) throw ConfigError(std::string("plant: uncertain needs ") + k);
    ps.type = PlantType::Uncertain;
    try {
      ps.lti = LtiPlant::uncertain(matrix_from_json(j.at("A"), "plant.A"), matrix_from_json(j.at("B1"), "plant.B1"),
                                   matrix_from_json(j.at("B2"), "plant.B2"), matrix_from_json(j.at("C"), "plant.C"),
                                   matrix_from_json(j.at("D1"), "plant.D1"), matrix_from_json(j.at("D2"), "plant.D2"));
    } catch (const DimensionError& e) {
      throw ConfigError(std::string("plant: ") + e.what());
    }
  } else if (t == "pendulum") {
    check_keys(j, {"type", "linearized", "m", "l", "mu", "g", "u_max", "dt"}, "plant");
    ps.type = PlantType::Pendulum;
    ps.linearized = get_or<bool>(j, "linearized", false, "plant");
    auto& p = ps.pendulum;
    p.m = get_or(j, "m", p.m, "plant");
    p.l = get_or(j, "l", p.l, "plant");
    p.mu = get_or(j, "mu", p.mu, "plant");
    p.g = get_or(j, "g", p.g, "plant");
    p.u_max = get_or(j, "u_max", p.u_max, "plant");
    p.dt = get_or(j, "dt", p.dt, "plant");
    try {
      p.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  } else if (t == "vehicle") {
    check_keys(j, {"type", "linearized", "U", "C_af", "C_ar", "m", "I_z", "a", "b", "u_max", "dt"}, "plant");
    ps.type = PlantType::Vehicle;
    ps.linearized = get_or<bool>(j, "linearized", false, "plant");
    auto& p = ps.vehicle;
    p.U = get_or(j, "U", p.U, "plant");
    p.C_af = get_or(j, "C_af", p.C_af, "plant");
    p.C_ar = get_or(j, "C_ar", p.C_ar, "plant");
    p.m = get_or(j, "m", p.m, "plant");
    p.I_z = get_or(j, "I_z", p.I_z, "plant");
    p.a = get_or(j, "a", p.a, "plant");
    p.b = get_or(j, "b", p.b, "plant");
    p.u_max = get_or(j, "u_max", p.u_max, "plant");
    p.dt = get_or(j, "dt", p.dt, "plant");
    try {
      p.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("plant: unknown type '" + t + "' (lti, uncertain, pendulum, vehicle)");
  }
  return ps;
}

inline json plant_echo(const PlantSpec& ps) {
  json j;
  switch (ps.type) {
    case PlantType::Lti:
      j = {{"type", "lti"}, {"A", to_json(ps.lti.A)}, {"B", to_json(ps.lti.B2)}};
      break;
    case PlantType::Uncertain:
      j = {{"type", "uncertain"}, {"A", to_json(ps.lti.A)},   {"B1", to_json(ps.lti.B1)}, {"B2", to_json(ps.lti.B2)},
           {"C", to_json(ps.lti.C)},  {"D1", to_json(ps.lti.D1)}, {"D2", to_json(ps.lti.D2)}};
      break;
    case PlantType::Pendulum: {
      const auto& p = ps.pendulum;
      j = {{"type", "pendulum"}, {"linearized", ps.linearized}, {"m", p.m}, {"l", p.l}, {"mu", p.mu},
           {"g", p.g},           {"u_max", p.u_max},           {"dt", p.dt}};
      break;
    }
    case PlantType::Vehicle: {
      const auto& p = ps.vehicle;
      j = {{"type", "vehicle"}, {"linearized", ps.linearized}, {"U", p.U}, {"C_af", p.C_af}, {"C_ar", p.C_ar},
           {"m", p.m},          {"I_z", p.I_z},                {"a", p.a}, {"b", p.b},       {"u_max", p.u_max},
           {"dt", p.dt}};
      break;
    }
  }
  return j;
}

inline ScalarNonlinearity named_nonlinearity(const std::string& name, std::optional<double> u_max) {
  if (name == "theta_minus_sin") return theta_minus_sin();
  if (name == "identity") return identity_map();
  if (name == "saturation") {
    if (!u_max) throw ConfigError("nonlinearity 'saturation' needs u_max");
    return saturation(*u_max);
  }
  throw ConfigError("unknown nonlinearity '" + name + "' (theta_minus_sin, saturation, identity)");
}

inline void parse_channels(const json& j, BlockSpec& b, const std::string& where) {
  if (!j.contains("p") || !j.contains("q")) throw ConfigError(where + ": needs 'p' and 'q' channel lists");
  b.p = index_list(j.at("p"), where + ".p");
  b.q = index_list(j.at("q"), where + ".q");
}

inline BlockSpec parse_block(const json& j, std::size_t idx, const PlantSpec& plant) {
  const std::string where = "iqc_blocks[" + std::to_string(idx) + "]";
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ConfigError(where + ": expected an object with a string 'type'");
  BlockSpec b;
  b.type_name = j.at("type").get<std::string>();
  if (b.type_name == "activation_off_by_one") {
    check_keys(j, {"type"}, where);
    b.type = BlockType::ActivationOffByOne;
  } else if (b.type_name == "sector" || b.type_name == "off_by_one") {
    const bool sec = b.type_name == "sector";
    check_keys(j, sec ? std::set<std::string>{"type", "p", "q", "alpha", "beta", "p_radius"}
                      : std::set<std::string>{"type", "p", "q", "slope_lo", "slope_hi", "p_radius"},
               where);
    b.type = sec ? BlockType::Sector : BlockType::OffByOne;
    parse_channels(j, b, where);
    const char* klo = sec ? "alpha" : "slope_lo";
    const char* khi = sec ? "beta" : "slope_hi";
    if (!j.contains(klo) || !j.contains(khi)) throw ConfigError(where + ": needs '" + klo + "' and '" + khi + "'");
    VectorXd lo = vector_from_json(j.at(klo), where + "." + klo), hi = vector_from_json(j.at(khi), where + "." + khi);
    if (lo.size() == 1 && b.p.size() > 1) lo = VectorXd::Constant(static_cast<Eigen::Index>(b.p.size()), lo(0));
    if (hi.size() == 1 && b.p.size() > 1) hi = VectorXd::Constant(static_cast<Eigen::Index>(b.p.size()), hi(0));
    if (lo.size() != static_cast<Eigen::Index>(b.p.size()) || hi.size() != lo.size())
      throw ConfigError(where + ": bound vectors must match the channel count");
    (sec ? b.alpha : b.slope_lo) = lo;
    (sec ? b.beta : b.slope_hi) = hi;
    if (j.contains("p_radius")) b.p_radius = vector_from_json(j.at("p_radius"), where + ".p_radius");
  } else if (b.type_name == "nonlinearity_sector" || b.type_name == "nonlinearity_off_by_one") {
    check_keys(j, {"type", "p", "q", "nonlinearity", "range", "u_max", "restrict_range"}, where);
    b.type = b.type_name == "nonlinearity_sector" ? BlockType::NonlinearitySector : BlockType::NonlinearityOffByOne;
    parse_channels(j, b, where);
    if (b.p.size() != 1 || b.q.size() != 1) throw ConfigError(where + ": scalar nonlinearity blocks take one channel");
    if (!j.contains("nonlinearity") || !j.at("nonlinearity").is_string())
      throw ConfigError(where + ": needs a 'nonlinearity' name");
    b.nonlinearity = j.at("nonlinearity").get<std::string>();
    if (!j.contains("range")) throw ConfigError(where + ": needs 'range' [lo, hi]");
    const VectorXd r = vector_from_json(j.at("range"), where + ".range");
    if (r.size() != 2 || !(r(0) < r(1))) throw ConfigError(where + ".range: expected [lo, hi] with lo < hi");
    b.lo = r(0);
    b.hi = r(1);
    if (b.lo > 0.0 || b.hi < 0.0) throw ConfigError(where + ".range must contain 0");
    if (j.contains("u_max")) b.u_max = positive(j, "u_max", 1.0, where);
    else b.u_max = plant.u_max();
    named_nonlinearity(b.nonlinearity, b.u_max);
    b.restrict_range = get_or<bool>(j, "restrict_range", true, where);
    if (b.restrict_range) b.p_radius = VectorXd::Constant(1, std::min(-b.lo, b.hi));
  } else if (b.type_name == "saturation_sector") {
    check_keys(j, {"type", "p", "q", "u_max", "output"}, where);
    b.type = BlockType::SaturationSector;
    parse_channels(j, b, where);
    if (b.p.size() != 1 || b.q.size() != 1) throw ConfigError(where + ": saturation_sector takes one channel");
    if (j.contains("u_max")) b.u_max = positive(j, "u_max", 1.0, where);
    else b.u_max = plant.u_max();
    if (!b.u_max) throw ConfigError(where + ": needs u_max for this plant type");
    b.output = get_or<int>(j, "output", 0, where);
    if (b.output < 0) throw ConfigError(where + ".output must be nonnegative");
  } else if (b.type_name == "norm_bounded_lti") {
    check_keys(j, {"type", "p", "q", "b", "basis_len", "rho"}, where);
    b.type = BlockType::NormBoundedLti;
    parse_channels(j, b, where);
    if (!j.contains("b")) throw ConfigError(where + ": needs gain bound 'b'");
    b.b = positive(j, "b", 1.0, where);
    b.basis_len = get_or<int>(j, "basis_len", 1, where);
    b.rho = get_or<double>(j, "rho", 0.0, where);
    if (b.basis_len < 0) throw ConfigError(where + ".basis_len must be nonnegative");
    if (!(std::abs(b.rho) < 1.0)) throw ConfigError(where + ".rho must satisfy |rho| < 1");
  } else {
    throw ConfigError(where + ": unknown block type '" + b.type_name +
                      "' (activation_off_by_one, sector, off_by_one, nonlinearity_sector, "
                      "nonlinearity_off_by_one, saturation_sector, norm_bounded_lti)");
  }
  return b;
}

inline json block_echo(const BlockSpec& b) {
  json j{{"type", b.type_name}};
  if (b.type != BlockType::ActivationOffByOne) {
    j["p"] = b.p;
    j["q"] = b.q;
  }
  switch (b.type) {
    case BlockType::Sector:
      j["alpha"] = to_json(b.alpha);
      j["beta"] = to_json(b.beta);
      break;
    case BlockType::OffByOne:
      j["slope_lo"] = to_json(b.slope_lo);
      j["slope_hi"] = to_json(b.slope_hi);
      break;
    case BlockType::NonlinearitySector:
    case BlockType::NonlinearityOffByOne:
      j["nonlinearity"] = b.nonlinearity;
      j["range"] = {b.lo, b.hi};
      j["restrict_range"] = b.restrict_range;
      if (b.u_max) j["u_max"] = *b.u_max;
      break;
    case BlockType::SaturationSector:
      j["u_max"] = *b.u_max;
      j["output"] = b.output;
      break;
    case BlockType::NormBoundedLti:
      j["b"] = b.b;
      j["basis_len"] = b.basis_len;
      j["rho"] = b.rho;
      break;
    default: break;
  }
  if ((b.type == BlockType::Sector || b.type == BlockType::OffByOne) && b.p_radius.size()) j["p_radius"] = to_json(b.p_radius);
  return j;
}

inline std::vector<double> parse_grid(const json& j) {
  std::vector<double> g;
  if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError("sweep: grid entries must be numbers");
      g.push_back(e.get<double>());
    }
  } else if (j.is_object()) {
    check_keys(j, {"start", "stop", "count"}, "sweep");
    if (!j.contains("start") || !j.contains("stop") || !j.contains("count"))
      throw ConfigError("sweep: range form needs start, stop and count");
    const double a = get_or<double>(j, "start", 0.0, "sweep"), b = get_or<double>(j, "stop", 0.0, "sweep");
    const int n = get_or<int>(j, "count", 0, "sweep");
    if (n < 1) throw ConfigError("sweep.count must be at least 1");
    for (int i = 0; i < n; ++i) g.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  } else {
    throw ConfigError("sweep: expected an array or {start, stop, count}");
  }
  if (g.empty()) throw ConfigError("sweep: empty grid");
  for (double d : g)
    if (!(d > 0.0)) throw ConfigError("sweep: grid values must be positive");
  return g;
}

}  // namespace detail

/// Schema check and resolution of defaults. Relative weight paths resolve
/// against `base_dir`.
inline ScenarioConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  check_keys(j, {"name", "plant", "nn_weights", "equilibrium", "delta_v", "sweep", "sector_beta", "iqc_blocks", "solver",
                 "validation"},
             "config");
  ScenarioConfig c;
  c.base_dir = base_dir;
  c.name = detail::get_or<std::string>(j, "name", "", "config");
  if (!j.contains("plant")) throw ConfigError("config: missing 'plant'");
  c.plant = detail::parse_plant(j.at("plant"));
  if (!j.contains("nn_weights") || !j.at("nn_weights").is_string())
    throw ConfigError("config: missing 'nn_weights' path");
  c.nn_weights = j.at("nn_weights").get<std::string>();

  json eq_echo = "origin";
  if (j.contains("equilibrium")) {
    const json& e = j.at("equilibrium");
    if (e.is_string()) {
      const std::string s = e.get<std::string>();
      if (s == "origin") c.eq_mode = EquilibriumMode::Origin;
      else if (s == "solve") c.eq_mode = EquilibriumMode::Solve;
      else throw ConfigError("equilibrium: expected \"origin\", \"solve\" or a state vector");
      eq_echo = s;
    } else {
      c.eq_mode = EquilibriumMode::Vector;
      c.eq_vector = vector_from_json(e, "equilibrium");
      if (c.eq_vector.size() != c.plant.model().nx()) throw ConfigError("equilibrium: vector length differs from n_x");
      eq_echo = to_json(c.eq_vector);
    }
  }

  if (j.contains("delta_v")) {
    if (!j.at("delta_v").is_number() || !(j.at("delta_v").get<double>() > 0.0))
      throw ConfigError("delta_v must be a positive number");
    c.delta_v = j.at("delta_v").get<double>();
  }
  if (j.contains("sweep")) c.sweep = detail::parse_grid(j.at("sweep"));
  if (!c.delta_v && c.sweep.empty()) throw ConfigError("config: needs 'delta_v' or a 'sweep' grid");

  const std::string sb = detail::get_or<std::string>(j, "sector_beta", "tightened", "config");
  if (sb == "tightened") c.bound_opts.beta_mode = SectorUpper::Tightened;
  else if (sb == "global") c.bound_opts.beta_mode = SectorUpper::Global;
  else throw ConfigError("sector_beta: expected \"tightened\" or \"global\"");

  if (j.contains("iqc_blocks")) {
    if (!j.at("iqc_blocks").is_array()) throw ConfigError("iqc_blocks: expected an array");
    for (std::size_t i = 0; i < j.at("iqc_blocks").size(); ++i)
      c.blocks.push_back(detail::parse_block(j.at("iqc_blocks")[i], i, c.plant));
  }

  const json so = j.contains("solver") ? j.at("solver") : json::object();
  check_keys(so, {"backend", "eps", "max_iters", "time_limit_s", "epsilon", "p_floor", "lambda_cap", "threads"}, "solver");
  c.backend = detail::get_or<std::string>(so, "backend", "", "solver");
  c.solver.eps = detail::positive(so, "eps", c.solver.eps, "solver");
  c.solver.max_iters = detail::get_or<int>(so, "max_iters", 1000, "solver");
  c.solver.time_limit_s = detail::get_or<double>(so, "time_limit_s", 0.0, "solver");
  c.assembly.epsilon = detail::positive(so, "epsilon", c.assembly.epsilon, "solver");
  c.assembly.p_floor = detail::positive(so, "p_floor", c.assembly.p_floor, "solver");
  c.assembly.lambda_cap = detail::get_or<double>(so, "lambda_cap", 0.0, "solver");
  c.sweep_threads = detail::get_or<int>(so, "threads", 1, "solver");
  if (c.solver.max_iters < 1) throw ConfigError("solver.max_iters must be positive");
  if (c.sweep_threads < 0) throw ConfigError("solver.threads must be nonnegative");

  const json vo = j.contains("validation") ? j.at("validation") : json::object();
  check_keys(vo, {"enabled", "samples", "steps", "conv_tol", "seed", "realizations", "pooled", "interior_fraction",
                  "threads", "lyapunov_samples"},
             "validation");
  auto& v = c.validation;
  c.validate = detail::get_or<bool>(vo, "enabled", true, "validation");
  v.samples = detail::get_or<int>(vo, "samples", v.samples, "validation");
  v.steps = detail::get_or<int>(vo, "steps", v.steps, "validation");
  v.conv_tol = detail::positive(vo, "conv_tol", v.conv_tol, "validation");
  v.seed = detail::get_or<std::uint64_t>(vo, "seed", v.seed, "validation");
  v.realizations = detail::get_or<int>(vo, "realizations", v.realizations, "validation");
  v.pooled = detail::get_or<bool>(vo, "pooled", v.pooled, "validation");
  v.interior_fraction = detail::get_or<double>(vo, "interior_fraction", v.interior_fraction, "validation");
  v.threads = detail::get_or<int>(vo, "threads", v.threads, "validation");
  c.lyapunov_samples = detail::get_or<int>(vo, "lyapunov_samples", c.lyapunov_samples, "validation");
  if (v.samples < 0 || v.steps < 1 || v.realizations < 1 || c.lyapunov_samples < 0)
    throw ConfigError("validation: counts must be positive");
  if (v.interior_fraction < 0.0 || v.interior_fraction > 1.0)
    throw ConfigError("validation.interior_fraction must be in [0, 1]");

  json blocks = json::array();
  for (const auto& b : c.blocks) blocks.push_back(detail::block_echo(b));
  c.echo = {{"name", c.name},
            {"plant", detail::plant_echo(c.plant)},
            {"nn_weights", c.nn_weights},
            {"equilibrium", eq_echo},
            {"sector_beta", sb},
            {"iqc_blocks", blocks},
            {"solver",
             {{"backend", c.backend},
              {"eps", c.solver.eps},
              {"max_iters", c.solver.max_iters},
              {"time_limit_s", c.solver.time_limit_s},
              {"epsilon", c.assembly.epsilon},
              {"p_floor", c.assembly.p_floor},
              {"lambda_cap", c.assembly.lambda_cap},
              {"threads", c.sweep_threads}}},
            {"validation",
             {{"enabled", c.validate},
              {"samples", v.samples},
              {"steps", v.steps},
              {"conv_tol", v.conv_tol},
              {"seed", v.seed},
              {"realizations", v.realizations},
              {"pooled", v.pooled},
              {"interior_fraction", v.interior_fraction},
              {"threads", v.threads},
              {"lyapunov_samples", c.lyapunov_samples}}}};
  if (c.delta_v) c.echo["delta_v"] = *c.delta_v;
  if (!c.sweep.empty()) c.echo["sweep"] = c.sweep;
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_config(read_json_file(path), p.has_parent_path() ? p.parent_path() : std::filesystem::path("."));
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Identifies the certification problem: the resolved config without
/// validation settings and backend choice, plus the weight file contents.
inline std::string config_hash(const ScenarioConfig& c) {
  json core = c.echo;
  core.erase("validation");
  core["solver"].erase("backend");
  core["solver"].erase("threads");
  std::uint64_t h = fnv1a(core.dump());
  std::ifstream in(c.weights_path(), std::ios::binary);
  if (!in) throw ConfigError("cannot open weights '" + c.weights_path().string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  h = fnv1a(ss.str(), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace roacert
