// roacert: certify, sweep, simulate and re-validate NN closed loops from JSON configs.
//
// Exit codes: 0 certified / all checks passed, 2 infeasible or a check failed,
// 1 error (bad config, missing file, unsupported setup).

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roacert/pipeline.hpp"

using namespace roacert;

namespace {

struct Common {
  std::string cfg;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string slice;
  std::string ellipse_out;
};

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = load_config(c.cfg);
  if (c.seed) {
    cfg.validation.seed = *c.seed;
    cfg.echo["validation"]["seed"] = *c.seed;
  }
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_text_file(path, text);
}

std::pair<int, int> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("--ellipse-slice expects i,j");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--ellipse-slice expects two integers i,j");
  }
}

VectorXd parse_vector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("--x0: '" + tok + "' is not a number");
    }
  }
  return Eigen::Map<VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void summarize(const RunResult& r) {
  std::cerr << "status: " << to_string(r.cert.status) << " (" << r.cert.stats.backend << " " << r.cert.stats.raw_status
            << ", " << r.cert.stats.iterations << " iterations)\n";
  if (r.cert.status == SolveStatus::Optimal) std::cerr << "trace(P_x) = " << r.cert.objective << "\n";
  if (!r.cert.verification.checks.empty() && !r.cert.verification.pass)
    std::cerr << "failed check: " << r.cert.verification.first_failure() << "\n";
  if (r.validation)
    std::cerr << "validation: " << r.validation->passed << "/" << r.validation->trajectories
              << " trajectories, worst dissipation " << r.validation->worst_dissipation << "\n";
  if (r.lyapunov)
    std::cerr << "lyapunov decrease: worst margin " << r.lyapunov->worst_margin << " over " << r.lyapunov->samples
              << " samples\n";
  std::cerr << (r.certified() ? "CERTIFIED" : "NOT CERTIFIED") << "\n";
}

int run_certify(const Common& c, bool robust) {
  const PreparedModel pm = prepare(load(c));
  const RunResult r = certify(pm, robust);
  emit(c.out, certificate_to_json(pm, r).dump(2) + "\n");
  if (!c.ellipse_out.empty()) {
    if (c.slice.empty()) throw ConfigError("--ellipse-out needs --ellipse-slice i,j");
    if (!r.cert.certified()) throw ParameterError("no certificate to slice");
    const auto [i, j] = parse_pair(c.slice);
    write_text_file(c.ellipse_out, ellipse_csv(r.cert.P_x, pm.eq.x, i, j));
  }
  summarize(r);
  return r.exit_code();
}

int run_sweep(const Common& c) {
  const PreparedModel pm = prepare(load(c));
  const SweepResult s = sweep(pm, true);
  emit(c.out, sweep_csv(s));
  if (s.any_feasible())
    std::cerr << "largest feasible delta_v " << s.largest_feasible << ", largest volume at delta_v "
              << s.rows[s.best_volume].delta_v << "\n";
  else
    std::cerr << "no feasible grid point\n";
  return s.any_feasible() ? 0 : 2;
}

int run_simulate(const Common& c, const std::string& x0s, int steps, const std::string& cert_path) {
  const PreparedModel pm = prepare(load(c));
  const VectorXd x0 = parse_vector(x0s);
  if (x0.size() != pm.model.nx()) throw ConfigError("--x0 must have " + std::to_string(pm.model.nx()) + " entries");
  RunResult r;
  if (!cert_path.empty()) {
    r = revalidate(pm, read_json_file(cert_path));
  } else {
    ScenarioConfig cfg = pm.cfg;
    cfg.validate = false;
    PreparedModel p2 = pm;
    p2.cfg = cfg;
    r = certify(p2, true);
  }
  const Scenario scn = build_scenario(pm, r.instance);
  const Trajectory tr = simulate(scn, x0, steps);
  std::vector<double> V;
  if (r.cert.certified()) V = lyapunov_along(tr, r.cert, r.instance, pm.eq.x);
  else std::cerr << "no valid certificate; V column left empty\n";
  emit(c.out, trajectory_csv(tr, V));
  std::cerr << (tr.converged ? "converged" : (tr.diverged ? "diverged" : "not converged")) << " after " << tr.steps
            << " steps\n";
  return 0;
}

int run_validate(const Common& c, const std::string& cert_path) {
  const PreparedModel pm = prepare(load(c));
  const RunResult r = revalidate(pm, read_json_file(cert_path));
  json rep;
  json checks = json::array();
  for (const auto& ck : r.cert.verification.checks)
    checks.push_back({{"name", ck.name}, {"min_eig", ck.min_eig}, {"pass", ck.pass}});
  rep["residuals"] = checks;
  rep["verified"] = r.cert.verification.pass;
  rep["validation"] = r.validation ? validation_to_json(*r.validation) : json(nullptr);
  rep["lyapunov_check"] = r.lyapunov ? lyapunov_to_json(*r.lyapunov) : json(nullptr);
  rep["pass"] = r.certified();
  emit(c.out, rep.dump(2) + "\n");
  if (!r.cert.verification.pass) std::cerr << "failed check: " << r.cert.verification.first_failure() << "\n";
  std::cerr << (r.certified() ? "PASS" : "FAIL") << "\n";
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-of-attraction certificates for neural-network feedback loops"};
  app.require_subcommand(1);

  Common c;
  std::string x0s, cert_path;
  int steps = 500;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", c.cfg, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output path (default: stdout)");
    sub->add_option("--seed", c.seed, "validation seed (overrides the config)");
  };
  auto add_slice = [&](CLI::App* sub) {
    sub->add_option("--ellipse-slice", c.slice, "coordinate pair i,j for the ellipse export");
    sub->add_option("--ellipse-out", c.ellipse_out, "CSV path for boundary points of the slice");
  };

  auto* nominal = app.add_subcommand("certify-nominal", "local stability certificate for a nominal plant");
  add_common(nominal);
  add_slice(nominal);
  auto* robust = app.add_subcommand("certify-robust", "robust certificate with IQC blocks");
  add_common(robust);
  add_slice(robust);
  auto* sw = app.add_subcommand("sweep", "certify over the config's delta_v grid, CSV out");
  add_common(sw);
  auto* sim = app.add_subcommand("simulate", "closed-loop trajectory CSV (k, x..., u..., V)");
  add_common(sim);
  sim->add_option("--x0", x0s, "initial state, comma separated")->required();
  sim->add_option("--steps", steps, "number of steps")->check(CLI::PositiveNumber);
  sim->add_option("--cert", cert_path, "certificate for the V column (default: certify first)")->check(CLI::ExistingFile);
  auto* val = app.add_subcommand("validate", "re-audit a certificate against its config");
  add_common(val);
  val->add_option("certificate", cert_path, "certificate JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*nominal) return run_certify(c, false);
    if (*robust) return run_certify(c, true);
    if (*sw) return run_sweep(c);
    if (*sim) return run_simulate(c, x0s, steps, cert_path);
    if (*val) return run_validate(c, cert_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
