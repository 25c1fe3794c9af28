#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

#include <scs.h>

#include "roacert/clarabel_backend.hpp"
#include "roacert/sdp.hpp"

namespace roacert {

class ScsBackend final : public SdpBackend {
 public:
  std::string name() const override { return "scs"; }

  SolverResult solve(const ConicProgram& cp, const SolverOptions& opts) override {
    SolverResult out;
    out.backend = name();
    SparseMatrixXd A = cp.A;
    A.makeCompressed();
    VectorXd b = cp.b, c = cp.c;

    ScsMatrix Am{A.valuePtr(), A.innerIndexPtr(), A.outerIndexPtr(), static_cast<scs_int>(A.rows()),
                 static_cast<scs_int>(A.cols())};
    ScsData d{};
    d.m = Am.m;
    d.n = Am.n;
    d.A = &Am;
    d.P = nullptr;
    d.b = b.data();
    d.c = c.data();

    std::vector<scs_int> sdims(cp.psd_dims.begin(), cp.psd_dims.end());
    ScsCone k{};
    k.l = cp.n_nonneg;
    k.s = sdims.empty() ? nullptr : sdims.data();
    k.ssize = static_cast<scs_int>(sdims.size());

    ScsSettings st;
    scs_set_default_settings(&st);
    st.eps_abs = opts.eps;
    st.eps_rel = opts.eps;
    st.eps_infeas = std::max(opts.eps, 1e-12);
    st.max_iters = opts.max_iters;
    st.verbose = opts.verbose ? 1 : 0;
    if (opts.time_limit_s > 0.0) st.time_limit_secs = opts.time_limit_s;

    ScsSolution sol{};
    ScsInfo info{};
    const scs_int flag = scs(&d, &k, &st, &sol, &info);

    out.raw_status = info.status;
    out.iterations = static_cast<int>(info.iter);
    out.setup_ms = info.setup_time;
    out.solve_ms = info.solve_time;
    out.primal_objective = info.pobj;
    out.dual_objective = info.dobj;
    out.primal_residual = info.res_pri;
    out.dual_residual = info.res_dual;
    if (sol.x) out.x = Eigen::Map<VectorXd>(sol.x, cp.n);
    switch (flag) {
      case SCS_SOLVED:
      case SCS_SOLVED_INACCURATE:
        out.status = SolveStatus::Optimal;
        break;
      case SCS_INFEASIBLE:
      case SCS_INFEASIBLE_INACCURATE:
        out.status = SolveStatus::Infeasible;
        break;
      default:
        out.status = SolveStatus::NumericalTrouble;
    }
    std::free(sol.x);
    std::free(sol.y);
    std::free(sol.s);
    return out;
  }
};

/// Backend by name; an empty name reads ROACERT_SOLVER and defaults to clarabel.
inline std::unique_ptr<SdpBackend> make_backend(const std::string& name = "") {
  std::string n = name;
  if (n.empty()) {
    const char* env = std::getenv("ROACERT_SOLVER");
    n = (env && *env) ? env : "clarabel";
  }
  if (n == "clarabel") return std::make_unique<ClarabelBackend>();
  if (n == "scs") return std::make_unique<ScsBackend>();
  throw ConfigError("unknown solver backend '" + n + "' (available: clarabel, scs)");
}

}  // namespace roacert
