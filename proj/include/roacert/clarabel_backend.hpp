#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <clarabel_ffi.h>
#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "roacert/linalg.hpp"
#include "roacert/sdp.hpp"

namespace roacert {

/// Interior-point backend. PSD rows are reordered from the row-major upper
/// triangle used by ConicProgram to the column-major upper triangle Clarabel expects.
class ClarabelBackend final : public SdpBackend {
 public:
  std::string name() const override { return "clarabel"; }

  SolverResult solve(const ConicProgram& cp, const SolverOptions& opts) override {
    SolverResult out;
    out.backend = name();
    const Eigen::Index m = cp.A.rows();

    std::vector<Eigen::Index> perm(static_cast<size_t>(m));
    for (Eigen::Index r = 0; r < cp.n_nonneg; ++r) perm[r] = r;
    Eigen::Index off = cp.n_nonneg;
    for (int d : cp.psd_dims) {
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) perm[off + svec_index(d, i, j)] = off + j * (j + 1) / 2 + i;
      off += svec_size(d);
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(cp.A.nonZeros()));
    for (Eigen::Index k = 0; k < cp.A.outerSize(); ++k)
      for (SparseMatrixXd::InnerIterator it(cp.A, k); it; ++it)
        trip.emplace_back(perm[it.row()], it.col(), it.value());
    SparseMatrixXd A(m, cp.A.cols());
    A.setFromTriplets(trip.begin(), trip.end());
    A.prune(0.0);
    A.makeCompressed();
    VectorXd b(m);
    for (Eigen::Index r = 0; r < m; ++r) b(perm[r]) = cp.b(r);

    std::vector<size_t> colptr(A.outerIndexPtr(), A.outerIndexPtr() + A.cols() + 1);
    std::vector<size_t> rowval(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    std::vector<size_t> dims(cp.psd_dims.begin(), cp.psd_dims.end());

    ClarabelFfiSettings st{};
    st.max_iter = static_cast<unsigned>(std::min(opts.max_iters, 1000));
    st.time_limit = opts.time_limit_s;
    st.verbose = opts.verbose ? 1 : 0;
    st.tol_gap_abs = opts.eps;
    st.tol_gap_rel = opts.eps;
    st.tol_feas = opts.eps;
    st.tol_infeas_abs = opts.eps;
    st.tol_infeas_rel = opts.eps;
    st.chordal_decomposition = 0;  // the LMIs here are dense

    st.equilibrate = 1;

    VectorXd x = VectorXd::Zero(cp.n);
    ClarabelFfiInfo info{};
    auto attempt = [&]() {
#if defined(__SSE2__)
      // Subnormals in the KKT factors slow the dense kernels badly.
      const unsigned int csr = _mm_getcsr();
      _mm_setcsr(csr | _MM_FLUSH_ZERO_ON | _MM_DENORMALS_ZERO_ON);
#endif
      const int rc = clarabel_ffi_solve(static_cast<size_t>(cp.n), static_cast<size_t>(m), colptr.data(),
                                        rowval.data(), A.valuePtr(), b.data(), cp.c.data(),
                                        static_cast<size_t>(cp.n_nonneg), dims.data(), dims.size(),
                                        &st, x.data(), &info);
#if defined(__SSE2__)
      _mm_setcsr(csr);
#endif
      return rc;
    };
    int rc = attempt();
    // Ruiz scaling sometimes stalls on nearly infeasible instances, and the
    // default KKT regularization can be too small once lambda grows large.
    // Retry unscaled, then with 10x the static regularization; keep the first
    // run that terminates with a solution or an infeasibility certificate.
    auto terminal = [&]() { return info.status == 1 || info.status == 2 || info.status == 4 || info.status == 5; };
    std::string retry;
    if (rc == 0 && (info.status == 9 || info.status == 10)) {
      const ClarabelFfiInfo first = info;
      const VectorXd x_first = x;
      unsigned iters = first.iterations;
      double time = first.solve_time;
      struct Variant {
        int equilibrate;
        double reg;
        const char* tag;
      };
      for (const Variant& v : {Variant{0, 0.0, "unequilibrated retry"}, Variant{1, 1e-7, "regularized retry"},
                               Variant{0, 1e-7, "unequilibrated regularized retry"}}) {
        st.equilibrate = v.equilibrate;
        st.static_reg_constant = v.reg;
        rc = attempt();
        if (rc == 0) {
          iters += info.iterations;
          time += info.solve_time;
        }
        if (rc == 0 && terminal()) {
          retry = v.tag;
          break;
        }
      }
      if (retry.empty()) {
        rc = 0;
        info = first;
        x = x_first;
      }
      info.iterations = iters;
      info.solve_time = time;
    }
    if (rc != 0) {
      out.raw_status = rc == -2 ? "internal-panic" : "invalid-input";
      return out;
    }
    out.x = std::move(x);
    out.iterations = static_cast<int>(info.iterations);
    out.solve_ms = info.solve_time * 1e3;
    out.primal_objective = info.obj_val;
    out.dual_objective = info.obj_val_dual;
    out.primal_residual = info.r_prim;
    out.dual_residual = info.r_dual;
    // Discriminants of clarabel::solver::SolverStatus.
    static const char* const names[] = {"unsolved",
                                        "solved",
                                        "primal-infeasible",
                                        "dual-infeasible",
                                        "almost-solved",
                                        "almost-primal-infeasible",
                                        "almost-dual-infeasible",
                                        "max-iterations",
                                        "max-time",
                                        "numerical-error",
                                        "insufficient-progress",
                                        "callback-terminated"};
    out.raw_status = (info.status >= 0 && info.status < 12) ? names[info.status] : "unknown";
    if (!retry.empty()) out.raw_status += " (" + retry + ")";
    switch (info.status) {
      case 1:
      case 4:
        out.status = SolveStatus::Optimal;
        break;
      case 2:
      case 5:
        out.status = SolveStatus::Infeasible;
        break;
      default:
        out.status = SolveStatus::NumericalTrouble;
    }
    return out;
  }
};

}  // namespace roacert
