#pragma once

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct {
  unsigned max_iter;
  double time_limit;  /* seconds, <= 0 for none */
  int verbose;
  double tol_gap_abs, tol_gap_rel, tol_feas;
  double tol_infeas_abs, tol_infeas_rel;
  int chordal_decomposition;
  int equilibrate;
  double static_reg_constant;           /* <= 0: solver default */
  unsigned iterative_refinement_max_iter; /* 0: solver default */
  int faer_kkt;
} ClarabelFfiSettings;

typedef struct {
  int status; /* clarabel SolverStatus discriminant */
  unsigned iterations;
  double obj_val, obj_val_dual;
  double r_prim, r_dual;
  double setup_time, solve_time;
} ClarabelFfiInfo;

/* min c'x s.t. b - A x in R+^{n_nonneg} x PSD(psd_dims[0]) x ...
   A is CSC (m x n); PSD blocks use upper-triangle column-major svec.
   Returns 0 on success, -1 on invalid input, -2 on internal panic. */
int clarabel_ffi_solve(size_t n, size_t m, const size_t* colptr, const size_t* rowval,
                       const double* nzval, const double* b, const double* c, size_t n_nonneg,
                       const size_t* psd_dims, size_t n_psd, const ClarabelFfiSettings* settings,
                       double* x_out, ClarabelFfiInfo* info);

#ifdef __cplusplus
}
#endif
