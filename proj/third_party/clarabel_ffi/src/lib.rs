use std::os::raw::c_int;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

#[repr(C)]
pub struct ClarabelFfiSettings {
    pub max_iter: u32,
    pub time_limit: f64,
    pub verbose: c_int,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub tol_infeas_abs: f64,
    pub tol_infeas_rel: f64,
    pub chordal_decomposition: c_int,
    pub equilibrate: c_int,
    pub static_reg_constant: f64,  // <= 0: solver default
    pub iterative_refinement_max_iter: u32,  // 0: solver default
    pub faer_kkt: c_int,
}

#[repr(C)]
pub struct ClarabelFfiInfo {
    pub status: c_int,
    pub iterations: u32,
    pub obj_val: f64,
    pub obj_val_dual: f64,
    pub r_prim: f64,
    pub r_dual: f64,
    pub setup_time: f64,
    pub solve_time: f64,
}

fn status_code(s: SolverStatus) -> c_int {
    s as c_int
}

#[no_mangle]
pub unsafe extern "C" fn clarabel_ffi_solve(
    n: usize,
    m: usize,
    colptr: *const usize,
    rowval: *const usize,
    nzval: *const f64,
    b: *const f64,
    c: *const f64,
    n_nonneg: usize,
    psd_dims: *const usize,
    n_psd: usize,
    settings: *const ClarabelFfiSettings,
    x_out: *mut f64,
    info: *mut ClarabelFfiInfo,
) -> c_int {
    if colptr.is_null() || settings.is_null() || x_out.is_null() || info.is_null() {
        return -1;
    }
    let colptr = slice::from_raw_parts(colptr, n + 1).to_vec();
    let nnz = colptr[n];
    let rowval = if nnz > 0 { slice::from_raw_parts(rowval, nnz).to_vec() } else { Vec::new() };
    let nzval = if nnz > 0 { slice::from_raw_parts(nzval, nnz).to_vec() } else { Vec::new() };
    let b = if m > 0 { slice::from_raw_parts(b, m).to_vec() } else { Vec::new() };
    let c = if n > 0 { slice::from_raw_parts(c, n).to_vec() } else { Vec::new() };
    let dims = if n_psd > 0 { slice::from_raw_parts(psd_dims, n_psd).to_vec() } else { Vec::new() };
    let st = &*settings;

    let run = AssertUnwindSafe(|| -> Result<(Vec<f64>, ClarabelFfiInfo), ()> {
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut cones = Vec::new();
        if n_nonneg > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
        }
        for d in dims {
            cones.push(SupportedConeT::PSDTriangleConeT(d));
        }
        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(st.verbose != 0)
            .max_iter(st.max_iter)
            .tol_gap_abs(st.tol_gap_abs)
            .tol_gap_rel(st.tol_gap_rel)
            .tol_feas(st.tol_feas)
            .tol_infeas_abs(st.tol_infeas_abs)
            .tol_infeas_rel(st.tol_infeas_rel)
            .chordal_decomposition_enable(st.chordal_decomposition != 0)
            .equilibrate_enable(st.equilibrate != 0)
            .max_threads(1);
        if st.static_reg_constant > 0.0 {
            builder.static_regularization_constant(st.static_reg_constant);
        }
        if st.iterative_refinement_max_iter > 0 {
            builder.iterative_refinement_max_iter(st.iterative_refinement_max_iter);
        }
        if st.faer_kkt != 0 {
            builder.direct_solve_method("faer".to_string());
        }
        if st.time_limit > 0.0 {
            builder.time_limit(st.time_limit);
        }
        let settings = builder.build().map_err(|_| ())?;
        let mut solver = DefaultSolver::new(&p, &c, &a, &b, &cones, settings).map_err(|_| ())?;
        solver.solve();
        let sol = &solver.solution;
        let out = ClarabelFfiInfo {
            status: status_code(sol.status),
            iterations: sol.iterations,
            obj_val: sol.obj_val,
            obj_val_dual: sol.obj_val_dual,
            r_prim: sol.r_prim,
            r_dual: sol.r_dual,
            setup_time: 0.0,
            solve_time: sol.solve_time,
        };
        Ok((sol.x.clone(), out))
    });
    match catch_unwind(run) {
        Ok(Ok((x, out))) => {
            if x.len() == n {
                slice::from_raw_parts_mut(x_out, n).copy_from_slice(&x);
            }
            *info = out;
            0
        }
        Ok(Err(())) => -1,
        Err(_) => -2,
    }
}
