//! C interface to `srcid`.
//!
//! Objects are passed as opaque handles created by `*_new`/`*_build`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SrcidStatus`]; on failure a description is available from
//! [`srcid_last_error_message`] on the same thread. Output arrays are
//! caller-allocated and their length is checked against the expected size.
//! Matrices are column-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use srcid::certify::{certify, CertifyOptions, SourceConfig};
use srcid::forward::{assemble, build_forward_matrix, ForwardModel};
use srcid::harness::{Formulation, InverseModel};
use srcid::mesh::{build_domain, ConductivityField, CrossGeometry, DomainSpec, Grading, Mesh};
use srcid::solvers::{solve_weighted_bp, BpOptions, SolveRequest, SolveResult, SolveStatus, Tolerances};
use srcid::spectral::{WeightMatrix, DEFAULT_RANK_TOL, DEFAULT_WEIGHT_FLOOR};
use srcid::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrcidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    InvalidMesh = 4,
    Numerical = 5,
    Io = 6,
    /// Basis pursuit data outside the range of the operator.
    Infeasible = 7,
    /// Iteration limit reached; the best iterate is still returned.
    NotConverged = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrcidDomain {
    UnitSquare = 0,
    Cross = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrcidConductivity {
    /// `sigma = value`.
    Constant = 0,
    /// `sigma(x, y) = 2 + sin(x) cos(y)`; the value argument is ignored.
    Sinusoidal = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrcidFormulation {
    /// Fidelity `1/2 ||A x - b||^2`.
    FormA = 0,
    /// Fidelity `1/2 ||A_k^+ A x - A_k^+ b||^2`.
    FormAd = 1,
}

/// Summary of a solve; the iterate itself goes to the caller's buffer.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SrcidSolveReport {
    pub objective: f64,
    pub residual_norm: f64,
    pub optimality: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SrcidCertificate {
    pub c1_feasible: bool,
    pub c2_pass: bool,
    /// NaN when C.1 has no solution.
    pub c2_margin: f64,
    pub alpha_max: f64,
    pub certificate_valid: bool,
    pub injective_on_support: bool,
    pub sigma_min_support: f64,
    pub disjoint: bool,
    pub recovery_certified: bool,
}

pub struct SrcidMesh(Mesh);

pub struct SrcidForward(ForwardModel);

/// Forward matrix with its SVD, truncation level and weights.
pub struct SrcidInverse(InverseModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SrcidStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(classify(&e), e.to_string())
    }
}

fn classify(e: &Error) -> SrcidStatus {
    match e {
        Error::InvalidDomain(_) | Error::InvalidMesh(_) | Error::MeshQuality { .. } => SrcidStatus::InvalidMesh,
        Error::Dimension(_) => SrcidStatus::Dimension,
        Error::SingularSystem
        | Error::NonFinite
        | Error::NotProjection(_)
        | Error::NullBasisVector { .. }
        | Error::Column { .. } => SrcidStatus::Numerical,
        Error::Parse { .. } | Error::Io { .. } | Error::Json(_) => SrcidStatus::Io,
        Error::AtAlpha { source, .. } => classify(source),
        _ => SrcidStatus::InvalidArgument,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<SrcidStatus, Failure>) -> SrcidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status == SrcidStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SrcidStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SrcidStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, expected: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len != expected {
        return Err(Failure(
            SrcidStatus::Dimension,
            format!("{what} has length {len}, expected {expected}"),
        ));
    }
    if expected == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<SrcidStatus, Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(SrcidStatus::Ok)
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SrcidStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn srcid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn srcid_status_name(status: SrcidStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SrcidStatus::Ok => c"ok",
        SrcidStatus::NullPointer => c"null pointer",
        SrcidStatus::InvalidArgument => c"invalid argument",
        SrcidStatus::Dimension => c"dimension mismatch",
        SrcidStatus::InvalidMesh => c"invalid mesh",
        SrcidStatus::Numerical => c"numerical failure",
        SrcidStatus::Io => c"i/o or parse error",
        SrcidStatus::Infeasible => c"infeasible",
        SrcidStatus::NotConverged => c"not converged",
        SrcidStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn srcid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Structured triangulation of a reference domain. `grading_seed = 0`
/// keeps the grid uniform; any other value jitters interior vertices.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_build(
    domain: SrcidDomain,
    divisions: usize,
    grading_seed: u64,
    out: *mut *mut SrcidMesh,
) -> SrcidStatus {
    guard(|| {
        let mut spec = match domain {
            SrcidDomain::UnitSquare => DomainSpec::unit_square(divisions),
            SrcidDomain::Cross => DomainSpec::cross(CrossGeometry::default(), divisions),
        };
        if grading_seed != 0 {
            spec = spec.with_grading(Grading::new(grading_seed));
        }
        store(out, SrcidMesh(build_domain(&spec)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_load(path_: *const c_char, out: *mut *mut SrcidMesh) -> SrcidStatus {
    guard(|| store(out, SrcidMesh(Mesh::load(path(path_)?)?)))
}

/// # Safety
/// `mesh` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_save(mesh: *const SrcidMesh, path_: *const c_char) -> SrcidStatus {
    guard(|| {
        handle(mesh, "mesh")?.0.save(path(path_)?)?;
        Ok(SrcidStatus::Ok)
    })
}

/// Uniform red refinement: every triangle split into four.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_refine(mesh: *const SrcidMesh, out: *mut *mut SrcidMesh) -> SrcidStatus {
    guard(|| store(out, SrcidMesh(handle(mesh, "mesh")?.0.refine()?)))
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_vertex_count(mesh: *const SrcidMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.n_vertices())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_triangle_count(mesh: *const SrcidMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.n_triangles())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_boundary_count(mesh: *const SrcidMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.boundary_nodes().len())
}

/// Interleaved coordinates `x0, y0, x1, y1, ...`; `len` must be twice the
/// vertex count.
///
/// # Safety
/// `mesh` must be a live handle and `xy` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_vertices(mesh: *const SrcidMesh, xy: *mut f64, len: usize) -> SrcidStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let out = output(xy, len, 2 * mesh.n_vertices(), "coordinate buffer")?;
        for (dst, p) in out.chunks_exact_mut(2).zip(mesh.vertices()) {
            dst.copy_from_slice(p);
        }
        Ok(SrcidStatus::Ok)
    })
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn srcid_mesh_free(mesh: *mut SrcidMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Assembles the P1 system on `mesh` and computes the dense forward matrix.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_build(
    mesh: *const SrcidMesh,
    conductivity: SrcidConductivity,
    value: f64,
    quadrature_order: usize,
    out: *mut *mut SrcidForward,
) -> SrcidStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let sigma = match conductivity {
            SrcidConductivity::Constant => ConductivityField::constant(value),
            SrcidConductivity::Sinusoidal => ConductivityField::sinusoidal(),
        };
        let sys = assemble(mesh, &sigma, quadrature_order)?;
        store(out, SrcidForward(build_forward_matrix(&sys)?))
    })
}

/// Wraps a caller-supplied `m x n` column-major matrix. Rows are taken to be
/// observation points with unit weight.
///
/// # Safety
/// `data` must be valid for `m * n` reads and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_from_matrix(
    data: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut SrcidForward,
) -> SrcidStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err(Failure(SrcidStatus::Dimension, "matrix must be non-empty".into()));
        }
        let len = m
            .checked_mul(n)
            .ok_or_else(|| Failure(SrcidStatus::Dimension, "matrix size overflows".into()))?;
        let values = input(data, len, "matrix")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite.into());
        }
        let model = ForwardModel {
            a: DMatrix::from_column_slice(m, n, values),
            trace_order: (0..m).collect(),
            boundary_mass: vec![1.0; m],
        };
        store(out, SrcidForward(model))
    })
}

/// # Safety
/// `forward` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_rows(forward: *const SrcidForward) -> usize {
    forward.as_ref().map_or(0, |f| f.0.m())
}

/// # Safety
/// `forward` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_cols(forward: *const SrcidForward) -> usize {
    forward.as_ref().map_or(0, |f| f.0.n())
}

/// Copies the matrix in column-major order; `len` must be `rows * cols`.
///
/// # Safety
/// `forward` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_matrix(forward: *const SrcidForward, out: *mut f64, len: usize) -> SrcidStatus {
    guard(|| {
        let a = &handle(forward, "forward model")?.0.a;
        output(out, len, a.len(), "matrix buffer")?.copy_from_slice(a.as_slice());
        Ok(SrcidStatus::Ok)
    })
}

/// Mesh vertex index of every row.
///
/// # Safety
/// `forward` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_trace_order(
    forward: *const SrcidForward,
    out: *mut usize,
    len: usize,
) -> SrcidStatus {
    guard(|| {
        let f = &handle(forward, "forward model")?.0;
        output(out, len, f.m(), "index buffer")?.copy_from_slice(&f.trace_order);
        Ok(SrcidStatus::Ok)
    })
}

/// `b = A x`.
///
/// # Safety
/// `forward` must be a live handle, `x` valid for `n` reads and `b` for `m`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_apply(
    forward: *const SrcidForward,
    x: *const f64,
    n: usize,
    b: *mut f64,
    m: usize,
) -> SrcidStatus {
    guard(|| {
        let f = &handle(forward, "forward model")?.0;
        if n != f.n() {
            return Err(Failure(
                SrcidStatus::Dimension,
                format!("x has length {n}, expected {}", f.n()),
            ));
        }
        let x = input(x, n, "x")?;
        let out = output(b, m, f.m(), "b")?;
        out.copy_from_slice(&f.apply(x));
        Ok(SrcidStatus::Ok)
    })
}

/// # Safety
/// `forward` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn srcid_forward_free(forward: *mut SrcidForward) {
    if !forward.is_null() {
        drop(Box::from_raw(forward));
    }
}

/// SVD of the forward matrix with truncation level `k`; `k = 0` selects the
/// numerical rank. The forward model is copied.
///
/// # Safety
/// `forward` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_new(
    forward: *const SrcidForward,
    k: usize,
    out: *mut *mut SrcidInverse,
) -> SrcidStatus {
    guard(|| {
        let f = handle(forward, "forward model")?.0.clone();
        let k = if k == 0 {
            srcid::spectral::decompose(&f.a, DEFAULT_RANK_TOL)?.rank()
        } else {
            k
        };
        store(
            out,
            SrcidInverse(InverseModel::new(f, k, DEFAULT_RANK_TOL, DEFAULT_WEIGHT_FLOOR)?),
        )
    })
}

/// # Safety
/// `inverse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_rank(inverse: *const SrcidInverse) -> usize {
    inverse.as_ref().map_or(0, |i| i.0.spectral.rank())
}

/// # Safety
/// `inverse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_k(inverse: *const SrcidInverse) -> usize {
    inverse.as_ref().map_or(0, |i| i.0.k)
}

/// Number of singular values, `min(rows, cols)`.
///
/// # Safety
/// `inverse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_singular_value_count(inverse: *const SrcidInverse) -> usize {
    inverse.as_ref().map_or(0, |i| i.0.spectral.singular_values().len())
}

/// Singular values in nonincreasing order.
///
/// # Safety
/// `inverse` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_singular_values(
    inverse: *const SrcidInverse,
    out: *mut f64,
    len: usize,
) -> SrcidStatus {
    guard(|| {
        let s = handle(inverse, "inverse model")?.0.spectral.singular_values();
        output(out, len, s.len(), "singular value buffer")?.copy_from_slice(s);
        Ok(SrcidStatus::Ok)
    })
}

/// Diagonal weights `w_i = ||P_k e_i||`.
///
/// # Safety
/// `inverse` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_weights(inverse: *const SrcidInverse, out: *mut f64, len: usize) -> SrcidStatus {
    guard(|| {
        let w = &handle(inverse, "inverse model")?.0.weights.w;
        output(out, len, w.len(), "weight buffer")?.copy_from_slice(w);
        Ok(SrcidStatus::Ok)
    })
}

/// # Safety
/// `inverse` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn srcid_inverse_free(inverse: *mut SrcidInverse) {
    if !inverse.is_null() {
        drop(Box::from_raw(inverse));
    }
}

fn weights_of(model: &InverseModel, weighted: bool) -> WeightMatrix {
    if weighted {
        model.weights.clone()
    } else {
        WeightMatrix::identity(model.n())
    }
}

unsafe fn finish(result: SolveResult, x: &mut [f64], report: *mut SrcidSolveReport) -> Result<SrcidStatus, Failure> {
    x.copy_from_slice(&result.x);
    if let Some(r) = report.as_mut() {
        *r = SrcidSolveReport {
            objective: result.objective,
            residual_norm: result.residual_norm,
            optimality: result.optimality,
            iterations: result.iterations,
            converged: result.converged,
        };
    }
    Ok(match result.status {
        SolveStatus::Converged => SrcidStatus::Ok,
        SolveStatus::MaxIterations => SrcidStatus::NotConverged,
        SolveStatus::Infeasible => SrcidStatus::Infeasible,
    })
}

/// Weighted basis pursuit `min ||W x||_1` subject to `A x = b`. With
/// `weighted = false` the plain l1 norm is used. Returns
/// `SRCID_STATUS_INFEASIBLE` when `b` is outside the range of `A`.
///
/// # Safety
/// `inverse` must be a live handle, `b` valid for `m` reads, `x` for `n`
/// writes; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn srcid_solve_bp(
    inverse: *const SrcidInverse,
    weighted: bool,
    b: *const f64,
    m: usize,
    x: *mut f64,
    n: usize,
    report: *mut SrcidSolveReport,
) -> SrcidStatus {
    guard(|| {
        let model = &handle(inverse, "inverse model")?.0;
        if m != model.m() {
            return Err(Failure(
                SrcidStatus::Dimension,
                format!("b has length {m}, expected {}", model.m()),
            ));
        }
        let b = input(b, m, "b")?;
        let x = output(x, n, model.n(), "x")?;
        let w = weights_of(model, weighted);
        let result = solve_weighted_bp(&SolveRequest::new(&model.forward.a, b, &w, 0.0), &BpOptions::default())?;
        finish(result, x, report)
    })
}

/// Weighted LASSO `1/2 ||G x - d||^2 + alpha ||W x||_1` with the fidelity
/// chosen by `formulation`.
///
/// # Safety
/// `inverse` must be a live handle, `b` valid for `m` reads, `x` for `n`
/// writes; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn srcid_solve_lasso(
    inverse: *const SrcidInverse,
    formulation: SrcidFormulation,
    weighted: bool,
    alpha: f64,
    b: *const f64,
    m: usize,
    x: *mut f64,
    n: usize,
    report: *mut SrcidSolveReport,
) -> SrcidStatus {
    guard(|| {
        let model = &handle(inverse, "inverse model")?.0;
        let b = input(b, m, "b")?;
        let x = output(x, n, model.n(), "x")?;
        let formulation = match formulation {
            SrcidFormulation::FormA => Formulation::FormA,
            SrcidFormulation::FormAd => Formulation::FormAd,
        };
        let w = weights_of(model, weighted);
        let result = model.solve(formulation, b, &w, alpha, &Tolerances::default())?;
        finish(result, x, report)
    })
}

/// Recoverability checks for the source with nonzero `values` at the
/// zero-based indices `support`.
///
/// # Safety
/// `inverse` must be a live handle, `support` and `values` valid for `len`
/// reads and `report` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srcid_certify(
    inverse: *const SrcidInverse,
    support: *const usize,
    values: *const f64,
    len: usize,
    report: *mut SrcidCertificate,
) -> SrcidStatus {
    guard(|| {
        let model = &handle(inverse, "inverse model")?.0;
        let support = input(support, len, "support")?.to_vec();
        let values = input(values, len, "values")?.to_vec();
        if report.is_null() {
            return Err(null("report"));
        }
        let source = SourceConfig::new(model.n(), support, values)?;
        let r = certify(
            &model.forward.a,
            &model.projection(),
            &model.weights,
            &source,
            &CertifyOptions::default(),
        )?;
        *report = SrcidCertificate {
            c1_feasible: r.c1_feasible,
            c2_pass: r.c2_pass,
            c2_margin: r.c2_margin.unwrap_or(f64::NAN),
            alpha_max: r.alpha_max,
            certificate_valid: r.certificate_valid,
            injective_on_support: r.injective_on_support,
            sigma_min_support: r.sigma_min_support,
            disjoint: r.disjoint,
            recovery_certified: r.recovery_certified(),
        };
        Ok(SrcidStatus::Ok)
    })
}
