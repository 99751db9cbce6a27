//! C ABI for the fourmode library.
//!
//! Conventions: opaque handles created/freed by paired functions, plain
//! double arrays for matrices (row-major) and coefficient lists, and an
//! [`FmStatus`] code from every fallible call. All functions are
//! null-tolerant and never unwind across the boundary.

use std::panic::{catch_unwind, AssertUnwindSafe};

use fourmode::bogolyubov;
use fourmode::decoherence;
use fourmode::dynamics::{cosmology_kernel, evolve_green, CosmologyModel, GreenTrajectory, ScaleFactor};
use fourmode::error::Error;
use fourmode::gaussian;
use fourmode::symplectic::SqueezeRotParams;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments violate a documented precondition.
    InvalidArgument = 2,
    /// The mixing-angle factorization is singular at these angles.
    Singular = 3,
    /// A numerical guard tripped (non-symplectic input, singular covariance, ...).
    Numerical = 4,
    /// A resource budget would be exceeded.
    Resource = 5,
}

fn status_of(err: &Error) -> FmStatus {
    match err {
        Error::SingularFactorization { .. } => FmStatus::Singular,
        Error::Resource { .. } => FmStatus::Resource,
        Error::Domain(_) | Error::Config(_) | Error::GeneratorIndex(_) => FmStatus::InvalidArgument,
        _ => FmStatus::Numerical,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fm_status_message(status: FmStatus) -> *const core::ffi::c_char {
    let s: &'static [u8] = match status {
        FmStatus::Ok => b"ok\0",
        FmStatus::NullPointer => b"null pointer argument\0",
        FmStatus::InvalidArgument => b"invalid argument\0",
        FmStatus::Singular => b"singular mixing-angle factorization\0",
        FmStatus::Numerical => b"numerical guard tripped\0",
        FmStatus::Resource => b"resource budget exceeded\0",
    };
    s.as_ptr() as *const core::ffi::c_char
}

/// Opaque Bloch-Messiah parameter set (ten squeezing/rotation parameters).
pub struct FmParams(SqueezeRotParams);

/// Allocate a parameter set; free with [`fm_params_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn fm_params_new(
    theta3: f64,
    theta4: f64,
    theta5: f64,
    theta6: f64,
    d1: f64,
    d2: f64,
    phi3: f64,
    phi4: f64,
    phi5: f64,
    phi6: f64,
) -> *mut FmParams {
    let p = SqueezeRotParams {
        theta3,
        theta4,
        theta5,
        theta6,
        d1,
        d2,
        phi3,
        phi4,
        phi5,
        phi6,
    };
    if !p.is_finite() {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(FmParams(p)))
}

/// # Safety
/// `params` must be a pointer returned by [`fm_params_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_params_free(params: *mut FmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Sector squeezing amplitudes r1 = d1 + d2 and r2 = d2 - d1.
///
/// # Safety
/// `params` must be a live handle; `r1` and `r2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_params_squeezing(
    params: *const FmParams,
    r1: *mut f64,
    r2: *mut f64,
) -> FmStatus {
    if params.is_null() || r1.is_null() || r2.is_null() {
        return FmStatus::NullPointer;
    }
    let p = &(*params).0;
    *r1 = p.r1();
    *r2 = p.r2();
    FmStatus::Ok
}

/// The eight Bogolyubov coefficients as 16 doubles
/// (Re/Im of alpha11, alpha12, alpha21, alpha22, beta11, beta12, beta21, beta22).
///
/// # Safety
/// `params` must be a live handle; `out` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_bogolyubov_coefficients(
    params: *const FmParams,
    out: *mut f64,
) -> FmStatus {
    if params.is_null() || out.is_null() {
        return FmStatus::NullPointer;
    }
    match bogolyubov::from_params(&(*params).0) {
        Ok(b) => {
            let flat = b.as_flat();
            std::ptr::copy_nonoverlapping(flat.as_ptr(), out, 16);
            FmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// The four symplectic-constraint residuals of the coefficient set.
///
/// # Safety
/// `params` must be a live handle; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_constraint_residuals(
    params: *const FmParams,
    out: *mut f64,
) -> FmStatus {
    if params.is_null() || out.is_null() {
        return FmStatus::NullPointer;
    }
    match bogolyubov::from_params(&(*params).0) {
        Ok(b) => {
            let res = bogolyubov::constraint_residuals(&b);
            std::ptr::copy_nonoverlapping(res.as_ptr(), out, 4);
            FmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// The symmetric 4x4 covariance matrix at wavenumber `k`, row-major in the
/// (positions, momenta) block ordering.
///
/// # Safety
/// `params` must be a live handle; `out` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_covariance(
    params: *const FmParams,
    k: f64,
    out: *mut f64,
) -> FmStatus {
    if params.is_null() || out.is_null() {
        return FmStatus::NullPointer;
    }
    if !(k > 0.0) || !k.is_finite() {
        return FmStatus::InvalidArgument;
    }
    match gaussian::covariance_from_params(&(*params).0, k) {
        Ok(cov) => {
            let m = cov.assemble();
            for (i, row) in m.iter().enumerate() {
                std::ptr::copy_nonoverlapping(row.as_ptr(), out.add(4 * i), 4);
            }
            FmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// System-sector purity, symplectic eigenvalue and entanglement entropy
/// (bits) of the reduced Gaussian state.
///
/// # Safety
/// `params` must be a live handle; the out-pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn fm_purity(
    params: *const FmParams,
    gamma: *mut f64,
    sigma: *mut f64,
    entropy: *mut f64,
) -> FmStatus {
    if params.is_null() {
        return FmStatus::NullPointer;
    }
    match gaussian::purity_params(&(*params).0) {
        Ok(rep) => {
            if !gamma.is_null() {
                *gamma = rep.gamma;
            }
            if !sigma.is_null() {
                *sigma = rep.symplectic_eigenvalue;
            }
            if !entropy.is_null() {
                *entropy = rep.entanglement_entropy;
            }
            FmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Leading-order purity in the field-field coupling.
///
/// # Safety
/// `params` must be a live handle; `gamma` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_purity_perturbative(
    params: *const FmParams,
    gamma: *mut f64,
) -> FmStatus {
    if params.is_null() || gamma.is_null() {
        return FmStatus::NullPointer;
    }
    *gamma = decoherence::purity_perturbative(&(*params).0);
    FmStatus::Ok
}

/// Evolved-vacuum amplitude c(n, m, s, t) of one tuple.
///
/// # Safety
/// `params` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_amplitude(
    params: *const FmParams,
    n: i64,
    m: i64,
    s: i64,
    t: i64,
    re: *mut f64,
    im: *mut f64,
) -> FmStatus {
    if params.is_null() || re.is_null() || im.is_null() {
        return FmStatus::NullPointer;
    }
    let p = (*params).0;
    let result = catch_unwind(AssertUnwindSafe(|| {
        fourmode::amplitudes::amplitude(&p, n, m, s, t)
    }));
    match result {
        Ok(Ok(c)) => {
            *re = c.re;
            *im = c.im;
            FmStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => FmStatus::Numerical,
    }
}

/// Opaque integrated Green trajectory.
pub struct FmTrajectory(GreenTrajectory);

/// Integrate the two-field cosmological example on a de Sitter background
/// a(eta) = -1/(hubble eta); conformal times must be negative. On success
/// writes a trajectory handle to `out`; free with [`fm_trajectory_free`].
///
/// # Safety
/// `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fm_evolve_de_sitter(
    zeta: f64,
    lambda: f64,
    hubble: f64,
    k: f64,
    eta_start: f64,
    eta_end: f64,
    steps: usize,
    out: *mut *mut FmTrajectory,
) -> FmStatus {
    if out.is_null() {
        return FmStatus::NullPointer;
    }
    let model = CosmologyModel {
        zeta,
        lambda,
        scale_factor: ScaleFactor::DeSitter { hubble },
        k,
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        evolve_green(|eta| cosmology_kernel(&model, eta), k, eta_start, eta_end, steps)
    }));
    match result {
        Ok(Ok(traj)) => {
            *out = Box::into_raw(Box::new(FmTrajectory(traj)));
            FmStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => FmStatus::Numerical,
    }
}

/// Number of stored grid points.
///
/// # Safety
/// `traj` must be a live handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_len(traj: *const FmTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).0.times.len()
}

/// Grid time at one index.
///
/// # Safety
/// `traj` must be a live handle; `t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_time(
    traj: *const FmTrajectory,
    index: usize,
    t: *mut f64,
) -> FmStatus {
    if traj.is_null() || t.is_null() {
        return FmStatus::NullPointer;
    }
    let traj = &(*traj).0;
    if index >= traj.times.len() {
        return FmStatus::InvalidArgument;
    }
    *t = traj.times[index];
    FmStatus::Ok
}

/// Bogolyubov coefficients at one grid index (same 16-double layout as
/// [`fm_bogolyubov_coefficients`]).
///
/// # Safety
/// `traj` must be a live handle; `out` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_bogolyubov(
    traj: *const FmTrajectory,
    index: usize,
    out: *mut f64,
) -> FmStatus {
    if traj.is_null() || out.is_null() {
        return FmStatus::NullPointer;
    }
    let traj = &(*traj).0;
    if index >= traj.times.len() {
        return FmStatus::InvalidArgument;
    }
    match traj.bogolyubov_at(index) {
        Ok(b) => {
            let flat = b.as_flat();
            std::ptr::copy_nonoverlapping(flat.as_ptr(), out, 16);
            FmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Continuity-anchored Bloch-Messiah parameters at one grid index, as ten
/// doubles (theta3..theta6, d1, d2, phi3..phi6).
///
/// # Safety
/// `traj` must be a live handle; `out` must point to 10 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_params(
    traj: *const FmTrajectory,
    index: usize,
    out: *mut f64,
) -> FmStatus {
    if traj.is_null() || out.is_null() {
        return FmStatus::NullPointer;
    }
    let traj = &(*traj).0;
    if index >= traj.times.len() {
        return FmStatus::InvalidArgument;
    }
    let arr = traj.params[index].as_array();
    std::ptr::copy_nonoverlapping(arr.as_ptr(), out, 10);
    FmStatus::Ok
}

/// # Safety
/// `traj` must be a pointer returned by [`fm_evolve_de_sitter`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_free(traj: *mut FmTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
