//! C ABI for `locsym`.
//!
//! Profiles and solved states are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`LsStatus`]; on failure
//! the message is kept per thread and read with [`ls_last_error_message`].
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use locsym::invariants::{self, InvariantPair};
use locsym::potential::{symmetry_set, Domain, Interval};
use locsym::{Error, FieldSample, Incidence, PotentialProfile, ScatteringState, Slab, SymmetryTransform};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Non-positive asymptote, degenerate cell or not a Bloch state.
    PhysicsPrecondition = 3,
    /// Field mapping requested on a zero-current state.
    ZeroCurrent = 4,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsIncidence {
    Left = 0,
    Right = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for LsComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<LsComplex> for Complex64 {
    fn from(z: LsComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// `A(x)` and `A'(x)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LsFieldSample {
    pub a_value: LsComplex,
    pub a_deriv: LsComplex,
}

impl From<FieldSample> for LsFieldSample {
    fn from(s: FieldSample) -> Self {
        Self {
            a_value: s.a_value.into(),
            a_deriv: s.a_deriv.into(),
        }
    }
}

/// Invariant currents of one transform on one interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LsInvariantPair {
    pub q: LsComplex,
    pub q_tilde: LsComplex,
    pub j: f64,
    pub sigma: i32,
    pub rho: f64,
    pub domain_start: f64,
    pub domain_end: f64,
    /// Relative spread of `Q`, `Q̃` over the samples.
    pub constancy_residual: f64,
    /// Reference magnitude of all relative tolerances.
    pub scale: f64,
}

/// Opaque piecewise-constant profile.
pub struct LsProfile(PotentialProfile);

/// Opaque solved scattering state.
pub struct LsState(ScatteringState);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> LsStatus {
    match err {
        Error::ZeroCurrent { .. } => LsStatus::ZeroCurrent,
        e if e.is_physics_precondition() => LsStatus::PhysicsPrecondition,
        _ => LsStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> LsStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(name: &str) -> LsStatus {
    set_error(format!("null pointer: {name}"));
    LsStatus::NullPointer
}

fn guard(body: impl FnOnce() -> LsStatus) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            LsStatus::Panic
        }
    }
}

fn transform(sigma: i32, rho: f64) -> Result<SymmetryTransform, LsStatus> {
    SymmetryTransform::new(sigma, rho).map_err(fail)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ls_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Builds a profile from `n` slabs given by left edges, widths and values of
/// `U`, with asymptotic values `u_left`, `u_right`.
///
/// # Safety
/// The three arrays must hold `n` doubles (they may be null if `n == 0`);
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_profile_new(
    x_left: *const f64,
    widths: *const f64,
    values: *const f64,
    n: usize,
    u_left: f64,
    u_right: f64,
    out: *mut *mut LsProfile,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        if n > 0 && (x_left.is_null() || widths.is_null() || values.is_null()) {
            return null("slab arrays");
        }
        let slabs: Vec<Slab> = (0..n)
            .map(|i| Slab::new(*x_left.add(i), *widths.add(i), *values.add(i)))
            .collect();
        match PotentialProfile::new(slabs, u_left, u_right) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(LsProfile(p)));
                LsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `profile` must be null or come from [`ls_profile_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ls_profile_free(profile: *mut LsProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// `U(x)`, right-continuous at breakpoints.
///
/// # Safety
/// `profile` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_profile_eval_u(profile: *const LsProfile, x: f64, out: *mut f64) -> LsStatus {
    guard(|| {
        let (Some(p), false) = (profile.as_ref(), out.is_null()) else {
            return null("profile or out");
        };
        *out = p.0.eval_u(x);
        LsStatus::Ok
    })
}

/// Symmetry set of `F(x) = σx + ρ` inside `[box_start, box_end]` as
/// `count` intervals stored as `(start, end)` pairs in `buf`.
/// A negative `tol_u` selects the default tolerance.
///
/// If `capacity` (in intervals) is too small, `*count` receives the
/// required number and [`LsStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `buf` must be valid for `2 * capacity` doubles (or null if `capacity == 0`);
/// `count` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_symmetry_set(
    profile: *const LsProfile,
    sigma: i32,
    rho: f64,
    tol_u: f64,
    box_start: f64,
    box_end: f64,
    buf: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> LsStatus {
    guard(|| {
        let (Some(p), false) = (profile.as_ref(), count.is_null()) else {
            return null("profile or count");
        };
        let t = match transform(sigma, rho) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if !(box_end > box_start) {
            set_error(format!("empty box [{box_start}, {box_end}]"));
            return LsStatus::InvalidArgument;
        }
        let tol = if tol_u < 0.0 { p.0.default_tol_u() } else { tol_u };
        let set = symmetry_set(&p.0, &t, tol, &Interval::new(box_start, box_end));
        let components = set.components();
        *count = components.len();
        if components.len() > capacity {
            set_error(format!("{} intervals do not fit in {capacity}", components.len()));
            return LsStatus::BufferTooSmall;
        }
        if !components.is_empty() && buf.is_null() {
            return null("buf");
        }
        for (i, c) in components.iter().enumerate() {
            *buf.add(2 * i) = c.start;
            *buf.add(2 * i + 1) = c.end;
        }
        LsStatus::Ok
    })
}

/// Solves the one-sided scattering problem.
///
/// # Safety
/// `profile` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_solve(profile: *const LsProfile, incidence: LsIncidence, out: *mut *mut LsState) -> LsStatus {
    guard(|| {
        let (Some(p), false) = (profile.as_ref(), out.is_null()) else {
            return null("profile or out");
        };
        let incidence = match incidence {
            LsIncidence::Left => Incidence::Left,
            LsIncidence::Right => Incidence::Right,
        };
        match locsym::solve_scattering(&p.0, incidence) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(LsState(s)));
                LsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `state` must be null or come from [`ls_solve`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ls_state_free(state: *mut LsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

unsafe fn with_state<T>(state: *const LsState, out: *mut T, f: impl FnOnce(&ScatteringState) -> Result<T, LsStatus>) -> LsStatus {
    guard(|| {
        let (Some(s), false) = (state.as_ref(), out.is_null()) else {
            return null("state or out");
        };
        match f(&s.0) {
            Ok(v) => {
                *out = v;
                LsStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Transmission amplitude `t`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_state_transmission(state: *const LsState, out: *mut LsComplex) -> LsStatus {
    with_state(state, out, |s| Ok(s.transmission().into()))
}

/// Reflection amplitude `r`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_state_reflection(state: *const LsState, out: *mut LsComplex) -> LsStatus {
    with_state(state, out, |s| Ok(s.reflection().into()))
}

/// `A(x)` and `A'(x)`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_state_field_at(state: *const LsState, x: f64, out: *mut LsFieldSample) -> LsStatus {
    with_state(state, out, |s| Ok(s.field_at(x).into()))
}

/// `J(x) = Im(A* A')`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_state_current(state: *const LsState, x: f64, out: *mut f64) -> LsStatus {
    with_state(state, out, |s| Ok(s.current(x)))
}

/// `Q(x)` for `F(x) = σx + ρ`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_q_at(state: *const LsState, sigma: i32, rho: f64, x: f64, out: *mut LsComplex) -> LsStatus {
    with_state(state, out, |s| Ok(invariants::q_at(s, &transform(sigma, rho)?, x).into()))
}

/// `Q̃(x)` for `F(x) = σx + ρ`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_qtilde_at(state: *const LsState, sigma: i32, rho: f64, x: f64, out: *mut LsComplex) -> LsStatus {
    with_state(state, out, |s| Ok(invariants::qtilde_at(s, &transform(sigma, rho)?, x).into()))
}

/// Averaged invariants of `F(x) = σx + ρ` over `[start, end]` from
/// `n_samples >= 2` points.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_invariant_pair(
    state: *const LsState,
    sigma: i32,
    rho: f64,
    start: f64,
    end: f64,
    n_samples: usize,
    out: *mut LsInvariantPair,
) -> LsStatus {
    with_state(state, out, |s| {
        let t = transform(sigma, rho)?;
        if !(end >= start) {
            set_error(format!("invalid interval [{start}, {end}]"));
            return Err(LsStatus::InvalidArgument);
        }
        let pair = invariants::invariant_pair(s, &t, &Domain::single(Interval::new(start, end)), n_samples).map_err(fail)?;
        Ok(LsInvariantPair {
            q: pair.q.into(),
            q_tilde: pair.q_tilde.into(),
            j: pair.j,
            sigma,
            rho,
            domain_start: start,
            domain_end: end,
            constancy_residual: pair.constancy_residual,
            scale: pair.scale,
        })
    })
}

/// Predicted `A(F(x))` from the invariants and the sample at `x`.
/// Returns [`LsStatus::ZeroCurrent`] when `|J|` is below the collapse threshold.
///
/// # Safety
/// `pair` must be valid for reads; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_map_field(pair: *const LsInvariantPair, sample: LsFieldSample, out: *mut LsComplex) -> LsStatus {
    guard(|| {
        let (Some(p), false) = (pair.as_ref(), out.is_null()) else {
            return null("pair or out");
        };
        let t = match transform(p.sigma, p.rho) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let pair = InvariantPair {
            q: p.q.into(),
            q_tilde: p.q_tilde.into(),
            j: p.j,
            transform: t,
            domain: Domain::single(Interval::new(p.domain_start, p.domain_end)),
            constancy_residual: p.constancy_residual,
            scale: p.scale,
            n_samples: 0,
            state_id: None,
        };
        let sample = FieldSample::new(sample.a_value.into(), sample.a_deriv.into());
        match invariants::map_field(&pair, &sample) {
            Ok(z) => {
                *out = z.into();
                LsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
