//! C ABI over `qfid`.
//!
//! States and channels are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`QfidStatus`] and writes its
//! result through an out-pointer; on failure the thread-local message from
//! [`qfid_last_error_message`] says why. Matrices cross the boundary as
//! row-major `re`/`im` arrays of `dim * dim` doubles (`im` may be NULL for
//! real input). Panics are caught and reported as `QFID_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qfid::channels::{apply_channel, entanglement_fidelity, KrausChannel, NamedChannel};
use qfid::linalg::CMatrix;
use qfid::states::random_density;
use qfid::{bures_angle, check_bounds, fidelity, trace_distance, DensityMatrix, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Not Hermitian, not positive semidefinite, or wrong trace.
    InvalidState = 3,
    DimensionMismatch = 4,
    InvalidChannel = 5,
    Panic = 6,
}

/// Opaque density matrix.
pub struct QfidState {
    inner: DensityMatrix,
}

/// Opaque Kraus channel.
pub struct QfidChannel {
    inner: KrausChannel,
}

/// Fidelity, Bures angle and trace distance with the bound flags.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QfidBounds {
    pub fidelity: f64,
    pub bures_angle: f64,
    pub trace_distance: f64,
    pub lower_bound_ok: bool,
    pub upper_bound_ok: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> QfidStatus {
    match err {
        Error::NotSquare { .. } | Error::DimMismatch { .. } | Error::LengthMismatch { .. } => {
            QfidStatus::DimensionMismatch
        }
        Error::NotHermitian { .. } | Error::NotPsd { .. } | Error::InvalidTrace { .. } | Error::NonFinite => {
            QfidStatus::InvalidState
        }
        Error::InvalidChannel(_) => QfidStatus::InvalidChannel,
        _ => QfidStatus::InvalidArgument,
    }
}

struct Failure(QfidStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QfidStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, recording any failure or panic as the last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QfidStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QfidStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QfidStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(p: *const QfidState, what: &str) -> Result<&'a DensityMatrix, Failure> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<CMatrix, Failure> {
    if dim == 0 {
        return Err(Failure(
            QfidStatus::InvalidArgument,
            "dimension must be positive".into(),
        ));
    }
    if re.is_null() {
        return Err(null("re"));
    }
    let n = dim
        .checked_mul(dim)
        .ok_or_else(|| Failure(QfidStatus::InvalidArgument, "dimension overflows".into()))?;
    let re = std::slice::from_raw_parts(re, n);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, n));
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let k = i * dim + j;
        qfid::linalg::c(re[k], im.map_or(0.0, |v| v[k]))
    }))
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn qfid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// success. Valid until the next `qfid_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qfid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a density matrix from row-major parts.
///
/// # Safety
/// `re` (and `im` unless NULL) must point to `dim * dim` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_state_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QfidState,
) -> QfidStatus {
    guard(|| {
        let m = read_matrix(dim, re, im)?;
        let inner = DensityMatrix::new(m)?;
        write(out, Box::into_raw(Box::new(QfidState { inner })), "out")
    })
}

/// Seeded random density matrix of the given rank.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_state_random(dim: usize, rank: usize, seed: u64, out: *mut *mut QfidState) -> QfidStatus {
    guard(|| {
        let inner = random_density(dim, rank, seed)?;
        write(out, Box::into_raw(Box::new(QfidState { inner })), "out")
    })
}

/// Dimension of a state, 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qfid_state_dim(state: *const QfidState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.dim())
}

/// Copies the state into row-major `re`/`im` arrays of `dim * dim`.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must hold `dim * dim`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn qfid_state_entries(state: *const QfidState, re: *mut f64, im: *mut f64) -> QfidStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        let d = s.dim();
        let m = s.matrix();
        for i in 0..d {
            for j in 0..d {
                re.add(i * d + j).write(m[(i, j)].re);
                im.add(i * d + j).write(m[(i, j)].im);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qfid_state_free(state: *mut QfidState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

fn pair_metric(
    a: *const QfidState,
    b: *const QfidState,
    out: *mut f64,
    f: fn(&DensityMatrix, &DensityMatrix) -> qfid::Result<f64>,
) -> QfidStatus {
    guard(|| unsafe {
        let value = f(state_ref(a, "rho")?, state_ref(b, "sigma")?)?;
        write(out, value, "out")
    })
}

/// `F(ρ, σ) = ‖√σ √ρ‖_Tr`.
///
/// # Safety
/// `rho` and `sigma` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_fidelity(rho: *const QfidState, sigma: *const QfidState, out: *mut f64) -> QfidStatus {
    pair_metric(rho, sigma, out, fidelity)
}

/// `arccos F(ρ, σ)`.
///
/// # Safety
/// As for [`qfid_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn qfid_bures_angle(rho: *const QfidState, sigma: *const QfidState, out: *mut f64) -> QfidStatus {
    pair_metric(rho, sigma, out, bures_angle)
}

/// `½‖ρ − σ‖₁`.
///
/// # Safety
/// As for [`qfid_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn qfid_trace_distance(
    rho: *const QfidState,
    sigma: *const QfidState,
    out: *mut f64,
) -> QfidStatus {
    pair_metric(rho, sigma, out, trace_distance)
}

/// # Safety
/// As for [`qfid_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn qfid_check_bounds(
    rho: *const QfidState,
    sigma: *const QfidState,
    out: *mut QfidBounds,
) -> QfidStatus {
    guard(|| {
        let r = check_bounds(state_ref(rho, "rho")?, state_ref(sigma, "sigma")?)?;
        write(
            out,
            QfidBounds {
                fidelity: r.fidelity,
                bures_angle: r.bures_angle,
                trace_distance: r.trace_distance,
                lower_bound_ok: r.lower_bound_ok,
                upper_bound_ok: r.upper_bound_ok,
            },
            "out",
        )
    })
}

/// Channel from the registry: `identity`, `dephasing(p)`, `phase-flip(p)`,
/// `depolarizing(p)` or `amplitude-damping(g)`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_channel_named(name: *const c_char, dim: usize, out: *mut *mut QfidChannel) -> QfidStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let text = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Failure(QfidStatus::InvalidArgument, "channel name is not UTF-8".into()))?;
        let named: NamedChannel = text.parse()?;
        let inner = named.build(dim)?;
        write(out, Box::into_raw(Box::new(QfidChannel { inner })), "out")
    })
}

/// Channel from `count` Kraus operators stored back to back, each
/// `dim * dim` row-major.
///
/// # Safety
/// `re` (and `im` unless NULL) must point to `count * dim * dim` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_channel_new(
    dim: usize,
    count: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QfidChannel,
) -> QfidStatus {
    guard(|| {
        if count == 0 {
            return Err(Failure(QfidStatus::InvalidChannel, "no Kraus operators".into()));
        }
        let block = dim * dim;
        let ops = (0..count)
            .map(|k| {
                read_matrix(
                    dim,
                    re.add(k * block),
                    if im.is_null() { im } else { im.add(k * block) },
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let inner = KrausChannel::new(ops)?;
        write(out, Box::into_raw(Box::new(QfidChannel { inner })), "out")
    })
}

/// # Safety
/// `channel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qfid_channel_free(channel: *mut QfidChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// `Σ_i |Tr(E_i ρ)|²`.
///
/// # Safety
/// `rho` and `channel` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_entanglement_fidelity(
    rho: *const QfidState,
    channel: *const QfidChannel,
    out: *mut f64,
) -> QfidStatus {
    guard(|| {
        let ch = channel.as_ref().ok_or_else(|| null("channel"))?;
        let value = entanglement_fidelity(state_ref(rho, "rho")?, &ch.inner)?;
        write(out, value, "out")
    })
}

/// `E(ρ)` as a new state handle.
///
/// # Safety
/// `channel` and `rho` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfid_channel_apply(
    channel: *const QfidChannel,
    rho: *const QfidState,
    out: *mut *mut QfidState,
) -> QfidStatus {
    guard(|| {
        let ch = channel.as_ref().ok_or_else(|| null("channel"))?;
        let inner = apply_channel(&ch.inner, state_ref(rho, "rho")?)?;
        write(out, Box::into_raw(Box::new(QfidState { inner })), "out")
    })
}
