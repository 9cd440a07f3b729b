//! C ABI over the 64-bit `mmcal` kernels.
//!
//! Matrices cross the boundary as opaque `MmcalMatrix` handles owned by the
//! caller and released with `mmcal_matrix_free`. Every fallible function
//! returns an `MmcalStatus`; on failure `mmcal_last_error_message` describes
//! the error on the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mmcal::calibration::{calibrate_mspace, calibrate_ndim_grouped};
use mmcal::io;
use mmcal::matched::{algorithm1, MatchConfig};
use mmcal::measurement::{residual_error, HiddenImage, HiddenMatrix};
use mmcal::mismatch::{mismatch_solution, sigma_special};
use mmcal::recovery::{fista_l1, RecoveryConfig};
use mmcal::{DenseMatrix, Error};

/// Opaque 64-bit row-major matrix.
pub struct MmcalMatrix {
    inner: DenseMatrix<f64>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmcalStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Singular = 3,
    RankDeficient = 4,
    DegenerateDenominator = 5,
    NonFinite = 6,
    Precondition = 7,
    Parse = 8,
    Config = 9,
    Io = 10,
    CallbackFailed = 11,
    Panic = 12,
}

/// Fills `y_out` (length `m`) with the unknown image measured by `a_recv`. Returns 0 on success.
pub type MmcalMeasureImageFn = Option<
    unsafe extern "C" fn(
        ctx: *mut c_void,
        a_recv: *const MmcalMatrix,
        y_out: *mut f64,
        m: usize,
    ) -> c_int,
>;

/// Fills `y_out` (length `m`) with the unknown matrix applied to `x` (length `n`). Returns 0 on success.
pub type MmcalMeasureMatrixFn = Option<
    unsafe extern "C" fn(
        ctx: *mut c_void,
        x: *const f64,
        n: usize,
        y_out: *mut f64,
        m: usize,
    ) -> c_int,
>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MmcalStatus {
    match e {
        Error::Dimension { .. } => MmcalStatus::Dimension,
        Error::Singular { .. } | Error::GroupSingular { .. } => MmcalStatus::Singular,
        Error::RankDeficient { .. } => MmcalStatus::RankDeficient,
        Error::DegenerateDenominator { .. } => MmcalStatus::DegenerateDenominator,
        Error::NonFinite(_) => MmcalStatus::NonFinite,
        Error::Precondition { .. } => MmcalStatus::Precondition,
        Error::Parse { .. } => MmcalStatus::Parse,
        Error::Config(_) => MmcalStatus::Config,
        Error::Io { .. } => MmcalStatus::Io,
    }
}

enum Failure {
    Status(MmcalStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(MmcalStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MmcalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MmcalStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(format!("{}: {e}", e.name()));
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic".into());
            MmcalStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix_in<'a>(
    p: *const MmcalMatrix,
    what: &str,
) -> Result<&'a DenseMatrix<f64>, Failure> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| null(what))
}

unsafe fn store(out: *mut *mut MmcalMatrix, m: DenseMatrix<f64>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(MmcalMatrix { inner: m }));
    Ok(())
}

unsafe fn path_in(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Status(MmcalStatus::Config, "path is not valid UTF-8".into()))
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mmcal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| {
            Failure::Status(MmcalStatus::Dimension, "rows * cols overflows".into())
        })?;
        let values = slice_in(data, len, "data")?;
        store(out, DenseMatrix::new(rows, cols, values.to_vec())?)
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_zeros(
    rows: usize,
    cols: usize,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| store(out, DenseMatrix::zeros(rows, cols)))
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_free(m: *mut MmcalMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a valid handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_rows(m: *const MmcalMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

/// # Safety
/// `m` must be a valid handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_cols(m: *const MmcalMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.cols())
}

/// Copies the row-major entries into `out`, which must hold exactly `rows * cols` values.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_copy_data(
    m: *const MmcalMatrix,
    out: *mut f64,
    len: usize,
) -> MmcalStatus {
    guard(|| {
        let m = matrix_in(m, "matrix")?;
        if len != m.as_slice().len() {
            return Err(Error::Dimension {
                op: "mmcal_matrix_copy_data",
                detail: format!("buffer holds {len}, matrix has {}", m.as_slice().len()),
            }
            .into());
        }
        slice_out(out, len, "out")?.copy_from_slice(m.as_slice());
        Ok(())
    })
}

/// Reads a `.mmcal` or `.csv` matrix, converting to 64-bit.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_read(
    path: *const c_char,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| {
        let path = path_in(path)?;
        store(out, io::load_matrix(path)?.to::<f64>())
    })
}

/// Writes a matrix; the extension selects `.csv` or the binary format.
///
/// # Safety
/// `m` must be a valid handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_write(
    m: *const MmcalMatrix,
    path: *const c_char,
) -> MmcalStatus {
    guard(|| {
        let m = matrix_in(m, "matrix")?;
        let path = path_in(path)?;
        io::save_matrix(path, m)?;
        Ok(())
    })
}

/// `(A A^T)^{-1}`.
///
/// # Safety
/// `a` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmcal_sigma_special(
    a: *const MmcalMatrix,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| store(out, sigma_special(matrix_in(a, "a")?)?))
}

/// Rank-one solution `y (y0^T S A) / (y0^T S y0)`; `y0` and `y` hold `m` values.
///
/// # Safety
/// Pointers must be valid for the stated lengths; handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn mmcal_mismatch_solution(
    y0: *const f64,
    y: *const f64,
    m: usize,
    sigma: *const MmcalMatrix,
    a: *const MmcalMatrix,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| {
        let sol = mismatch_solution(
            slice_in(y0, m, "y0")?,
            slice_in(y, m, "y")?,
            matrix_in(sigma, "sigma")?,
            matrix_in(a, "a")?,
        )?;
        store(out, sol.a_recv)
    })
}

struct CallbackImage {
    f: unsafe extern "C" fn(*mut c_void, *const MmcalMatrix, *mut f64, usize) -> c_int,
    ctx: *mut c_void,
    m: usize,
    failed: Option<c_int>,
}

impl HiddenImage<f64> for CallbackImage {
    fn measure_with(&mut self, a: &DenseMatrix<f64>) -> mmcal::Result<Vec<f64>> {
        let handle = MmcalMatrix { inner: a.clone() };
        let mut y = vec![0.0; self.m];
        let code = unsafe { (self.f)(self.ctx, &handle, y.as_mut_ptr(), self.m) };
        if code != 0 {
            self.failed = Some(code);
            return Err(Error::Precondition {
                op: "measure callback",
                detail: format!("returned {code}"),
            });
        }
        Ok(y)
    }
}

struct CallbackMatrix {
    f: unsafe extern "C" fn(*mut c_void, *const f64, usize, *mut f64, usize) -> c_int,
    ctx: *mut c_void,
    m: usize,
    failed: Option<c_int>,
}

impl HiddenMatrix<f64> for CallbackMatrix {
    fn measure(&mut self, x: &[f64]) -> mmcal::Result<Vec<f64>> {
        let mut y = vec![0.0; self.m];
        let code = unsafe { (self.f)(self.ctx, x.as_ptr(), x.len(), y.as_mut_ptr(), self.m) };
        if code != 0 {
            self.failed = Some(code);
            return Err(Error::Precondition {
                op: "measure callback",
                detail: format!("returned {code}"),
            });
        }
        Ok(y)
    }
}

fn callback_failure(code: Option<c_int>, e: Error) -> Failure {
    match code {
        Some(c) => Failure::Status(
            MmcalStatus::CallbackFailed,
            format!("measurement callback returned {c}"),
        ),
        None => Failure::Lib(e),
    }
}

/// Matched solution for one unknown image reached through `measure`.
///
/// `y_prime` holds `a.rows` values and `pm` holds `a.cols` values. `final_error`
/// may be null; otherwise it receives the last epoch's mean absolute error.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `measure` must honour its contract.
#[no_mangle]
pub unsafe extern "C" fn mmcal_algorithm1(
    y_prime: *const f64,
    a: *const MmcalMatrix,
    pm: *const f64,
    epochs: usize,
    measure: MmcalMeasureImageFn,
    ctx: *mut c_void,
    out: *mut *mut MmcalMatrix,
    final_error: *mut f64,
) -> MmcalStatus {
    guard(|| {
        let a = matrix_in(a, "a")?;
        let f = measure.ok_or_else(|| null("measure"))?;
        let y_prime = slice_in(y_prime, a.rows(), "y_prime")?;
        let pm = slice_in(pm, a.cols(), "pm")?;
        let mut oracle = CallbackImage {
            f,
            ctx,
            m: a.rows(),
            failed: None,
        };
        let cfg = MatchConfig {
            epochs,
            ..MatchConfig::default()
        };
        let res = algorithm1(y_prime, &mut oracle, a, pm, &cfg)
            .map_err(|e| callback_failure(oracle.failed, e))?;
        if let Some(fe) = final_error.as_mut() {
            *fe = res.trace.last().unwrap_or(f64::NAN);
        }
        store(out, res.a_recv)
    })
}

/// Calibration over the row space of `a`; calls `measure` `a.rows` times.
///
/// # Safety
/// `a` must be a valid handle; `measure` must honour its contract.
#[no_mangle]
pub unsafe extern "C" fn mmcal_calibrate_mspace(
    a: *const MmcalMatrix,
    measure: MmcalMeasureMatrixFn,
    ctx: *mut c_void,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| {
        let a = matrix_in(a, "a")?;
        let mut oracle = CallbackMatrix {
            f: measure.ok_or_else(|| null("measure"))?,
            ctx,
            m: a.rows(),
            failed: None,
        };
        let cal =
            calibrate_mspace(a, &mut oracle).map_err(|e| callback_failure(oracle.failed, e))?;
        store(out, cal.a_recv)
    })
}

/// Calibration over the whole pixel space; calls `measure` `a.cols` times.
///
/// # Safety
/// `a` must be a valid handle; `measure` must honour its contract.
#[no_mangle]
pub unsafe extern "C" fn mmcal_calibrate_grouped(
    a: *const MmcalMatrix,
    measure: MmcalMeasureMatrixFn,
    ctx: *mut c_void,
    out: *mut *mut MmcalMatrix,
) -> MmcalStatus {
    guard(|| {
        let a = matrix_in(a, "a")?;
        let mut oracle = CallbackMatrix {
            f: measure.ok_or_else(|| null("measure"))?,
            ctx,
            m: a.rows(),
            failed: None,
        };
        let cal = calibrate_ndim_grouped(a, &mut oracle)
            .map_err(|e| callback_failure(oracle.failed, e))?;
        store(out, cal.a_recv)
    })
}

/// ℓ1 recovery from `y` (`a.rows` values) into `x_out` (`a.cols` values).
///
/// `tau <= 0` selects the automatic weight. `iterations` may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mmcal_fista_l1(
    y: *const f64,
    a: *const MmcalMatrix,
    tau: f64,
    max_iters: usize,
    x_out: *mut f64,
    iterations: *mut usize,
) -> MmcalStatus {
    guard(|| {
        let a = matrix_in(a, "a")?;
        let y = slice_in(y, a.rows(), "y")?;
        let cfg = RecoveryConfig {
            tau: (tau > 0.0).then_some(tau),
            max_iters,
            ..RecoveryConfig::default()
        };
        let rec = fista_l1(y, a, &cfg)?;
        slice_out(x_out, a.cols(), "x_out")?.copy_from_slice(&rec.x);
        if let Some(it) = iterations.as_mut() {
            *it = rec.iterations;
        }
        Ok(())
    })
}

/// Mean absolute deviation of two length-`len` vectors.
///
/// # Safety
/// `a` and `b` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmcal_residual_error(
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> MmcalStatus {
    guard(|| {
        let v = residual_error(slice_in(a, len, "a")?, slice_in(b, len, "b")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Applies a matrix: `y_out = m x` with `x` of length `m.cols` and `y_out` of length `m.rows`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mmcal_matrix_apply(
    m: *const MmcalMatrix,
    x: *const f64,
    y_out: *mut f64,
) -> MmcalStatus {
    guard(|| {
        let m = matrix_in(m, "matrix")?;
        let y = m.matvec(slice_in(x, m.cols(), "x")?)?;
        slice_out(y_out, m.rows(), "y_out")?.copy_from_slice(&y);
        Ok(())
    })
}
