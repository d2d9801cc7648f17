//! C ABI over the chaosrand generators, statistical tests and cycle model.
//!
//! Generators are opaque `CrGenerator` handles owned by the caller and
//! released with [`cr_generator_free`]. Every fallible call returns a
//! [`CrStatus`]; on failure [`cr_last_error`] describes the most recent error
//! on the calling thread. Handles are not synchronized: use one per thread or
//! lock externally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chaosrand::bench::CycleCostModel;
use chaosrand::config::RunConfig;
use chaosrand::entropy::MixMode;
use chaosrand::generator::{Generator, GeneratorKind, GeneratorSpec};
use chaosrand::stats::{BitStream, StatTest, Verdict};
use chaosrand::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    CorruptedState = 3,
    NotReady = 4,
    Degenerate = 5,
    SourceUnhealthy = 6,
    Exhausted = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrGeneratorKind {
    Lfsr = 0,
    MultiLfsr = 1,
    Logistic = 2,
    Pendulum = 3,
}

impl From<CrGeneratorKind> for GeneratorKind {
    fn from(k: CrGeneratorKind) -> Self {
        match k {
            CrGeneratorKind::Lfsr => GeneratorKind::Lfsr,
            CrGeneratorKind::MultiLfsr => GeneratorKind::MultiLfsr,
            CrGeneratorKind::Logistic => GeneratorKind::Logistic,
            CrGeneratorKind::Pendulum => GeneratorKind::Pendulum,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrMixMode {
    XorState = 0,
    PerturbValue = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatTest {
    Monobit = 0,
    Runs = 1,
    ChiSquareBytes = 2,
    LagAutocorrelation = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrVerdict {
    Pass = 0,
    Fail = 1,
    NotApplicable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrTestReport {
    pub n: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub verdict: CrVerdict,
}

/// Opaque generator handle.
pub struct CrGenerator {
    inner: Box<dyn Generator>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CrStatus {
    match e {
        Error::InvalidInput(_) | Error::Json(_) => CrStatus::InvalidArgument,
        Error::CorruptedState(_) => CrStatus::CorruptedState,
        Error::NotReady { .. } => CrStatus::NotReady,
        Error::Degenerate(_) => CrStatus::Degenerate,
        Error::SourceUnhealthy(_) => CrStatus::SourceUnhealthy,
        Error::Exhausted(_) => CrStatus::Exhausted,
        Error::Io(_) => CrStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("{what} is null"));
            CrStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            CrStatus::Panic
        }
    }
}

fn non_null<T>(p: *mut T, what: &'static str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

unsafe fn handle<'a>(g: *mut CrGenerator) -> Result<&'a mut CrGenerator, Failure> {
    // SAFETY: caller passes a handle from a constructor that was not yet freed.
    unsafe { g.as_mut() }.ok_or(Failure::Null("generator"))
}

fn publish(out: *mut *mut CrGenerator, inner: Box<dyn Generator>) -> Result<(), Failure> {
    let out = non_null(out, "out")?;
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = Box::into_raw(Box::new(CrGenerator { inner })) };
    Ok(())
}

/// Creates a generator with default parameters, burn-in already run.
///
/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_new_default(
    kind: CrGeneratorKind,
    out: *mut *mut CrGenerator,
) -> CrStatus {
    guard(|| publish(out, GeneratorSpec::default_for(kind.into()).build()?))
}

/// Creates a generator from a NUL-terminated JSON run configuration.
///
/// # Safety
/// `json` must be a valid C string; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_from_config_json(
    json: *const c_char,
    out: *mut *mut CrGenerator,
) -> CrStatus {
    guard(|| {
        non_null(json.cast_mut(), "json")?;
        // SAFETY: non-null and NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| Error::InvalidInput("configuration is not UTF-8".into()))?;
        let config = RunConfig::from_json(text)?;
        config.validate()?;
        publish(out, config.build()?)
    })
}

/// Fills `buf[0..len]` with stream bytes, outputs packed MSB first.
///
/// # Safety
/// `g` must be a live handle and `buf` valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_fill_bytes(
    g: *mut CrGenerator,
    buf: *mut u8,
    len: usize,
) -> CrStatus {
    guard(|| {
        let g = unsafe { handle(g) }?;
        if len == 0 {
            return Ok(());
        }
        let buf = non_null(buf, "buf")?;
        // SAFETY: `buf` is valid for `len` bytes per the contract.
        let slice = unsafe { std::slice::from_raw_parts_mut(buf, len) };
        Ok(g.inner.fill_bytes(slice)?)
    })
}

/// Writes the next output word to `out`; its width is
/// [`cr_generator_output_bits`].
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_next_word(g: *mut CrGenerator, out: *mut u64) -> CrStatus {
    guard(|| {
        let g = unsafe { handle(g) }?;
        let out = non_null(out, "out")?;
        let word = g.inner.next_output()?;
        // SAFETY: non-null and writable per the contract.
        unsafe { *out = word };
        Ok(())
    })
}

/// Width in bits of each word from [`cr_generator_next_word`]; 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_output_bits(g: *const CrGenerator) -> u32 {
    // SAFETY: null or live per the contract.
    unsafe { g.as_ref() }.map_or(0, |g| g.inner.output_bits())
}

/// Mixes one entropy word into the generator state.
///
/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_reseed(
    g: *mut CrGenerator,
    word: u32,
    mode: CrMixMode,
) -> CrStatus {
    guard(|| {
        let g = unsafe { handle(g) }?;
        let mode = match mode {
            CrMixMode::XorState => MixMode::XorState,
            CrMixMode::PerturbValue => MixMode::PerturbValue,
        };
        g.inner.mix_entropy(word, mode);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle not already freed.
#[no_mangle]
pub unsafe extern "C" fn cr_generator_free(g: *mut CrGenerator) {
    if !g.is_null() {
        // SAFETY: produced by Box::into_raw in a constructor, freed once.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Runs one statistical test on `len` bytes, read MSB first.
///
/// # Safety
/// `bytes` must be valid for `len` bytes and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_run_test(
    test: CrStatTest,
    bytes: *const u8,
    len: usize,
    alpha: f64,
    out: *mut CrTestReport,
) -> CrStatus {
    guard(|| {
        let bytes = non_null(bytes.cast_mut(), "bytes")?;
        let out = non_null(out, "out")?;
        // SAFETY: valid for `len` bytes per the contract.
        let data = unsafe { std::slice::from_raw_parts(bytes, len) }.to_vec();
        let test = match test {
            CrStatTest::Monobit => StatTest::Monobit,
            CrStatTest::Runs => StatTest::Runs,
            CrStatTest::ChiSquareBytes => StatTest::ChiSquareBytes,
            CrStatTest::LagAutocorrelation => StatTest::LagAutocorrelation,
        };
        let report = test.run(&BitStream::from_bytes(data)?, alpha)?;
        let report = CrTestReport {
            n: report.n,
            statistic: report.statistic,
            p_value: report.p_value,
            alpha: report.alpha,
            verdict: match report.verdict {
                Verdict::Pass => CrVerdict::Pass,
                Verdict::Fail => CrVerdict::Fail,
                Verdict::NotApplicable => CrVerdict::NotApplicable,
            },
        };
        // SAFETY: non-null and writable per the contract.
        unsafe { *out = report };
        Ok(())
    })
}

/// Modeled hardware cost of `n_samples` outputs under the default cycle model.
///
/// # Safety
/// `cycles` and `seconds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_estimate_cycles(
    kind: CrGeneratorKind,
    n_samples: u64,
    cycles: *mut u64,
    seconds: *mut f64,
) -> CrStatus {
    guard(|| {
        let cycles = non_null(cycles, "cycles")?;
        let seconds = non_null(seconds, "seconds")?;
        let (c, s) = CycleCostModel::default().estimate_cycles(kind.into(), n_samples)?;
        // SAFETY: non-null and writable per the contract.
        unsafe {
            *cycles = c;
            *seconds = s;
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread, valid until the next
/// failing call on the same thread. Empty if nothing has failed.
#[no_mangle]
pub extern "C" fn cr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn cr_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
