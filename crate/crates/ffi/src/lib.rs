//! C ABI over `physdec`.
//!
//! Every function returns a [`PhysdecStatus`]. On failure the message is kept
//! per thread and can be read with [`physdec_last_error_message`]. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use physdec::bench::{Experiment, ExperimentConfig, System};
use physdec::channel::{noiseless, transmit, ChannelLayout};
use physdec::codes::{enumerate_codebook_capped, is_codeword, ParityCheckMatrix, DEFAULT_CODEBOOK_CAP};
use physdec::decoder::{bp_detect, gf_decode, peak_detect, DecodeError};
use physdec::medium::{Medium, Sample};
use physdec::potential::{potential_energy, PotentialParams};
use physdec::rng::{trial_rng, Purpose};
use physdec::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhysdecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Code = 3,
    Config = 4,
    Solver = 5,
    Diverged = 6,
    BufferSize = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhysdecDecoder {
    Gf = 0,
    Peak = 1,
    Bp = 2,
    Ml = 3,
}

/// A parity-check matrix.
pub struct PhysdecCode(ParityCheckMatrix);

/// A validated experiment: code, solver grid, pulse layout and decoder
/// parameters.
pub struct PhysdecSystem(Experiment);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(PhysdecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Code(_) => PhysdecStatus::Code,
            Error::Config(_) => PhysdecStatus::Config,
            Error::Decode(DecodeError::Diverged { .. }) => PhysdecStatus::Diverged,
            Error::Decode(_) | Error::Channel(_) | Error::Potential(_) => PhysdecStatus::InvalidArgument,
            Error::Heat(_) | Error::Nlse(_) => PhysdecStatus::Solver,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PhysdecStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PhysdecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PhysdecStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PhysdecStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PhysdecStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PhysdecStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(fail(PhysdecStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(fail(PhysdecStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(PhysdecStatus::NullPointer, format!("{what} is null")))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(fail(PhysdecStatus::BufferSize, format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn physdec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn physdec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a builtin code: `hamming7_4`, `bch15_7` or `bch31_15`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn physdec_code_builtin(name: *const c_char, out: *mut *mut PhysdecCode) -> PhysdecStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        let code = ParityCheckMatrix::builtin(read_str(name, "name")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(PhysdecCode(code)));
        Ok(())
    })
}

/// Parses a parity-check matrix given as rows of `0`/`1` characters.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn physdec_code_parse(text: *const c_char, out: *mut *mut PhysdecCode) -> PhysdecStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        let code = ParityCheckMatrix::parse(read_str(text, "text")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(PhysdecCode(code)));
        Ok(())
    })
}

/// # Safety
/// `code` must be null or a handle from `physdec_code_*`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn physdec_code_free(code: *mut PhysdecCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Writes the block length and the number of parity checks.
///
/// # Safety
/// `code` must be a live handle; `n` and `m` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn physdec_code_dims(code: *const PhysdecCode, n: *mut usize, m: *mut usize) -> PhysdecStatus {
    guard(|| {
        let code = handle(code, "code")?;
        if n.is_null() || m.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "output is null"));
        }
        *n = code.0.n();
        *m = code.0.m();
        Ok(())
    })
}

/// Sets `*out` to 1 when the bipolar `word` satisfies every parity check.
///
/// # Safety
/// `word` must point to `len` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn physdec_code_is_codeword(
    code: *const PhysdecCode,
    word: *const f64,
    len: usize,
    out: *mut i32,
) -> PhysdecStatus {
    guard(|| {
        let code = handle(code, "code")?;
        check_len(len, code.0.n(), "word")?;
        let word = read_slice(word, len, "word")?;
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        *out = i32::from(is_codeword(&code.0, word));
        Ok(())
    })
}

/// Code potential energy `h(x)` with weights `alpha`, `beta`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn physdec_potential_energy(
    code: *const PhysdecCode,
    x: *const f64,
    len: usize,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> PhysdecStatus {
    guard(|| {
        let code = handle(code, "code")?;
        let x = read_slice(x, len, "x")?;
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        let params = PotentialParams::new(alpha, beta).map_err(Error::from)?;
        *out = potential_energy(x, &code.0, &params).map_err(Error::from)?;
        Ok(())
    })
}

/// Builds a system from an experiment config in JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_from_json(json: *const c_char, out: *mut *mut PhysdecSystem) -> PhysdecStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        let cfg = ExperimentConfig::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(PhysdecSystem(Experiment::new(cfg)?)));
        Ok(())
    })
}

/// Builds a system from a bundled preset (`heat_demo`, `heat_ber`,
/// `hamming_ml`, `nlse_ber`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_preset(name: *const c_char, out: *mut *mut PhysdecSystem) -> PhysdecStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "out is null"));
        }
        let cfg = ExperimentConfig::preset(read_str(name, "name")?)?;
        *out = Box::into_raw(Box::new(PhysdecSystem(Experiment::new(cfg)?)));
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from `physdec_system_*`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_free(system: *mut PhysdecSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Writes the number of pulses (code length), the number of sensors, and
/// whether samples are complex (1 for the NLSE, 0 for heat).
///
/// # Safety
/// `system` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_dims(
    system: *const PhysdecSystem,
    n_pulses: *mut usize,
    n_sensors: *mut usize,
    is_complex: *mut i32,
) -> PhysdecStatus {
    guard(|| {
        let sys = handle(system, "system")?;
        if n_pulses.is_null() || n_sensors.is_null() || is_complex.is_null() {
            return Err(fail(PhysdecStatus::NullPointer, "output is null"));
        }
        let layout = sys.0.system.layout();
        *n_pulses = layout.n_pulses();
        *n_sensors = layout.n_sensors();
        *is_complex = i32::from(matches!(sys.0.system, System::Nlse { .. }));
        Ok(())
    })
}

fn write_samples<S: Sample>(y: &[S], re: &mut [f64], im: Option<&mut [f64]>) {
    for (slot, v) in re.iter_mut().zip(y) {
        *slot = v.re();
    }
    if let Some(im) = im {
        for (slot, v) in im.iter_mut().zip(y) {
            *slot = v.im().unwrap_or(0.0);
        }
    }
}

/// Sends the bipolar `word` through the channel with noise `sigma` drawn
/// from `seed`, writing `m` sensor values to `y_re` and, when non-null,
/// `y_im`.
///
/// # Safety
/// `word` must point to `n` doubles; `y_re` (and `y_im` if non-null) to `m`.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_transmit(
    system: *const PhysdecSystem,
    word: *const f64,
    n: usize,
    sigma: f64,
    seed: u64,
    y_re: *mut f64,
    y_im: *mut f64,
    m: usize,
) -> PhysdecStatus {
    guard(|| {
        let sys = handle(system, "system")?;
        let layout = sys.0.system.layout();
        check_len(n, layout.n_pulses(), "word")?;
        check_len(m, layout.n_sensors(), "y")?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(fail(PhysdecStatus::InvalidArgument, format!("invalid sigma {sigma}")));
        }
        let word = read_slice(word, n, "word")?;
        let re = write_slice(y_re, m, "y_re")?;
        let im = if y_im.is_null() { None } else { Some(write_slice(y_im, m, "y_im")?) };
        let mut rng = trial_rng(seed, 0, 0, Purpose::Channel);
        match &sys.0.system {
            System::Heat { grid, layout } => write_samples(&transmit(word, layout, grid, sigma, &mut rng, seed)?.y, re, im),
            System::Nlse { grid, layout } => write_samples(&transmit(word, layout, grid, sigma, &mut rng, seed)?.y, re, im),
        }
        Ok(())
    })
}

fn ml<M: Medium>(exp: &Experiment, layout: &ChannelLayout, medium: &M, y: &[M::Sample]) -> Result<Vec<f64>, Error> {
    let book = enumerate_codebook_capped(&exp.code, exp.config.codebook_cap.unwrap_or(DEFAULT_CODEBOOK_CAP))?;
    let mut best = (0, f64::INFINITY);
    for (idx, w) in book.words().iter().enumerate() {
        let r = noiseless(w, layout, medium)?;
        let d: f64 = r.iter().zip(y).map(|(a, b)| a.sq_dist(*b)).sum();
        if d < best.1 {
            best = (idx, d);
        }
    }
    Ok(book.words()[best.0].clone())
}

fn run_decoder<M: Medium>(
    exp: &Experiment,
    layout: &ChannelLayout,
    medium: &M,
    y: &[M::Sample],
    decoder: PhysdecDecoder,
    seed: u64,
    bp: impl Fn(&[M::Sample]) -> Result<Vec<f64>, Error>,
) -> Result<Vec<f64>, Error> {
    match decoder {
        PhysdecDecoder::Gf => {
            let mut rng = trial_rng(seed, 0, 0, Purpose::Decoder);
            Ok(gf_decode(y, layout, medium, &exp.code, &exp.config.decoder, &mut rng, false)?.estimate)
        }
        PhysdecDecoder::Peak => peak_detect(y, layout),
        PhysdecDecoder::Bp => bp(y),
        PhysdecDecoder::Ml => ml(exp, layout, medium, y),
    }
}

/// Decodes `m` sensor values into the `n`-entry bipolar `estimate`. `y_im`
/// may be null (treated as zero); heat systems reject a nonzero imaginary
/// part. `seed` drives the random start of the gradient-flow decoder. A
/// diverged run returns `Diverged` with the last finite estimate written.
///
/// # Safety
/// `y_re` (and `y_im` if non-null) must point to `m` doubles, `estimate` to `n`.
#[no_mangle]
pub unsafe extern "C" fn physdec_system_decode(
    system: *const PhysdecSystem,
    decoder: PhysdecDecoder,
    y_re: *const f64,
    y_im: *const f64,
    m: usize,
    seed: u64,
    estimate: *mut f64,
    n: usize,
) -> PhysdecStatus {
    guard(|| {
        let sys = handle(system, "system")?;
        let exp = &sys.0;
        let layout = exp.system.layout();
        check_len(m, layout.n_sensors(), "y")?;
        check_len(n, layout.n_pulses(), "estimate")?;
        let re = read_slice(y_re, m, "y_re")?;
        let im = if y_im.is_null() { None } else { Some(read_slice(y_im, m, "y_im")?) };
        let out = write_slice(estimate, n, "estimate")?;
        let result = match &exp.system {
            System::Heat { grid, layout } => {
                if im.is_some_and(|v| v.iter().any(|&x| x != 0.0)) {
                    return Err(fail(PhysdecStatus::InvalidArgument, "heat observations are real-valued"));
                }
                let no_bp = |_: &[f64]| Err(Error::Config("bp is only defined for the NLSE channel".into()));
                run_decoder(exp, layout, grid, re, decoder, seed, no_bp)
            }
            System::Nlse { grid, layout } => {
                let y: Vec<Complex64> = (0..m).map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k]))).collect();
                run_decoder(exp, layout, grid, &y, decoder, seed, |v| bp_detect(v, layout, grid))
            }
        };
        match result {
            Ok(est) => {
                out.copy_from_slice(&est);
                Ok(())
            }
            Err(Error::Decode(DecodeError::Diverged { iteration, last_estimate })) => {
                out.copy_from_slice(&last_estimate);
                Err(fail(PhysdecStatus::Diverged, format!("diverged at iteration {iteration}")))
            }
            Err(e) => Err(e.into()),
        }
    })
}
