//! C ABI for polarflip.
//!
//! Every fallible call returns a [`PfStatus`]. On failure a message is kept
//! per thread and can be read with [`pf_last_error_message`]. Codes and
//! decoders are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use polarflip::analysis::{p_all_partitions_collide, p_collision_trials, p_early_termination, scl_latency};
use polarflip::channel::{frame_rng, transmit, ChannelRealization};
use polarflip::code::{PartitionedCode, PolarCode};
use polarflip::decoders::{DecodeStatus, Decoder, DecoderConfig, RestartMode};
use polarflip::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidCode = 3,
    InfeasiblePartition = 4,
    Parse = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfAlgorithm {
    Scl = 0,
    CaScl = 1,
    Sclf = 2,
    Psclf = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfRestart {
    CheckKeep = 0,
    CheckRemove = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfDecodeStatus {
    Success = 0,
    EarlyTerminated = 1,
    Exhausted = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfDecoderConfig {
    pub list_size: usize,
    pub omega: usize,
    pub t_max: usize,
    /// Flip-metric weight, at least 1.
    pub alpha: f64,
    pub restart: PfRestart,
    /// Metric penalty of check-and-remove.
    pub penalty: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PfDecodeResult {
    pub status: PfDecodeStatus,
    /// 1-based partition that stopped an early-terminated frame, else 0.
    pub failed_partition: usize,
    pub total_trials: usize,
}

/// A partitioned polar code.
pub struct PfCode(PartitionedCode);

/// A decoder bound to one code, reusable across frames.
pub struct PfDecoder(Decoder);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(PfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidParameter(_) => PfStatus::InvalidParameter,
            Error::InvalidCode(_) => PfStatus::InvalidCode,
            Error::InfeasiblePartition(_) => PfStatus::InfeasiblePartition,
            Error::Parse(_) => PfStatus::Parse,
            Error::Io(_) => PfStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PfStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PfStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (PfStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            (PfStatus::Panic, m)
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(PfStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(fail(PfStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| fail(PfStatus::NullPointer, format!("{what} is null")))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got < want {
        return Err(fail(PfStatus::BufferTooSmall, format!("{what} holds {got} entries, {want} needed")));
    }
    Ok(())
}

/// Length in bytes of the last error message of this thread, without the
/// terminating NUL. Zero after a successful call.
#[no_mangle]
pub extern "C" fn pf_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` as a NUL-terminated string,
/// truncating to `cap - 1` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn pf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a partitioned code from a Gaussian-approximation construction.
///
/// `info_size` counts message and CRC bits. `mu` holds the last leaf of each
/// partition (the final one must be `n_len - 1`) and `crc_widths` one CRC
/// width per partition, both of length `parts`.
///
/// # Safety
/// `mu` and `crc_widths` must be valid for `parts` elements and `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_code_new(
    n_len: usize,
    info_size: usize,
    design_snr_db: f64,
    mu: *const usize,
    crc_widths: *const u32,
    parts: usize,
    out: *mut *mut PfCode,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PfStatus::NullPointer, "out is null"));
        }
        let mu = input(mu, parts, "mu")?.to_vec();
        let widths = input(crc_widths, parts, "crc_widths")?;
        let code = PolarCode::construct(n_len, info_size, design_snr_db)?;
        let pcode = PartitionedCode::with_widths(code, mu, widths)?;
        *out = Box::into_raw(Box::new(PfCode(pcode)));
        Ok(())
    })
}

/// # Safety
/// `code` must be null or a handle from [`pf_code_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_code_free(code: *mut PfCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Block length `N`, or 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_code_length(code: *const PfCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.code().len())
}

/// Message bits per frame, CRC bits excluded.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_code_message_length(code: *const PfCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.message_len())
}

/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_code_partitions(code: *const PfCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.num_partitions())
}

/// Appends the partition CRCs to `message` (one bit per byte) and writes the
/// `N` codeword bits to `codeword`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn pf_code_encode(
    code: *const PfCode,
    message: *const u8,
    message_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> PfStatus {
    guard(|| {
        let code = &handle(code, "code")?.0;
        let msg = input(message, message_len, "message")?;
        check_len(codeword_len, code.code().len(), "codeword")?;
        let out = output(codeword, codeword_len, "codeword")?;
        let u = code.input_vector(msg)?;
        let x = code.code().encode(&u)?;
        out[..x.len()].copy_from_slice(&x);
        Ok(())
    })
}

/// BPSK over AWGN at `snr_db` (Eb/N0) for a code of the given rate. Frame
/// `frame` of stream `seed` always sees the same noise.
///
/// # Safety
/// `codeword` and `llrs` must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pf_transmit(
    codeword: *const u8,
    len: usize,
    snr_db: f64,
    rate: f64,
    seed: u64,
    frame: u64,
    llrs: *mut f64,
) -> PfStatus {
    guard(|| {
        let x = input(codeword, len, "codeword")?;
        let out = output(llrs, len, "llrs")?;
        let ch = transmit(x, snr_db, rate, &mut frame_rng(seed, 0, frame))?;
        out.copy_from_slice(&ch.llrs);
        Ok(())
    })
}

/// Default settings: L=2, omega=1, T_max=20, alpha=1, check-and-keep.
#[no_mangle]
pub extern "C" fn pf_decoder_config_default() -> PfDecoderConfig {
    let d = DecoderConfig::default();
    PfDecoderConfig {
        list_size: d.list_size,
        omega: d.omega,
        t_max: d.t_max,
        alpha: d.alpha,
        restart: PfRestart::CheckKeep,
        penalty: d.penalty,
    }
}

/// # Safety
/// `code` and `config` must be live, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_decoder_new(
    code: *const PfCode,
    config: *const PfDecoderConfig,
    out: *mut *mut PfDecoder,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PfStatus::NullPointer, "out is null"));
        }
        let code = handle(code, "code")?.0.clone();
        let c = handle(config, "config")?;
        let config = DecoderConfig {
            list_size: c.list_size,
            omega: c.omega,
            t_max: c.t_max,
            alpha: c.alpha,
            restart: match c.restart {
                PfRestart::CheckKeep => RestartMode::CheckKeep,
                PfRestart::CheckRemove => RestartMode::CheckRemove,
            },
            penalty: c.penalty,
            ..DecoderConfig::default()
        };
        *out = Box::into_raw(Box::new(PfDecoder(Decoder::new(code, config)?)));
        Ok(())
    })
}

/// # Safety
/// `dec` must be null or a handle from [`pf_decoder_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_decoder_free(dec: *mut PfDecoder) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Decodes one frame of `N` channel LLRs (positive favours bit 0).
///
/// On return `result` describes the outcome. When it reports success the
/// decoded message is written to `message`; otherwise `message` is left
/// untouched. `Sclf` needs a single-partition code.
///
/// # Safety
/// Pointers must be valid for the given lengths; `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pf_decoder_decode(
    dec: *mut PfDecoder,
    algorithm: PfAlgorithm,
    llrs: *const f64,
    llrs_len: usize,
    message: *mut u8,
    message_len: usize,
    result: *mut PfDecodeResult,
) -> PfStatus {
    guard(|| {
        let dec = &mut dec.as_mut().ok_or_else(|| fail(PfStatus::NullPointer, "decoder is null"))?.0;
        if result.is_null() {
            return Err(fail(PfStatus::NullPointer, "result is null"));
        }
        let n_len = dec.pcode().code().len();
        if llrs_len != n_len {
            return Err(fail(
                PfStatus::InvalidParameter,
                format!("{llrs_len} LLRs for a length-{n_len} code"),
            ));
        }
        check_len(message_len, dec.pcode().message_len(), "message")?;
        let ch = ChannelRealization::from_llrs(input(llrs, llrs_len, "llrs")?.to_vec());
        let out = match algorithm {
            PfAlgorithm::Scl => dec.scl(&ch, None),
            PfAlgorithm::CaScl => dec.ca_scl(&ch, None),
            PfAlgorithm::Sclf => dec.sclf(&ch, None)?,
            PfAlgorithm::Psclf => dec.psclf(&ch, None),
        };
        let (status, failed_partition) = match out.status {
            DecodeStatus::Success => (PfDecodeStatus::Success, 0),
            DecodeStatus::EarlyTerminated(p) => (PfDecodeStatus::EarlyTerminated, p),
            DecodeStatus::Exhausted => (PfDecodeStatus::Exhausted, 0),
        };
        if let Some(m) = &out.message {
            output(message, message_len, "message")?[..m.len()].copy_from_slice(m);
        }
        *result = PfDecodeResult { status, failed_partition, total_trials: out.total_trials() };
        Ok(())
    })
}

/// Probability that one of `L * T_max` random sequences passes a
/// `width`-bit CRC.
#[no_mangle]
pub extern "C" fn pf_p_collision_trials(width: u32, list_size: usize, t_max: usize) -> f64 {
    p_collision_trials(width, list_size, t_max)
}

/// Probability that every partition sees a collision.
///
/// # Safety
/// `widths` must be valid for `parts` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pf_p_all_partitions_collide(
    widths: *const u32,
    parts: usize,
    list_size: usize,
    t_max: usize,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        let w = input(widths, parts, "widths")?;
        let o = output(out, 1, "out")?;
        o[0] = p_all_partitions_collide(w, list_size, t_max);
        Ok(())
    })
}

/// Probability that a random frame stops early in some partition.
///
/// # Safety
/// `widths` must be valid for `parts` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pf_p_early_termination(
    widths: *const u32,
    parts: usize,
    list_size: usize,
    t_max: usize,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        let w = input(widths, parts, "widths")?;
        let o = output(out, 1, "out")?;
        o[0] = p_early_termination(w, list_size, t_max);
        Ok(())
    })
}

/// SCL latency in cycles for a semi-parallel decoder with `phi` processing
/// elements.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pf_scl_latency(
    n_len: usize,
    phi: usize,
    info_size: usize,
    out: *mut u64,
) -> PfStatus {
    guard(|| {
        if !n_len.is_power_of_two() || n_len < 2 || phi == 0 || info_size > n_len {
            return Err(fail(
                PfStatus::InvalidParameter,
                format!("no latency model for N={n_len}, phi={phi}, |I|={info_size}"),
            ));
        }
        output(out, 1, "out")?[0] = scl_latency(n_len, phi, info_size);
        Ok(())
    })
}
