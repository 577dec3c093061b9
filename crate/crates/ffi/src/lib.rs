//! C ABI over the `nnms` decoders.
//!
//! Objects are opaque heap handles created by `nnms_*_new`/`nnms_code_*`
//! constructors and released with the matching `*_free`. Every fallible
//! call returns an [`NnmsStatus`]; on failure a message is kept per thread
//! and can be read with [`nnms_last_error_message`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nnms::channel::snr_to_sigma2;
use nnms::codes;
use nnms::decode::{decode, DecodeConfig, DecodeScratch, DecoderWeights, SchemeKind, WeightScheme};
use nnms::tanner::{parse_alist, Code};
use nnms::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NnmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    LengthMismatch = 5,
    Divergence = 6,
    Weights = 7,
    Utf8 = 8,
    Panic = 9,
}

/// A parity-check code and its Tanner graph.
pub struct NnmsCode {
    code: Code,
}

/// A decoder bound to one code, with its own scratch buffers. Not safe to
/// use from two threads at once.
pub struct NnmsDecoder {
    code: Code,
    weights: DecoderWeights,
    config: DecodeConfig,
    scratch: DecodeScratch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> NnmsStatus {
    match e {
        Error::Alist { .. } | Error::InvalidMatrix(_) | Error::Json(_) => NnmsStatus::Parse,
        Error::LengthMismatch { .. } => NnmsStatus::LengthMismatch,
        Error::InvalidArgument(_) => NnmsStatus::InvalidArgument,
        Error::Divergence { .. }
        | Error::NonFiniteGradient { .. }
        | Error::TrainingDiverged { .. } => NnmsStatus::Divergence,
        Error::Weights(_) => NnmsStatus::Weights,
        Error::Io { .. } => NnmsStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard<F>(f: F) -> NnmsStatus
where
    F: FnOnce() -> Result<(), (NnmsStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NnmsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            NnmsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (NnmsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NnmsStatus, String) {
    (NnmsStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (NnmsStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (NnmsStatus::Utf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (NnmsStatus, String)> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nnms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn nnms_status_string(status: NnmsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        NnmsStatus::Ok => c"ok",
        NnmsStatus::NullPointer => c"null pointer argument",
        NnmsStatus::InvalidArgument => c"invalid argument",
        NnmsStatus::Io => c"i/o error",
        NnmsStatus::Parse => c"parse error",
        NnmsStatus::LengthMismatch => c"length mismatch",
        NnmsStatus::Divergence => c"numerical divergence",
        NnmsStatus::Weights => c"invalid weights",
        NnmsStatus::Utf8 => c"string is not valid UTF-8",
        NnmsStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn nnms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a code from an alist file, or from a JSON sidecar naming one.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_from_file(
    path: *const c_char,
    out: *mut *mut NnmsCode,
) -> NnmsStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let code = Code::load(Path::new(path)).map_err(lib_err)?;
        put(out, NnmsCode { code })
    })
}

/// Parses alist text. `k` overrides the information length; pass 0 to use
/// `N - rank(H)`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_from_alist(
    text: *const c_char,
    k: usize,
    out: *mut *mut NnmsCode,
) -> NnmsStatus {
    guard(|| {
        let text = c_str(text, "alist text")?;
        let h = parse_alist(text).map_err(lib_err)?;
        let code = Code::new("alist", h, (k > 0).then_some(k)).map_err(lib_err)?;
        put(out, NnmsCode { code })
    })
}

/// Builds a bundled code by name, e.g. `eg1023` or `reg96`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_builtin(
    name: *const c_char,
    out: *mut *mut NnmsCode,
) -> NnmsStatus {
    guard(|| {
        let name = c_str(name, "name")?;
        let code = codes::builtin(name).map_err(lib_err)?;
        put(out, NnmsCode { code })
    })
}

/// # Safety
/// `code` must be null or a handle from an `nnms_code_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_free(code: *mut NnmsCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Code length N; 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_n(code: *const NnmsCode) -> usize {
    code.as_ref().map_or(0, |c| c.code.params.n)
}

/// Number of parity checks M; 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_m(code: *const NnmsCode) -> usize {
    code.as_ref().map_or(0, |c| c.code.params.m)
}

/// Information length K; 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_k(code: *const NnmsCode) -> usize {
    code.as_ref().map_or(0, |c| c.code.params.k)
}

/// Number of Tanner-graph edges; 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_code_edges(code: *const NnmsCode) -> usize {
    code.as_ref().map_or(0, |c| c.code.params.edges)
}

/// Channel noise variance at `ebn0_db` for this code's rate.
///
/// # Safety
/// `code` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_snr_to_sigma2(
    code: *const NnmsCode,
    ebn0_db: f64,
    out: *mut f64,
) -> NnmsStatus {
    guard(|| {
        let code = code.as_ref().ok_or_else(|| null("code"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = snr_to_sigma2(ebn0_db, &code.code.params).map_err(lib_err)?;
        Ok(())
    })
}

fn new_decoder(code: &Code, weights: DecoderWeights) -> NnmsDecoder {
    NnmsDecoder {
        scratch: DecodeScratch::new(&code.graph),
        code: code.clone(),
        weights,
        config: DecodeConfig::default(),
    }
}

/// Decoder with fixed weights: `bp`, `ms`, `nms:F`, `oms:B`, or a weighted
/// scheme (`unnms`, `snnms`, `annms`) at its all-ones initialization.
///
/// # Safety
/// `code` must be a live handle, `scheme` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_new(
    code: *const NnmsCode,
    scheme: *const c_char,
    t_max: usize,
    out: *mut *mut NnmsDecoder,
) -> NnmsStatus {
    guard(|| {
        let code = code.as_ref().ok_or_else(|| null("code"))?;
        let kind: SchemeKind = c_str(scheme, "scheme")?.parse().map_err(lib_err)?;
        let scheme = WeightScheme::new(kind, t_max).map_err(lib_err)?;
        let weights = DecoderWeights::initial(scheme, &code.code.graph);
        put(out, new_decoder(&code.code, weights))
    })
}

/// Decoder from a trained weight file.
///
/// # Safety
/// `code` must be a live handle, `path` a NUL-terminated string and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_from_weights(
    code: *const NnmsCode,
    path: *const c_char,
    out: *mut *mut NnmsDecoder,
) -> NnmsStatus {
    guard(|| {
        let code = code.as_ref().ok_or_else(|| null("code"))?;
        let path = c_str(path, "path")?;
        let weights = DecoderWeights::load(Path::new(path), &code.code.graph).map_err(lib_err)?;
        put(out, new_decoder(&code.code, weights))
    })
}

/// Turns syndrome-based early exit on (the default) or off.
///
/// # Safety
/// `decoder` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_set_early_exit(
    decoder: *mut NnmsDecoder,
    enabled: bool,
) -> NnmsStatus {
    guard(|| {
        let d = decoder.as_mut().ok_or_else(|| null("decoder"))?;
        d.config.early_exit = enabled;
        Ok(())
    })
}

/// Maximum iterations of the decoder.
///
/// # Safety
/// `decoder` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_t_max(decoder: *const NnmsDecoder) -> usize {
    decoder.as_ref().map_or(0, |d| d.weights.scheme().t_max)
}

/// Decodes one frame of `n` channel LLRs (positive favours bit 0).
///
/// `hard_out` receives `n` bits. `soft_out`, `iterations_out` and
/// `converged_out` may be null.
///
/// # Safety
/// `llrs` must point to `n` doubles, `hard_out` to `n` writable bytes and
/// `soft_out`, if not null, to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_decode(
    decoder: *mut NnmsDecoder,
    llrs: *const f64,
    n: usize,
    hard_out: *mut u8,
    soft_out: *mut f64,
    iterations_out: *mut usize,
    converged_out: *mut bool,
) -> NnmsStatus {
    guard(|| {
        let d = decoder.as_mut().ok_or_else(|| null("decoder"))?;
        if llrs.is_null() {
            return Err(null("llrs"));
        }
        if hard_out.is_null() {
            return Err(null("hard_out"));
        }
        let want = d.code.params.n;
        if n != want {
            return Err(lib_err(Error::LengthMismatch {
                what: "llrs",
                expected: want,
                got: n,
            }));
        }
        let input = std::slice::from_raw_parts(llrs, n);
        let r =
            decode(&d.code.graph, input, &d.weights, &d.config, &mut d.scratch).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(hard_out, n).copy_from_slice(&r.hard);
        if !soft_out.is_null() {
            std::slice::from_raw_parts_mut(soft_out, n).copy_from_slice(&r.soft);
        }
        if !iterations_out.is_null() {
            *iterations_out = r.iterations_used;
        }
        if !converged_out.is_null() {
            *converged_out = r.converged;
        }
        Ok(())
    })
}

/// # Safety
/// `decoder` must be null or a handle from an `nnms_decoder_*` constructor
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nnms_decoder_free(decoder: *mut NnmsDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}
