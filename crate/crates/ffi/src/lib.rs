//! C ABI over `huh-core`.
//!
//! Transcripts and bundles are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every call returns a [`HuhStatus`];
//! on failure [`huh_last_error`] describes what went wrong on the calling
//! thread. Strings handed out by the library are NUL-terminated UTF-8 and
//! must be released with [`huh_string_free`]. Panics never cross the
//! boundary; they surface as `HUH_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use huh_core::bundle::{export_static, generate_bundle, lookup, BundleConfig, BundleError, ExplanationBundle};
use huh_core::emissions::{estimate, DEFAULT_FACTOR_KG_PER_TOKEN};
use huh_core::provider::{MockProvider, TokenUsage};
use huh_core::segment::restore_punctuation_rule;
use huh_core::transcript::{parse, to_cue_json, IngestError, IngestOptions, Transcript, TranscriptFormat};
use huh_core::Level;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HuhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    IoError = 5,
    BundleError = 6,
    ProviderError = 7,
    Panic = 8,
}

/// Parsed transcript.
pub struct HuhTranscript(Transcript);

/// Explanation bundle.
pub struct HuhBundle(ExplanationBundle);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HuhStatus, String);

impl Failure {
    fn new(status: HuhStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Self(HuhStatus::ParseError, e.to_string())
    }
}

impl From<BundleError> for Failure {
    fn from(e: BundleError) -> Self {
        let status = match &e {
            BundleError::IoFailure { .. } => HuhStatus::IoError,
            BundleError::ProviderExhausted { .. } => HuhStatus::ProviderError,
            BundleError::Json(_) => HuhStatus::ParseError,
            BundleError::InvalidRange(_) => HuhStatus::InvalidArgument,
            BundleError::Corrupt(_) => HuhStatus::BundleError,
        };
        Self(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "\\0")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Run `f`, turning errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HuhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HuhStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            HuhStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(HuhStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(HuhStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(HuhStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(HuhStatus::NullPointer, format!("{name} is null")))
}

fn level_arg(level: u8) -> Result<Level, Failure> {
    Level::try_from(level).map_err(|e| Failure::new(HuhStatus::InvalidArgument, e.to_string()))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(HuhStatus::InvalidArgument, "output contains a NUL byte"))
}

/// Message for the last failed call on this thread, or NULL. Owned by the
/// library and valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn huh_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn huh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse `len` bytes of transcript. `format` is "srt", "vtt" or "json";
/// `video_id` and `language` may be NULL for the defaults.
///
/// # Safety
/// `data` must point to `len` readable bytes; string arguments must be
/// NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_parse(
    data: *const u8,
    len: usize,
    format: *const c_char,
    video_id: *const c_char,
    language: *const c_char,
    out: *mut *mut HuhTranscript,
) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        if data.is_null() && len > 0 {
            return Err(Failure::new(HuhStatus::NullPointer, "data is null"));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let format: TranscriptFormat = str_arg(format, "format")?.parse()?;
        let mut opts = IngestOptions::default();
        if let Some(v) = opt_str_arg(video_id, "video_id")? {
            opts.video_id = v.to_string();
        }
        if let Some(l) = opt_str_arg(language, "language")? {
            opts.language = l.to_string();
        }
        let t = parse(bytes, format, &opts)?;
        *out = Box::into_raw(Box::new(HuhTranscript(t)));
        Ok(())
    })
}

/// Apply pause-based punctuation in place. Already punctuated transcripts
/// are left unchanged.
///
/// # Safety
/// `t` must be a live transcript handle.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_punctuate(t: *mut HuhTranscript, gap_ms: u64) -> HuhStatus {
    guard(|| {
        let t = out_arg(t, "transcript")?;
        t.0 = restore_punctuation_rule(&t.0, gap_ms);
        Ok(())
    })
}

/// Number of cues, or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live transcript handle.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_cue_count(t: *const HuhTranscript) -> usize {
    t.as_ref().map_or(0, |t| t.0.cues.len())
}

/// Duration in milliseconds, or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live transcript handle.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_duration_ms(t: *const HuhTranscript) -> u64 {
    t.as_ref().map_or(0, |t| t.0.duration_ms)
}

/// Serialize as cue JSON into a new string.
///
/// # Safety
/// `t` must be a live transcript handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_to_cue_json(t: *const HuhTranscript, out: *mut *mut c_char) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        *out = c_string(to_cue_json(&ref_arg(t, "transcript")?.0))?;
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn huh_transcript_free(t: *mut HuhTranscript) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Load and validate a bundle file.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_load(path: *const c_char, out: *mut *mut HuhBundle) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let b = ExplanationBundle::load(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(HuhBundle(b)));
        Ok(())
    })
}

/// Parse and validate a bundle from JSON text.
///
/// # Safety
/// `json` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_from_json(json: *const c_char, out: *mut *mut HuhBundle) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let b: ExplanationBundle = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| Failure::new(HuhStatus::ParseError, e.to_string()))?;
        b.validate()?;
        *out = Box::into_raw(Box::new(HuhBundle(b)));
        Ok(())
    })
}

/// Generate a bundle with the deterministic mock provider. `to_ms < 0`
/// covers the whole transcript; `created_at` may be NULL.
///
/// # Safety
/// `t` must be a live transcript handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_generate_mock(
    t: *const HuhTranscript,
    interval_ms: u64,
    from_ms: u64,
    to_ms: i64,
    created_at: *const c_char,
    out: *mut *mut HuhBundle,
) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let t = ref_arg(t, "transcript")?;
        let cfg = BundleConfig {
            interval_ms,
            coverage_start_ms: from_ms,
            coverage_end_ms: u64::try_from(to_ms).ok(),
            created_at: opt_str_arg(created_at, "created_at")?.map(str::to_string),
            ..BundleConfig::default()
        };
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_time()
            .build()
            .map_err(|e| Failure::new(HuhStatus::IoError, e.to_string()))?;
        let run = rt.block_on(generate_bundle(&t.0, &MockProvider::new(), &cfg))?;
        *out = Box::into_raw(Box::new(HuhBundle(run.bundle)));
        Ok(())
    })
}

/// Write the bundle as pretty JSON.
///
/// # Safety
/// `b` must be a live bundle handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_save(b: *const HuhBundle, path: *const c_char) -> HuhStatus {
    guard(|| {
        ref_arg(b, "bundle")?.0.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Slots per level, or 0 for NULL.
///
/// # Safety
/// `b` must be NULL or a live bundle handle.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_slot_count(b: *const HuhBundle) -> usize {
    b.as_ref().map_or(0, |b| b.0.slot_count_per_level())
}

/// Lookup result for a pause at `t_ms` as a JSON object string.
///
/// # Safety
/// `b` must be a live bundle handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_lookup_json(
    b: *const HuhBundle,
    t_ms: u64,
    level: u8,
    out: *mut *mut c_char,
) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let r = lookup(&ref_arg(b, "bundle")?.0, t_ms, level_arg(level)?);
        *out = c_string(serde_json::to_string(&r).expect("lookup result serializes"))?;
        Ok(())
    })
}

/// Whether an explanation exists for a pause at `t_ms`.
///
/// # Safety
/// `b` must be a live bundle handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_is_available(
    b: *const HuhBundle,
    t_ms: u64,
    level: u8,
    out: *mut bool,
) -> HuhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = lookup(&ref_arg(b, "bundle")?.0, t_ms, level_arg(level)?).available;
        Ok(())
    })
}

/// Write the static export (manifest plus slot files) under `dir`.
///
/// # Safety
/// `b` must be a live bundle handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_export(b: *const HuhBundle, dir: *const c_char) -> HuhStatus {
    guard(|| {
        export_static(&ref_arg(b, "bundle")?.0, Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// # Safety
/// `b` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn huh_bundle_free(b: *mut HuhBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// kg CO2e for the given token counts. A factor of 0 selects the default.
///
/// # Safety
/// `out_kg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn huh_emissions_estimate(
    prompt_tokens: u64,
    completion_tokens: u64,
    factor_kg_per_token: f64,
    out_kg: *mut f64,
) -> HuhStatus {
    guard(|| {
        let out = out_arg(out_kg, "out_kg")?;
        let factor = if factor_kg_per_token == 0.0 { DEFAULT_FACTOR_KG_PER_TOKEN } else { factor_kg_per_token };
        let est = estimate(TokenUsage::new(prompt_tokens, completion_tokens), factor)
            .map_err(|e| Failure::new(HuhStatus::InvalidArgument, e.to_string()))?;
        *out = est.kg_co2e;
        Ok(())
    })
}

/// Default kg CO2e per token.
#[no_mangle]
pub extern "C" fn huh_default_factor() -> f64 {
    DEFAULT_FACTOR_KG_PER_TOKEN
}
