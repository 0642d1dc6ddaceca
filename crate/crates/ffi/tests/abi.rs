use std::ffi::{CStr, CString};
use std::ptr;

use huh_core::bundle::{lookup, ExplanationBundle, LookupResult};
use huh_core::Level;
use huh_ffi::*;

const SRT: &str = "1\n00:00:00,000 --> 00:00:04,000\nFirst sentence here.\n\n\
                   2\n00:00:04,500 --> 00:00:09,000\nSecond one follows. And a third.\n";

fn parse_srt(text: &str) -> *mut HuhTranscript {
    let mut t = ptr::null_mut();
    let fmt = CString::new("srt").unwrap();
    let status = unsafe { huh_transcript_parse(text.as_ptr(), text.len(), fmt.as_ptr(), ptr::null(), ptr::null(), &mut t) };
    assert_eq!(status, HuhStatus::Ok);
    t
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(huh_last_error()) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { huh_string_free(p) };
    s
}

#[test]
fn parse_round_trip_and_errors() {
    let t = parse_srt(SRT);
    unsafe {
        assert_eq!(huh_transcript_cue_count(t), 2);
        assert_eq!(huh_transcript_duration_ms(t), 9000);
        let mut json = ptr::null_mut();
        assert_eq!(huh_transcript_to_cue_json(t, &mut json), HuhStatus::Ok);
        let json = take_string(json);
        assert!(json.contains("\"video_id\": \"video\""), "{json}");
        huh_transcript_free(t);

        let bad = "1\n00:00:xx,000 --> 00:00:01,000\nx\n";
        let fmt = CString::new("srt").unwrap();
        let mut t = ptr::null_mut();
        let s = huh_transcript_parse(bad.as_ptr(), bad.len(), fmt.as_ptr(), ptr::null(), ptr::null(), &mut t);
        assert_eq!(s, HuhStatus::ParseError);
        assert!(t.is_null());
        assert!(last_error().contains("line 2"), "{}", last_error());

        let fmt = CString::new("docx").unwrap();
        let s = huh_transcript_parse(bad.as_ptr(), bad.len(), fmt.as_ptr(), ptr::null(), ptr::null(), &mut t);
        assert_eq!(s, HuhStatus::ParseError);

        assert_eq!(
            huh_transcript_parse(ptr::null(), 3, fmt.as_ptr(), ptr::null(), ptr::null(), &mut t),
            HuhStatus::NullPointer
        );
        assert_eq!(huh_transcript_to_cue_json(ptr::null(), &mut ptr::null_mut()), HuhStatus::NullPointer);
        huh_transcript_free(ptr::null_mut());
        huh_string_free(ptr::null_mut());
    }
}

#[test]
fn bundle_lookup_matches_library() {
    let t = parse_srt(SRT);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut b = ptr::null_mut();
        let ts = CString::new("2024-01-01T00:00:00Z").unwrap();
        assert_eq!(huh_bundle_generate_mock(t, 1000, 0, -1, ts.as_ptr(), &mut b), HuhStatus::Ok);
        assert_eq!(huh_bundle_slot_count(b), 10);
        assert_eq!(huh_bundle_save(b, cpath.as_ptr()), HuhStatus::Ok);
        let lib = ExplanationBundle::load(&path).unwrap();

        for t_ms in (0..10_500).step_by(250) {
            for level in [1u8, 2] {
                let mut json = ptr::null_mut();
                assert_eq!(huh_bundle_lookup_json(b, t_ms, level, &mut json), HuhStatus::Ok);
                let got: LookupResult = serde_json::from_str(&take_string(json)).unwrap();
                assert_eq!(got, lookup(&lib, t_ms, Level::try_from(level).unwrap()));
                let mut avail = false;
                assert_eq!(huh_bundle_is_available(b, t_ms, level, &mut avail), HuhStatus::Ok);
                assert_eq!(avail, got.available);
            }
        }
        let mut avail = false;
        assert_eq!(huh_bundle_is_available(b, 0, 0, &mut avail), HuhStatus::InvalidArgument);

        let mut loaded = ptr::null_mut();
        assert_eq!(huh_bundle_load(cpath.as_ptr(), &mut loaded), HuhStatus::Ok);
        assert_eq!(huh_bundle_slot_count(loaded), 10);
        huh_bundle_free(loaded);

        let json = CString::new(std::fs::read_to_string(&path).unwrap()).unwrap();
        let mut from_json = ptr::null_mut();
        assert_eq!(huh_bundle_from_json(json.as_ptr(), &mut from_json), HuhStatus::Ok);
        huh_bundle_free(from_json);

        let garbage = CString::new("{not json").unwrap();
        assert_eq!(huh_bundle_from_json(garbage.as_ptr(), &mut from_json), HuhStatus::ParseError);
        assert!(from_json.is_null());

        let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
        assert_eq!(huh_bundle_load(missing.as_ptr(), &mut loaded), HuhStatus::IoError);

        let export = CString::new(dir.path().join("static").to_str().unwrap()).unwrap();
        assert_eq!(huh_bundle_export(b, export.as_ptr()), HuhStatus::Ok);
        assert!(dir.path().join("static/manifest.json").is_file());

        let mut bad = ptr::null_mut();
        assert_eq!(huh_bundle_generate_mock(t, 0, 0, -1, ptr::null(), &mut bad), HuhStatus::InvalidArgument);
        assert!(last_error().contains("interval"), "{}", last_error());

        huh_bundle_free(b);
        huh_transcript_free(t);
    }
}

#[test]
fn emissions() {
    let mut kg = 0.0;
    unsafe {
        assert_eq!(huh_emissions_estimate(390_962, 37_435, 0.0, &mut kg), HuhStatus::Ok);
        assert!((kg - 150.7).abs() <= 0.2);
        assert_eq!(huh_emissions_estimate(1, 0, -1.0, &mut kg), HuhStatus::InvalidArgument);
        assert_eq!(huh_emissions_estimate(1, 0, 0.0, ptr::null_mut()), HuhStatus::NullPointer);
    }
    assert_eq!(huh_default_factor(), huh_core::emissions::DEFAULT_FACTOR_KG_PER_TOKEN);
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut kg = 0.0;
        assert_eq!(huh_emissions_estimate(1, 0, -1.0, &mut kg), HuhStatus::InvalidArgument);
    }
    let other = std::thread::spawn(|| huh_last_error().is_null()).join().unwrap();
    assert!(other);
    assert!(!huh_last_error().is_null());
}
