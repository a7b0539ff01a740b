use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use edgecd_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        assert_eq!(edgecd_last_error(buf.as_mut_ptr(), buf.len()), EdgecdStatus::Ok);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn chain(sites: usize, omega: f64) -> *mut EdgecdChain {
    let mut c = ptr::null_mut();
    let s = unsafe { edgecd_chain_new(sites, 1.0, omega, EdgecdScheduleKind::Cosine, &mut c) };
    assert_eq!(s, EdgecdStatus::Ok);
    c
}

#[test]
fn chain_lifecycle_and_queries() {
    let c = chain(5, 1.0);
    unsafe {
        assert_eq!(edgecd_chain_sites(c), 5);
        assert!((edgecd_chain_horizon(c) - std::f64::consts::PI).abs() < 1e-15);
        let (mut t1, mut t2) = (0.0, 0.0);
        assert_eq!(edgecd_hoppings(c, 0.0, &mut t1, &mut t2), EdgecdStatus::Ok);
        assert_eq!((t1, t2), (2.0, 0.0));
        let mut amps = [0.0; 5];
        assert_eq!(edgecd_zero_mode(c, 0.0, amps.as_mut_ptr(), 5), EdgecdStatus::Ok);
        assert!((amps[0].abs() - 1.0).abs() < 1e-12);
        assert_eq!(edgecd_zero_mode(c, 0.0, amps.as_mut_ptr(), 4), EdgecdStatus::BufferTooSmall);
        assert!(last_error().contains("need 5"));
        assert_eq!(edgecd_hoppings(c, 10.0, &mut t1, &mut t2), EdgecdStatus::Validation);
        edgecd_chain_free(c);
        edgecd_chain_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            edgecd_chain_new(4, 1.0, 1.0, EdgecdScheduleKind::Cosine, &mut c),
            EdgecdStatus::Validation
        );
        assert!(c.is_null());
        assert!(last_error().contains("odd"));
        assert_eq!(
            edgecd_chain_new(5, 1.0, 1.0, EdgecdScheduleKind::Trig, ptr::null_mut()),
            EdgecdStatus::NullPointer
        );
        let mut f = 0.0;
        let cd = CString::new("none").unwrap();
        assert_eq!(edgecd_transfer_fidelity(ptr::null(), cd.as_ptr(), &mut f), EdgecdStatus::NullPointer);
        assert_eq!(edgecd_chain_sites(ptr::null()), 0);
    }
}

#[test]
fn transfer_and_alphas() {
    let c = chain(5, 0.01);
    let cd = CString::new("none").unwrap();
    let bad = CString::new("full0").unwrap();
    let mut f = 0.0;
    unsafe {
        assert_eq!(edgecd_transfer_fidelity(c, cd.as_ptr(), &mut f), EdgecdStatus::Ok);
        assert!(f > 0.999);
        assert_eq!(last_error(), "");
        assert_eq!(edgecd_transfer_fidelity(c, bad.as_ptr(), &mut f), EdgecdStatus::Validation);
        edgecd_chain_free(c);
        let mut a = [0.0; 2];
        assert_eq!(edgecd_alpha_closed_form(3, 1.0, 1.0, 1, a.as_mut_ptr(), 2), EdgecdStatus::Ok);
        assert!((a[0] + 1.0 / 6.0).abs() < 1e-14);
        assert_eq!(edgecd_alpha_closed_form(3, 1.0, 1.0, 2, a.as_mut_ptr(), 1), EdgecdStatus::BufferTooSmall);
        assert_eq!(edgecd_alpha_closed_form(3, 1.0, 1.0, 3, a.as_mut_ptr(), 2), EdgecdStatus::Validation);
    }
}

#[test]
fn term_list_round_trip() {
    let c = chain(5, 1.0);
    let part = CString::new("h0").unwrap();
    let mut terms = ptr::null_mut();
    unsafe {
        assert_eq!(edgecd_decompose(c, part.as_ptr(), 1.0, 1.0, &mut terms), EdgecdStatus::Ok);
        assert_eq!(edgecd_terms_len(terms), 10);
        let mut label = [0 as c_char; 8];
        let mut coef = 0.0;
        assert_eq!(edgecd_terms_get(terms, 0, &mut coef, label.as_mut_ptr(), 8), EdgecdStatus::Ok);
        assert_eq!(CStr::from_ptr(label.as_ptr()).to_str().unwrap(), "IIX");
        assert_eq!(coef, 0.5);
        assert_eq!(edgecd_terms_get(terms, 0, &mut coef, label.as_mut_ptr(), 3), EdgecdStatus::BufferTooSmall);
        assert_eq!(edgecd_terms_get(terms, 10, &mut coef, label.as_mut_ptr(), 8), EdgecdStatus::InvalidArgument);
        edgecd_terms_free(terms);
        let odd = CString::new("xx").unwrap();
        assert_eq!(edgecd_decompose(c, odd.as_ptr(), 1.0, 1.0, &mut terms), EdgecdStatus::InvalidArgument);
        edgecd_chain_free(c);
        assert!(!CStr::from_ptr(edgecd_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_declares_api_and_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/edgecd.h")).unwrap();
    for name in [
        "edgecd_chain_new",
        "edgecd_chain_free",
        "edgecd_transfer_fidelity",
        "edgecd_decompose",
        "edgecd_terms_get",
        "edgecd_last_error",
        "EDGECD_STATUS_BUFFER_TOO_SMALL = 5",
        "typedef struct EdgecdChain EdgecdChain;",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"edgecd.h\"\nint main(void) { EdgecdChain *c = 0; \
         return edgecd_chain_new(5, 1.0, 1.0, EDGECD_SCHEDULE_KIND_COSINE, &c) == EDGECD_STATUS_OK; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(status) => assert!(status.success(), "header does not compile as C99"),
        Err(_) => eprintln!("no C compiler found; skipped compile check"),
    }
}
