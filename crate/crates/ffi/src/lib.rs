//! C ABI over `edgecd`.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Every fallible call returns an [`EdgecdStatus`];
//! the message of the last failure on the calling thread is available from
//! [`edgecd_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edgecd::chain::{zero_mode, ChainSpec, Schedule};
use edgecd::dynamics::{transfer_fidelity, EvolveOptions};
use edgecd::gauge::{alpha_closed_form, CdVariant};
use edgecd::pauli::{decompose_h0, decompose_structured, PauliTerm, StructuredPart};
use edgecd::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgecdStatus {
    Ok = 0,
    InvalidArgument = 1,
    Validation = 2,
    Numerical = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
    Io = 7,
}

/// Hopping schedule family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgecdScheduleKind {
    /// `t1,2 = t0 (1 ± cos Ωt)`.
    Cosine = 0,
    /// Cubic polynomial ramp over `T = π/Ω`.
    Cubic = 1,
    /// `t1 = t0 cos(Ωt/2)`, `t2 = t0 sin(Ωt/2)`.
    Trig = 2,
}

/// A chain together with its hopping schedule.
pub struct EdgecdChain {
    spec: ChainSpec,
    schedule: Schedule,
}

/// A Pauli term list.
pub struct EdgecdTerms {
    terms: Vec<PauliTerm>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> EdgecdStatus {
    if err.is_validation() {
        EdgecdStatus::Validation
    } else if err.is_numerical() {
        EdgecdStatus::Numerical
    } else {
        EdgecdStatus::Io
    }
}

struct Fail(EdgecdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EdgecdStatus::NullPointer, format!("`{what}` is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> EdgecdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EdgecdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside edgecd");
            EdgecdStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EdgecdStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn chain_ref<'a>(chain: *const EdgecdChain) -> Result<&'a EdgecdChain, Fail> {
    chain.as_ref().ok_or_else(|| null("chain"))
}

/// Copies `src` into `buf` with a trailing NUL. Requires `len > src.len()`.
unsafe fn copy_c_string(src: &str, buf: *mut c_char, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len <= src.len() {
        return Err(Fail(
            EdgecdStatus::BufferTooSmall,
            format!("need {} bytes, got {len}", src.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr().cast::<c_char>(), buf, src.len());
    *buf.add(src.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edgecd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the last error message of this thread into `buf` (NUL
/// terminated). An empty string means the last call succeeded.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn edgecd_last_error(buf: *mut c_char, len: usize) -> EdgecdStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_c_string(&msg, buf, len) {
        Ok(()) => EdgecdStatus::Ok,
        Err(Fail(s, _)) => s,
    }
}

/// Creates a chain of `sites` sites (odd, at least 3) with energy scale `t0`
/// and ramp rate `omega` (`T = π/Ω`).
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with [`edgecd_chain_free`].
#[no_mangle]
pub unsafe extern "C" fn edgecd_chain_new(
    sites: usize,
    t0: f64,
    omega: f64,
    kind: EdgecdScheduleKind,
    out: *mut *mut EdgecdChain,
) -> EdgecdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let schedule = match kind {
            EdgecdScheduleKind::Cosine => Schedule::cosine(omega, t0)?,
            EdgecdScheduleKind::Trig => Schedule::trig(omega, t0)?,
            EdgecdScheduleKind::Cubic => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(Fail(
                        EdgecdStatus::Validation,
                        format!("Ω must be positive, got {omega}"),
                    ));
                }
                Schedule::cubic(std::f64::consts::PI / omega, t0)?
            }
        };
        let spec = ChainSpec::from_sites(sites, &schedule)?;
        *out = Box::into_raw(Box::new(EdgecdChain { spec, schedule }));
        Ok(())
    })
}

/// Releases a chain handle. Null is ignored.
///
/// # Safety
/// `chain` must come from [`edgecd_chain_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edgecd_chain_free(chain: *mut EdgecdChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of sites, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecd_chain_sites(chain: *const EdgecdChain) -> usize {
    chain.as_ref().map_or(0, |c| c.spec.sites())
}

/// Protocol time `T`, or NaN for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecd_chain_horizon(chain: *const EdgecdChain) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| c.schedule.horizon())
}

/// Hoppings `t1(t)`, `t2(t)`.
///
/// # Safety
/// `chain` must be a live handle; `t1` and `t2` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn edgecd_hoppings(
    chain: *const EdgecdChain,
    t: f64,
    t1: *mut f64,
    t2: *mut f64,
) -> EdgecdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if t1.is_null() || t2.is_null() {
            return Err(null("t1/t2"));
        }
        let h = c.schedule.eval_hoppings(t)?;
        *t1 = h.t1;
        *t2 = h.t2;
        Ok(())
    })
}

/// Real amplitudes of the normalized zero mode at time `t`; `len` must be
/// at least the site count.
///
/// # Safety
/// `chain` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn edgecd_zero_mode(
    chain: *const EdgecdChain,
    t: f64,
    buf: *mut f64,
    len: usize,
) -> EdgecdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = c.spec.sites();
        if len < n {
            return Err(Fail(EdgecdStatus::BufferTooSmall, format!("need {n} doubles, got {len}")));
        }
        let h = c.schedule.eval_hoppings(t)?;
        let psi = zero_mode(&c.spec, h.t1, h.t2)?;
        for (k, a) in psi.amplitudes().iter().enumerate() {
            *buf.add(k) = a.re;
        }
        Ok(())
    })
}

/// Converged transfer fidelity `F(T)` under `H0` plus the CD variant named
/// by `cd` (`none`, `full2`, `suba2`, `nnn1`, `equal1`, ...).
///
/// # Safety
/// `chain` must be a live handle; `cd` a NUL-terminated string; `fidelity`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecd_transfer_fidelity(
    chain: *const EdgecdChain,
    cd: *const c_char,
    fidelity: *mut f64,
) -> EdgecdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if fidelity.is_null() {
            return Err(null("fidelity"));
        }
        let variant = CdVariant::parse(read_str(cd, "cd")?)?;
        *fidelity = transfer_fidelity(&c.spec, &c.schedule, variant, &EvolveOptions::default())?;
        Ok(())
    })
}

/// Closed-form gauge coefficients `α_1..α_order` (order 1 or 2) for a chain
/// of `n_cells` unit cells at hoppings `(t1, t2)`.
///
/// # Safety
/// `out` must point to `len >= order` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn edgecd_alpha_closed_form(
    n_cells: usize,
    t1: f64,
    t2: f64,
    order: usize,
    out: *mut f64,
    len: usize,
) -> EdgecdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = alpha_closed_form(n_cells, t1, t2, order)?;
        if len < g.alphas.len() {
            return Err(Fail(
                EdgecdStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", g.alphas.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.alphas.as_ptr(), out, g.alphas.len());
        Ok(())
    })
}

/// Pauli decomposition of one Hamiltonian family: `part` is `h0`, `ht1`,
/// `ht2`, `kappa` (unit NNN couplings) or `rice-mele`.
///
/// # Safety
/// `chain` must be a live handle; `part` a NUL-terminated string; `out` a
/// valid pointer receiving a handle to free with [`edgecd_terms_free`].
#[no_mangle]
pub unsafe extern "C" fn edgecd_decompose(
    chain: *const EdgecdChain,
    part: *const c_char,
    t1: f64,
    t2: f64,
    out: *mut *mut EdgecdTerms,
) -> EdgecdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let terms = match read_str(part, "part")? {
            "h0" => decompose_h0(&c.spec, t1, t2)?,
            "ht1" => decompose_structured(&c.spec, t1, t2, StructuredPart::Ht1)?,
            "ht2" => decompose_structured(&c.spec, t1, t2, StructuredPart::Ht2)?,
            "kappa" => decompose_structured(&c.spec, t1, t2, StructuredPart::KappaPattern)?,
            "rice-mele" => decompose_structured(&c.spec, t1, t2, StructuredPart::RiceMele)?,
            other => {
                return Err(Fail(
                    EdgecdStatus::InvalidArgument,
                    format!("unknown part `{other}`"),
                ))
            }
        };
        *out = Box::into_raw(Box::new(EdgecdTerms { terms }));
        Ok(())
    })
}

/// Number of terms, or 0 for a null handle.
///
/// # Safety
/// `terms` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecd_terms_len(terms: *const EdgecdTerms) -> usize {
    terms.as_ref().map_or(0, |t| t.terms.len())
}

/// Coefficient and label of term `index`; the label is written NUL
/// terminated into `label` (one letter per qubit, highest qubit first).
///
/// # Safety
/// `terms` must be a live handle; `coefficient` a valid pointer; `label`
/// must point to `label_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn edgecd_terms_get(
    terms: *const EdgecdTerms,
    index: usize,
    coefficient: *mut f64,
    label: *mut c_char,
    label_len: usize,
) -> EdgecdStatus {
    guard(|| {
        let t = terms.as_ref().ok_or_else(|| null("terms"))?;
        if coefficient.is_null() {
            return Err(null("coefficient"));
        }
        let term = t.terms.get(index).ok_or_else(|| {
            Fail(
                EdgecdStatus::InvalidArgument,
                format!("index {index} out of range for {} terms", t.terms.len()),
            )
        })?;
        copy_c_string(&term.label(), label, label_len)?;
        *coefficient = term.coefficient;
        Ok(())
    })
}

/// Releases a term list. Null is ignored.
///
/// # Safety
/// `terms` must come from [`edgecd_decompose`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edgecd_terms_free(terms: *mut EdgecdTerms) {
    if !terms.is_null() {
        drop(Box::from_raw(terms));
    }
}
