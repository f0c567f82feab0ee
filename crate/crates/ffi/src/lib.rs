//! C ABI for the jetviber symbolic engine.
//!
//! The surface mirrors the CLI: parse a session once into an opaque handle,
//! then check bivectors, take brackets, reduce expressions and run the
//! coefficient search against it. Every call returns a [`JvStatus`] aligned
//! with the engine's exit-code contract; human-readable detail for the last
//! non-OK call is kept per thread and fetched with [`jv_last_error`].
//!
//! Strings returned through out-parameters are allocated by Rust and must be
//! released with [`jv_string_free`]. The header `include/jetviber.h` is
//! generated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jetviber::atom::Atom;
use jetviber::equation::{EquationModel, Shell};
use jetviber::fixtures::{bivector_named, model_of};
use jetviber::lang::{print_canonical, Session};
use jetviber::schouten::{check_bivector, is_poisson, schouten_bracket, CheckReport};
use jetviber::search::search;

/// Outcome of an FFI call, matching the engine's exit-code contract.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JvStatus {
    /// The call succeeded; asserted identities hold.
    JvOk = 0,
    /// The computation ran but the mathematical assertion is false
    /// (a candidate fails the bivector conditions, a bracket is nonzero).
    JvFail = 1,
    /// Bad input: null pointer, invalid UTF-8, unparsable source, unknown
    /// name.
    JvError = 2,
    /// The engine tripped an internal invariant; the result is unusable.
    JvInternal = 3,
}

/// An opaque parsed session: declarations plus the equation model built
/// from them. Create with [`jv_session_parse`], release with
/// [`jv_session_free`].
pub struct JvSession {
    session: Session,
    model: EquationModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    let c = CString::new(msg.replace('\0', " ")).expect("NUL stripped");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs a body that may touch deep recursion or arithmetic, converting a
/// panic into `JvInternal` instead of unwinding across the boundary.
fn guarded(body: impl FnOnce() -> JvStatus) -> JvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic in the engine");
            JvStatus::JvInternal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, String> {
    if p.is_null() {
        return Err(format!("{what} is a null pointer"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| format!("{what} is not valid UTF-8"))
}

fn give_string(out: *mut *mut c_char, s: String) {
    if out.is_null() {
        return;
    }
    let c = CString::new(s.replace('\0', " ")).expect("NUL stripped");
    unsafe { *out = c.into_raw() };
}

/// The crate version as a static string; do not free.
#[no_mangle]
pub extern "C" fn jv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Detail text for the most recent non-OK call on this thread, or NULL if
/// it succeeded. The caller owns the string: release with
/// [`jv_string_free`].
#[no_mangle]
pub extern "C" fn jv_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned through any out-parameter of this library.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed; NULL is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn jv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses session source (the same language the CLI reads: `indep`,
/// `equation`, `function`, `constant`, `let`, `bivector`, `instantiate`)
/// and builds the equation model. Returns NULL on error, with detail in
/// [`jv_last_error`]. The source must declare an equation.
///
/// # Safety
/// `src` must be NULL or a NUL-terminated string valid for the call.
#[no_mangle]
pub unsafe extern "C" fn jv_session_parse(src: *const c_char) -> *mut JvSession {
    clear_error();
    let text = match read_str(src, "session source") {
        Ok(t) => t.to_owned(),
        Err(m) => {
            set_error(m);
            return ptr::null_mut();
        }
    };
    let mut out = ptr::null_mut();
    guarded(|| {
        let session = match Session::parse(&text) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return JvStatus::JvError;
            }
        };
        let model = match model_of(&session) {
            Ok(m) => m,
            Err(e) => {
                set_error(e);
                return JvStatus::JvError;
            }
        };
        out = Box::into_raw(Box::new(JvSession { session, model }));
        JvStatus::JvOk
    });
    out
}

/// Releases a session handle. NULL is accepted and ignored.
///
/// # Safety
/// `s` must be NULL or a pointer from [`jv_session_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jv_session_free(s: *mut JvSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

unsafe fn session_ref<'a>(s: *const JvSession) -> Result<&'a JvSession, String> {
    if s.is_null() {
        Err("session handle is a null pointer".into())
    } else {
        Ok(&*s)
    }
}

fn named(h: &JvSession, name: &str) -> Result<jetviber::schouten::Bivector, String> {
    bivector_named(&h.session, name)
}

/// Checks whether `expr` — a declared bivector's name or an expression in
/// the session language — satisfies the bivector conditions on the
/// session's equation. On success writes the factorization table to
/// `out_detail`; on `JvFail` writes the violated condition's residual.
///
/// # Safety
/// `session` must come from [`jv_session_parse`]; `expr` must be a valid
/// NUL-terminated string; `out_detail` may be NULL or must point to a
/// writable `char*`.
#[no_mangle]
pub unsafe extern "C" fn jv_check_bivector(
    session: *const JvSession,
    expr: *const c_char,
    out_detail: *mut *mut c_char,
) -> JvStatus {
    clear_error();
    if !out_detail.is_null() {
        *out_detail = ptr::null_mut();
    }
    let (h, name) = match (session_ref(session), read_str(expr, "expression")) {
        (Ok(h), Ok(n)) => (h, n.to_owned()),
        (Err(m), _) | (_, Err(m)) => {
            set_error(m);
            return JvStatus::JvError;
        }
    };
    guarded(|| {
        let b = match named(h, &name) {
            Ok(b) => b,
            Err(m) => {
                set_error(m);
                return JvStatus::JvError;
            }
        };
        match check_bivector(&b, &h.model) {
            Ok(CheckReport::Pass { nabla }) => {
                let mut lines = Vec::new();
                for (tau, a) in nabla.values() {
                    lines.push(format!(
                        "{}: {}",
                        tau.render(&h.session.var_names),
                        print_canonical(a, &h.session)
                    ));
                }
                give_string(out_detail, lines.join("\n"));
                JvStatus::JvOk
            }
            Ok(CheckReport::Fail(v)) => {
                let (what, residual) = match &v {
                    jetviber::schouten::Violation::Condition2 { residual } => {
                        ("the linearization applied to the candidate does not vanish", Some(residual))
                    }
                    jetviber::schouten::Violation::Condition3 { residual } => {
                        ("the defect does not factor through the equation", Some(residual))
                    }
                    jetviber::schouten::Violation::Condition3Nonlinear => {
                        ("the factorization would need the equation quadratically", None)
                    }
                };
                let detail = match residual {
                    Some(r) => format!("{what}; residual {}", print_canonical(r, &h.session)),
                    None => what.to_string(),
                };
                set_error(detail.clone());
                give_string(out_detail, detail);
                JvStatus::JvFail
            }
            Err(e) => {
                set_error(e.to_string());
                JvStatus::JvInternal
            }
        }
    })
}

/// Computes the bracket of two bivectors (names or expressions) reduced on
/// the cotangent equation and writes its canonical form to `out_value`
/// (`"0"` when it vanishes).
///
/// # Safety
/// Same contracts as [`jv_check_bivector`] for each argument.
#[no_mangle]
pub unsafe extern "C" fn jv_schouten_bracket(
    session: *const JvSession,
    a: *const c_char,
    b: *const c_char,
    out_value: *mut *mut c_char,
) -> JvStatus {
    clear_error();
    if !out_value.is_null() {
        *out_value = ptr::null_mut();
    }
    let (h, ea, eb) = match (
        session_ref(session),
        read_str(a, "first bivector"),
        read_str(b, "second bivector"),
    ) {
        (Ok(h), Ok(a), Ok(b)) => (h, a.to_owned(), b.to_owned()),
        (Err(m), _, _) | (_, Err(m), _) | (_, _, Err(m)) => {
            set_error(m);
            return JvStatus::JvError;
        }
    };
    guarded(|| {
        let (ba, bb) = match (named(h, &ea), named(h, &eb)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(m), _) | (_, Err(m)) => {
                set_error(m);
                return JvStatus::JvError;
            }
        };
        match schouten_bracket(&ba, &bb, &h.model) {
            Ok(w) => {
                give_string(out_value, print_canonical(&w, &h.session));
                JvStatus::JvOk
            }
            Err(e) => {
                set_error(e.to_string());
                JvStatus::JvFail
            }
        }
    })
}

/// Decides whether a bivector is Poisson (vanishing self-bracket). Writes
/// 1 or 0 to `out_flag` and the self-bracket's canonical form to
/// `out_witness`. The status stays `JvOk` either way: a nonzero
/// self-bracket is an answer, not an error.
///
/// # Safety
/// Same contracts as [`jv_check_bivector`]; `out_flag` may be NULL or must
/// point to a writable int.
#[no_mangle]
pub unsafe extern "C" fn jv_is_poisson(
    session: *const JvSession,
    expr: *const c_char,
    out_flag: *mut c_int,
    out_witness: *mut *mut c_char,
) -> JvStatus {
    clear_error();
    if !out_witness.is_null() {
        *out_witness = ptr::null_mut();
    }
    let (h, name) = match (session_ref(session), read_str(expr, "expression")) {
        (Ok(h), Ok(n)) => (h, n.to_owned()),
        (Err(m), _) | (_, Err(m)) => {
            set_error(m);
            return JvStatus::JvError;
        }
    };
    guarded(|| {
        let b = match named(h, &name) {
            Ok(b) => b,
            Err(m) => {
                set_error(m);
                return JvStatus::JvError;
            }
        };
        match is_poisson(&b, &h.model) {
            Ok((ok, w)) => {
                if !out_flag.is_null() {
                    *out_flag = ok as c_int;
                }
                give_string(out_witness, print_canonical(&w, &h.session));
                JvStatus::JvOk
            }
            Err(e) => {
                set_error(e.to_string());
                JvStatus::JvFail
            }
        }
    })
}

/// Reduces an expression to its normal form on the equation
/// (`cotangent = 0`) or on the cotangent equation (`cotangent != 0`) and
/// writes the canonical result.
///
/// # Safety
/// Same contracts as [`jv_check_bivector`].
#[no_mangle]
pub unsafe extern "C" fn jv_reduce(
    session: *const JvSession,
    expr: *const c_char,
    cotangent: c_int,
    out_value: *mut *mut c_char,
) -> JvStatus {
    clear_error();
    if !out_value.is_null() {
        *out_value = ptr::null_mut();
    }
    let (h, src) = match (session_ref(session), read_str(expr, "expression")) {
        (Ok(h), Ok(n)) => (h, n.to_owned()),
        (Err(m), _) | (_, Err(m)) => {
            set_error(m);
            return JvStatus::JvError;
        }
    };
    guarded(|| {
        let e = match h.session.parse_expression(&src).map_err(|e| e.to_string())
            .and_then(|e| h.session.resolved(&e))
        {
            Ok(e) => e,
            Err(m) => {
                set_error(m);
                return JvStatus::JvError;
            }
        };
        let shell = if cotangent != 0 {
            Shell::Cotangent
        } else {
            Shell::Equation
        };
        match h.model.reduce(&e, shell) {
            Ok(r) => {
                give_string(out_value, print_canonical(&r, &h.session));
                JvStatus::JvOk
            }
            Err(e) => {
                set_error(e.to_string());
                JvStatus::JvInternal
            }
        }
    })
}

/// Runs the bivector search with jets up to `max_jet_order` and polynomial
/// coefficients in the independent variables up to `degree`, writing the
/// basis of the solution space as a JSON array of canonical expressions.
///
/// # Safety
/// `session` must come from [`jv_session_parse`]; `out_json` may be NULL or
/// must point to a writable `char*`.
#[no_mangle]
pub unsafe extern "C" fn jv_search_json(
    session: *const JvSession,
    max_jet_order: u32,
    degree: u32,
    out_json: *mut *mut c_char,
) -> JvStatus {
    clear_error();
    if !out_json.is_null() {
        *out_json = ptr::null_mut();
    }
    let h = match session_ref(session) {
        Ok(h) => h,
        Err(m) => {
            set_error(m);
            return JvStatus::JvError;
        }
    };
    guarded(|| {
        let n = h.session.var_names.len();
        let vars: Vec<Atom> = (0..n).map(Atom::Indep).collect();
        match search(&h.model, n, max_jet_order as usize, &vars, degree) {
            Ok(out) => {
                let basis: Vec<String> = out
                    .basis
                    .iter()
                    .map(|v| print_canonical(&out.ansatz.combine(v), &h.session))
                    .collect();
                let json = serde_json::to_string(&basis).expect("strings serialize");
                give_string(out_json, json);
                JvStatus::JvOk
            }
            Err(e) => {
                set_error(e.to_string());
                JvStatus::JvError
            }
        }
    })
}
