//! C interface to `gconvex`.
//!
//! Every entry point returns a [`GcxStatus`] and writes results through
//! out-pointers, which are left untouched on failure. Objects cross the
//! boundary as opaque handles created by `*_new` / `*_parse` and released by
//! the matching `*_free`. After a failure, [`gcx_last_error`] gives a
//! message for the calling thread. Panics are caught and reported as
//! [`GcxStatus::Panic`].
//!
//! The header `include/gconvex.h` is generated from this file at build time.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gconvex::convexity::{self, ArgMin, ScanSpec, Verdict};
use gconvex::gbsde::{self, GeneratorPair};
use gconvex::{gheat, oracle, Error, ScalarFunction, SpaceTimeGrid, VolatilityBand};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    NumericalFailure = 5,
    Panic = 6,
}

/// Volatility band `[σ̲², σ̄²]`.
pub struct GcxBand(VolatilityBand);

/// A parsed function of `x`.
pub struct GcxFunction(ScalarFunction);

/// Driver pair `(g, f)` of a G-BSDE with its declared Lipschitz constant.
pub struct GcxGenerator(GeneratorPair);

/// Result of [`gcx_check_g_convexity`].
pub struct GcxConvexityReport(convexity::ConvexityReport);

/// Space-time grid on `[-half_width, half_width]` with `nodes` (odd) nodes
/// and the fewest time steps keeping `σ̄² dt / dx² <= theta`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GcxGridSpec {
    pub horizon: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub theta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GcxScanSpec {
    pub t: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub resolution: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcxArgMin {
    Finite = 0,
    PosInf = 1,
    NegInf = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcxVerdict {
    Holds = 0,
    Fails = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GcxWitness {
    pub y: f64,
    pub z: f64,
    pub a: f64,
    pub gap: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GcxJensen {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: GcxStatus,
    message: String,
}

impl Failure {
    fn new(status: GcxStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => GcxStatus::ParseError,
            Error::InvalidBand { .. }
            | Error::InvalidGrid(_)
            | Error::Cfl { .. }
            | Error::GridMismatch(_)
            | Error::OutOfBand { .. }
            | Error::InvalidArgument(_) => GcxStatus::InvalidArgument,
            Error::NonFinite { .. }
            | Error::BlowUp { .. }
            | Error::Eval(_)
            | Error::Generator(_)
            | Error::GridTooCoarse { .. } => GcxStatus::NumericalFailure,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<gconvex::expr::ParseError> for Failure {
    fn from(e: gconvex::expr::ParseError) -> Self {
        Failure::new(GcxStatus::ParseError, e.to_string())
    }
}

impl From<gconvex::expr::EvalError> for Failure {
    fn from(e: gconvex::expr::EvalError) -> Self {
        Failure::new(GcxStatus::NumericalFailure, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GcxStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GcxStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_last_error(&format!("panic: {msg}"));
            GcxStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(GcxStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(GcxStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(GcxStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn out_ok<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(GcxStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn grid_of(band: &VolatilityBand, spec: &GcxGridSpec) -> Result<SpaceTimeGrid, Failure> {
    Ok(SpaceTimeGrid::cfl_matched(band, spec.horizon, spec.half_width, spec.nodes, spec.theta)?)
}

fn boxed<T>(out: *mut *mut T, value: T) {
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gcx_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gcx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn gcx_band_new(sigma_min_sq: f64, sigma_max_sq: f64, out: *mut *mut GcxBand) -> GcxStatus {
    guard(|| {
        out_ok(out, "out")?;
        boxed(out, GcxBand(VolatilityBand::new(sigma_min_sq, sigma_max_sq)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_band_free(band: *mut GcxBand) {
    if !band.is_null() {
        drop(Box::from_raw(band));
    }
}

/// `G(a) = ½(σ̄² a⁺ − σ̲² a⁻)`.
#[no_mangle]
pub unsafe extern "C" fn gcx_g_eval(band: *const GcxBand, a: f64, out: *mut f64) -> GcxStatus {
    guard(|| {
        let b = get(band, "band")?;
        out_ok(out, "out")?;
        *out = gconvex::g_eval(&b.0, a);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_function_parse(src: *const c_char, out: *mut *mut GcxFunction) -> GcxStatus {
    guard(|| {
        let s = text(src, "src")?;
        out_ok(out, "out")?;
        boxed(out, GcxFunction(ScalarFunction::parse(s)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_function_free(func: *mut GcxFunction) {
    if !func.is_null() {
        drop(Box::from_raw(func));
    }
}

/// Value and first two derivatives at `x`.
#[no_mangle]
pub unsafe extern "C" fn gcx_eval2(
    func: *const GcxFunction,
    x: f64,
    value: *mut f64,
    d1: *mut f64,
    d2: *mut f64,
) -> GcxStatus {
    guard(|| {
        let f = get(func, "func")?;
        out_ok(value, "value")?;
        out_ok(d1, "d1")?;
        out_ok(d2, "d2")?;
        let jet = f.0.eval2(x)?;
        (*value, *d1, *d2) = (jet.v, jet.d1, jet.d2);
        Ok(())
    })
}

/// Drivers `g(t, y, z)` and `f(t, y, z)` with declared Lipschitz constant.
#[no_mangle]
pub unsafe extern "C" fn gcx_generator_parse(
    g: *const c_char,
    f: *const c_char,
    lipschitz: f64,
    out: *mut *mut GcxGenerator,
) -> GcxStatus {
    guard(|| {
        let (g, f) = (text(g, "g")?, text(f, "f")?);
        out_ok(out, "out")?;
        boxed(out, GcxGenerator(GeneratorPair::parse(g, f, lipschitz)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_generator_free(generator: *mut GcxGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// `Ê[φ(B_t)]` from the G-heat equation on `grid`.
#[no_mangle]
pub unsafe extern "C" fn gcx_g_expectation(
    band: *const GcxBand,
    phi: *const GcxFunction,
    t: f64,
    grid: *const GcxGridSpec,
    out: *mut f64,
) -> GcxStatus {
    guard(|| {
        let (b, phi, spec) = (get(band, "band")?, get(phi, "phi")?, get(grid, "grid")?);
        out_ok(out, "out")?;
        *out = gheat::g_expectation(&b.0, &phi.0, t, &grid_of(&b.0, spec)?)?;
        Ok(())
    })
}

/// `E_{s,t}[Φ(B_t − B_s)]`. A null generator means `g = f = 0`.
#[no_mangle]
pub unsafe extern "C" fn gcx_nonlinear_expectation(
    band: *const GcxBand,
    generator: *const GcxGenerator,
    terminal: *const GcxFunction,
    s: f64,
    t: f64,
    grid: *const GcxGridSpec,
    out: *mut f64,
) -> GcxStatus {
    guard(|| {
        let (b, term, spec) = (get(band, "band")?, get(terminal, "terminal")?, get(grid, "grid")?);
        let zero = GeneratorPair::zero();
        let gen = generator.as_ref().map_or(&zero, |g| &g.0);
        out_ok(out, "out")?;
        *out = gbsde::nonlinear_expectation(&b.0, gen, &term.0, s, t, &grid_of(&b.0, spec)?)?;
        Ok(())
    })
}

/// Worst-case trinomial tree value of `Ê[φ(B_t)]`.
#[no_mangle]
pub unsafe extern "C" fn gcx_tree_expectation(
    band: *const GcxBand,
    phi: *const GcxFunction,
    t: f64,
    steps: usize,
    out: *mut f64,
) -> GcxStatus {
    guard(|| {
        let (b, phi) = (get(band, "band")?, get(phi, "phi")?);
        out_ok(out, "out")?;
        *out = oracle::tree_expectation(&b.0, &phi.0, t, steps)?;
        Ok(())
    })
}

/// Signed gap of the pointwise G-convexity inequality at `(t, y, z, a)`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gcx_condition_gap(
    band: *const GcxBand,
    generator: *const GcxGenerator,
    h: *const GcxFunction,
    t: f64,
    y: f64,
    z: f64,
    a: f64,
    out: *mut f64,
) -> GcxStatus {
    guard(|| {
        let (b, gen, h) = (get(band, "band")?, get(generator, "generator")?, get(h, "h")?);
        out_ok(out, "out")?;
        *out = convexity::condition_gap(&b.0, &gen.0, &h.0, t, y, z, a)?;
        Ok(())
    })
}

/// Infimum of the gap over `a`. `argmin` is written only when `kind` is
/// [`GcxArgMin::Finite`]; otherwise `inf_gap` is `-inf`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gcx_reduce_over_a(
    band: *const GcxBand,
    generator: *const GcxGenerator,
    h: *const GcxFunction,
    t: f64,
    y: f64,
    z: f64,
    inf_gap: *mut f64,
    kind: *mut GcxArgMin,
    argmin: *mut f64,
) -> GcxStatus {
    guard(|| {
        let (b, gen, h) = (get(band, "band")?, get(generator, "generator")?, get(h, "h")?);
        out_ok(inf_gap, "inf_gap")?;
        out_ok(kind, "kind")?;
        out_ok(argmin, "argmin")?;
        let r = convexity::reduce_over_a(&b.0, &gen.0, &h.0, t, y, z)?;
        *inf_gap = r.inf_gap;
        *kind = match r.argmin {
            ArgMin::Finite(a) => {
                *argmin = a;
                GcxArgMin::Finite
            }
            ArgMin::PosInf => GcxArgMin::PosInf,
            ArgMin::NegInf => GcxArgMin::NegInf,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_check_g_convexity(
    band: *const GcxBand,
    generator: *const GcxGenerator,
    h: *const GcxFunction,
    scan: *const GcxScanSpec,
    out: *mut *mut GcxConvexityReport,
) -> GcxStatus {
    guard(|| {
        let (b, gen, h, s) = (get(band, "band")?, get(generator, "generator")?, get(h, "h")?, get(scan, "scan")?);
        out_ok(out, "out")?;
        let spec = ScanSpec { t: s.t, y_range: (s.y_min, s.y_max), z_range: (s.z_min, s.z_max), resolution: s.resolution };
        boxed(out, GcxConvexityReport(convexity::check_g_convexity(&b.0, &gen.0, &h.0, &spec)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_report_free(report: *mut GcxConvexityReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[no_mangle]
pub unsafe extern "C" fn gcx_report_verdict(report: *const GcxConvexityReport, out: *mut GcxVerdict) -> GcxStatus {
    guard(|| {
        let r = get(report, "report")?;
        out_ok(out, "out")?;
        *out = match r.0.verdict {
            Verdict::Holds => GcxVerdict::Holds,
            Verdict::Fails => GcxVerdict::Fails,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_report_min_gap(report: *const GcxConvexityReport, out: *mut f64) -> GcxStatus {
    guard(|| {
        let r = get(report, "report")?;
        out_ok(out, "out")?;
        *out = r.0.min_gap;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gcx_report_witness_count(report: *const GcxConvexityReport, out: *mut usize) -> GcxStatus {
    guard(|| {
        let r = get(report, "report")?;
        out_ok(out, "out")?;
        *out = r.0.witnesses.len();
        Ok(())
    })
}

/// Witness `index`, in the report's `(y, z)` order.
#[no_mangle]
pub unsafe extern "C" fn gcx_report_witness(
    report: *const GcxConvexityReport,
    index: usize,
    out: *mut GcxWitness,
) -> GcxStatus {
    guard(|| {
        let r = get(report, "report")?;
        out_ok(out, "out")?;
        let w = r.0.witnesses.get(index).ok_or_else(|| {
            Failure::new(GcxStatus::InvalidArgument, format!("witness {index} of {}", r.0.witnesses.len()))
        })?;
        *out = GcxWitness { y: w.y, z: w.z, a: w.a, gap: w.gap };
        Ok(())
    })
}

/// `E_{s,t}[h(φ)] − h(E_{s,t}[φ])` and its two sides.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gcx_jensen(
    band: *const GcxBand,
    generator: *const GcxGenerator,
    h: *const GcxFunction,
    phi: *const GcxFunction,
    s: f64,
    t: f64,
    grid: *const GcxGridSpec,
    out: *mut GcxJensen,
) -> GcxStatus {
    guard(|| {
        let (b, gen, h, phi) = (get(band, "band")?, get(generator, "generator")?, get(h, "h")?, get(phi, "phi")?);
        let spec = get(grid, "grid")?;
        out_ok(out, "out")?;
        let j = convexity::jensen_experiment(&b.0, &gen.0, &h.0, &phi.0, s, t, &grid_of(&b.0, spec)?)?;
        *out = GcxJensen { lhs: j.lhs, rhs: j.rhs, gap: j.gap };
        Ok(())
    })
}

