//! C interface to `wentzell`.
//!
//! Every function returns a [`WzStatus`]; results come back through out
//! pointers. Handles are opaque and owned by the caller once returned. The
//! message for the last failure on the calling thread is available through
//! [`wz_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wentzell::boundary::WentzellData;
use wentzell::compare::{run_scenario, CompareError, Overrides};
use wentzell::io::{parse_function, parse_point, GraphDocument, IoError, Scenario};
use wentzell::resolvent::{hitting_transform, solve_resolvent, ResolventError};
use wentzell::sim::{mc_hitting_transform, mc_resolvent, Estimate, SimConfig, SimError, VertexScheme};

/// Status codes.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Unreadable or malformed input.
    Parse = 3,
    /// Well-formed input that breaks a graph or boundary-data invariant.
    Invariant = 4,
    /// Argument out of range.
    BadArgument = 5,
    BufferTooSmall = 6,
    /// Numerical failure such as a singular boundary system.
    Numerical = 7,
    Panic = 8,
}

/// A graph with its Wentzell data.
pub struct WzGraph {
    doc: GraphDocument,
    data: WentzellData,
}

/// Result of a scenario comparison.
pub struct WzReport {
    csv: CString,
    rows: usize,
    failed: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WzSimConfig {
    pub paths: u64,
    pub seed: u64,
    pub delta: f64,
    pub horizon: f64,
    /// 0 = exact vertex scheme, 1 = lattice.
    pub scheme: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WzEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(WzStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(WzStatus::BadArgument, msg.into())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let s = if e.is_invariant() { WzStatus::Invariant } else { WzStatus::Parse };
        Failure(s, e.to_string())
    }
}

impl From<wentzell::boundary::BoundaryError> for Failure {
    fn from(e: wentzell::boundary::BoundaryError) -> Self {
        Failure(WzStatus::Invariant, e.to_string())
    }
}

impl From<ResolventError> for Failure {
    fn from(e: ResolventError) -> Self {
        let s = match e {
            ResolventError::BadLambda(_) | ResolventError::VertexStart | ResolventError::Cemetery => {
                WzStatus::BadArgument
            }
            ResolventError::NonDecaying(_) | ResolventError::Discontinuous { .. } => WzStatus::Invariant,
            _ => WzStatus::Numerical,
        };
        Failure(s, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let s = match e {
            SimError::Graph(_) | SimError::Boundary(_) | SimError::NotInstantaneous(_) => WzStatus::Invariant,
            _ => WzStatus::BadArgument,
        };
        Failure(s, e.to_string())
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::Io(e) => e.into(),
            CompareError::Sim(e) => e.into(),
            CompareError::Resolvent(e) => e.into(),
            CompareError::Boundary(e) => e.into(),
            e @ CompareError::Row { .. } => Failure::arg(e.to_string()),
        }
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WzStatus::Ok
        }
        Ok(Err(Failure(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            WzStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(WzStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(WzStatus::InvalidUtf8, "string is not UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(WzStatus::NullPointer, "null handle".into()))
}

fn non_null<T>(p: *mut T) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(WzStatus::NullPointer, "null output pointer".into()))
    } else {
        Ok(())
    }
}

fn sim_config(c: &WzSimConfig) -> Result<SimConfig, Failure> {
    let scheme = match c.scheme {
        0 => VertexScheme::Exact,
        1 => VertexScheme::Lattice,
        s => return Err(Failure::arg(format!("unknown scheme {s}"))),
    };
    let paths = usize::try_from(c.paths).map_err(|_| Failure::arg("too many paths"))?;
    Ok(SimConfig::default()
        .with_paths(paths)
        .with_seed(c.seed)
        .with_delta(c.delta)
        .with_horizon(c.horizon)
        .with_scheme(scheme))
}

fn to_c(e: &Estimate) -> WzEstimate {
    WzEstimate {
        mean: e.mean,
        se: e.se,
        n: e.n as u64,
    }
}

fn graph_from_doc(doc: GraphDocument) -> Result<Box<WzGraph>, Failure> {
    let data = doc.data()?;
    Ok(Box::new(WzGraph { doc, data }))
}

/// Message for the last failure on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default simulation settings.
#[no_mangle]
pub extern "C" fn wz_sim_config_default() -> WzSimConfig {
    let d = SimConfig::default();
    WzSimConfig {
        paths: d.paths as u64,
        seed: d.seed,
        delta: d.delta,
        horizon: d.horizon,
        scheme: 0,
    }
}

/// Parse a graph file held in memory.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wz_graph_from_json(json: *const c_char, out: *mut *mut WzGraph) -> WzStatus {
    guard(|| {
        non_null(out)?;
        let g = graph_from_doc(GraphDocument::parse(text(json)?)?)?;
        *out = Box::into_raw(g);
        Ok(())
    })
}

/// Read a graph file from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wz_graph_read(path: *const c_char, out: *mut *mut WzGraph) -> WzStatus {
    guard(|| {
        non_null(out)?;
        let g = graph_from_doc(GraphDocument::read(Path::new(text(path)?))?)?;
        *out = Box::into_raw(g);
        Ok(())
    })
}

/// Release a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wz_graph_free(g: *mut WzGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex and edge counts.
///
/// # Safety
/// `g` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wz_graph_counts(
    g: *const WzGraph,
    vertices: *mut usize,
    external: *mut usize,
    internal: *mut usize,
) -> WzStatus {
    guard(|| {
        let g = &handle(g)?.doc.graph;
        non_null(vertices)?;
        non_null(external)?;
        non_null(internal)?;
        *vertices = g.vertex_count();
        *external = g.external_count();
        *internal = g.internal_count();
        Ok(())
    })
}

/// Hex SHA-256 of the canonical graph file, written with its NUL into
/// `buf` (65 bytes).
///
/// # Safety
/// `g` must be a live handle and `buf` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wz_graph_hash(g: *const WzGraph, buf: *mut c_char, len: usize) -> WzStatus {
    guard(|| {
        let h = handle(g)?.doc.hash();
        non_null(buf)?;
        if len < h.len() + 1 {
            return Err(Failure(WzStatus::BufferTooSmall, format!("need {} bytes", h.len() + 1)));
        }
        ptr::copy_nonoverlapping(h.as_ptr().cast::<c_char>(), buf, h.len());
        *buf.add(h.len()) = 0;
        Ok(())
    })
}

/// `R_λf` at `point` (`vertex` or `edge@x`). `f` is a function spec such as
/// `one`, `exp:0.5` or `vertex:1,0;2`.
///
/// # Safety
/// `g` must be a live handle, the strings NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wz_resolvent(
    g: *const WzGraph,
    lambda: f64,
    f: *const c_char,
    point: *const c_char,
    out: *mut f64,
) -> WzStatus {
    guard(|| {
        let h = handle(g)?;
        non_null(out)?;
        let g = &h.doc.graph;
        let func = parse_function(g, text(f)?, None)?;
        let p = parse_point(g, text(point)?)?;
        *out = solve_resolvent(g, &h.data, lambda, &func)?.at(p);
        Ok(())
    })
}

/// `E[e^{−λH}; X(H) = v]` for every vertex v, from an interior point.
/// `out` holds one entry per vertex.
///
/// # Safety
/// `g` must be a live handle, `point` NUL-terminated, `out` valid for `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn wz_hitting_transform(
    g: *const WzGraph,
    point: *const c_char,
    lambda: f64,
    out: *mut f64,
    len: usize,
) -> WzStatus {
    guard(|| {
        let g = &handle(g)?.doc.graph;
        non_null(out)?;
        if len < g.vertex_count() {
            return Err(Failure(WzStatus::BufferTooSmall, format!("need {} entries", g.vertex_count())));
        }
        let h = hitting_transform(g, parse_point(g, text(point)?)?, lambda)?;
        ptr::copy_nonoverlapping(h.as_ptr(), out, h.len());
        Ok(())
    })
}

/// Monte Carlo version of [`wz_hitting_transform`].
///
/// # Safety
/// As for [`wz_hitting_transform`]; `cfg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wz_mc_hitting_transform(
    g: *const WzGraph,
    point: *const c_char,
    lambda: f64,
    cfg: *const WzSimConfig,
    out: *mut WzEstimate,
    len: usize,
) -> WzStatus {
    guard(|| {
        let h = handle(g)?;
        let cfg = sim_config(handle(cfg)?)?;
        non_null(out)?;
        let g = &h.doc.graph;
        if len < g.vertex_count() {
            return Err(Failure(WzStatus::BufferTooSmall, format!("need {} entries", g.vertex_count())));
        }
        let est = mc_hitting_transform(g, &h.data, parse_point(g, text(point)?)?, lambda, &cfg)?;
        for (k, e) in est.iter().enumerate() {
            *out.add(k) = to_c(e);
        }
        Ok(())
    })
}

/// Monte Carlo version of [`wz_resolvent`].
///
/// # Safety
/// As for [`wz_resolvent`]; `cfg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wz_mc_resolvent(
    g: *const WzGraph,
    lambda: f64,
    f: *const c_char,
    point: *const c_char,
    cfg: *const WzSimConfig,
    out: *mut WzEstimate,
) -> WzStatus {
    guard(|| {
        let h = handle(g)?;
        let cfg = sim_config(handle(cfg)?)?;
        non_null(out)?;
        let g = &h.doc.graph;
        let func = parse_function(g, text(f)?, None)?;
        let p = parse_point(g, text(point)?)?;
        *out = to_c(&mc_resolvent(g, &h.data, p, lambda, &func, &cfg)?);
        Ok(())
    })
}

/// Run a scenario (JSON text) against `g`. The scenario's own `graph` entry
/// is ignored.
///
/// # Safety
/// `g` must be a live handle, `scenario` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wz_compare(
    g: *const WzGraph,
    scenario: *const c_char,
    out: *mut *mut WzReport,
) -> WzStatus {
    guard(|| {
        let h = handle(g)?;
        non_null(out)?;
        let s = Scenario::parse(text(scenario)?)?;
        let r = run_scenario(&h.doc, &s, None, &Overrides::default())?;
        let failed = r.rows.iter().filter(|row| !row.pass).count();
        let csv = CString::new(r.to_csv()).map_err(|_| Failure::arg("report contains NUL"))?;
        *out = Box::into_raw(Box::new(WzReport {
            csv,
            rows: r.rows.len(),
            failed,
        }));
        Ok(())
    })
}

/// Row and failure counts of a report.
///
/// # Safety
/// `r` must be a live report; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wz_report_counts(r: *const WzReport, rows: *mut usize, failed: *mut usize) -> WzStatus {
    guard(|| {
        let r = handle(r)?;
        non_null(rows)?;
        non_null(failed)?;
        *rows = r.rows;
        *failed = r.failed;
        Ok(())
    })
}

/// The report as CSV. The string lives as long as the report.
///
/// # Safety
/// `r` must be a live report.
#[no_mangle]
pub unsafe extern "C" fn wz_report_csv(r: *const WzReport) -> *const c_char {
    match r.as_ref() {
        Some(r) => r.csv.as_ptr(),
        None => ptr::null(),
    }
}

/// Release a report. Null is ignored.
///
/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wz_report_free(r: *mut WzReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
