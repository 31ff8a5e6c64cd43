//! C ABI for the `mdiqkd` key-rate library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_from_*` functions and released with the matching `*_free`. Every
//! fallible call returns an [`MdiqkdStatus`]; on failure a description is
//! available from [`mdiqkd_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mdiqkd::finite::Method;
use mdiqkd::optics::Role;
use mdiqkd::rate::{key_rate, KeyRatePoint};
use mdiqkd::scenario::{self, Scenario};
use mdiqkd::source::SourceSpec;
use mdiqkd::{Basis, Error, OpticsCache, SourceKind, YieldTable};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CutoffMismatch = 3,
    CutoffTooLarge = 4,
    DecoyFailure = 5,
    UndefinedErrorRate = 6,
    ConfigError = 7,
    Infeasible = 8,
    IoError = 9,
    InvalidUtf8 = 10,
    BufferTooSmall = 11,
    OutOfRange = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdSourceKind {
    Css = 0,
    NonidealCss = 1,
    Wcs = 2,
    Sps = 3,
    Vacuum = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdMethod {
    Asymptotic = 0,
    Standard = 1,
    Chernoff = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdBasis {
    Z = 0,
    X = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdRole {
    Correct = 0,
    Error = 1,
}

/// One row of a rate table.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiqkdRatePoint {
    pub distance_km: f64,
    pub method: MdiqkdMethod,
    pub mu1: f64,
    pub mu2: f64,
    pub q_z: f64,
    pub e_z: f64,
    pub y11_lower: f64,
    pub e11_upper: f64,
    pub rate: f64,
}

/// Precomputed beam-splitter outputs up to a photon cutoff.
pub struct MdiqkdOptics(OpticsCache);

/// Yields of every photon-number pair at one channel efficiency.
pub struct MdiqkdYieldTable(YieldTable);

/// A parsed run configuration.
pub struct MdiqkdScenario(Scenario);

/// Rows produced by a sweep or comparison.
pub struct MdiqkdRateTable {
    rows: Vec<(CString, KeyRatePoint)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(MdiqkdStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::Domain(_) => MdiqkdStatus::InvalidArgument,
            Error::CutoffMismatch { .. } => MdiqkdStatus::CutoffMismatch,
            Error::CutoffTooLarge { .. } => MdiqkdStatus::CutoffTooLarge,
            Error::Decoy(_) => MdiqkdStatus::DecoyFailure,
            Error::UndefinedErrorRate => MdiqkdStatus::UndefinedErrorRate,
            Error::Config { .. } => MdiqkdStatus::ConfigError,
            Error::Infeasible(_) => MdiqkdStatus::Infeasible,
            Error::Io(_) => MdiqkdStatus::IoError,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MdiqkdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdiqkdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdiqkdStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            MdiqkdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn boxed_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(MdiqkdStatus::InvalidUtf8, format!("{what}: {e}")))
}

impl From<MdiqkdMethod> for Method {
    fn from(m: MdiqkdMethod) -> Self {
        match m {
            MdiqkdMethod::Asymptotic => Method::Asymptotic,
            MdiqkdMethod::Standard => Method::Standard,
            MdiqkdMethod::Chernoff => Method::Chernoff,
        }
    }
}

impl From<Method> for MdiqkdMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Asymptotic => MdiqkdMethod::Asymptotic,
            Method::Standard => MdiqkdMethod::Standard,
            Method::Chernoff => MdiqkdMethod::Chernoff,
        }
    }
}

impl From<MdiqkdSourceKind> for SourceKind {
    fn from(k: MdiqkdSourceKind) -> Self {
        match k {
            MdiqkdSourceKind::Css => SourceKind::Css,
            MdiqkdSourceKind::NonidealCss => SourceKind::NonidealCss,
            MdiqkdSourceKind::Wcs => SourceKind::Wcs,
            MdiqkdSourceKind::Sps => SourceKind::Sps,
            MdiqkdSourceKind::Vacuum => SourceKind::Vacuum,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mdiqkd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mdiqkd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `probabilities` with `P(0..=N_max)` of a source.
///
/// `odd_weight` is read only for the contaminated CSS. When `capacity` is
/// too small, `*len` receives the required length and
/// `MDIQKD_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
///
/// `probabilities` must point to `capacity` writable doubles (or be NULL
/// when `capacity` is 0); `len` and `tail_mass` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_photon_distribution(
    kind: MdiqkdSourceKind,
    intensity: f64,
    odd_weight: f64,
    tail_tolerance: f64,
    probabilities: *mut f64,
    capacity: usize,
    len: *mut usize,
    tail_mass: *mut f64,
) -> MdiqkdStatus {
    guard(|| {
        let spec = match kind {
            MdiqkdSourceKind::NonidealCss => SourceSpec::nonideal_css(intensity, odd_weight),
            other => SourceSpec {
                kind: other.into(),
                intensity,
                odd_weight: 1.0,
            },
        };
        let dist = mdiqkd::build_distribution(&spec, tail_tolerance)?;
        let p = dist.probabilities();
        if !len.is_null() {
            len.write(p.len());
        }
        if !tail_mass.is_null() {
            tail_mass.write(dist.tail_mass());
        }
        if capacity < p.len() {
            return Err(Failure(
                MdiqkdStatus::BufferTooSmall,
                format!("need {} entries, got {capacity}", p.len()),
            ));
        }
        if probabilities.is_null() {
            return Err(null("probabilities"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), probabilities, p.len());
        Ok(())
    })
}

/// Secret key rate `max(0, Q11 (1 - H(e11)) - Q f H(E))`.
#[no_mangle]
pub extern "C" fn mdiqkd_key_rate(q11_z: f64, e11_x: f64, q_z: f64, e_z: f64, f: f64) -> f64 {
    key_rate(q11_z, e11_x, q_z, e_z, f)
}

/// # Safety
///
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_optics_new(
    cutoff: usize,
    out: *mut *mut MdiqkdOptics,
) -> MdiqkdStatus {
    guard(|| boxed_out(out, MdiqkdOptics(OpticsCache::new(cutoff)?)))
}

/// # Safety
///
/// `optics` must be NULL or a handle from `mdiqkd_optics_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_optics_free(optics: *mut MdiqkdOptics) {
    free(optics)
}

/// Yield table for per-arm channel efficiency `efficiency` and detector
/// dark-count probability `dark_count`.
///
/// # Safety
///
/// `optics` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_yield_table_new(
    optics: *const MdiqkdOptics,
    efficiency: f64,
    dark_count: f64,
    out: *mut *mut MdiqkdYieldTable,
) -> MdiqkdStatus {
    guard(|| {
        let cache = &deref(optics, "optics")?.0;
        let params = mdiqkd::DetectorParams::new(efficiency, dark_count)?;
        boxed_out(out, MdiqkdYieldTable(cache.yield_table(&params)?))
    })
}

/// # Safety
///
/// `table` must be NULL or a live yield-table handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_yield_table_free(table: *mut MdiqkdYieldTable) {
    free(table)
}

/// # Safety
///
/// `table` must be a live handle and `cutoff` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_yield_table_cutoff(
    table: *const MdiqkdYieldTable,
    cutoff: *mut usize,
) -> MdiqkdStatus {
    guard(|| write_out(cutoff, deref(table, "table")?.0.cutoff(), "cutoff"))
}

/// Yield of Alice sending `i` and Bob `j` photons.
///
/// # Safety
///
/// `table` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_yield_table_get(
    table: *const MdiqkdYieldTable,
    basis: MdiqkdBasis,
    role: MdiqkdRole,
    i: usize,
    j: usize,
    value: *mut f64,
) -> MdiqkdStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        if i > t.cutoff() || j > t.cutoff() {
            return Err(Failure(
                MdiqkdStatus::OutOfRange,
                format!("({i}, {j}) beyond cutoff {}", t.cutoff()),
            ));
        }
        let basis = match basis {
            MdiqkdBasis::Z => Basis::Z,
            MdiqkdBasis::X => Basis::X,
        };
        let role = match role {
            MdiqkdRole::Correct => Role::Correct,
            MdiqkdRole::Error => Role::Error,
        };
        write_out(value, t.get(basis, role, i, j), "value")
    })
}

/// Parses a configuration in the `key = value` format of the CLI.
///
/// # Safety
///
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_scenario_from_config(
    text: *const c_char,
    out: *mut *mut MdiqkdScenario,
) -> MdiqkdStatus {
    guard(|| {
        let text = read_str(text, "config text")?;
        boxed_out(out, MdiqkdScenario(scenario::parse_config(text)?))
    })
}

/// # Safety
///
/// `scenario` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_scenario_free(scenario: *mut MdiqkdScenario) {
    free(scenario)
}

/// Overrides the finite-key method and the pulse pairs per channel.
///
/// # Safety
///
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_scenario_set_finite_key(
    scenario: *mut MdiqkdScenario,
    method: MdiqkdMethod,
    pulse_pairs: f64,
) -> MdiqkdStatus {
    guard(|| {
        let s = &mut scenario.as_mut().ok_or_else(|| null("scenario"))?.0;
        s.finite.method = method.into();
        s.finite.pulse_pairs = pulse_pairs;
        s.finite.validate()?;
        Ok(())
    })
}

fn rate_table(label_rows: Vec<(String, KeyRatePoint)>) -> MdiqkdRateTable {
    MdiqkdRateTable {
        rows: label_rows
            .into_iter()
            .map(|(label, p)| (CString::new(label).unwrap_or_default(), p))
            .collect(),
    }
}

/// Sweeps the configured source over the distance grid.
///
/// # Safety
///
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_run_sweep(
    scenario: *const MdiqkdScenario,
    out: *mut *mut MdiqkdRateTable,
) -> MdiqkdStatus {
    guard(|| {
        let s = &deref(scenario, "scenario")?.0;
        let cache = s.optics()?;
        let label = s.source.label().to_string();
        let rows = scenario::run_sweep(s, &cache)?
            .into_iter()
            .map(|p| (label.clone(), p))
            .collect();
        boxed_out(out, rate_table(rows))
    })
}

/// Sweeps every comparison source over the distance grid.
///
/// # Safety
///
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_compare_sources(
    scenario: *const MdiqkdScenario,
    out: *mut *mut MdiqkdRateTable,
) -> MdiqkdStatus {
    guard(|| {
        let s = &deref(scenario, "scenario")?.0;
        let cache = s.optics()?;
        boxed_out(out, rate_table(scenario::compare_sources(s, &cache)?))
    })
}

/// # Safety
///
/// `table` must be NULL or a live rate-table handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_rate_table_free(table: *mut MdiqkdRateTable) {
    free(table)
}

/// Number of rows, or 0 for a NULL handle.
///
/// # Safety
///
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_rate_table_len(table: *const MdiqkdRateTable) -> usize {
    table.as_ref().map_or(0, |t| t.rows.len())
}

/// # Safety
///
/// `table` must be a live handle and `row` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_rate_table_row(
    table: *const MdiqkdRateTable,
    index: usize,
    row: *mut MdiqkdRatePoint,
) -> MdiqkdStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let (_, p) = t.rows.get(index).ok_or_else(|| {
            Failure(
                MdiqkdStatus::OutOfRange,
                format!("row {index} of {}", t.rows.len()),
            )
        })?;
        let point = MdiqkdRatePoint {
            distance_km: p.distance_km,
            method: p.method.into(),
            mu1: p.mu1,
            mu2: p.mu2,
            q_z: p.gains.q_z,
            e_z: p.qber_z(),
            y11_lower: p.y11_lower,
            e11_upper: p.e11_x,
            rate: p.rate,
        };
        write_out(row, point, "row")
    })
}

/// Source label of a row, or NULL when out of range. Owned by the table.
///
/// # Safety
///
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_rate_table_source(
    table: *const MdiqkdRateTable,
    index: usize,
) -> *const c_char {
    table
        .as_ref()
        .and_then(|t| t.rows.get(index))
        .map_or(ptr::null(), |(label, _)| label.as_ptr())
}

/// Writes the table as CSV in the CLI's format.
///
/// # Safety
///
/// `table` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_rate_table_write_csv(
    table: *const MdiqkdRateTable,
    path: *const c_char,
) -> MdiqkdStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let rows: Vec<(String, KeyRatePoint)> = t
            .rows
            .iter()
            .map(|(l, p)| (l.to_string_lossy().into_owned(), p.clone()))
            .collect();
        let mut buf = Vec::new();
        scenario::write_rates_csv(&mut buf, &rows)?;
        std::fs::write(&path, buf)
            .map_err(|e| Failure(MdiqkdStatus::IoError, format!("{}: {e}", path.display())))
    })
}
