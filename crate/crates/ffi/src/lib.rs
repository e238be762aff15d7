//! C ABI over the `coplan` crate.
//!
//! Objects cross the boundary as opaque handles created by `*_parse` or
//! `coplan_*` constructors and released with the matching `*_free`. Every
//! fallible function returns a [`CoplanStatus`]; on failure
//! [`coplan_last_error`] describes the problem. Strings handed out by the
//! library are NUL-terminated UTF-8 and must be released with
//! [`coplan_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use coplan::catalog::{self, Catalog};
use coplan::info_model::{AttributeRef, InfoModel};
use coplan::kernel::{self, RunOptions};
use coplan::recommender::{self, MatchRequest, Weights};
use coplan::scenario::Scenario;
use coplan::taxonomy::Taxonomy;
use coplan::triple_store::{self, Store};
use coplan::units::UnitTable;
use coplan::validator::{self, ValidationReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoplanStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotFound = 4,
    RunError = 5,
    Panic = 6,
}

pub struct CoplanCatalog(Catalog);
pub struct CoplanModel(InfoModel);
pub struct CoplanScenario(Scenario);
pub struct CoplanStore(Store);
pub struct CoplanReport(ValidationReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(CoplanStatus, String);

type Result<T> = std::result::Result<T, Failure>;

fn fail<E: std::fmt::Display>(status: CoplanStatus) -> impl FnOnce(E) -> Failure {
    move |e| Failure(status, e.to_string())
}

/// Runs `body`, records any failure and maps it to a status.
fn guard(body: impl FnOnce() -> Result<()>) -> CoplanStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CoplanStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CoplanStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str> {
    if p.is_null() {
        return Err(Failure(
            CoplanStatus::NullArgument,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            CoplanStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(CoplanStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<()> {
    if out.is_null() {
        return Err(Failure(
            CoplanStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<()> {
    if out.is_null() {
        return Err(Failure(
            CoplanStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    let c = CString::new(s).map_err(fail(CoplanStatus::InvalidUtf8))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn coplan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn coplan_catalog_parse(
    source: *const c_char,
    out: *mut *mut CoplanCatalog,
) -> CoplanStatus {
    guard(|| {
        let c = Catalog::parse(text(source, "source")?, UnitTable::builtin())
            .map_err(fail(CoplanStatus::ParseError))?;
        put(out, CoplanCatalog(c))
    })
}

/// Number of components, 0 for null.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coplan_catalog_len(catalog: *const CoplanCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.components.len())
}

/// Meta description (JSON) of one component.
///
/// # Safety
/// Handles must be live; `id` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_catalog_export_meta(
    catalog: *const CoplanCatalog,
    id: *const c_char,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| {
        let cat = handle(catalog, "catalog")?;
        let id = text(id, "id")?;
        let comp = cat
            .0
            .component(id)
            .ok_or_else(|| Failure(CoplanStatus::NotFound, format!("unknown component {id:?}")))?;
        put_string(out, catalog::export_meta(comp))
    })
}

/// # Safety
/// `catalog` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_catalog_free(catalog: *mut CoplanCatalog) {
    release(catalog)
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn coplan_model_parse(
    source: *const c_char,
    out: *mut *mut CoplanModel,
) -> CoplanStatus {
    guard(|| {
        let m = InfoModel::parse(text(source, "source")?, UnitTable::builtin())
            .map_err(fail(CoplanStatus::ParseError))?;
        put(out, CoplanModel(m))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_model_free(model: *mut CoplanModel) {
    release(model)
}

/// Ranked candidates for `attribute` (`object.attribute`) under default
/// weights, one `score,component,variable,unit,topic,range,factor` line each.
/// `taxonomy` may be null.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_recommend(
    model: *const CoplanModel,
    catalog: *const CoplanCatalog,
    taxonomy: *const c_char,
    attribute: *const c_char,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let cat = &handle(catalog, "catalog")?.0;
        let tax = if taxonomy.is_null() {
            Taxonomy::new()
        } else {
            Taxonomy::parse(text(taxonomy, "taxonomy")?).map_err(fail(CoplanStatus::ParseError))?
        };
        let attr = text(attribute, "attribute")?;
        let r = AttributeRef::parse(attr).ok_or_else(|| {
            Failure(
                CoplanStatus::ParseError,
                format!("{attr:?} is not object.attribute"),
            )
        })?;
        let request = MatchRequest::for_attribute(model, &r, Weights::default())
            .map_err(fail(CoplanStatus::NotFound))?;
        let recs = recommender::recommend(&request, model, cat, &tax)
            .map_err(fail(CoplanStatus::NotFound))?;
        put_string(out, recs.iter().map(|r| r.report_line() + "\n").collect())
    })
}

/// # Safety
/// `source` NUL-terminated; `catalog` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_scenario_parse(
    source: *const c_char,
    catalog: *const CoplanCatalog,
    out: *mut *mut CoplanScenario,
) -> CoplanStatus {
    guard(|| {
        let cat = handle(catalog, "catalog")?;
        let s = Scenario::parse(text(source, "source")?, &cat.0)
            .map_err(fail(CoplanStatus::ParseError))?;
        put(out, CoplanScenario(s))
    })
}

/// The scenario in its text format.
///
/// # Safety
/// `scenario` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_scenario_to_text(
    scenario: *const CoplanScenario,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| put_string(out, handle(scenario, "scenario")?.0.to_text()))
}

/// The scenario projected to N-Triples.
///
/// # Safety
/// `scenario` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_scenario_to_ntriples(
    scenario: *const CoplanScenario,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| {
        let store: Store = handle(scenario, "scenario")?
            .0
            .to_triples()
            .into_iter()
            .collect();
        put_string(out, triple_store::serialize(&store))
    })
}

/// A copy of `scenario` with missing unit transforms inserted.
///
/// # Safety
/// Handles live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_autofix(
    scenario: *const CoplanScenario,
    catalog: *const CoplanCatalog,
    out: *mut *mut CoplanScenario,
) -> CoplanStatus {
    guard(|| {
        let fixed = validator::autofix_units(
            &handle(scenario, "scenario")?.0,
            &handle(catalog, "catalog")?.0,
        );
        put(out, CoplanScenario(fixed))
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_scenario_free(scenario: *mut CoplanScenario) {
    release(scenario)
}

/// Validates a scenario; `model` may be null (no coverage check).
///
/// # Safety
/// Handles live or null where allowed; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_validate(
    scenario: *const CoplanScenario,
    catalog: *const CoplanCatalog,
    model: *const CoplanModel,
    out: *mut *mut CoplanReport,
) -> CoplanStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.0;
        let c = &handle(catalog, "catalog")?.0;
        let report = validator::validate(s, c, model.as_ref().map(|m| &m.0), None);
        put(out, CoplanReport(report))
    })
}

/// # Safety
/// `report` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn coplan_report_passed(report: *const CoplanReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.passed)
}

/// # Safety
/// `report` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn coplan_report_len(report: *const CoplanReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.findings.len())
}

/// Finding `index` as `severity code location message`.
///
/// # Safety
/// `report` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_report_finding(
    report: *const CoplanReport,
    index: usize,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let f =
            r.0.findings
                .get(index)
                .ok_or_else(|| Failure(CoplanStatus::NotFound, format!("no finding {index}")))?;
        put_string(out, f.line())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_report_free(report: *mut CoplanReport) {
    release(report)
}

/// Runs the scenario and returns the sample log as CSV. `model` and
/// `base_dir` may be null.
///
/// # Safety
/// Handles live or null where allowed; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_run(
    scenario: *const CoplanScenario,
    catalog: *const CoplanCatalog,
    model: *const CoplanModel,
    duration_s: u64,
    base_dir: *const c_char,
    out_csv: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| {
        let mut options = RunOptions::new(duration_s);
        if !base_dir.is_null() {
            options.base_dir = PathBuf::from(text(base_dir, "base_dir")?);
        }
        let result = kernel::run(
            &handle(scenario, "scenario")?.0,
            &handle(catalog, "catalog")?.0,
            &options,
            model.as_ref().map(|m| &m.0),
        )
        .map_err(fail(CoplanStatus::RunError))?;
        put_string(out_csv, result.to_csv())
    })
}

/// # Safety
/// `source` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_store_parse(
    source: *const c_char,
    out: *mut *mut CoplanStore,
) -> CoplanStatus {
    guard(|| {
        let s =
            triple_store::parse(text(source, "source")?).map_err(fail(CoplanStatus::ParseError))?;
        put(out, CoplanStore(s))
    })
}

/// # Safety
/// `store` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn coplan_store_len(store: *const CoplanStore) -> usize {
    store.as_ref().map_or(0, |s| s.0.len())
}

/// Canonical N-Triples text.
///
/// # Safety
/// `store` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coplan_store_serialize(
    store: *const CoplanStore,
    out: *mut *mut c_char,
) -> CoplanStatus {
    guard(|| put_string(out, triple_store::serialize(&handle(store, "store")?.0)))
}

/// # Safety
/// `store` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coplan_store_free(store: *mut CoplanStore) {
    release(store)
}
