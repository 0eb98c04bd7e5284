//! C ABI for envelope-ml.
//!
//! Every fallible function returns an [`EmlStatus`]; on failure a message is
//! kept per thread and readable through [`eml_last_error_message`]. Objects
//! cross the boundary as opaque handles created by `*_generate`, `*_read_csv`,
//! `*_split` and `*_fit` functions and released by the matching `*_free`.
//! Class labels are [`EmlClass`] values; feature indices follow the canonical
//! order thickness, density, thermal conductivity, specific heat capacity,
//! solar, visual and thermal absorptance.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use envelope_ml::pipeline::{labeled_dataset, normalize};
use envelope_ml::{
    fit_lda, fit_pca, read_dataset, run_all, split, write_dataset, ClassLabel, Dataset, Error,
    LdaModel, PcaModel, RunConfig, SplitConfig, N_FEATURES,
};

/// Number of features in every row.
pub const EML_N_FEATURES: usize = 7;

const _: () = assert!(EML_N_FEATURES == N_FEATURES);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    Model = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmlClass {
    Low = 0,
    Medium = 1,
    High = 2,
    /// The row has no label.
    None = -1,
}

impl From<Option<ClassLabel>> for EmlClass {
    fn from(label: Option<ClassLabel>) -> Self {
        match label {
            Some(ClassLabel::Low) => EmlClass::Low,
            Some(ClassLabel::Medium) => EmlClass::Medium,
            Some(ClassLabel::High) => EmlClass::High,
            None => EmlClass::None,
        }
    }
}

/// A dataset of material rows.
pub struct EmlDataset {
    inner: Dataset,
}

/// A fitted principal-component model.
pub struct EmlPcaModel {
    inner: PcaModel,
}

/// A fitted LDA classifier and the feature columns it was trained on.
pub struct EmlLdaModel {
    inner: LdaModel,
    columns: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(EmlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => EmlStatus::Io,
            Error::Parse { .. } | Error::Format(_) | Error::Json(_) => EmlStatus::Parse,
            Error::InvalidArgument(_) | Error::Domain(_) => EmlStatus::InvalidArgument,
            Error::RejectionLimit { .. }
            | Error::NoConvergence { .. }
            | Error::NotPositiveDefinite { .. } => EmlStatus::Numerical,
            Error::Lda(_) => EmlStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

impl From<envelope_ml::pipeline::PipelineError> for Failure {
    fn from(e: envelope_ml::pipeline::PipelineError) -> Self {
        let message = e.to_string();
        let Failure(status, _) = Failure::from(e.source);
        Failure(status, message)
    }
}

fn null(what: &str) -> Failure {
    Failure(EmlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(EmlStatus::InvalidArgument, message.into())
}

/// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EmlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_last_error();
            EmlStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            EmlStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn eml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples `n_per_material` rows per built-in material with `seed`, attaches
/// surrogate loads and labels them with the default thresholds.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_generate(
    seed: u64,
    n_per_material: usize,
    out: *mut *mut EmlDataset,
) -> EmlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let mut cfg = RunConfig::default();
        cfg.sampler.seed = seed;
        cfg.sampler.n_per_material = n_per_material;
        let inner = labeled_dataset(&cfg)?;
        *out = boxed(EmlDataset { inner });
        Ok(())
    })
}

/// Reads a dataset CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_read_csv(
    path: *const c_char,
    out: *mut *mut EmlDataset,
) -> EmlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = path_arg(path, "path")?;
        *out = boxed(EmlDataset {
            inner: read_dataset(&path)?,
        });
        Ok(())
    })
}

/// Writes a dataset CSV.
///
/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_write_csv(
    dataset: *const EmlDataset,
    path: *const c_char,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        write_dataset(&d.inner, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of rows, or 0 for a NULL handle.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_len(dataset: *const EmlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Copies row `row`'s features into `out`, which holds `EML_N_FEATURES` values,
/// and its label into `label` (may be NULL).
///
/// # Safety
/// `dataset` must be a live handle; `out` must point to `EML_N_FEATURES`
/// writable doubles; `label` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_row(
    dataset: *const EmlDataset,
    row: usize,
    out: *mut f64,
    label: *mut EmlClass,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r =
            d.inner.rows.get(row).ok_or_else(|| {
                invalid(format!("row {row} outside a {}-row dataset", d.inner.len()))
            })?;
        ptr::copy_nonoverlapping(r.features.as_ptr(), out, N_FEATURES);
        if let Some(l) = label.as_mut() {
            *l = r.label.into();
        }
        Ok(())
    })
}

/// Row `row`'s thermal load in kWh/m2; fails if the row has none.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_load(
    dataset: *const EmlDataset,
    row: usize,
    out: *mut f64,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        let out = out_ptr(out, "out")?;
        let r =
            d.inner.rows.get(row).ok_or_else(|| {
                invalid(format!("row {row} outside a {}-row dataset", d.inner.len()))
            })?;
        *out = r
            .load
            .ok_or_else(|| invalid(format!("row {row} has no load")))?;
        Ok(())
    })
}

/// Stratified split of a labeled dataset into new train and test handles,
/// both z-score normalized with statistics of the training part when
/// `normalized` is true.
///
/// # Safety
/// `dataset` must be a live handle; `train` and `test` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_split(
    dataset: *const EmlDataset,
    train_fraction: f64,
    seed: u64,
    normalized: bool,
    train: *mut *mut EmlDataset,
    test: *mut *mut EmlDataset,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        let train = out_ptr(train, "train")?;
        let test = out_ptr(test, "test")?;
        let cfg = SplitConfig {
            train_fraction,
            seed,
            stratified: true,
        };
        cfg.validate()?;
        let parts = split(&d.inner, &cfg)?;
        let (tr, te) = if normalized {
            let (_, tr, te) = normalize(&parts.train, &parts.train, &parts.test)?;
            (tr, te)
        } else {
            (parts.train, parts.test)
        };
        *train = boxed(EmlDataset { inner: tr });
        *test = boxed(EmlDataset { inner: te });
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eml_dataset_free(dataset: *mut EmlDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Fits PCA on all seven columns of `dataset` (normalize it first).
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_pca_fit(
    dataset: *const EmlDataset,
    out: *mut *mut EmlPcaModel,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(EmlPcaModel {
            inner: fit_pca(&d.inner)?,
        });
        Ok(())
    })
}

/// Copies the explained-variance ratios, largest first, into `out`
/// (`EML_N_FEATURES` values).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `EML_N_FEATURES` doubles.
#[no_mangle]
pub unsafe extern "C" fn eml_pca_explained_variance_ratio(
    model: *const EmlPcaModel,
    out: *mut f64,
) -> EmlStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = &m.inner.explained_variance_ratio;
        ptr::copy_nonoverlapping(r.as_ptr(), out, r.len());
        Ok(())
    })
}

/// Signed loading of `feature` on 0-based `component`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_pca_loading(
    model: *const EmlPcaModel,
    feature: usize,
    component: usize,
    out: *mut f64,
) -> EmlStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let out = out_ptr(out, "out")?;
        let p = m.inner.loadings.len();
        if feature >= p || component >= p {
            return Err(invalid(format!(
                "feature {feature} / component {component} outside 0..{p}"
            )));
        }
        *out = m.inner.loadings[feature][component];
        Ok(())
    })
}

/// Writes the `k` feature indices with the largest |PC1 loading| into `out`.
///
/// # Safety
/// `model` must be a live handle; `out` must hold `k` writable values.
#[no_mangle]
pub unsafe extern "C" fn eml_pca_top_features(
    model: *const EmlPcaModel,
    k: usize,
    out: *mut usize,
) -> EmlStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let top = m.inner.top_features(k)?;
        for (i, f) in top.iter().enumerate() {
            *out.add(i) = f.index();
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eml_pca_free(model: *mut EmlPcaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn columns_arg(features: *const usize, n: usize) -> Result<Vec<usize>, Failure> {
    if features.is_null() {
        return Err(null("features"));
    }
    if n == 0 {
        return Err(invalid("at least one feature is required"));
    }
    let cols = std::slice::from_raw_parts(features, n).to_vec();
    if let Some(c) = cols.iter().find(|&&c| c >= N_FEATURES) {
        return Err(invalid(format!(
            "feature index {c} outside 0..{N_FEATURES}"
        )));
    }
    let mut sorted = cols.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cols.len() {
        return Err(invalid("feature indices must be distinct"));
    }
    Ok(cols)
}

/// Fits LDA on the labeled `dataset` using the `n_features` columns listed
/// in `features`.
///
/// # Safety
/// `dataset` must be a live handle; `features` must point to `n_features`
/// values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_lda_fit(
    dataset: *const EmlDataset,
    features: *const usize,
    n_features: usize,
    out: *mut *mut EmlLdaModel,
) -> EmlStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        let out = out_ptr(out, "out")?;
        let columns = columns_arg(features, n_features)?;
        let inner = fit_lda(&d.inner.feature_matrix(&columns), &d.inner.labels()?)?;
        *out = boxed(EmlLdaModel { inner, columns });
        Ok(())
    })
}

/// Predicts the class of one point given as the model's feature columns,
/// in the order passed to [`eml_lda_fit`].
///
/// # Safety
/// `model` must be a live handle; `x` must point to `n` values; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_lda_predict(
    model: *const EmlLdaModel,
    x: *const f64,
    n: usize,
    out: *mut EmlClass,
) -> EmlStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let out = out_ptr(out, "out")?;
        if x.is_null() {
            return Err(null("x"));
        }
        let label = m.inner.predict(std::slice::from_raw_parts(x, n))?;
        *out = Some(label).into();
        Ok(())
    })
}

/// Fraction of `dataset`'s labeled rows the model classifies correctly.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eml_lda_accuracy(
    model: *const EmlLdaModel,
    dataset: *const EmlDataset,
    out: *mut f64,
) -> EmlStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let d = handle(dataset, "dataset")?;
        let out = out_ptr(out, "out")?;
        *out = m
            .inner
            .accuracy(&d.inner.feature_matrix(&m.columns), &d.inner.labels()?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eml_lda_free(model: *mut EmlLdaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the whole pipeline with default settings and `seed`, writing every
/// output into `out_dir`. When `summary_json` is not NULL it receives the
/// run summary as a string to release with [`eml_string_free`].
///
/// # Safety
/// `out_dir` must be a NUL-terminated string; `summary_json` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn eml_run_pipeline(
    seed: u64,
    out_dir: *const c_char,
    summary_json: *mut *mut c_char,
) -> EmlStatus {
    guard(|| {
        let mut cfg = RunConfig::default();
        cfg.sampler.seed = seed;
        cfg.split.seed = seed;
        cfg.cv_seed = seed;
        cfg.out_dir = path_arg(out_dir, "out_dir")?;
        let summary = run_all(&cfg)?;
        if let Some(slot) = summary_json.as_mut() {
            let json = serde_json::to_string_pretty(&summary)
                .map_err(|e| Failure::from(Error::from(e)))?;
            *slot = CString::new(json)
                .map_err(|e| invalid(e.to_string()))?
                .into_raw();
        }
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
