//! C interface to `nftrec`.
//!
//! Every fallible function returns an [`NftrecStatus`]; on failure the
//! message is available from [`nftrec_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Outputs are written through pointer arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;

use nftrec::cli::{Recommender, RunConfig};
use nftrec::dataset::{build_dataset, ingest_transactions, Dataset};
use nftrec::evaluation::{ndcg_at_k, recall_at_k};
use nftrec::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NftrecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed or inconsistent input files or configuration.
    InputError = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Loaded interaction dataset.
pub struct NftrecDataset(Dataset);

/// Checkpoint restored against its run configuration.
pub struct NftrecRecommender(Recommender);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn fail(status: NftrecStatus, msg: impl Into<String>) -> NftrecStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> NftrecStatus {
    let status = match e {
        Error::InvalidArgument(_) => NftrecStatus::InvalidArgument,
        ref e if e.is_input_error() => NftrecStatus::InputError,
        _ => NftrecStatus::RuntimeError,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into `Panic` and clearing the last error on
/// success.
fn guard(f: impl FnOnce() -> NftrecStatus + UnwindSafe) -> NftrecStatus {
    match catch_unwind(f) {
        Ok(NftrecStatus::Ok) => {
            set_error("");
            NftrecStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(NftrecStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, NftrecStatus> {
    if p.is_null() {
        return Err(fail(NftrecStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(NftrecStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], NftrecStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(NftrecStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, NftrecStatus> {
    p.as_ref()
        .ok_or_else(|| fail(NftrecStatus::NullPointer, format!("{what} is null")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! out_ptr {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            return fail(NftrecStatus::NullPointer, concat!($what, " is null"));
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nftrec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread (empty after a success).
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nftrec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

type Metric = fn(&[usize], &[usize], usize) -> nftrec::Result<f64>;

unsafe fn metric(
    f: Metric,
    ranked: *const usize,
    ranked_len: usize,
    ground_truth: *const usize,
    ground_truth_len: usize,
    k: usize,
    out: *mut f64,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(out, "out");
        let r = tri!(slice_arg(ranked, ranked_len, "ranked"));
        let g = tri!(slice_arg(ground_truth, ground_truth_len, "ground_truth"));
        match f(r, g, k) {
            Ok(v) => {
                *out = v;
                NftrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Recall@k of a ranked item list against a ground-truth set.
///
/// # Safety
/// `ranked` and `ground_truth` must point to at least `*_len` readable
/// elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recall_at_k(
    ranked: *const usize,
    ranked_len: usize,
    ground_truth: *const usize,
    ground_truth_len: usize,
    k: usize,
    out: *mut f64,
) -> NftrecStatus {
    metric(recall_at_k, ranked, ranked_len, ground_truth, ground_truth_len, k, out)
}

/// NDCG@k with binary relevance.
///
/// # Safety
/// As for [`nftrec_recall_at_k`].
#[no_mangle]
pub unsafe extern "C" fn nftrec_ndcg_at_k(
    ranked: *const usize,
    ranked_len: usize,
    ground_truth: *const usize,
    ground_truth_len: usize,
    k: usize,
    out: *mut f64,
) -> NftrecStatus {
    metric(ndcg_at_k, ranked, ranked_len, ground_truth, ground_truth_len, k, out)
}

/// Ingests a transaction CSV, keeping items with at least `min_interactions`
/// distinct buyers.
///
/// # Safety
/// `csv_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_dataset_from_csv(
    csv_path: *const c_char,
    min_interactions: usize,
    out: *mut *mut NftrecDataset,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(out, "out");
        let path = tri!(str_arg(csv_path, "csv_path"));
        match ingest_transactions(path).and_then(|log| build_dataset(&log, min_interactions)) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(NftrecDataset(ds)));
                NftrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Loads a dataset file written by `nftrec ingest`.
///
/// # Safety
/// As for [`nftrec_dataset_from_csv`].
#[no_mangle]
pub unsafe extern "C" fn nftrec_dataset_load(path: *const c_char, out: *mut *mut NftrecDataset) -> NftrecStatus {
    guard(|| {
        out_ptr!(out, "out");
        let path = tri!(str_arg(path, "path"));
        match Dataset::load(path) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(NftrecDataset(ds)));
                NftrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes user, item and interaction counts; any output may be null.
///
/// # Safety
/// `dataset` must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_dataset_counts(
    dataset: *const NftrecDataset,
    num_users: *mut usize,
    num_items: *mut usize,
    num_interactions: *mut usize,
) -> NftrecStatus {
    guard(|| {
        let ds = &tri!(handle(dataset, "dataset")).0;
        for (p, v) in [
            (num_users, ds.num_users()),
            (num_items, ds.num_items()),
            (num_interactions, ds.num_interactions()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        NftrecStatus::Ok
    })
}

/// # Safety
/// `dataset` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn nftrec_dataset_free(dataset: *mut NftrecDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Restores `checkpoint_path` against the run configuration at
/// `config_path` (same dataset, split seed and feature files as training).
///
/// # Safety
/// Both paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_open(
    config_path: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut NftrecRecommender,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(out, "out");
        let cfg_path = tri!(str_arg(config_path, "config_path"));
        let ck_path = tri!(str_arg(checkpoint_path, "checkpoint_path"));
        match RunConfig::load(Path::new(cfg_path)).and_then(|cfg| Recommender::open(&cfg, Path::new(ck_path))) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(NftrecRecommender(r)));
                NftrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes user and item counts; either output may be null.
///
/// # Safety
/// `rec` must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_counts(
    rec: *const NftrecRecommender,
    num_users: *mut usize,
    num_items: *mut usize,
) -> NftrecStatus {
    guard(|| {
        let ds = tri!(handle(rec, "rec")).0.dataset();
        if !num_users.is_null() {
            *num_users = ds.num_users();
        }
        if !num_items.is_null() {
            *num_items = ds.num_items();
        }
        NftrecStatus::Ok
    })
}

/// Looks up the user index of a wallet address.
///
/// # Safety
/// `rec` must come from this library, `wallet` must be NUL-terminated and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_user_index(
    rec: *const NftrecRecommender,
    wallet: *const c_char,
    out: *mut usize,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(out, "out");
        let r = &tri!(handle(rec, "rec")).0;
        let w = tri!(str_arg(wallet, "wallet"));
        match r.dataset().user_index(w) {
            Some(u) => {
                *out = u;
                NftrecStatus::Ok
            }
            None => fail(NftrecStatus::InvalidArgument, format!("unknown user `{w}`")),
        }
    })
}

/// Copies the token id of item `item` into `buf` as a NUL-terminated string.
/// `*needed` receives the required size including the NUL; if `buf_len` is
/// smaller, nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `rec` must come from this library, `buf` writable for `buf_len` bytes
/// (may be null when `buf_len` is 0) and `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_item_token(
    rec: *const NftrecRecommender,
    item: usize,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(needed, "needed");
        let ds = tri!(handle(rec, "rec")).0.dataset();
        if item >= ds.num_items() {
            return fail(
                NftrecStatus::InvalidArgument,
                format!("item index {item} out of range for {} items", ds.num_items()),
            );
        }
        let token = ds.item_id(item).as_bytes();
        *needed = token.len() + 1;
        if buf_len < token.len() + 1 {
            return fail(NftrecStatus::BufferTooSmall, format!("token needs {} bytes", token.len() + 1));
        }
        out_ptr!(buf, "buf");
        std::ptr::copy_nonoverlapping(token.as_ptr(), buf.cast::<u8>(), token.len());
        *buf.add(token.len()) = 0;
        NftrecStatus::Ok
    })
}

/// Top-`k` items for user index `user`, excluding its train items, by
/// descending score. Writes up to `min(k, capacity)` results; `*written`
/// receives the count. `scores` may be null.
///
/// # Safety
/// `rec` must come from this library; `items` (and `scores` if non-null)
/// must be writable for `capacity` elements; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_recommend(
    rec: *const NftrecRecommender,
    user: usize,
    k: usize,
    items: *mut usize,
    scores: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> NftrecStatus {
    guard(|| {
        out_ptr!(written, "written");
        let r = &tri!(handle(rec, "rec")).0;
        let n = k.min(capacity);
        if n > 0 {
            out_ptr!(items, "items");
        }
        let top = match r.recommend(user, k) {
            Ok(t) => t,
            Err(e) => return from_error(e),
        };
        let n = n.min(top.len());
        for (slot, &(i, s)) in top.iter().take(n).enumerate() {
            *items.add(slot) = i;
            if !scores.is_null() {
                *scores.add(slot) = s;
            }
        }
        *written = n;
        NftrecStatus::Ok
    })
}

/// # Safety
/// `rec` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn nftrec_recommender_free(rec: *mut NftrecRecommender) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}
