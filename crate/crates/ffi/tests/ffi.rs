use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nftrec_ffi::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(nftrec_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn metrics_match_core() {
    let ranked = [7usize, 3, 9, 1];
    let gt = [7usize, 9];
    let mut v = 0.0;
    let s = unsafe { nftrec_ndcg_at_k(ranked.as_ptr(), 4, gt.as_ptr(), 2, 10, &mut v) };
    assert_eq!(s, NftrecStatus::Ok);
    assert!((v - 0.919721).abs() < 1e-6);
    assert_eq!(last_error(), "");
    let s = unsafe { nftrec_recall_at_k(ranked.as_ptr(), 4, gt.as_ptr(), 2, 1, &mut v) };
    assert_eq!(s, NftrecStatus::Ok);
    assert_eq!(v, 0.5);
}

#[test]
fn metric_errors_set_last_error() {
    let ranked = [1usize];
    let mut v = -1.0;
    let s = unsafe { nftrec_recall_at_k(ranked.as_ptr(), 1, ptr::null(), 0, 5, &mut v) };
    assert_eq!(s, NftrecStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(v, -1.0, "output untouched on failure");
    let s = unsafe { nftrec_recall_at_k(ptr::null(), 3, ranked.as_ptr(), 1, 5, &mut v) };
    assert_eq!(s, NftrecStatus::NullPointer);
    assert!(last_error().contains("ranked"));
    let s = unsafe { nftrec_ndcg_at_k(ranked.as_ptr(), 1, ranked.as_ptr(), 1, 5, ptr::null_mut()) };
    assert_eq!(s, NftrecStatus::NullPointer);
}

#[test]
fn dataset_handle_lifecycle() {
    let mut ds = ptr::null_mut();
    let path = cstr(&fixture("overfit.csv"));
    assert_eq!(unsafe { nftrec_dataset_from_csv(path.as_ptr(), 1, &mut ds) }, NftrecStatus::Ok);
    let (mut u, mut i, mut n) = (0, 0, 0);
    assert_eq!(unsafe { nftrec_dataset_counts(ds, &mut u, &mut i, &mut n) }, NftrecStatus::Ok);
    assert_eq!((u, i, n), (5, 8, 9));
    unsafe { nftrec_dataset_free(ds) };
    unsafe { nftrec_dataset_free(ptr::null_mut()) };

    let bad = cstr(&fixture("bad_price.csv"));
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { nftrec_dataset_from_csv(bad.as_ptr(), 1, &mut ds) }, NftrecStatus::InputError);
    assert!(ds.is_null());
    assert!(last_error().contains("bad_price.csv:3"), "{}", last_error());
    assert_eq!(
        unsafe { nftrec_dataset_counts(ptr::null(), &mut u, ptr::null_mut(), ptr::null_mut()) },
        NftrecStatus::NullPointer
    );
}

fn train_checkpoint(dir: &Path) -> (CString, CString) {
    let cfg = serde_json::json!({
        "dataset": fixture("market.csv"),
        "features": {"img": fixture("market_img.fmf"), "txt": fixture("market_txt.fmf"),
                     "price": fixture("market_price.fmf")},
        "price_dim": 4,
        "model": {"embedding_dim": 8, "layers": 2, "variant": "all", "mlp_hidden": [16]},
        "train": {"epochs": 3, "batch_size": 64, "lr": 0.01, "eval_every": 0},
        "seed": 5,
        "out": dir.join("run"),
    });
    let cfg_path = dir.join("run.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = nftrec::cli::run(["nftrec", "train", "--config", cfg_path.to_str().unwrap()], &mut o, &mut e);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&e));
    (cstr(&cfg_path), cstr(&dir.join("run/model.json")))
}

#[test]
fn recommender_matches_core() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ck) = train_checkpoint(dir.path());
    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { nftrec_recommender_open(cfg.as_ptr(), ck.as_ptr(), &mut rec) }, NftrecStatus::Ok);

    let wallet = CString::new(format!("0x{:040x}", 3)).unwrap();
    let mut u = usize::MAX;
    assert_eq!(unsafe { nftrec_recommender_user_index(rec, wallet.as_ptr(), &mut u) }, NftrecStatus::Ok);

    let mut items = [usize::MAX; 8];
    let mut scores = [0.0; 8];
    let mut written = 0;
    let s = unsafe { nftrec_recommender_recommend(rec, u, 5, items.as_mut_ptr(), scores.as_mut_ptr(), 8, &mut written) };
    assert_eq!(s, NftrecStatus::Ok);
    assert_eq!(written, 5);

    let core = nftrec::cli::Recommender::open(
        &nftrec::cli::RunConfig::load(Path::new(cfg.to_str().unwrap())).unwrap(),
        Path::new(ck.to_str().unwrap()),
    )
    .unwrap();
    let expected = core.recommend(u, 5).unwrap();
    for (slot, &(i, sc)) in expected.iter().enumerate() {
        assert_eq!(items[slot], i);
        assert_eq!(scores[slot], sc);
    }
    assert!(items[5..].iter().all(|&i| i == usize::MAX));

    // capacity smaller than k truncates; scores may be null
    let s = unsafe { nftrec_recommender_recommend(rec, u, 5, items.as_mut_ptr(), ptr::null_mut(), 2, &mut written) };
    assert_eq!((s, written), (NftrecStatus::Ok, 2));

    let mut needed = 0;
    let s = unsafe { nftrec_recommender_item_token(rec, items[0], ptr::null_mut(), 0, &mut needed) };
    assert_eq!(s, NftrecStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; needed];
    let s = unsafe { nftrec_recommender_item_token(rec, items[0], buf.as_mut_ptr(), needed, &mut needed) };
    assert_eq!(s, NftrecStatus::Ok);
    let token = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(token, core.dataset().item_id(items[0]));

    let unknown = CString::new("0xnobody").unwrap();
    assert_eq!(
        unsafe { nftrec_recommender_user_index(rec, unknown.as_ptr(), &mut u) },
        NftrecStatus::InvalidArgument
    );
    let (mut nu, mut ni) = (0, 0);
    assert_eq!(unsafe { nftrec_recommender_counts(rec, &mut nu, &mut ni) }, NftrecStatus::Ok);
    assert_eq!(
        unsafe { nftrec_recommender_recommend(rec, nu, 5, items.as_mut_ptr(), ptr::null_mut(), 8, &mut written) },
        NftrecStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nftrec_recommender_item_token(rec, ni, buf.as_mut_ptr(), buf.len(), &mut needed) },
        NftrecStatus::InvalidArgument
    );
    unsafe { nftrec_recommender_free(rec) };
}

#[test]
fn missing_checkpoint_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = train_checkpoint(dir.path());
    let missing = cstr(&dir.path().join("nope.json"));
    let mut rec = ptr::null_mut();
    assert_eq!(
        unsafe { nftrec_recommender_open(cfg.as_ptr(), missing.as_ptr(), &mut rec) },
        NftrecStatus::InputError
    );
    assert!(rec.is_null());
    assert!(last_error().contains("nope.json"));
}

#[test]
fn last_error_is_per_thread() {
    let mut v = 0.0;
    let s = unsafe { nftrec_recall_at_k(ptr::null(), 1, ptr::null(), 1, 1, &mut v) };
    assert_eq!(s, NftrecStatus::NullPointer);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(nftrec_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static
/// library. Skipped when no C compiler is on the path.
#[test]
fn c_program_links_against_header() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = lib_dir.join("libnftrec_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no cc or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "nftrec.h"

int main(int argc, char **argv) {
    size_t ranked[] = {7, 3, 9, 1};
    size_t gt[] = {7, 9};
    double v = 0;
    if (nftrec_ndcg_at_k(ranked, 4, gt, 2, 10, &v) != NFTREC_STATUS_OK) return 1;
    if (fabs(v - 0.919721) > 1e-6) return 2;
    if (nftrec_recall_at_k(ranked, 4, NULL, 0, 10, &v) != NFTREC_STATUS_INVALID_ARGUMENT) return 3;
    if (strlen(nftrec_last_error()) == 0) return 4;
    NftrecDataset *ds = NULL;
    if (nftrec_dataset_from_csv(argv[1], 1, &ds) != NFTREC_STATUS_OK) return 5;
    size_t users = 0, items = 0;
    if (nftrec_dataset_counts(ds, &users, &items, NULL) != NFTREC_STATUS_OK) return 6;
    nftrec_dataset_free(ds);
    printf("%zu %zu %s\n", users, items, nftrec_version());
    return argc == 2 ? 0 : 7;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).arg(fixture("overfit.csv")).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("5 8 {}", env!("CARGO_PKG_VERSION")));
}
