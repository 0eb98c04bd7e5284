use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use envelope_ml_ffi::*;

fn last_error() -> String {
    let p = eml_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handles {
    data: *mut EmlDataset,
    train: *mut EmlDataset,
    test: *mut EmlDataset,
}

impl Handles {
    fn default_split() -> Self {
        let mut h = Handles {
            data: ptr::null_mut(),
            train: ptr::null_mut(),
            test: ptr::null_mut(),
        };
        unsafe {
            assert_eq!(eml_dataset_generate(42, 100, &mut h.data), EmlStatus::Ok);
            assert_eq!(
                eml_dataset_split(h.data, 0.35, 42, true, &mut h.train, &mut h.test),
                EmlStatus::Ok
            );
        }
        h
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            eml_dataset_free(self.data);
            eml_dataset_free(self.train);
            eml_dataset_free(self.test);
        }
    }
}

#[test]
fn generated_dataset_has_the_default_shape() {
    let h = Handles::default_split();
    unsafe {
        assert_eq!(eml_dataset_len(h.data), 600);
        assert_eq!(eml_dataset_len(h.train), 210);
        assert_eq!(eml_dataset_len(h.test), 390);
        let mut row = [0.0; EML_N_FEATURES];
        let mut label = EmlClass::None;
        assert_eq!(
            eml_dataset_row(h.data, 0, row.as_mut_ptr(), &mut label),
            EmlStatus::Ok
        );
        assert_eq!(row[0], 0.011799625642228539);
        assert_ne!(label, EmlClass::None);
        let mut load = 0.0;
        assert_eq!(eml_dataset_load(h.data, 0, &mut load), EmlStatus::Ok);
        assert!(load > 0.0);
        assert_eq!(
            eml_dataset_row(h.data, 600, row.as_mut_ptr(), ptr::null_mut()),
            EmlStatus::InvalidArgument
        );
        assert!(last_error().contains("row 600"));
        assert_eq!(eml_dataset_len(ptr::null()), 0);
    }
}

#[test]
fn pca_and_lda_through_handles_match_the_pipeline() {
    let h = Handles::default_split();
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut pca = ptr::null_mut();
        assert_eq!(eml_pca_fit(h.train, &mut pca), EmlStatus::Ok);
        let mut ratios = [0.0; EML_N_FEATURES];
        assert_eq!(
            eml_pca_explained_variance_ratio(pca, ratios.as_mut_ptr()),
            EmlStatus::Ok
        );
        assert!((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut top = [0usize; 4];
        assert_eq!(
            eml_pca_top_features(pca, 4, top.as_mut_ptr()),
            EmlStatus::Ok
        );
        let mut loading = 0.0;
        assert_eq!(eml_pca_loading(pca, top[0], 0, &mut loading), EmlStatus::Ok);
        assert!(loading.abs() > 0.0);
        assert_eq!(
            eml_pca_loading(pca, 7, 0, &mut loading),
            EmlStatus::InvalidArgument
        );

        let mut lda = ptr::null_mut();
        assert_eq!(
            eml_lda_fit(h.train, top.as_ptr(), 4, &mut lda),
            EmlStatus::Ok
        );
        let mut acc = 0.0;
        assert_eq!(eml_lda_accuracy(lda, h.test, &mut acc), EmlStatus::Ok);

        let mut json = ptr::null_mut();
        assert_eq!(eml_run_pipeline(42, dir.as_ptr(), &mut json), EmlStatus::Ok);
        let summary: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        eml_string_free(json);
        assert_eq!(
            summary["pca_selected"]["test_accuracy"].as_f64().unwrap(),
            acc
        );
        assert!(tmp.path().join("summary.json").exists());

        let mut x = [0.0; EML_N_FEATURES];
        assert_eq!(
            eml_dataset_row(h.test, 0, x.as_mut_ptr(), ptr::null_mut()),
            EmlStatus::Ok
        );
        let point: Vec<f64> = top.iter().map(|&c| x[c]).collect();
        let mut class = EmlClass::None;
        assert_eq!(
            eml_lda_predict(lda, point.as_ptr(), 4, &mut class),
            EmlStatus::Ok
        );
        assert_ne!(class, EmlClass::None);
        assert_eq!(
            eml_lda_predict(lda, point.as_ptr(), 3, &mut class),
            EmlStatus::Model
        );

        eml_lda_free(lda);
        eml_pca_free(pca);
    }
}

#[test]
fn errors_map_to_status_codes_with_messages() {
    let h = Handles::default_split();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            eml_dataset_generate(1, 10, ptr::null_mut()),
            EmlStatus::NullPointer
        );
        assert!(last_error().contains("out"));

        let missing = CString::new("/nonexistent/dir/data.csv").unwrap();
        assert_eq!(
            eml_dataset_read_csv(missing.as_ptr(), &mut out),
            EmlStatus::Io
        );
        assert!(last_error().contains("/nonexistent/dir/data.csv"));

        let tmp = tempfile::tempdir().unwrap();
        let bad = tmp.path().join("bad.csv");
        std::fs::write(&bad, "material_index,thickness\n0,1\n").unwrap();
        let bad_c = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(
            eml_dataset_read_csv(bad_c.as_ptr(), &mut out),
            EmlStatus::Parse
        );

        let dup = [1usize, 1];
        let mut lda = ptr::null_mut();
        assert_eq!(
            eml_lda_fit(h.train, dup.as_ptr(), 2, &mut lda),
            EmlStatus::InvalidArgument
        );
        assert!(last_error().contains("distinct"));

        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            eml_dataset_split(h.data, 1.5, 1, false, &mut a, &mut b),
            EmlStatus::InvalidArgument
        );

        // A success clears the message.
        assert_eq!(eml_dataset_generate(1, 2, &mut out), EmlStatus::Ok);
        assert!(eml_last_error_message().is_null());
        eml_dataset_free(out);

        // Freeing NULL is a no-op.
        eml_dataset_free(ptr::null_mut());
        eml_pca_free(ptr::null_mut());
        eml_lda_free(ptr::null_mut());
        eml_string_free(ptr::null_mut());
    }
}

#[test]
fn csv_round_trip_through_handles() {
    let h = Handles::default_split();
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("train.csv").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(eml_dataset_write_csv(h.train, path.as_ptr()), EmlStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(
            eml_dataset_read_csv(path.as_ptr(), &mut back),
            EmlStatus::Ok
        );
        assert_eq!(eml_dataset_len(back), 210);
        let (mut r1, mut r2) = ([0.0; EML_N_FEATURES], [0.0; EML_N_FEATURES]);
        for i in [0, 105, 209] {
            eml_dataset_row(h.train, i, r1.as_mut_ptr(), ptr::null_mut());
            eml_dataset_row(back, i, r2.as_mut_ptr(), ptr::null_mut());
            assert_eq!(r1, r2);
        }
        eml_dataset_free(back);
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(eml_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/api-<hash>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_the_generated_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/envelope_ml.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "eml_dataset_generate",
        "eml_pca_fit",
        "eml_lda_fit",
        "eml_run_pipeline",
        "eml_last_error_message",
        "typedef struct EmlDataset EmlDataset;",
        "EML_STATUS_OK = 0",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }

    let lib = target_dir().join("libenvelope_ml_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler found; only the header was checked");
        return;
    }
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with("rows=600 train=210 test=390 top="),
        "{stdout}"
    );
}
