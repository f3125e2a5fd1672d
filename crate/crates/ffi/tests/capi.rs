use std::ffi::{CStr, CString};
use std::ptr;

use bnmtf_ffi::*;

fn last_error() -> String {
    let p = bnmtf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn toy(rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|i| 1.0 + ((i * 7) % 5) as f64).collect()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(bnmtf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn fit_predict_quality_roundtrip() {
    let (rows, cols) = (6, 5);
    let values = toy(rows, cols);
    let mut mask = vec![1u8; rows * cols];
    mask[3] = 0;
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(bnmtf_matrix_new(values.as_ptr(), mask.as_ptr(), rows, cols, &mut m), BnmtfStatus::Ok);
        let (mut r, mut c) = (0, 0);
        assert_eq!(bnmtf_matrix_shape(m, &mut r, &mut c), BnmtfStatus::Ok);
        assert_eq!((r, c), (rows, cols));

        let mut opts = std::mem::zeroed::<BnmtfFitOptions>();
        assert_eq!(bnmtf_fit_options_default(&mut opts), BnmtfStatus::Ok);
        opts.k = 2;
        opts.iterations = 50;
        opts.seed = 3;
        let mut f = ptr::null_mut();
        assert_eq!(bnmtf_fit(m, &opts, &mut f), BnmtfStatus::Ok);

        let mut pred = vec![0.0; rows * cols];
        assert_eq!(bnmtf_fit_predict(f, pred.as_mut_ptr(), pred.len()), BnmtfStatus::Ok);
        assert!(pred.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(bnmtf_fit_predict(f, pred.as_mut_ptr(), 3), BnmtfStatus::BufferSize);

        let mut q = BnmtfQuality::default();
        assert_eq!(bnmtf_fit_quality(f, m, &mut q), BnmtfStatus::Ok);
        assert!(q.has_elbo && q.elbo.is_finite());
        assert_eq!(q.k_free, 2 * (rows + cols));

        let mut n = 0;
        assert_eq!(bnmtf_fit_trace_len(f, &mut n), BnmtfStatus::Ok);
        let mut mse = vec![0.0; n];
        let mut elbo = vec![0.0; n];
        assert_eq!(bnmtf_fit_trace_mse(f, mse.as_mut_ptr(), n), BnmtfStatus::Ok);
        assert_eq!(bnmtf_fit_trace_elbo(f, elbo.as_mut_ptr(), n), BnmtfStatus::Ok);
        assert!(elbo.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs()));
        assert!((mse.last().unwrap() - q.mse).abs() <= 1e-9 * q.mse);

        let mut tau = 0.0;
        assert_eq!(bnmtf_fit_tau(f, &mut tau), BnmtfStatus::Ok);
        assert!(tau > 0.0);
        bnmtf_fit_free(f);
        bnmtf_matrix_free(m);
    }
}

#[test]
fn same_seed_same_prediction() {
    let values = toy(5, 4);
    let run = |engine: BnmtfEngine| unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(bnmtf_matrix_new(values.as_ptr(), ptr::null(), 5, 4, &mut m), BnmtfStatus::Ok);
        let mut opts = std::mem::zeroed::<BnmtfFitOptions>();
        bnmtf_fit_options_default(&mut opts);
        opts.engine = engine as u32;
        opts.k = 2;
        opts.l = 2;
        opts.iterations = 40;
        opts.seed = 11;
        let mut f = ptr::null_mut();
        assert_eq!(bnmtf_fit(m, &opts, &mut f), BnmtfStatus::Ok, "{}", last_error());
        let mut pred = vec![0.0; 20];
        bnmtf_fit_predict(f, pred.as_mut_ptr(), 20);
        bnmtf_fit_free(f);
        bnmtf_matrix_free(m);
        pred
    };
    for e in [BnmtfEngine::Gibbs, BnmtfEngine::Vb, BnmtfEngine::Icm, BnmtfEngine::Np] {
        assert_eq!(run(e), run(e));
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(bnmtf_matrix_new(ptr::null(), ptr::null(), 2, 2, &mut m), BnmtfStatus::NullPointer);
        assert!(last_error().contains("values"));
        assert!(m.is_null());

        let values = [1.0, 2.0, 3.0, 4.0];
        let mask = [0u8; 4];
        assert_eq!(bnmtf_matrix_new(values.as_ptr(), mask.as_ptr(), 2, 2, &mut m), BnmtfStatus::NoObservations);
        assert_eq!(bnmtf_matrix_new(values.as_ptr(), ptr::null(), 0, 2, &mut m), BnmtfStatus::Shape);

        assert_eq!(bnmtf_matrix_new(values.as_ptr(), ptr::null(), 2, 2, &mut m), BnmtfStatus::Ok);
        assert!(bnmtf_last_error_message().is_null());
        let mut opts = std::mem::zeroed::<BnmtfFitOptions>();
        bnmtf_fit_options_default(&mut opts);
        opts.k = 1;
        let mut f = ptr::null_mut();
        opts.engine = 9;
        assert_eq!(bnmtf_fit(m, &opts, &mut f), BnmtfStatus::InvalidArgument);
        assert!(last_error().contains("engine"));
        opts.engine = BnmtfEngine::Gibbs as u32;
        opts.iterations = 10;
        opts.burn_in = 20;
        assert_eq!(bnmtf_fit(m, &opts, &mut f), BnmtfStatus::InvalidArgument);
        opts.engine = BnmtfEngine::Icm as u32;
        opts.alpha = 0.2;
        opts.iterations = 5;
        opts.burn_in = -1;
        let one = [2.0];
        let mut single = ptr::null_mut();
        assert_eq!(bnmtf_matrix_new(one.as_ptr(), ptr::null(), 1, 1, &mut single), BnmtfStatus::Ok);
        assert_eq!(bnmtf_fit(single, &opts, &mut f), BnmtfStatus::Numeric);
        assert!(f.is_null());

        let mut elbo = [0.0; 1];
        opts.alpha = 1.0;
        opts.engine = BnmtfEngine::Np as u32;
        opts.iterations = 1;
        assert_eq!(bnmtf_fit(m, &opts, &mut f), BnmtfStatus::Ok);
        assert_eq!(bnmtf_fit_trace_elbo(f, elbo.as_mut_ptr(), 1), BnmtfStatus::InvalidArgument);
        assert_eq!(bnmtf_fit_tau(f, ptr::null_mut()), BnmtfStatus::NullPointer);
        bnmtf_fit_free(f);
        bnmtf_matrix_free(single);
        bnmtf_matrix_free(m);
        bnmtf_matrix_free(ptr::null_mut());
        bnmtf_fit_free(ptr::null_mut());
    }
}

#[test]
fn reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(&path, "1.5,,2\n,3,4\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(bnmtf_matrix_from_csv(c.as_ptr(), &mut m), BnmtfStatus::Ok);
        let (mut r, mut cols) = (0, 0);
        bnmtf_matrix_shape(m, &mut r, &mut cols);
        assert_eq!((r, cols), (2, 3));
        bnmtf_matrix_free(m);
        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert_eq!(bnmtf_matrix_from_csv(c.as_ptr(), &mut m), BnmtfStatus::Parse);
        assert!(last_error().contains("line 2"));
        let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
        assert_eq!(bnmtf_matrix_from_csv(missing.as_ptr(), &mut m), BnmtfStatus::Io);
    }
}

#[test]
fn truncated_normal_moments() {
    let (mut mean, mut var) = (0.0, 0.0);
    unsafe {
        assert_eq!(bnmtf_tn_mean_var(0.0, 1.0, &mut mean, &mut var), BnmtfStatus::Ok);
        let half = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - half).abs() < 1e-14);
        assert!((var - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-14);
        assert_eq!(bnmtf_tn_mean_var(0.0, -1.0, &mut mean, &mut var), BnmtfStatus::InvalidArgument);
    }
}
