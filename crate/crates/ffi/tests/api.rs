use std::ffi::CStr;
use std::ptr;

use fuzzreg_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { fzr_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_helpers() {
    let mut c = 0.0;
    assert_eq!(unsafe { fzr_c_factor(1.0, 1.639, &mut c) }, FZR_OK);
    assert!((c - 0.500022477464167).abs() < 1e-9);
    assert_eq!(unsafe { fzr_c_factor(-1.0, 1.0, &mut c) }, FZR_ERR_INVALID_PARAMETER);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { fzr_c_factor(1.0, 1.0, ptr::null_mut()) }, FZR_ERR_NULL_POINTER);

    let (mut cen, mut kf, mut lo, mut hi) = (0.0, 0.0, 0.0, 0.0);
    let rc = unsafe { fzr_bfn_statistics(0.5, 4.0, 0.0, 1.0, 0.5, &mut cen, &mut kf, &mut lo, &mut hi) };
    assert_eq!(rc, FZR_OK);
    assert!((cen - 0.5).abs() < 1e-10);
    assert!((lo + hi - 1.0).abs() < 1e-9);
    assert!(kf > 0.0 && kf < 1.0);

    let (mut m, mut s) = (0.0, 0.0);
    assert_eq!(
        unsafe { fzr_trapezoid_to_beta(0.0, 0.3, 0.3, 1.0, &mut m, &mut s) },
        FZR_OK
    );
    assert!(m > 0.0 && m < 1.0 && s > 0.0);
    assert_eq!(
        unsafe { fzr_trapezoid_to_beta(0.5, 0.3, 0.6, 1.0, &mut m, &mut s) },
        FZR_ERR_INVALID_PARAMETER
    );

    let v = unsafe { CStr::from_ptr(fzr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn dataset_model_fit_lifecycle() {
    let n = 60;
    let m: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * i as f64 / n as f64).collect();
    let s = vec![30.0 + 0.0; n]
        .iter()
        .enumerate()
        .map(|(i, v)| v + i as f64)
        .collect::<Vec<_>>();
    let x: Vec<f64> = (0..n).flat_map(|i| [1.0, (i as f64 - 30.0) / 17.0]).collect();
    let mut data = ptr::null_mut();
    assert_eq!(
        unsafe { fzr_dataset_new(m.as_ptr(), s.as_ptr(), n, x.as_ptr(), 2, 0.0, 1.0, &mut data) },
        FZR_OK
    );
    let (mut rows, mut cols) = (0, 0);
    assert_eq!(unsafe { fzr_dataset_shape(data, &mut rows, &mut cols) }, FZR_OK);
    assert_eq!((rows, cols), (n, 2));

    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { fzr_model_new(FZR_FAMILY_BETA, FZR_LINK_DEFAULT, 0.0, 1.0, 2, &mut model) },
        FZR_OK
    );
    assert_eq!(unsafe { fzr_model_set_prior(model, 0.0, 5.0, 0.0, 5.0) }, FZR_OK);
    assert_eq!(
        unsafe { fzr_model_set_prior(model, 0.0, -5.0, 0.0, 5.0) },
        FZR_ERR_INVALID_PARAMETER
    );

    let mut cfg = FzrSamplerConfig {
        chains: 0,
        samples: 0,
        burnin: 0,
        seed: 0,
        eps: 0.0,
        mh_correct: 0,
        sn_refresh: 0,
        parallel: 0,
    };
    assert_eq!(unsafe { fzr_sampler_config_default(&mut cfg) }, FZR_OK);
    assert_eq!(cfg.chains, 5);
    cfg.chains = 2;
    cfg.samples = 200;
    cfg.burnin = 50;
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { fzr_fit(data, model, &cfg, &mut fit) }, FZR_OK);
    let (mut c, mut d, mut p) = (0, 0, 0);
    assert_eq!(unsafe { fzr_fit_shape(fit, &mut c, &mut d, &mut p) }, FZR_OK);
    assert_eq!((c, d, p), (2, 200, 3));
    let mut buf = vec![0.0; d * p];
    assert_eq!(unsafe { fzr_fit_draws(fit, 1, buf.as_mut_ptr(), buf.len()) }, FZR_OK);
    assert!(buf.iter().all(|v| v.is_finite()));
    assert_eq!(
        unsafe { fzr_fit_draws(fit, 1, buf.as_mut_ptr(), 3) },
        FZR_ERR_BUFFER_TOO_SMALL
    );
    assert_eq!(
        unsafe { fzr_fit_draws(fit, 7, buf.as_mut_ptr(), buf.len()) },
        FZR_ERR_INVALID_PARAMETER
    );
    let mut summary = FzrParamSummary::default();
    assert_eq!(unsafe { fzr_fit_summary(fit, 1, &mut summary) }, FZR_OK);
    assert!(summary.mean > 0.0, "slope should be positive: {summary:?}");
    assert!(summary.hpdi_lower < summary.hpdi_upper);

    // Model with the wrong number of coefficients.
    let mut wrong = ptr::null_mut();
    assert_eq!(
        unsafe { fzr_model_new(FZR_FAMILY_BETA, FZR_LINK_LOGIT, 0.0, 1.0, 3, &mut wrong) },
        FZR_OK
    );
    let mut fit2 = ptr::null_mut();
    assert_eq!(unsafe { fzr_fit(data, wrong, &cfg, &mut fit2) }, FZR_ERR_DIMENSION);
    assert!(fit2.is_null());

    unsafe {
        fzr_fit_free(fit);
        fzr_model_free(model);
        fzr_model_free(wrong);
        fzr_dataset_free(data);
        fzr_dataset_free(ptr::null_mut());
    }
}

#[test]
fn invalid_codes_and_null_handles() {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { fzr_model_new(42, FZR_LINK_DEFAULT, 0.0, 1.0, 1, &mut model) },
        FZR_ERR_INVALID_PARAMETER
    );
    assert!(last_error().contains("family"));
    assert_eq!(
        unsafe { fzr_model_new(FZR_FAMILY_BETA, FZR_LINK_LOG, 0.0, 1.0, 1, &mut model) },
        FZR_ERR_INVALID_PARAMETER
    );
    let (mut a, mut b) = (0, 0);
    assert_eq!(
        unsafe { fzr_dataset_shape(ptr::null(), &mut a, &mut b) },
        FZR_ERR_NULL_POINTER
    );
    let mut data = ptr::null_mut();
    let m = [1.5];
    let s = [3.0];
    let x = [1.0];
    assert_eq!(
        unsafe { fzr_dataset_new(m.as_ptr(), s.as_ptr(), 1, x.as_ptr(), 1, 0.0, 1.0, &mut data) },
        FZR_ERR_INVALID_PARAMETER
    );
    let path = c"/nonexistent/data.csv";
    assert_eq!(
        unsafe { fzr_dataset_read_csv(path.as_ptr(), FZR_FORMAT_BETA_FUZZY, 1, &mut data) },
        FZR_ERR_IO
    );
}
