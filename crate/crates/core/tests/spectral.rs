use pam_core::spectral::{lambda_spectral, mu, top_eigen, PamParams, SpectralOptions};
use proptest::prelude::*;

fn lam(params: &PamParams, r: usize) -> f64 {
    top_eigen::<f64>(params, r, &SpectralOptions::default()).unwrap().value
}

#[test]
fn box_estimate_decreases_in_each_rate() {
    let base = PamParams::new(1, 1, 2, 0.1, 0.2).unwrap();
    let ks: Vec<f64> = [0.1, 0.2, 0.4, 0.8].iter().map(|&k| lam(&base.with_kappa(k), 6)).collect();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    let rs: Vec<f64> = [0.1, 0.2, 0.4, 0.8].iter().map(|&r| lam(&PamParams { rho: r, ..base }, 6)).collect();
    assert!(rs.windows(2).all(|w| w[1] < w[0]), "{rs:?}");
}

#[test]
fn box_estimate_is_convex_in_kappa() {
    // supremum of affine functions of κ
    let base = PamParams::new(1, 2, 1, 0.0, 0.3).unwrap();
    let ks = [0.05, 0.15, 0.25, 0.35, 0.45];
    let v: Vec<f64> = ks.iter().map(|&k| lam(&base.with_kappa(k), 5)).collect();
    for w in v.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9, "{v:?}");
    }
}

#[test]
fn moments_are_ordered_in_p() {
    let base = PamParams::new(1, 1, 1, 0.25, 0.25).unwrap();
    let v: Vec<f64> = (1..=3).map(|p| lam(&base.with_p(p), 6)).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
    assert!(v.iter().all(|&x| x <= 1.0));
}

#[test]
fn converges_to_n_mu_of_total_rate_for_one_walker_one_catalyst() {
    let params = PamParams::new(2, 1, 1, 0.05, 0.05).unwrap();
    let ests = lambda_spectral::<f64>(&params, &[2, 4, 8, 12], &SpectralOptions::default()).unwrap();
    let target = mu(2, 0.1, 1e-12).unwrap();
    let last = ests.last().unwrap().value;
    assert!(ests.iter().all(|e| e.value <= target + 1e-9));
    assert!((last - target).abs() < 5e-3, "{last} vs {target}");
}

#[test]
fn never_exceeds_the_trivial_upper_bound() {
    for params in [
        PamParams::new(1, 2, 2, 0.3, 0.1).unwrap(),
        PamParams::new(2, 1, 2, 0.1, 0.4).unwrap(),
        PamParams::new(3, 1, 1, 0.3, 0.0).unwrap(),
    ] {
        let v = lam(&params, 3);
        let (n, p) = (params.n as f64, params.p as f64);
        let bound = n * mu(params.d, params.kappa / n, 1e-12).unwrap().min(mu(params.d, params.rho / p, 1e-12).unwrap());
        assert!(v <= bound + 1e-9, "{params:?}: {v} > {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exchange_symmetry_on_matched_boxes(
        n in 1usize..3, p in 1usize..3, kappa in 0.0f64..1.0, rho in 0.0f64..1.0, r in 1usize..4,
    ) {
        let opts = SpectralOptions { tol: 1e-11, ..SpectralOptions::default() };
        let params = PamParams::new(1, n, p, kappa, rho).unwrap();
        let a = top_eigen::<f64>(&params, r, &opts).unwrap().value;
        let b = top_eigen::<f64>(&params.partner(), r, &opts).unwrap().value;
        prop_assert!((a - n as f64 / p as f64 * b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn larger_boxes_never_lower_the_estimate(kappa in 0.0f64..1.0, rho in 0.0f64..1.0) {
        let params = PamParams::new(1, 1, 2, kappa, rho).unwrap();
        let a = lam(&params, 2);
        let b = lam(&params, 4);
        prop_assert!(b >= a - 1e-9);
    }
}
