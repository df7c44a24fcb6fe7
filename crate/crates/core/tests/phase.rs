use std::fs;

use pam_core::greens::{alpha, green_zero};
use pam_core::phase::{
    classify, cursor_path, kappa_bounds, read_phase_csv, sweep, sweep_to_csv, BoundsContext, LambdaSource,
    RegimeLabel, SweepAxis, SweepSpec, PHASE_CSV_HEADER,
};
use pam_core::spectral::{lambda_spectral, top_eigen, PamParams, SpectralOptions};

fn g(d: usize) -> f64 {
    green_zero(d, 1e-12).unwrap().finite_value().unwrap()
}

fn label_rank(l: RegimeLabel) -> u8 {
    match l {
        RegimeLabel::NotIntermittent => 1,
        _ => 0,
    }
}

#[test]
fn positive_below_the_lower_bound() {
    let rho = 0.02;
    let b = kappa_bounds(3, 1, 1, rho).unwrap();
    let params = PamParams::new(3, 1, 1, 0.5 * b.lower, rho).unwrap();
    let ests = lambda_spectral::<f64>(&params, &[1, 2, 3, 4], &SpectralOptions::default()).unwrap();
    assert!(ests.last().unwrap().value > 0.0, "{:?}", ests.iter().map(|e| e.value).collect::<Vec<_>>());
}

#[test]
fn non_positive_above_the_upper_bound() {
    let rho = 0.05;
    for p in [1, 2] {
        let b = kappa_bounds(3, 1, p, rho).unwrap();
        let params = PamParams::new(3, 1, p, b.upper + 0.01, rho).unwrap();
        for r in [1, 2] {
            if p == 2 && r == 2 {
                continue;
            }
            let v = top_eigen::<f64>(&params, r, &SpectralOptions::default()).unwrap().value;
            assert!(v <= 1e-8, "p={p} R={r}: {v}");
        }
    }
}

#[test]
fn bound_windows_are_ordered() {
    for d in [3, 5, 8] {
        let g0 = g(d);
        for rho in [0.0, 0.1 * g0, 0.5 * g0, 1.5 * g0] {
            for p in 1..=4 {
                let b = kappa_bounds(d, 2, p, rho).unwrap();
                assert!(b.lower <= b.upper + 1e-9, "d={d} p={p} rho={rho}: {b:?}");
                assert!(b.upper <= 2.0 * g0 + 1e-12);
                if p > 1 {
                    let prev = kappa_bounds(d, 2, p - 1, rho).unwrap();
                    assert!(prev.upper <= b.upper + 1e-12);
                }
            }
        }
    }
}

#[test]
fn no_certified_window_when_alpha_is_too_small() {
    // α₅ ≈ 0.598 < 2/3, so 3-intermittency cannot be certified in d = 5
    let a5 = alpha(5).unwrap().finite_value().unwrap();
    assert!(a5 < 2.0 / 3.0);
    let g5 = g(5);
    let ctx = BoundsContext::new(5).unwrap();
    for i in 0..=20 {
        let rho = 0.05 * i as f64 * g5;
        for j in 0..=40 {
            let kappa = 0.025 * j as f64 * g5;
            let label = ctx.classify(1, kappa, rho).label;
            assert!(
                !matches!(label, RegimeLabel::CertifiedQIntermittent(q) if q >= 3),
                "rho={rho} kappa={kappa}: {label}"
            );
        }
    }
}

#[test]
fn classification_is_monotone_in_kappa() {
    for (d, rho) in [(3, 0.05), (5, 0.02), (12, 0.01)] {
        let g0 = g(d);
        let mut seen_not = false;
        for j in 0..=60 {
            let kappa = j as f64 / 40.0 * g0;
            let r = label_rank(classify(d, 1, kappa, rho).label);
            if seen_not {
                assert_eq!(r, 1, "d={d} kappa={kappa}");
            }
            seen_not |= r == 1;
        }
        assert!(seen_not);
    }
}

#[test]
fn high_dimension_certifies_a_window() {
    let d = 12;
    let rho = 0.05 * g(d);
    let b1 = kappa_bounds(d, 1, 1, rho).unwrap();
    let b2 = kappa_bounds(d, 1, 2, rho).unwrap();
    assert!(b1.upper < b2.lower);
    let kappa = 0.5 * (b1.upper + b2.lower);
    assert_eq!(classify(d, 1, kappa, rho).label, RegimeLabel::CertifiedQIntermittent(2));
}

fn spec(d: usize, ps: Vec<usize>, axis: SweepAxis, grid: Vec<f64>, fixed: f64, lambda: LambdaSource) -> SweepSpec {
    SweepSpec { d, n: 1, ps, axis, grid, fixed, lambda, spectral: SpectralOptions::default() }
}

#[test]
fn one_dimensional_columns_are_positive_and_decreasing() {
    let grid: Vec<f64> = (1..=6).map(|i| 0.15 * i as f64).collect();
    let rows = sweep(&spec(1, vec![1, 2, 3], SweepAxis::Kappa, grid.clone(), 0.3, LambdaSource::Spectral { radius: 8 }))
        .unwrap();
    for chunk in rows.chunks(grid.len()) {
        let v: Vec<f64> = chunk.iter().map(|r| r.lambda_est.unwrap()).collect();
        assert!(v.iter().all(|&x| x > 0.0), "{v:?}");
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        assert!(chunk.iter().all(|r| r.regime.label == RegimeLabel::PartialIntermittent));
        assert!(chunk.iter().all(|r| r.kappa_upper.to_string() == "inf"));
    }
}

/// Linear interpolation of the first sign change from positive to non-positive.
fn zero_crossing(grid: &[f64], v: &[f64]) -> f64 {
    for i in 1..v.len() {
        if v[i - 1] > 0.0 && v[i] <= 0.0 {
            return grid[i - 1] + (grid[i] - grid[i - 1]) * v[i - 1] / (v[i - 1] - v[i]);
        }
    }
    panic!("no crossing in {v:?}");
}

#[test]
fn three_dimensional_crossings_are_ordered_in_p() {
    let grid: Vec<f64> = (1..=7).map(|i| 0.03 * i as f64).collect();
    let rows = sweep(&spec(3, vec![1, 2, 3], SweepAxis::Kappa, grid.clone(), 0.1, LambdaSource::Spectral { radius: 1 }))
        .unwrap();
    let crossings: Vec<f64> = rows
        .chunks(grid.len())
        .map(|c| zero_crossing(&grid, &c.iter().map(|r| r.lambda_est.unwrap()).collect::<Vec<_>>()))
        .collect();
    assert!(crossings.windows(2).all(|w| w[1] >= w[0]), "{crossings:?}");
}

#[test]
fn bound_curves_are_non_increasing_and_convex_in_rho() {
    let d = 8;
    let g0 = g(d);
    let grid: Vec<f64> = (0..=12).map(|i| 0.25 * g0 * i as f64).collect();
    let rows = sweep(&spec(d, vec![1, 2, 3], SweepAxis::Rho, grid.clone(), 0.5 * g0, LambdaSource::BoundsOnly)).unwrap();
    for chunk in rows.chunks(grid.len()) {
        for column in [0, 1] {
            let v: Vec<f64> = chunk
                .iter()
                .map(|r| {
                    let b = if column == 0 { r.kappa_lower } else { r.kappa_upper };
                    b.to_string().parse::<f64>().unwrap()
                })
                .collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{v:?}");
            for w in v.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8, "{v:?}");
            }
        }
    }
}

#[test]
fn failed_rows_do_not_abort_the_sweep() {
    let rows = sweep(&spec(1, vec![1, 2], SweepAxis::Kappa, vec![0.1, 0.2], 0.1, LambdaSource::ClosedForm)).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[..2].iter().all(|r| !r.failed() && r.lambda_est.is_some()));
    assert!(rows[2..].iter().all(|r| r.failed() && r.regime.justification.contains("closed form")));
}

#[test]
fn sweep_resumes_from_the_cursor() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(3, vec![1, 2], SweepAxis::Kappa, vec![0.05, 0.1, 0.2, 0.3], 0.05, LambdaSource::BoundsOnly);
    let full = dir.path().join("full.csv");
    let progress = sweep_to_csv(&s, &full, 3).unwrap();
    assert_eq!((progress.total_rows, progress.resumed_from, progress.failed_rows), (8, 0, 0));
    assert!(!cursor_path(&full).exists());
    let full_text = fs::read_to_string(&full).unwrap();
    assert!(full_text.starts_with(PHASE_CSV_HEADER));
    assert_eq!(read_phase_csv(&full).unwrap().len(), 8);

    // an interrupted run: three rows committed plus a torn fourth line
    let part = dir.path().join("part.csv");
    let lines: Vec<&str> = full_text.lines().collect();
    fs::write(&part, format!("{}\n{}\n{}\n{}\n3,1,2,0.0", lines[0], lines[1], lines[2], lines[3])).unwrap();
    fs::write(cursor_path(&part), "3").unwrap();
    let progress = sweep_to_csv(&s, &part, 2).unwrap();
    assert_eq!(progress.resumed_from, 3);
    assert_eq!(fs::read_to_string(&part).unwrap(), full_text);
}
