//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pam_core::greens::{alpha, green_fourier, green_l2sq, green_zero, GreenTable};
use pam_core::montecarlo::{conditional_mc, lambda_mc, pde_moment_oracle, sample_path, McOptions};
use pam_core::phase::{classify, kappa_bounds, sweep, LambdaSource, RegimeLabel, SweepAxis, SweepSpec};
use pam_core::spectral::{
    check_gn, f0_from_table, lambda_spectral, mu, tensor_gap, top_eigen, PamParams, SpectralOptions,
};
use pam_core::{Field, LatticeBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn g(d: usize) -> f64 {
    green_zero(d, 1e-12).unwrap().finite_value().unwrap()
}

fn mu1_closed(kappa: f64) -> f64 {
    -2.0 * kappa + (4.0 * kappa * kappa + 1.0).sqrt()
}

/// Smallest d in 5..=30 with α_d > 1/2, shared by criteria 4 and 9.
static ALPHA_DIM: OnceLock<usize> = OnceLock::new();

fn mu_anchors() -> Outcome {
    for d in 1..=5 {
        let m = mu(d, 0.0, 1e-10).map_err(|e| e.to_string())?;
        ensure((m - 1.0).abs() <= 1e-10, || format!("mu({d},0) = {m}"))?;
    }
    let m = mu(3, g(3), 1e-10).map_err(|e| e.to_string())?;
    ensure(m.abs() <= 1e-6, || format!("mu(3, G_3(0)) = {m}"))?;
    Ok(format!("mu(d,0)=1 for d=1..5, mu(3,G_3(0))={m}"))
}

fn mu_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let k = 5.0 * i as f64 / 49.0;
        let m = mu(1, k, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max((m - mu1_closed(k)).abs());
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |mu - closed form| = {worst:e} on 50 points"))
}

fn green_constants() -> Outcome {
    let coarse = green_zero(3, 1e-8).map_err(|e| e.to_string())?;
    let fine = green_zero(3, 1e-13).map_err(|e| e.to_string())?;
    let (c, f) = (coarse.finite_value().unwrap(), fine.finite_value().unwrap());
    ensure((c - f).abs() <= 1e-6, || format!("resolutions differ: {c} vs {f}"))?;
    let four = green_fourier(3, 1, 96).map_err(|e| e.to_string())?;
    let fv = four.finite_value().unwrap();
    let combined = fine.abs_error + four.abs_error;
    ensure((fv - f).abs() <= combined.max(1e-6), || format!("fourier {fv} vs time {f} (errors {combined:e})"))?;
    ensure((fv - f).abs() <= 1e-6, || format!("fourier {fv} vs time {f}"))?;
    for d in [1, 2] {
        ensure(green_zero(d, 1e-8).unwrap().value.is_divergent(), || format!("G_{d}(0) not divergent"))?;
    }
    for d in [3, 4] {
        ensure(green_l2sq(d, 1e-8).unwrap().value.is_divergent(), || format!("||G_{d}||^2 not divergent"))?;
    }
    Ok(format!("G_3(0)={f} (time) / {fv} (fourier), |diff|={:e}; d=1,2 and l2 d=3,4 divergent", (fv - f).abs()))
}

fn alpha_behaviour() -> Outcome {
    for d in [3, 4] {
        let a = alpha(d).unwrap().finite_value().unwrap();
        ensure(a == 0.0, || format!("alpha({d}) = {a}"))?;
    }
    let mut values = Vec::new();
    for d in 5..=30 {
        let a = alpha(d).map_err(|e| e.to_string())?.finite_value().unwrap();
        ensure(a > 0.0 && a <= 1.0, || format!("alpha({d}) = {a}"))?;
        values.push((d, a));
    }
    let (a5, a30) = (values[0].1, values[25].1);
    ensure(a30 > a5, || format!("alpha(30)={a30} <= alpha(5)={a5}"))?;
    let first = values.iter().find(|(_, a)| *a > 0.5).map(|(d, _)| *d).ok_or("no d with alpha_d > 1/2")?;
    let _ = ALPHA_DIM.set(first);
    Ok(format!("alpha(5)={a5:.6}, alpha(30)={a30:.6}; smallest d with alpha_d > 1/2 is {first}"))
}

fn spectral_vs_mu() -> Outcome {
    let params = PamParams::new(1, 1, 1, 0.2, 0.3).unwrap();
    let radii = [2, 4, 8, 16, 32, 64];
    let ests = lambda_spectral::<f64>(&params, &radii, &SpectralOptions::default()).map_err(|e| e.to_string())?;
    ensure(ests.windows(2).all(|w| w[1].value >= w[0].value), || "sequence decreases".into())?;
    let target = mu1_closed(0.5);
    let last = ests.last().unwrap().value;
    ensure((last - target).abs() <= 1e-3, || format!("R=64 gives {last}, target {target}"))?;
    Ok(format!("R=64: {last} vs mu(0.5)={target}"))
}

fn frozen_walkers() -> Outcome {
    let params = PamParams::new(1, 2, 2, 0.0, 0.6).unwrap();
    let ests = lambda_spectral::<f64>(&params, &[2, 4, 6, 8], &SpectralOptions::default()).map_err(|e| e.to_string())?;
    let target = 2.0 * mu1_closed(0.3);
    let last = ests.last().unwrap().value;
    ensure((last - target).abs() <= 1e-3, || format!("R=8 gives {last}, target {target}"))?;
    Ok(format!("R=8: {last} vs 2 mu(0.3)={target}"))
}

fn symmetry() -> Outcome {
    let params = PamParams::new(1, 2, 1, 0.3, 0.2).unwrap();
    let opts = SpectralOptions { tol: 1e-11, ..SpectralOptions::default() };
    let mut worst = 0.0f64;
    for r in [3, 6] {
        let a = top_eigen::<f64>(&params, r, &opts).map_err(|e| e.to_string())?.value;
        let b = top_eigen::<f64>(&params.partner(), r, &opts).map_err(|e| e.to_string())?.value;
        worst = worst.max((a - 2.0 * b).abs());
    }
    ensure(worst <= 1e-9, || format!("asymmetry {worst:e}"))?;
    Ok(format!("max |lambda - (n/p) lambda_partner| = {worst:e}"))
}

fn zero_region() -> Outcome {
    let g3 = g(3);
    let params = PamParams::new(3, 1, 2, 1.1 * g3, 0.1).unwrap();
    let ests = lambda_spectral::<f64>(&params, &[1, 2], &SpectralOptions::default()).map_err(|e| e.to_string())?;
    for e in &ests {
        ensure(e.value <= 1e-8, || format!("box estimate {} above tolerance", e.value))?;
    }
    let spec = SweepSpec {
        d: 3,
        n: 1,
        ps: vec![1, 2, 3],
        axis: SweepAxis::Kappa,
        grid: (1..=8).map(|i| 0.04 * i as f64).collect(),
        fixed: 0.1,
        lambda: LambdaSource::Spectral { radius: 1 },
        spectral: SpectralOptions::default(),
    };
    let rows = sweep(&spec).map_err(|e| e.to_string())?;
    for row in &rows {
        let p = row.params;
        let lam = row.lambda_est.ok_or_else(|| format!("row failed: {}", row.regime.justification))?;
        let bound = p.n as f64 * mu(3, p.kappa / p.n as f64, 1e-10).unwrap().min(mu(3, p.rho / p.p as f64, 1e-10).unwrap());
        ensure(lam <= bound + 1e-8, || format!("p={} kappa={}: {lam} > {bound}", p.p, p.kappa))?;
    }
    Ok(format!(
        "box estimates {:?} at kappa=1.1 G_3(0); upper bound holds on {} sweep rows",
        ests.iter().map(|e| e.value).collect::<Vec<_>>(),
        rows.len()
    ))
}

fn certified_window() -> Outcome {
    let d = match ALPHA_DIM.get() {
        Some(&d) => d,
        None => (5..=30).find(|&d| alpha(d).unwrap().finite_value().unwrap() > 0.5).ok_or("no d with alpha_d > 1/2")?,
    };
    let rho = 0.2 * g(d);
    let b1 = kappa_bounds(d, 1, 1, rho).map_err(|e| e.to_string())?;
    let b2 = kappa_bounds(d, 1, 2, rho).map_err(|e| e.to_string())?;
    ensure(b1.upper + b1.upper_error < b2.lower - b2.lower_error, || {
        format!("empty window: upper(1)={} lower(2)={}", b1.upper, b2.lower)
    })?;
    let kappa = 0.5 * (b1.upper + b2.lower);
    let regime = classify(d, 1, kappa, rho);
    ensure(regime.label == RegimeLabel::CertifiedQIntermittent(2), || format!("classified as {}", regime.label))?;
    Ok(format!("d={d}: window [{}, {}), classify({kappa}) = {}", b1.upper, b2.lower, regime.label))
}

fn mc_anchors() -> Outcome {
    for (n, p) in [(1, 1), (2, 3)] {
        let params = PamParams::new(2, n, p, 0.0, 0.0).unwrap();
        let est = lambda_mc(&params, 4.0, 100, 3, &McOptions::default()).map_err(|e| e.to_string())?;
        ensure(est.lambda_t == n as f64 && est.stderr == 0.0, || format!("(n,p)=({n},{p}): {est:?}"))?;
    }
    for params in [PamParams::new(2, 2, 3, 0.0, 0.0).unwrap(), PamParams::new(1, 2, 2, 0.3, 0.2).unwrap()] {
        let runs: Vec<_> = [1, 4, 8]
            .iter()
            .map(|&w| lambda_mc(&params, 4.0, 2000, 11, &McOptions { workers: Some(w), ..Default::default() }).unwrap())
            .collect();
        ensure(runs.windows(2).all(|w| w[0] == w[1] && w[0].lambda_t.to_bits() == w[1].lambda_t.to_bits()), || {
            format!("worker counts disagree: {:?}", runs.iter().map(|r| r.lambda_t).collect::<Vec<_>>())
        })?;
    }
    Ok("frozen walkers give exactly n with zero stderr; workers 1/4/8 bit-identical".into())
}

fn feynman_kac() -> Outcome {
    let t = 5.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let catalyst = sample_path(1, 0.25, t, &[0], &mut rng);
    let params = PamParams::new(1, 1, 1, 0.25, 0.25).unwrap();
    let pde = pde_moment_oracle(&params, 40, t, std::slice::from_ref(&catalyst), 4).map_err(|e| e.to_string())?;
    let (mean, se) = conditional_mc(1, 0.25, t, std::slice::from_ref(&catalyst), 10_000, 99).map_err(|e| e.to_string())?;
    ensure(pde.boundary_leak < 1e-10, || format!("boundary leak {:e}", pde.boundary_leak))?;
    ensure((mean - pde.value).abs() <= 3.0 * se, || format!("mc {mean} ± {se} vs pde {}", pde.value))?;
    Ok(format!("u(0,5) = {} (pde), {mean} ± {se} (mc, 10^4 draws)", pde.value))
}

fn gagliardo_nirenberg() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for (d, r) in [(1usize, 20usize), (2, 7)] {
        let lattice = LatticeBox::new(d, r).unwrap();
        let delta = check_gn(&Field::<f64>::delta(&lattice), d).unwrap();
        ensure(delta.holds, || format!("delta anchor fails in d={d}: {delta:?}"))?;
        for i in 0..1000 {
            let density: f64 = rng.random_range(0.02..1.0);
            let f = Field::from_fn(&lattice, |_| {
                if rng.random_bool(density) {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            });
            let c = check_gn(&f, d).unwrap();
            ensure(c.holds, || format!("field {i} in d={d}: {c:?}"))?;
            if c.rhs > 0.0 {
                worst = worst.max(c.lhs / c.rhs);
            }
        }
    }
    Ok(format!("1000 fields each in d=1,2 plus delta anchors; max lhs/rhs = {worst:.4}"))
}

fn tensor_gap_identity() -> Outcome {
    let params = PamParams::new(1, 1, 1, 0.25, 0.25).unwrap();
    let opts = SpectralOptions::default();
    let tg = tensor_gap::<f64>(&params, 8, &opts).map_err(|e| e.to_string())?;
    let l2 = top_eigen::<f64>(&params.with_p(2), 8, &opts).map_err(|e| e.to_string())?.value;
    let resid = (tg.rayleigh2 - tg.lambda1 - tg.gap).abs();
    ensure(tg.gap > 0.0, || format!("gap {}", tg.gap))?;
    ensure(resid <= 1e-8, || format!("identity residual {resid:e}"))?;
    ensure(l2 >= tg.rayleigh2, || format!("lambda_2 box {l2} < rayleigh2 {}", tg.rayleigh2))?;
    Ok(format!("lambda1={} gap={:e} rayleigh2={} lambda2_box={l2}", tg.lambda1, tg.gap, tg.rayleigh2))
}

fn f0_bound() -> Outcome {
    let d = 5;
    let (n, p) = (2usize, 2usize);
    let (nf, pf) = (n as f64, p as f64);
    let g0 = g(d);
    let l2 = green_l2sq(d, 1e-12).unwrap().finite_value().unwrap();
    let mut last = None;
    for r in [10, 20, 30] {
        let table = GreenTable::build(d, r).map_err(|e| e.to_string())?;
        last = Some(f0_from_table(&table, n, p, 0.0));
    }
    let b = last.unwrap();
    let target = nf * g0;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    ensure(rel(b.ratio, target) <= 0.02, || format!("ratio {} vs n G_5(0) = {target}", b.ratio))?;
    let closed_int = nf * pf * g0 * g0 / l2;
    let closed_grad_x = pf * g0 / l2;
    let closed_grad_y = 2.0 * d as f64 * nf;
    ensure(rel(b.interaction, closed_int) <= 0.01, || format!("interaction {} vs {closed_int}", b.interaction))?;
    ensure(rel(b.grad_x, closed_grad_x) <= 0.01, || format!("grad_x {} vs {closed_grad_x}", b.grad_x))?;
    ensure(rel(b.grad_y, closed_grad_y) <= 0.01, || format!("grad_y {} vs {closed_grad_y}", b.grad_y))?;
    Ok(format!(
        "R=30: ratio {} vs {target} ({:.3}%); interaction {:.3}%, grad_x {:.3}%, grad_y {:.3}%",
        b.ratio,
        100.0 * rel(b.ratio, target),
        100.0 * rel(b.interaction, closed_int),
        100.0 * rel(b.grad_x, closed_grad_x),
        100.0 * rel(b.grad_y, closed_grad_y)
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("mu anchors", mu_anchors, Duration::from_secs(10)),
        ("d=1 closed form for mu", mu_closed_form, Duration::from_secs(5)),
        ("Green constants and divergence", green_constants, Duration::from_secs(30)),
        ("alpha_d behaviour", alpha_behaviour, Duration::from_secs(120)),
        ("spectral estimate vs mu(kappa+rho)", spectral_vs_mu, Duration::from_secs(60)),
        ("frozen walkers: lambda = n mu(rho/p)", frozen_walkers, Duration::from_secs(60)),
        ("walker/catalyst exchange symmetry", symmetry, Duration::from_secs(60)),
        ("zero region above n G_d(0)", zero_region, Duration::from_secs(300)),
        ("certified 2-intermittency window", certified_window, Duration::from_secs(120)),
        ("Monte Carlo anchors and reproducibility", mc_anchors, Duration::from_secs(10)),
        ("Feynman-Kac self-consistency", feynman_kac, Duration::from_secs(60)),
        ("Gagliardo-Nirenberg with C=2", gagliardo_nirenberg, Duration::from_secs(10)),
        ("tensor-square gap identity", tensor_gap_identity, Duration::from_secs(60)),
        ("Green test function bound", f0_bound, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let over = if elapsed > *budget { format!(" (over the {budget:?} budget)") } else { String::new() };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.1?}]{over}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
